#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "jcas/geometry.hpp"
#include "jcas/linalg.hpp"

namespace jcas {

/// OFDM numerology for one JCAS period. The guard interval enters the symbol
/// duration only, which in turn scales the Doppler steering phases; there is
/// no time-domain synthesis in this simulator.
struct OfdmNumerology {
    double subcarrier_spacing = 480e3;  // Hz
    int subcarrier_count = 256;         // N_c
    int symbol_count = 64;              // M_s
    double guard_fraction = 0.125;      // T_g as a fraction of 1/spacing
    double carrier_frequency = 63e9;    // Hz

    double symbol_duration() const {
        return (1.0 + guard_fraction) / subcarrier_spacing;
    }
    double wavelength() const { return kSpeedOfLight / carrier_frequency; }
    double bandwidth() const { return subcarrier_count * subcarrier_spacing; }
    int grid_size() const { return subcarrier_count * symbol_count; }
};

/// Square QAM constellation with unit average energy and Gray bit labeling.
///
/// A symbol index packs the bits MSB-first; the first half of the bits selects
/// the in-phase level, the second half the quadrature level. Per axis the Gray
/// code g maps to level (L - 1 - 2 * gray_decode(g)) / norm, so the all-zero
/// label sits at the most positive corner: 4-QAM "00" -> (1 + 1j) / sqrt(2).
class QamConstellation {
  public:
    /// Supported orders: 4, 16, 64. Throws std::invalid_argument otherwise.
    explicit QamConstellation(int order);

    int order() const { return order_; }
    int bits_per_symbol() const { return bits_per_symbol_; }
    const std::vector<Complex>& points() const { return points_; }

    Complex point(unsigned symbol_index) const { return points_[symbol_index]; }

    /// Exact nearest-point decision for the square grid.
    unsigned nearest(Complex received) const;

  private:
    int order_;
    int bits_per_symbol_;
    int axis_bits_;
    double axis_norm_;
    std::vector<Complex> points_;
};

enum class GridKind { Preamble, Data, Probe };

/// Frequency-domain symbol grid, subcarrier-major: values(n, m) is the symbol
/// on subcarrier n of OFDM symbol m.
struct SymbolGrid {
    Eigen::MatrixXcd values;
    GridKind kind = GridKind::Data;
};

/// Deterministic unit-modulus preamble grid: pseudo-random QPSK phases
/// reproducible from the seed.
SymbolGrid generate_preamble(const OfdmNumerology& numerology, std::uint64_t seed);

/// Unit-modulus probe symbols for the dedicated sensing beam.
SymbolGrid generate_probe(const OfdmNumerology& numerology, std::mt19937_64& rng);

std::vector<std::uint8_t> random_bits(std::size_t count, std::mt19937_64& rng);

/// Gray-maps a bitstream onto the grid, column-major over (n, m). The bit
/// count must equal grid_size * log2(order).
SymbolGrid modulate_data(std::span<const std::uint8_t> bits,
                         const QamConstellation& constellation,
                         const OfdmNumerology& numerology);

struct DemodResult {
    std::vector<std::uint8_t> bits;
    long erasures = 0;  // resource elements with unusable (zero) CSI
};

/// Per-resource-element equalization d~ = y / (sqrt(power) * csi) followed by
/// a nearest-constellation decision. Zero CSI entries are flagged as erasures
/// and decoded as symbol 0.
DemodResult demodulate_data(const Eigen::MatrixXcd& received,
                            const Eigen::MatrixXcd& csi, double power,
                            const QamConstellation& constellation);

/// Bit errors between transmitted and decoded streams (sizes must match).
long count_bit_errors(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

}  // namespace jcas
