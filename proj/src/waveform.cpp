#include "jcas/waveform.hpp"

#include <algorithm>
#include <cmath>

namespace jcas {

namespace {

unsigned gray_decode(unsigned g) {
    unsigned b = 0;
    for (; g; g >>= 1) b ^= g;
    return b;
}

}  // namespace

QamConstellation::QamConstellation(int order) : order_(order) {
    if (order != 4 && order != 16 && order != 64) {
        throw std::invalid_argument("QamConstellation: order must be 4, 16 or 64");
    }
    bits_per_symbol_ = static_cast<int>(std::round(std::log2(order)));
    axis_bits_ = bits_per_symbol_ / 2;
    const int levels = 1 << axis_bits_;
    // Unit average energy: E{l^2} per axis is (L^2 - 1) / 3 over levels
    // {+-1, +-3, ...}, and the two axes add.
    axis_norm_ = std::sqrt(2.0 * (levels * levels - 1) / 3.0);

    points_.resize(order);
    for (int idx = 0; idx < order; ++idx) {
        const unsigned gi = static_cast<unsigned>(idx) >> axis_bits_;
        const unsigned gq = static_cast<unsigned>(idx) & ((1u << axis_bits_) - 1u);
        const double li = levels - 1.0 - 2.0 * gray_decode(gi);
        const double lq = levels - 1.0 - 2.0 * gray_decode(gq);
        points_[idx] = Complex(li / axis_norm_, lq / axis_norm_);
    }
}

unsigned QamConstellation::nearest(Complex received) const {
    const int levels = 1 << axis_bits_;
    auto quantize = [&](double v) {
        // Level index counted from the most positive level downwards.
        int i = static_cast<int>(std::floor((levels - 1.0 - v * axis_norm_) / 2.0 + 0.5));
        i = std::clamp(i, 0, levels - 1);
        return static_cast<unsigned>(i) ^ (static_cast<unsigned>(i) >> 1);  // gray encode
    };
    const unsigned gi = quantize(received.real());
    const unsigned gq = quantize(received.imag());
    return (gi << axis_bits_) | gq;
}

SymbolGrid generate_preamble(const OfdmNumerology& numerology, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> quadrant(0, 3);
    SymbolGrid grid;
    grid.kind = GridKind::Preamble;
    grid.values.resize(numerology.subcarrier_count, numerology.symbol_count);
    for (int m = 0; m < numerology.symbol_count; ++m) {
        for (int n = 0; n < numerology.subcarrier_count; ++n) {
            const double phase = kPi / 4.0 + quadrant(rng) * kPi / 2.0;
            grid.values(n, m) = Complex(std::cos(phase), std::sin(phase));
        }
    }
    return grid;
}

SymbolGrid generate_probe(const OfdmNumerology& numerology, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> quadrant(0, 3);
    SymbolGrid grid;
    grid.kind = GridKind::Probe;
    grid.values.resize(numerology.subcarrier_count, numerology.symbol_count);
    for (int m = 0; m < numerology.symbol_count; ++m) {
        for (int n = 0; n < numerology.subcarrier_count; ++n) {
            const double phase = kPi / 4.0 + quadrant(rng) * kPi / 2.0;
            grid.values(n, m) = Complex(std::cos(phase), std::sin(phase));
        }
    }
    return grid;
}

std::vector<std::uint8_t> random_bits(std::size_t count, std::mt19937_64& rng) {
    std::vector<std::uint8_t> bits(count);
    std::uniform_int_distribution<int> bit(0, 1);
    for (auto& b : bits) b = static_cast<std::uint8_t>(bit(rng));
    return bits;
}

SymbolGrid modulate_data(std::span<const std::uint8_t> bits,
                         const QamConstellation& constellation,
                         const OfdmNumerology& numerology) {
    const int k = constellation.bits_per_symbol();
    const std::size_t expected =
        static_cast<std::size_t>(numerology.grid_size()) * static_cast<std::size_t>(k);
    if (bits.size() != expected) {
        throw std::invalid_argument("modulate_data: bit count does not match grid");
    }
    SymbolGrid grid;
    grid.kind = GridKind::Data;
    grid.values.resize(numerology.subcarrier_count, numerology.symbol_count);
    std::size_t pos = 0;
    for (int m = 0; m < numerology.symbol_count; ++m) {
        for (int n = 0; n < numerology.subcarrier_count; ++n) {
            unsigned idx = 0;
            for (int b = 0; b < k; ++b) idx = (idx << 1) | bits[pos++];
            grid.values(n, m) = constellation.point(idx);
        }
    }
    return grid;
}

DemodResult demodulate_data(const Eigen::MatrixXcd& received,
                            const Eigen::MatrixXcd& csi, double power,
                            const QamConstellation& constellation) {
    if (received.rows() != csi.rows() || received.cols() != csi.cols()) {
        throw std::invalid_argument("demodulate_data: grid shapes differ");
    }
    const int k = constellation.bits_per_symbol();
    const double amp = std::sqrt(power);
    DemodResult out;
    out.bits.resize(static_cast<std::size_t>(received.size()) * k);
    std::size_t pos = 0;
    for (Eigen::Index m = 0; m < received.cols(); ++m) {
        for (Eigen::Index n = 0; n < received.rows(); ++n) {
            unsigned idx = 0;
            const Complex h = csi(n, m);
            if (h == Complex(0.0, 0.0)) {
                ++out.erasures;
            } else {
                idx = constellation.nearest(received(n, m) / (amp * h));
            }
            for (int b = k - 1; b >= 0; --b) {
                out.bits[pos++] = static_cast<std::uint8_t>((idx >> b) & 1u);
            }
        }
    }
    return out;
}

long count_bit_errors(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("count_bit_errors: stream lengths differ");
    }
    long errors = 0;
    for (std::size_t i = 0; i < a.size(); ++i) errors += a[i] != b[i];
    return errors;
}

}  // namespace jcas
