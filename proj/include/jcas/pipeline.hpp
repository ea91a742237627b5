#pragma once

#include <cstdint>
#include <optional>

#include "jcas/beamforming.hpp"
#include "jcas/channel.hpp"
#include "jcas/fusion.hpp"
#include "jcas/spectrum.hpp"
#include "jcas/waveform.hpp"

namespace jcas {

enum class CsiSource { Ulp, Dlp, Fused };

/// Complex channel-estimate grid per (subcarrier, symbol).
struct CsiMatrix {
    Eigen::MatrixXcd grid;  // N_c x M_s
    CsiSource source = CsiSource::Ulp;
    double estimated_snr = 0.0;  // gamma of the dominant component
};

enum class DetectionDomain { Ul, DlDoU, DlDoI };

struct Detection {
    std::optional<Direction> direction;
    double range = 0.0;    // one-way meters
    double doppler = 0.0;  // one-way Hz
    double sensing_snr = 0.0;
    double peak = 0.0;     // spectrum peak 1/f at the estimate
    bool wrapped = false;
};

/// Entries sorted by descending spectrum peak; the first UL entry is taken as
/// the user since the LoS path dominates.
struct DetectionSet {
    DetectionDomain domain = DetectionDomain::Ul;
    std::vector<Detection> entries;
};

struct PipelineConfig {
    OfdmNumerology numerology;
    UpaSpec bs_array;
    UpaSpec user_array;

    double ul_power_w = 0.1;        // P_t^U (preamble and UL data)
    double dl_power_w = 0.5;        // P_t^D budget shared by data and probe
    double dl_data_power_w = 0.25;  // P_t^D for the data beam; probe gets the rest
    double noise_variance_w = 0.0;

    int qam_order = 4;
    std::uint64_t preamble_seed = 0x1234abcd;

    // Estimator settings.
    int angle_grid = 64;
    int range_grid = 256;
    int doppler_grid = 256;
    int max_iterations = 30;
    double epsilon_angle = 1e-10;
    double epsilon_range = 1e-8;
    double epsilon_doppler = 1e-6;
    double azimuth_lo = -kPi / 2.0;
    double azimuth_hi = kPi / 2.0;
    double elevation_lo = deg_to_rad(60.0);
    double elevation_hi = deg_to_rad(150.0);
    // The planar array cannot tell elevation from its mirror about the array
    // plane; with this flag estimates are folded to elevation >= 90 deg
    // (targets at or below the BS plane).
    bool fold_elevation = true;

    // Doppler search window (Hz). Zeroes select the full unambiguous
    // window [-1/(2 T_s), +1/(2 T_s)); a narrower window encodes a prior on
    // plausible radial velocities. Estimates always wrap on the full
    // unambiguous period.
    double doppler_search_lo_hz = 0.0;
    double doppler_search_hi_hz = 0.0;

    ModelOrder angle_order = ModelOrder::gap(10.0);
    ModelOrder ul_range_order = ModelOrder::fixed(1);
    ModelOrder dou_order = ModelOrder::fixed(2);
    ModelOrder doi_order = ModelOrder::fixed(1);

    bool refine = true;                 // false: on-grid estimates (baseline)
    bool per_element_nullspace = false; // per-(n,m) probe nullspace
    bool oracle_debug = false;          // fall back to ground truth on failure

    Direction doi_direction;  // probe direction p_S^D

    double probe_power_w() const { return dl_power_w - dl_data_power_w; }
};

struct UlpResult {
    bool sensing_failed = false;
    std::vector<Direction> aoas;      // descending by spectrum peak
    DetectionSet detections;          // matched (range, Doppler) per target
    CsiMatrix csi;                    // h_CS reshaped to N_c x M_s
    ComplexMatrix stacked_csi;        // per-element CSI, PQ x (N_c * M_s)
    ComplexVector combiner;           // w_RX^U, unit norm
    ComplexVector spatial_signature;  // dominant eigenvector of R_x
    bool combiner_regularized = false;
};

struct DldResult {
    DetectionSet dou_detections;  // halved to one-way values
    DetectionSet doi_detections;
    DlJcasBeamformers beams;
    Eigen::MatrixXcd user_rx_grid;   // data signal at the user per (n, m)
    std::vector<std::uint8_t> tx_bits;
    double user_signal_power = 0.0;        // mean power of the data term
    double user_interference_power = 0.0;  // mean power of the probe leak term
};

struct BlockResult {
    bool sensing_failed = false;
    bool used_oracle = false;
    UlpResult ulp;
    CsiMatrix dl_csi;
    DldResult dld;
    std::vector<FusedFeature> fused;  // Algorithm-2 output (user first)
    CsiMatrix fused_csi;

    // Demodulation outcomes for the DL data grid under both CSI choices.
    long dl_bits = 0;
    long dl_errors_fused = 0;
    long dl_errors_single = 0;
    // Same for the UL data period.
    long ul_bits = 0;
    long ul_errors_fused = 0;
    long ul_errors_single = 0;
};

/// UL preamble period: per-element LS CSI, 2D MUSIC AoA with Newton
/// refinement, LoS receive combining, decoupled range/Doppler MUSIC with
/// matched pairing, and per-target sensing SNR.
UlpResult run_ulp(const ChannelRealization& realization, const PipelineConfig& cfg,
                  std::mt19937_64& rng);

/// DL preamble period: user-side LS CSI through the reciprocal beams.
CsiMatrix run_dlp(const ChannelRealization& realization, const PipelineConfig& cfg,
                  const UlpResult& ulp, std::mt19937_64& rng);

/// DL data period: mono-static echo sounding through the nullspace beam
/// pair, plus the user-side data signal for BER measurement.
DldResult run_dld(const ChannelRealization& realization, const PipelineConfig& cfg,
                  const UlpResult& ulp, std::mt19937_64& rng);

/// One full coherence block in order ULP -> ULD -> DLP -> DLD, then sensing
/// and CSI fusion. DLD beams are always constructed from ULP outputs; ground
/// truth substitutes only in oracle-debug mode and is marked in the result.
BlockResult run_block(const ChannelRealization& realization, const PipelineConfig& cfg,
                      std::mt19937_64& rng);

/// Feature points (location in the BS frame + Doppler) from a detection set.
std::vector<TargetFeature> make_features(const DetectionSet& detections);

}  // namespace jcas
