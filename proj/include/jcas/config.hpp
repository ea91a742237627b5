#pragma once

#include <optional>
#include <string>

#include "jcas/channel.hpp"
#include "jcas/pipeline.hpp"

namespace jcas {

enum class Scheme { Duc, Separated };

/// Full description of a simulation campaign; the single source of truth for
/// a run. Parsed from a flat key = value text file (see configs/default.cfg
/// for the documented schema).
struct ScenarioConfig {
    int schema_version = 1;

    OfdmNumerology numerology;
    int bs_p = 8, bs_q = 8;
    int user_p = 1, user_q = 1;
    double element_spacing_wavelengths = 0.5;

    SceneGeometry scene;

    double ul_power_dbm = 20.0;
    double dl_power_dbm = 27.0;
    std::vector<double> ptd_sweep_dbm = {24.0};

    double noise_figure = 10.0;        // linear
    double noise_temperature_k = 290.0;
    std::optional<double> noise_variance_w;  // direct override

    int qam_order = 4;
    int trials = 100;
    std::uint64_t seed = 1;
    std::uint64_t preamble_seed = 0x1234abcd;
    Scheme scheme = Scheme::Duc;
    int jobs = 1;
    bool report_ul_ber = false;

    // Estimator settings (mirrored into PipelineConfig).
    int angle_grid = 64;
    int range_grid = 256;
    int doppler_grid = 256;
    int newton_max_iterations = 30;
    double newton_epsilon_angle_rad = 1e-10;
    double newton_epsilon_range_m = 1e-8;
    double newton_epsilon_doppler_hz = 1e-6;
    double azimuth_window_deg_lo = -90.0, azimuth_window_deg_hi = 90.0;
    double elevation_window_deg_lo = 60.0, elevation_window_deg_hi = 150.0;
    bool fold_elevation = true;
    ModelOrder angle_order = ModelOrder::gap(10.0);
    ModelOrder ul_range_order = ModelOrder::fixed(1);
    ModelOrder dou_order = ModelOrder::fixed(2);
    ModelOrder doi_order = ModelOrder::fixed(1);
    bool per_element_nullspace = false;
    bool oracle_debug = false;
    std::optional<Direction> doi_direction;  // default: at the DoI scatterer

    // A scored detection whose estimated sensing SNR falls below this level
    // counts as a sensing failure: fixed-order MUSIC always returns peaks,
    // and a peak at the noise-eigenvalue level carries no target. Failed
    // trials are flagged, counted, and excluded from the SMSE means.
    // Set to 0 to disable.
    double min_sensing_snr = 6.0;

    // Doppler search prior in Hz (one-way); 0, 0 means the full unambiguous
    // window.
    double doppler_search_lo_hz = 0.0;
    double doppler_search_hi_hz = 0.0;

    double noise_variance() const;
    UpaSpec bs_upa() const;
    UpaSpec user_upa() const;
    Direction resolved_doi_direction() const;
    PipelineConfig pipeline_config(double ptd_dbm, Scheme run_scheme) const;
    void apply_full_scale();
};

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);

/// Parses configuration text; `origin` names the source in error messages.
/// Throws ConfigError with line and key context on any malformed entry.
ScenarioConfig parse_config(const std::string& text, const std::string& origin);
ScenarioConfig load_config(const std::string& path);

/// Serializes a config back to the key = value schema (used for the run
/// manifest; re-parsing it reproduces the run).
std::string format_config(const ScenarioConfig& config);

}  // namespace jcas
