#pragma once

#include <string>
#include <vector>

#include "jcas/config.hpp"
#include "jcas/pipeline.hpp"

namespace jcas {

/// Per-trial outcome at one sweep point. Squared errors cover the scored
/// targets only: the user under the DoU cases, the DoI-marked scatterers
/// under the DoI cases.
struct TrialRecord {
    int trial = 0;
    double ptd_dbm = 0.0;
    bool failed = false;
    bool used_oracle = false;
    double dou_location_sq = 0.0;   // m^2
    double dou_velocity_sq = 0.0;   // (m/s)^2
    double doi_location_sq = 0.0;
    double doi_velocity_sq = 0.0;
    long dl_errors = 0;
    long dl_bits = 0;
    long ul_errors = 0;
    long ul_bits = 0;
};

/// One aggregated CSV row. `case_id` 1..6 for the SMSE cases, 0 for BER rows.
struct ResultRow {
    int case_id = 0;
    double ptd_dbm = 0.0;
    int symbol_count = 0;
    int qam_order = 0;
    std::string metric;
    double value_db = 0.0;
    int trials = 0;
    double standard_error = 0.0;  // linear units
};

struct CampaignResult {
    std::vector<ResultRow> rows;
    std::vector<TrialRecord> records;  // all sweep points, trial-major
    int failed_trials = 0;
};

/// Runs a single trial: realization + pipeline + scoring. The trial rng
/// stream is derived from seed XOR trial index, so outcomes do not depend on
/// execution order or worker count.
TrialRecord run_trial(const ScenarioConfig& config, Scheme scheme, double ptd_dbm,
                      int trial_index);

/// Runs `config.trials` trials at one sweep point (parallel over
/// config.jobs workers, deterministic result).
std::vector<TrialRecord> run_point(const ScenarioConfig& config, Scheme scheme,
                                   double ptd_dbm);

/// Full campaign over the configured P_t^D sweep under the configured scheme.
CampaignResult run_campaign(const ScenarioConfig& config);

/// Aggregates records of one sweep point into SMSE/BER rows. Failed trials
/// are excluded from the means but reported through CampaignResult.
std::vector<ResultRow> aggregate_point(const ScenarioConfig& config, Scheme scheme,
                                       double ptd_dbm,
                                       const std::vector<TrialRecord>& records);

/// Writes smse.csv, ber.csv and manifest.txt under `out_dir`. Output is
/// byte-deterministic for a given result table.
void emit_results(const CampaignResult& result, const ScenarioConfig& config,
                  const std::string& out_dir);

std::string format_rows_csv(const std::vector<ResultRow>& rows);
std::vector<ResultRow> parse_rows_csv(const std::string& text);

/// SMSE aggregate of per-trial squared-error sums: mean over included trials.
struct Aggregate {
    double mean = 0.0;
    double standard_error = 0.0;
    int count = 0;
};
Aggregate aggregate_values(const std::vector<double>& values);

std::uint64_t trial_stream(std::uint64_t seed, int trial_index);

}  // namespace jcas
