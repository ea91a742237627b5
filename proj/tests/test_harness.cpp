#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "jcas/harness.hpp"
#include "test_scenes.hpp"

using namespace jcas;
using jcas::testing::reference_config;

namespace {

ScenarioConfig tiny_config(bool with_scatterers = true) {
    ScenarioConfig cfg = reference_config(with_scatterers);
    cfg.numerology.subcarrier_count = 32;
    cfg.numerology.symbol_count = 16;
    cfg.range_grid = 128;
    cfg.doppler_grid = 128;
    cfg.angle_grid = 48;
    cfg.trials = 4;
    cfg.ptd_sweep_dbm = {24.0};
    return cfg;
}

}  // namespace

TEST_CASE("dBm conversion is exact") {
    CHECK(dbm_to_watts(30.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(dbm_to_watts(27.0) == doctest::Approx(0.501187233627).epsilon(1e-10));
    CHECK(dbm_to_watts(20.0) == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(watts_to_dbm(dbm_to_watts(17.3)) == doctest::Approx(17.3).epsilon(1e-12));
}

TEST_CASE("config text parses into the scenario") {
    const std::string text = R"(
# reference deployment
schema_version = 1
carrier_frequency_hz = 63e9
subcarrier_spacing_hz = 480e3
subcarrier_count = 64
symbol_count = 32
bs_array = 8x8
user_array = 1x1
bs_location_m = 50, 4.75, 7
user_location_m = 140, 0, 2
scatterer = 132, 4.5, 3 | 0, 0, 0 | 1.0 | dou
scatterer = 120, 20, 7 | -11.1111, 0, 0 | 1.0 | doi
ul_power_dbm = 20
dl_power_dbm = 27
ptd_sweep_dbm = 15, 21, 24
qam_order = 16
trials = 7
seed = 5
scheme = separated
model_order_dou = fixed 2
)";
    const ScenarioConfig cfg = parse_config(text, "inline");
    CHECK(cfg.numerology.subcarrier_count == 64);
    CHECK(cfg.bs_p == 8);
    CHECK(cfg.scene.scatterers.size() == 2);
    CHECK(cfg.scene.scatterers[1].doi_target);
    CHECK(cfg.scene.scatterers[1].velocity.x() == doctest::Approx(-11.1111));
    CHECK(cfg.ptd_sweep_dbm.size() == 3);
    CHECK(cfg.qam_order == 16);
    CHECK(cfg.trials == 7);
    CHECK(cfg.scheme == Scheme::Separated);
    CHECK(cfg.dou_order.mode == ModelOrder::Mode::Fixed);
    // kFTB at the desk bandwidth.
    CHECK(cfg.noise_variance() ==
          doctest::Approx(1.38e-23 * 10.0 * 290.0 * 64 * 480e3).epsilon(1e-12));

    // Round trip through the manifest format.
    const ScenarioConfig back = parse_config(format_config(cfg), "manifest");
    CHECK(back.numerology.subcarrier_count == cfg.numerology.subcarrier_count);
    CHECK(back.scene.scatterers.size() == cfg.scene.scatterers.size());
    CHECK(back.qam_order == cfg.qam_order);
    CHECK(back.seed == cfg.seed);
}

TEST_CASE("config errors carry line and key context") {
    try {
        parse_config("trials = 10\nwhat_is_this = 3\n", "bad.cfg");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("bad.cfg:2") != std::string::npos);
        CHECK(msg.find("what_is_this") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config("trials == 10\n", "x"), ConfigError);
    CHECK_THROWS_AS(parse_config("qam_order = 5\n", "x"), ConfigError);
    CHECK_THROWS_AS(parse_config("scatterer = 1,2,3\n", "x"), ConfigError);
}

TEST_CASE("noiseless single trial lands on the refinement floor") {
    ScenarioConfig cfg = reference_config(true);
    cfg.noise_variance_w = 0.0;
    const TrialRecord rec = run_trial(cfg, Scheme::Duc, 24.0, 0);
    REQUIRE_FALSE(rec.failed);
    // Fused user rides the exact UL estimate; the DoI stream floor comes from
    // the data-beam echoes folded in by the symbol division.
    CHECK(rec.dou_location_sq < 1e-4);
    CHECK(rec.dou_velocity_sq < 1e-4);
    CHECK(rec.doi_location_sq < 0.01);
    CHECK(rec.dl_errors == 0);
}

TEST_CASE("identical seeds give byte-identical CSV, independent of workers") {
    ScenarioConfig cfg = tiny_config();
    const CampaignResult a = run_campaign(cfg);
    const CampaignResult b = run_campaign(cfg);
    CHECK(format_rows_csv(a.rows) == format_rows_csv(b.rows));

    cfg.jobs = 2;
    const CampaignResult c = run_campaign(cfg);
    CHECK(format_rows_csv(a.rows) == format_rows_csv(c.rows));

    ScenarioConfig other = cfg;
    other.seed = 999;
    const CampaignResult d = run_campaign(other);
    CHECK(format_rows_csv(a.rows) != format_rows_csv(d.rows));
}

TEST_CASE("case totals are the exact per-trial sums") {
    const ScenarioConfig cfg = tiny_config();
    for (Scheme scheme : {Scheme::Duc, Scheme::Separated}) {
        const std::vector<TrialRecord> records = run_point(cfg, scheme, 24.0);
        const std::vector<ResultRow> rows = aggregate_point(cfg, scheme, 24.0, records);
        double dou = 0.0, doi = 0.0, total = 0.0;
        for (const ResultRow& r : rows) {
            if (r.metric != "location_smse") continue;
            if (r.case_id == 1 || r.case_id == 2) dou = std::pow(10.0, r.value_db / 10.0);
            if (r.case_id == 3 || r.case_id == 4) doi = std::pow(10.0, r.value_db / 10.0);
            if (r.case_id == 5 || r.case_id == 6) total = std::pow(10.0, r.value_db / 10.0);
        }
        CHECK(total == doctest::Approx(dou + doi).epsilon(1e-12));
    }
}

TEST_CASE("result CSV emission and loopback") {
    SUBCASE("empty table is header-only") {
        CHECK(format_rows_csv({}) == "case,ptd_dbm,ms,qam_order,metric,value_db,trials,stderr\n");
    }
    SUBCASE("one row converts to dB") {
        ResultRow row;
        row.case_id = 2;
        row.ptd_dbm = 24.0;
        row.symbol_count = 32;
        row.qam_order = 4;
        row.metric = "location_smse";
        row.value_db = 10.0 * std::log10(0.02);
        row.trials = 100;
        row.standard_error = 0.001;
        const std::string csv = format_rows_csv({row});
        CHECK(csv.find("2,24,32,4,location_smse,") != std::string::npos);
        const std::vector<ResultRow> back = parse_rows_csv(csv);
        REQUIRE(back.size() == 1);
        CHECK(back[0].value_db == doctest::Approx(row.value_db).epsilon(1e-10));
        CHECK(back[0].trials == 100);
    }
    SUBCASE("campaign loopback reproduces the table") {
        ScenarioConfig cfg = tiny_config();
        cfg.trials = 2;
        const CampaignResult result = run_campaign(cfg);
        const std::string csv = format_rows_csv(result.rows);
        const std::vector<ResultRow> back = parse_rows_csv(csv);
        REQUIRE(back.size() == result.rows.size());
        CHECK(format_rows_csv(back) == csv);
    }
}

TEST_CASE("emit_results writes the three files") {
    ScenarioConfig cfg = tiny_config();
    cfg.trials = 1;
    const CampaignResult result = run_campaign(cfg);
    const std::string dir = "harness_test_out";
    emit_results(result, cfg, dir);
    std::ifstream smse(dir + "/smse.csv"), ber(dir + "/ber.csv"), man(dir + "/manifest.txt");
    CHECK(smse.good());
    CHECK(ber.good());
    CHECK(man.good());
    std::stringstream buf;
    buf << man.rdbuf();
    // The manifest reparses as a config.
    const ScenarioConfig back = parse_config(buf.str(), "manifest");
    CHECK(back.seed == cfg.seed);
}

TEST_CASE("on-grid baseline is pinned to the grid, the refined scheme is not") {
    // Noiseless LoS-only scene: the baseline's range error equals the
    // two-way grid quantization halved; the refined estimate sits orders of
    // magnitude below the pitch.
    ScenarioConfig cfg = reference_config(false);
    cfg.noise_variance_w = 0.0;

    auto range_error = [&](Scheme scheme, int grid) {
        ScenarioConfig local = cfg;
        local.range_grid = grid;
        std::mt19937_64 rng(trial_stream(local.seed, 0));
        const PipelineConfig pcfg = local.pipeline_config(24.0, scheme);
        const ChannelRealization real = make_realization(
            local.scene, local.numerology, pcfg.bs_array, pcfg.user_array, rng);
        const BlockResult block = run_block(real, pcfg, rng);
        REQUIRE_FALSE(block.sensing_failed);
        return std::abs(block.dld.dou_detections.entries[0].range -
                        real.paths().truth[0].range);
    };

    const double window = kSpeedOfLight / cfg.numerology.subcarrier_spacing;
    const double truth_two_way = 2.0 * 90.26385;

    for (int grid : {64, 256}) {
        const double pitch = window / (grid - 1);
        // Quantization oracle: distance to the nearest grid point, halved.
        const double cell = std::round(truth_two_way / pitch);
        const double predicted = std::abs(truth_two_way - cell * pitch) / 2.0;
        const double measured = range_error(Scheme::Separated, grid);
        CHECK(measured == doctest::Approx(predicted).epsilon(0.02));
        CHECK(measured <= pitch / 4.0 + 1e-9);  // worst case: half pitch, two-way

        CHECK(range_error(Scheme::Duc, grid) < 1e-3);
    }

    // Coarser grids widen the baseline-vs-refined gap for this geometry.
    CHECK(range_error(Scheme::Separated, 64) > range_error(Scheme::Separated, 256));
}
