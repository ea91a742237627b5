#pragma once

// Shared reference scenario for the integration-level tests: BS at
// (50, 4.75, 7), user at (140, 0, 2), one near-user scatterer and one moving
// probe-direction target, 63 GHz with an 8x8 BS panel.

#include "jcas/config.hpp"

namespace jcas::testing {

inline SceneGeometry reference_scene(bool with_scatterers = true) {
    SceneGeometry scene;
    scene.bs_location = {50.0, 4.75, 7.0};
    scene.user_location = {140.0, 0.0, 2.0};
    if (with_scatterers) {
        ScattererSpec dou;
        dou.location = {132.0, 4.5, 3.0};
        ScattererSpec doi;
        doi.location = {120.0, 20.0, 7.0};
        doi.velocity = Eigen::Vector3d(-40.0 / 3.6, 0.0, 0.0);
        doi.doi_target = true;
        scene.scatterers = {dou, doi};
    }
    return scene;
}

inline ScenarioConfig reference_config(bool with_scatterers = true) {
    ScenarioConfig cfg;
    cfg.numerology.carrier_frequency = 63e9;
    cfg.numerology.subcarrier_spacing = 480e3;
    cfg.numerology.subcarrier_count = 64;
    cfg.numerology.symbol_count = 32;
    cfg.numerology.guard_fraction = 0.125;
    cfg.scene = reference_scene(with_scatterers);
    cfg.ul_power_dbm = 20.0;
    cfg.dl_power_dbm = 27.0;
    cfg.qam_order = 4;
    cfg.trials = 20;
    cfg.seed = 1;
    if (!with_scatterers) {
        cfg.dou_order = ModelOrder::fixed(1);
        // No DoI target in the scene; aim the probe off the user anyway.
        cfg.doi_direction = Direction{deg_to_rad(12.0), deg_to_rad(90.0)};
    }
    return cfg;
}

}  // namespace jcas::testing
