#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pvagg/control.hpp"
#include "pvagg/fleet.hpp"
#include "pvagg/grid.hpp"
#include "pvagg/mcs.hpp"
#include "pvagg/panel.hpp"
#include "pvagg/sim.hpp"

namespace pvagg {

struct GridSpec {
    double lo = 0.0;
    double hi = 0.0;
    double step = 0.0;
};

struct PanelSection {
    PanelDesign design;
    GridSpec dv_grid{-60.0, 20.0, 0.5};
    GridSpec s_grid{10.0, 100.0, 1.0};
};

struct ValidationSection {
    Fleet fleet;
    std::vector<double> dv_pv;      // case 1, one per unit
    std::vector<double> dv_dc_ref;  // case 2, one per unit
    double expected_dv_pv_a = -12.775;
    double expected_dv_dc_ref_a = -7.730;
    double t_step = 1.5;
    double t_end = 5.0;
};

struct EventSection {
    std::vector<Fleet> feeders;
    double load_step_pu = 0.086;
    double t_event = 1.0;
    double t_end = 40.0;
    PlantModel plant = PlantModel::benchmark;

    Fleet fleet() const;
};

struct RunSection {
    double dt_benchmark = 1e-5;
    double dt_linear = 5e-5;
    double record_interval = 1e-3;
    std::uint64_t seed = 1;
    std::string output_dir = "out";
    unsigned parallel = 1;
};

struct ScenarioConfig {
    PanelSection panel;
    SharedParams shared;
    ValidationSection validation;
    EventSection event;
    LfcParams grid;
    ControllerConfig controller;
    McsConfig mcs;
    RunSection run;

    /// Throws ConfigError naming the first offending key.
    void validate() const;
};

/// Built-in scenario: the ten-unit validation fleet and the forty-unit event fleet.
ScenarioConfig default_config();

/// Overlays a JSON document on the defaults. Unknown keys and wrong types raise
/// ConfigError; the result is validated.
ScenarioConfig parse_config(const std::string& json_text);
ScenarioConfig load_config_file(const std::string& path);

std::string config_to_json(const ScenarioConfig& cfg);

PanelParams scenario_panel(const ScenarioConfig& cfg);
PanelLut scenario_lut(const ScenarioConfig& cfg, const PanelParams& panel);

}  // namespace pvagg
