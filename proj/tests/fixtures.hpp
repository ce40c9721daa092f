#pragma once

#include "pvagg/config.hpp"

namespace fixtures {

inline const pvagg::ScenarioConfig& config() {
    static const pvagg::ScenarioConfig c = pvagg::default_config();
    return c;
}

inline const pvagg::PanelParams& panel() {
    static const pvagg::PanelParams p = pvagg::scenario_panel(config());
    return p;
}

inline const pvagg::PanelLut& lut() {
    static const pvagg::PanelLut l = pvagg::scenario_lut(config(), panel());
    return l;
}

}  // namespace fixtures
