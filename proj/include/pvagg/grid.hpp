#pragma once

#include "pvagg/state_space.hpp"

namespace pvagg {

struct LfcParams {
    double t_g = 0.3;        // governor time constant, s
    double t_t = 0.8;        // turbine time constant, s
    double h_g = 5.9746;     // equivalent inertia, s
    double r_g = 0.08;       // droop, pu
    double d = 1.0;          // load damping, pu
    double s_base = 116e6;   // VA

    void validate() const;
};

constexpr double kNominalFrequencyHz = 60.0;

/// Governor, turbine and swing states (all per unit). Input: PV power in pu;
/// disturbance: load step in pu; output: frequency deviation.
StateSpace build_lfc(const LfcParams& p);

/// Equilibrium frequency deviation of the LFC model under a constant load step.
double steady_state_freq(const LfcParams& p, double load_step_pu);

/// LFC plant with (H_ref, R_ref) substituted; other parameters unchanged.
StateSpace build_reference(double h_ref, double r_ref, const LfcParams& base);

/// Block-triangular coupling of the LFC model and the PV model whose output is
/// aggregate PV power in watts. States [x_g; x_PV].
StateSpace build_combined(const StateSpace& lfc, const StateSpace& pv, double s_base);

}  // namespace pvagg
