#pragma once

#include <span>
#include <utility>
#include <vector>

#include "pvagg/panel.hpp"
#include "pvagg/state_space.hpp"

namespace pvagg {

struct PvUnitParams {
    double rated_power_w = 0.0;   // P_r,i
    double kp = 0.0;              // voltage-loop proportional gain, A/V
    double ki = 0.0;              // voltage-loop integral gain, A/(V s)
    double irradiance_pct = 0.0;  // S_i

    void validate() const;
};

struct SharedParams {
    double unit_capacitance = 2e-7;  // C_d, F per W of rating
    double tau = 1e-3;               // current-loop time constant, s
    double v_sd = 317.0;             // nominal d-axis terminal voltage, V
    double v_dc0 = 500.0;            // nominal DC-link voltage reference, V
    double panel_rating_w = 5695.0;  // P_pa
    double temperature_k = 300.0;
    double deload_fraction = 0.85;

    // Recorded from the parameter table; no role once the current loop is a
    // first-order lag.
    double filter_r_ohm = 0.001;
    double filter_l_h = 2e-5;
    double current_loop_kp = 0.02;
    double current_loop_kf = 1.0;
    int cells_per_string = 500;
    int strings = 70;

    void validate() const;
};

struct AggregateParams {
    double rated_power_w = 0.0;   // P_r^a
    double cp = 0.0;              // per-watt proportional gain
    double ci = 0.0;              // per-watt integral gain
    double irradiance_pct = 0.0;  // S^a, rating-weighted
    std::size_t unit_count = 0;
};

using Fleet = std::vector<PvUnitParams>;

/// Supervisory command delivered to one unit.
struct UnitCommand {
    double dv_pv = 0.0;      // array-voltage deviation, V
    double dv_dc_ref = 0.0;  // DC-link reference deviation, V
};

double capacitor_of(double rated_power_w, const SharedParams& shared);

AggregateParams aggregate_params(const Fleet& fleet, const SharedParams& shared);

struct AggregateInputs {
    double dv_pv = 0.0;
    double dv_dc_ref = 0.0;
};

/// Rating-weighted means of the individual commands.
AggregateInputs aggregate_inputs(const Fleet& fleet, std::span<const double> dv_pv,
                                 std::span<const double> dv_dc_ref);

double rating_weighted_mean(const Fleet& fleet, std::span<const double> values);

enum class Gain { proportional, integral };

/// Least-squares objective sum_i (c - k_i / P_r,i)^2 for the chosen gain.
double verify_gain_collapse(const Fleet& fleet, double c, Gain gain = Gain::proportional);

// Small-signal models. States (dV_dc, dP_PV, dx); the DC-link error enters the
// voltage loop as (V_dc - V_dc_ref) so the closed loop is stable.
StateSpace build_unit_ssm(const PvUnitParams& unit, const SharedParams& shared);
StateSpace build_aggregate_ssm(const AggregateParams& agg, const SharedParams& shared);

struct BenchmarkUnitState {
    double v_dc = 0.0;  // V
    double i_d = 0.0;   // A
    double x = 0.0;     // voltage-loop integrator, A
};

/// Nonlinear averaged fleet: per unit a DC-link capacitor, a first-order current
/// loop and a PI voltage loop, with the array as an instantaneous voltage actuator
/// on the lookup table. Units are summed at one bus.
class BenchmarkFleet {
  public:
    BenchmarkFleet(Fleet fleet, SharedParams shared, const PanelLut& lut);

    std::size_t size() const { return fleet_.size(); }
    const Fleet& units() const { return fleet_; }
    const SharedParams& shared() const { return shared_; }

    std::vector<BenchmarkUnitState> equilibrium() const;

    /// Array power of unit i under array-voltage deviation dv.
    double array_power(std::size_t i, double dv_pv) const;
    /// Equilibrium (de-loaded) array power of unit i.
    double nominal_power(std::size_t i) const { return p0_[i]; }
    double capacitance(std::size_t i) const { return cap_[i]; }

    /// States packed as (v_dc, i_d, x) per unit. Throws NumericalError when a
    /// DC-link voltage is non-positive.
    void derivative(std::span<const double> state, std::span<const UnitCommand> commands,
                    std::span<double> dstate) const;

    double pv_power(std::span<const double> state, std::size_t i) const;
    /// Sum over units of P_PV,i - P_PV,i(equilibrium).
    double total_pv_deviation(std::span<const double> state) const;
    /// Rating-weighted mean of V_dc,i - V_dc0.
    double aggregate_dc_deviation(std::span<const double> state) const;

  private:
    Fleet fleet_;
    SharedParams shared_;
    PanelLut lut_;
    std::vector<double> cap_;
    std::vector<double> p0_;
    std::vector<double> panels_;
    double total_rating_ = 0.0;
};

std::vector<double> pack_states(std::span<const BenchmarkUnitState> states);

std::vector<BenchmarkUnitState> benchmark_fleet_derivative(std::span<const BenchmarkUnitState> states,
                                                           std::span<const UnitCommand> commands,
                                                           const Fleet& fleet, const SharedParams& shared,
                                                           const PanelLut& lut);

}  // namespace pvagg
