#include "pvagg/fleet.hpp"

#include <cmath>
#include <string>

#include "pvagg/errors.hpp"

namespace pvagg {

void PvUnitParams::validate() const {
    if (!(rated_power_w > 0)) throw DomainError("unit rated power must be positive");
    if (!(kp > 0)) throw DomainError("unit proportional gain must be positive");
    if (!(ki > 0)) throw DomainError("unit integral gain must be positive");
    if (!(irradiance_pct > 0 && irradiance_pct <= 100)) throw DomainError("unit irradiance must lie in (0, 100]");
}

void SharedParams::validate() const {
    if (!(unit_capacitance > 0 && tau > 0 && v_sd > 0 && v_dc0 > 0 && panel_rating_w > 0 && temperature_k > 0))
        throw DomainError("shared PV parameters must be strictly positive");
    if (!(deload_fraction > 0 && deload_fraction < 1)) throw DomainError("de-load fraction must lie in (0, 1)");
}

double capacitor_of(double rated_power_w, const SharedParams& shared) {
    if (!(rated_power_w >= 0)) throw DomainError("rated power must be non-negative");
    return rated_power_w * shared.unit_capacitance;
}

AggregateParams aggregate_params(const Fleet& fleet, const SharedParams& shared) {
    if (fleet.empty()) throw DomainError("cannot aggregate an empty fleet");
    shared.validate();
    AggregateParams agg;
    double weighted_s = 0.0;
    double sum_cp = 0.0;
    double sum_ci = 0.0;
    for (const auto& u : fleet) {
        u.validate();
        agg.rated_power_w += u.rated_power_w;
        weighted_s += u.rated_power_w * u.irradiance_pct;
        sum_cp += u.kp / u.rated_power_w;
        sum_ci += u.ki / u.rated_power_w;
    }
    const auto n = static_cast<double>(fleet.size());
    agg.cp = sum_cp / n;
    agg.ci = sum_ci / n;
    agg.irradiance_pct = weighted_s / agg.rated_power_w;
    agg.unit_count = fleet.size();
    return agg;
}

double rating_weighted_mean(const Fleet& fleet, std::span<const double> values) {
    if (values.size() != fleet.size())
        throw DomainError("expected " + std::to_string(fleet.size()) + " values, got " + std::to_string(values.size()));
    if (fleet.empty()) throw DomainError("cannot average over an empty fleet");
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < fleet.size(); ++i) {
        num += fleet[i].rated_power_w * values[i];
        den += fleet[i].rated_power_w;
    }
    return num / den;
}

AggregateInputs aggregate_inputs(const Fleet& fleet, std::span<const double> dv_pv,
                                 std::span<const double> dv_dc_ref) {
    return {rating_weighted_mean(fleet, dv_pv), rating_weighted_mean(fleet, dv_dc_ref)};
}

double verify_gain_collapse(const Fleet& fleet, double c, Gain gain) {
    double r = 0.0;
    for (const auto& u : fleet) {
        const double k = (gain == Gain::proportional ? u.kp : u.ki) / u.rated_power_w;
        r += (c - k) * (c - k);
    }
    return r;
}

namespace {

StateSpace pv_model(double capacitance, double kp, double ki, const SharedParams& sh, const char* suffix) {
    const std::string s(suffix);
    const double a = 1.0 / (capacitance * sh.v_dc0);
    const double half = sh.v_sd / (2.0 * sh.tau);
    StateSpace m;
    m.A = Eigen::MatrixXd::Zero(3, 3);
    m.B = Eigen::MatrixXd::Zero(3, 2);
    m.C = Eigen::MatrixXd::Zero(1, 3);
    m.E = Eigen::MatrixXd::Zero(3, 0);
    m.A(0, 1) = -a;
    m.A(1, 0) = kp * half;
    m.A(1, 1) = -1.0 / sh.tau;
    m.A(1, 2) = half;
    m.A(2, 0) = ki;
    m.B(0, 0) = a;
    m.B(1, 1) = -kp * half;
    m.B(2, 1) = -ki;
    m.C(0, 1) = 1.0;
    m.state_labels = {"dV_dc" + s, "dP_PV" + s, "dx" + s};
    m.output_labels = {"dP_PV" + s};
    return m;
}

}  // namespace

StateSpace build_unit_ssm(const PvUnitParams& unit, const SharedParams& shared) {
    unit.validate();
    shared.validate();
    StateSpace m = pv_model(capacitor_of(unit.rated_power_w, shared), unit.kp, unit.ki, shared, "");
    m.input_labels = {"dP_array", "dV_dc_ref"};
    return m;
}

StateSpace build_aggregate_ssm(const AggregateParams& agg, const SharedParams& shared) {
    if (!(agg.rated_power_w > 0 && agg.cp > 0 && agg.ci > 0))
        throw DomainError("aggregate parameters must be strictly positive");
    shared.validate();
    StateSpace m = pv_model(capacitor_of(agg.rated_power_w, shared), agg.cp * agg.rated_power_w,
                            agg.ci * agg.rated_power_w, shared, "_a");
    m.input_labels = {"dP_PV_ref_a", "dV_dc_ref_a"};
    return m;
}

BenchmarkFleet::BenchmarkFleet(Fleet fleet, SharedParams shared, const PanelLut& lut)
    : fleet_(std::move(fleet)), shared_(shared), lut_(lut) {
    if (fleet_.empty()) throw DomainError("benchmark fleet is empty");
    shared_.validate();
    for (const auto& u : fleet_) {
        u.validate();
        const double panels = u.rated_power_w / shared_.panel_rating_w;
        panels_.push_back(panels);
        cap_.push_back(capacitor_of(u.rated_power_w, shared_));
        p0_.push_back(panels * shared_.deload_fraction * lut_.p_mpp_at(u.irradiance_pct));
        total_rating_ += u.rated_power_w;
    }
}

std::vector<BenchmarkUnitState> BenchmarkFleet::equilibrium() const {
    std::vector<BenchmarkUnitState> eq(size());
    for (std::size_t i = 0; i < size(); ++i) {
        const double i_d = 2.0 * p0_[i] / shared_.v_sd;
        eq[i] = {shared_.v_dc0, i_d, i_d};
    }
    return eq;
}

double BenchmarkFleet::array_power(std::size_t i, double dv_pv) const {
    return p0_[i] + panels_[i] * lut_forward(lut_, dv_pv, fleet_[i].irradiance_pct);
}

double BenchmarkFleet::pv_power(std::span<const double> state, std::size_t i) const {
    return 0.5 * state[3 * i + 1] * shared_.v_sd;
}

void BenchmarkFleet::derivative(std::span<const double> state, std::span<const UnitCommand> commands,
                                std::span<double> dstate) const {
    const std::size_t n = size();
    if (state.size() != 3 * n || dstate.size() != 3 * n || commands.size() != n)
        throw DomainError("benchmark fleet: one state triple and one command per unit required");
    for (std::size_t i = 0; i < n; ++i) {
        const double v_dc = state[3 * i];
        const double i_d = state[3 * i + 1];
        const double x = state[3 * i + 2];
        if (!(v_dc > 0.0))
            throw NumericalError("benchmark unit " + std::to_string(i) + " DC-link voltage collapsed");
        const auto& u = fleet_[i];
        const double error = v_dc - (shared_.v_dc0 + commands[i].dv_dc_ref);
        const double i_ref = u.kp * error + x;
        const double p_array = array_power(i, commands[i].dv_pv);
        dstate[3 * i] = (p_array - 0.5 * i_d * shared_.v_sd) / (cap_[i] * v_dc);
        dstate[3 * i + 1] = (i_ref - i_d) / shared_.tau;
        dstate[3 * i + 2] = u.ki * error;
    }
}

double BenchmarkFleet::total_pv_deviation(std::span<const double> state) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < size(); ++i) sum += pv_power(state, i) - p0_[i];
    return sum;
}

double BenchmarkFleet::aggregate_dc_deviation(std::span<const double> state) const {
    double num = 0.0;
    for (std::size_t i = 0; i < size(); ++i) num += fleet_[i].rated_power_w * (state[3 * i] - shared_.v_dc0);
    return num / total_rating_;
}

std::vector<double> pack_states(std::span<const BenchmarkUnitState> states) {
    std::vector<double> out;
    out.reserve(3 * states.size());
    for (const auto& s : states) {
        out.push_back(s.v_dc);
        out.push_back(s.i_d);
        out.push_back(s.x);
    }
    return out;
}

std::vector<BenchmarkUnitState> benchmark_fleet_derivative(std::span<const BenchmarkUnitState> states,
                                                           std::span<const UnitCommand> commands,
                                                           const Fleet& fleet, const SharedParams& shared,
                                                           const PanelLut& lut) {
    const BenchmarkFleet bench(fleet, shared, lut);
    const auto packed = pack_states(states);
    std::vector<double> d(packed.size());
    bench.derivative(packed, commands, d);
    std::vector<BenchmarkUnitState> out(states.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = {d[3 * i], d[3 * i + 1], d[3 * i + 2]};
    return out;
}

}  // namespace pvagg
