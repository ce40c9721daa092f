#include "pvagg/sim.hpp"

#include <cmath>
#include <cstdio>

#include "pvagg/errors.hpp"

namespace pvagg {

namespace {

std::size_t stride_of(double record_interval, double dt) {
    if (!(record_interval > 0)) throw DomainError("record interval must be positive");
    const double r = record_interval / dt;
    const double k = std::round(r);
    if (k < 1 || std::abs(r - k) > 1e-6 * k) throw DomainError("record interval must be a multiple of dt");
    return static_cast<std::size_t>(k);
}

double dc_energy(const BenchmarkFleet& bf, std::span<const double> x) {
    const double v0 = bf.shared().v_dc0;
    double e = 0.0;
    for (std::size_t i = 0; i < bf.size(); ++i) e += 0.5 * bf.capacitance(i) * (x[3 * i] * x[3 * i] - v0 * v0);
    return e;
}

void mark(SimTrace& tr, const IntegrationResult& r) {
    tr.truncated = r.truncated;
    tr.diagnostic = r.diagnostic;
}

}  // namespace

ValidationResult run_validation(const Fleet& fleet, const SharedParams& shared, const PanelLut& lut,
                                const ValidationCase& vc) {
    if (vc.commands.size() != fleet.size()) throw DomainError("one command per unit is required");
    if (!(vc.t_step >= 0 && vc.t_end > vc.t_step)) throw DomainError("validation needs 0 <= t_step < t_end");

    ValidationResult res;
    std::vector<double> dv_pv, dv_ref;
    for (const auto& c : vc.commands) {
        dv_pv.push_back(c.dv_pv);
        dv_ref.push_back(c.dv_dc_ref);
    }
    res.applied = aggregate_inputs(fleet, dv_pv, dv_ref);

    // benchmark: per-unit nonlinear states plus the integrated net power into the links
    const BenchmarkFleet bf(fleet, shared, lut);
    const std::size_t n = bf.size();
    std::vector<UnitCommand> zero(n);
    std::vector<double> x = pack_states(bf.equilibrium());
    x.push_back(0.0);
    const Derivative fb = [&](double t, std::span<const double> s, std::span<double> ds) {
        const std::span<const UnitCommand> cmd = t >= vc.t_step ? std::span<const UnitCommand>(vc.commands)
                                                                : std::span<const UnitCommand>(zero);
        bf.derivative(s.first(3 * n), cmd, ds.first(3 * n));
        double net = 0.0;
        for (std::size_t i = 0; i < n; ++i) net += bf.array_power(i, cmd[i].dv_pv) - bf.pv_power(s, i);
        ds[3 * n] = net;
    };
    res.benchmark = SimTrace({"dP_PV_a_W", "dV_dc_a_V", "dc_energy_J", "net_energy_in_J"});
    const Recorder rb = [&](double t, std::span<const double> s) {
        const double row[4] = {bf.total_pv_deviation(s.first(3 * n)), bf.aggregate_dc_deviation(s.first(3 * n)),
                               dc_energy(bf, s), s[3 * n]};
        res.benchmark.append(t, row);
    };
    mark(res.benchmark, integrate_rk4(fb, x, 0.0, vc.t_end, vc.dt_benchmark,
                                      stride_of(vc.record_interval, vc.dt_benchmark), rb));

    // aggregate linear model under the aggregated command
    const AggregateParams agg = aggregate_params(fleet, shared);
    const StateSpace pv = build_aggregate_ssm(agg, shared);
    const double dp_step =
        agg.rated_power_w / shared.panel_rating_w * lut_forward(lut, res.applied.dv_pv, agg.irradiance_pct);
    std::vector<double> xa(3, 0.0);
    const Derivative fa = [&](double t, std::span<const double> s, std::span<double> ds) {
        const double u0 = t >= vc.t_step ? dp_step : 0.0;
        const double u1 = t >= vc.t_step ? res.applied.dv_dc_ref : 0.0;
        for (int i = 0; i < 3; ++i) {
            double v = pv.B(i, 0) * u0 + pv.B(i, 1) * u1;
            for (int j = 0; j < 3; ++j) v += pv.A(i, j) * s[j];
            ds[i] = v;
        }
    };
    res.aggregate = SimTrace({"dP_PV_a_W", "dV_dc_a_V"});
    const Recorder ra = [&](double t, std::span<const double> s) {
        const double row[2] = {s[1], s[0]};
        res.aggregate.append(t, row);
    };
    mark(res.aggregate, integrate_rk4(fa, xa, 0.0, vc.t_end, vc.dt_aggregate,
                                      stride_of(vc.record_interval, vc.dt_aggregate), ra));
    return res;
}

TrackingController design_event_controller(const LfcParams& grid, const Fleet& fleet, const SharedParams& shared,
                                           const PanelLut& lut, const ControllerConfig& cfg) {
    const AggregateParams agg = aggregate_params(fleet, shared);
    const StateSpace pv = build_aggregate_ssm(agg, shared);
    const StateSpace lfc = build_lfc(grid);
    const StateSpace combined = build_combined(lfc, pv, grid.s_base);
    const StateSpace reference = build_reference(cfg.h_ref, cfg.r_ref, grid);
    return TrackingController(combined, reference, agg, shared, grid.s_base, lut, cfg);
}

EventResult run_frequency_event(const LfcParams& grid, const Fleet& fleet, const SharedParams& shared,
                                const PanelLut& lut, const TrackingController& ctrl, const EventConfig& ev) {
    if (!(ev.t_event >= 0 && ev.t_end > ev.t_event)) throw DomainError("event needs 0 <= t_event < t_end");
    const StateSpace lfc = build_lfc(grid);
    const StateSpace& ref = ctrl.reference();
    const bool bench = ev.plant == PlantModel::benchmark;

    const BenchmarkFleet bf(fleet, shared, lut);
    const std::size_t nu = bf.size();
    const AggregateParams& agg = ctrl.aggregate();
    const StateSpace pv = build_aggregate_ssm(agg, shared);
    const double panels_a = agg.rated_power_w / shared.panel_rating_w;

    const std::size_t np = bench ? 3 * nu : 3;
    const std::size_t nc = ctrl.state_size();
    const std::size_t ip = 3, ic = ip + np, ir = ic + nc, iu = ir + 3, nx = iu + 3;

    std::vector<double> x(nx, 0.0);
    if (bench) {
        const auto eq = pack_states(bf.equilibrium());
        std::copy(eq.begin(), eq.end(), x.begin() + ip);
    }
    std::vector<UnitCommand> cmds(nu);

    auto lfc_rhs = [](const StateSpace& m, std::span<const double> s, double u, double d, std::span<double> ds) {
        for (int i = 0; i < 3; ++i) {
            double v = m.B(i, 0) * u + m.E(i, 0) * d;
            for (int j = 0; j < 3; ++j) v += m.A(i, j) * s[j];
            ds[i] = v;
        }
    };
    auto pv_dev = [&](std::span<const double> s) {
        return bench ? bf.total_pv_deviation(s.subspan(ip, np)) : s[ip + 1];
    };

    const Derivative f = [&](double t, std::span<const double> s, std::span<double> ds) {
        const double d = t >= ev.t_event ? ev.load_step_pu : 0.0;
        const double y = s[2];
        const auto out = ctrl.evaluate(s.subspan(ic, nc), y);
        lfc_rhs(lfc, s.first(3), pv_dev(s) / grid.s_base, d, ds.first(3));
        if (bench) {
            for (auto& c : cmds) c = {out.dv_pv_agg, out.u.dv_dc_ref_v};
            bf.derivative(s.subspan(ip, np), cmds, ds.subspan(ip, np));
        } else {
            const double u0 = panels_a * lut_forward(lut, out.dv_pv_agg, agg.irradiance_pct);
            const double u1 = out.u.dv_dc_ref_v;
            for (int i = 0; i < 3; ++i) {
                double v = pv.B(i, 0) * u0 + pv.B(i, 1) * u1;
                for (int j = 0; j < 3; ++j) v += pv.A(i, j) * s[ip + j];
                ds[ip + i] = v;
            }
        }
        ctrl.derivative(s.subspan(ic, nc), y, out, ds.subspan(ic, nc));
        lfc_rhs(ref, s.subspan(ir, 3), 0.0, d, ds.subspan(ir, 3));
        lfc_rhs(lfc, s.subspan(iu, 3), 0.0, d, ds.subspan(iu, 3));
    };

    std::vector<std::string> labels = {"domega_pu", "f_Hz",        "f_ref_Hz",  "f_unc_Hz",  "dP_ref_W",
                                       "dV_dc_ref_V", "dV_PV_a_V", "dP_PV_a_W", "dV_dc_a_V", "d_pu",
                                       "d_hat_pu",  "saturated",   "dV_PV_cmd_V", "dV_dc_ref_cmd_V"};
    if (bench) {
        char buf[32];
        for (std::size_t i = 0; i < nu; ++i) {
            std::snprintf(buf, sizeof buf, "dP_PV_u%02zu_W", i);
            labels.emplace_back(buf);
        }
    }
    EventResult res;
    res.trace = SimTrace(labels);
    std::vector<double> row(labels.size());
    const double f0 = kNominalFrequencyHz;
    const Recorder rec = [&](double t, std::span<const double> s) {
        const auto out = ctrl.evaluate(s.subspan(ic, nc), s[2]);
        const auto unit = invert_controls({out.dv_pv_agg, out.u.dv_dc_ref_v}, nu);
        row[0] = s[2];
        row[1] = f0 * (1.0 + s[2]);
        row[2] = f0 * (1.0 + s[ir + 2]);
        row[3] = f0 * (1.0 + s[iu + 2]);
        row[4] = out.u.dp_ref_w;
        row[5] = out.u.dv_dc_ref_v;
        row[6] = out.dv_pv_agg;
        row[7] = pv_dev(s);
        row[8] = bench ? bf.aggregate_dc_deviation(s.subspan(ip, np)) : s[ip];
        row[9] = t >= ev.t_event ? ev.load_step_pu : 0.0;
        row[10] = out.d_hat;
        row[11] = out.saturated ? 1.0 : 0.0;
        row[12] = unit.front().dv_pv;
        row[13] = unit.front().dv_dc_ref;
        if (bench)
            for (std::size_t i = 0; i < nu; ++i) row[14 + i] = bf.pv_power(s.subspan(ip, np), i) - bf.nominal_power(i);
        res.trace.append(t, row);
    };
    res.status = integrate_rk4(f, x, 0.0, ev.t_end, ev.dt, stride_of(ev.record_interval, ev.dt), rec);
    mark(res.trace, res.status);
    if (bench)
        for (std::size_t i = 0; i < nu; ++i) res.unit_final_dp_w.push_back(res.trace.column(labels[14 + i]).back());
    return res;
}

}  // namespace pvagg
