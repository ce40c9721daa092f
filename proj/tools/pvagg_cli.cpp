// pvagg: LUT export, aggregate-model validation, frequency-event simulation,
// Monte Carlo error study and controller design report.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "pvagg/config.hpp"
#include "pvagg/csv.hpp"
#include "pvagg/errors.hpp"
#include "pvagg/trace_io.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace pvagg;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<double> dt;
    std::optional<std::string> out;
    std::optional<unsigned> parallel;
    std::optional<std::size_t> trials;
};

ScenarioConfig load(const Overrides& o) {
    ScenarioConfig c;
    if (o.config.empty()) {
        c = default_config();
    } else {
        c = load_config_file(o.config);
    }
    if (o.seed) c.run.seed = *o.seed;
    if (o.dt) {
        c.run.dt_benchmark = *o.dt;
        c.run.dt_linear = *o.dt;
    }
    if (o.out) c.run.output_dir = *o.out;
    if (o.parallel) c.run.parallel = *o.parallel;
    if (o.trials) c.mcs.trials = *o.trials;
    c.mcs.seed = c.run.seed;
    c.mcs.threads = c.run.parallel;
    c.validate();
    return c;
}

fs::path out_dir(const ScenarioConfig& c) {
    fs::path p(c.run.output_dir);
    fs::create_directories(p);
    return p;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream os(p);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    return os;
}

void write_json(const fs::path& p, const json& j) {
    auto os = open_out(p);
    os << j.dump(2) << '\n';
}

json metrics_json(const Metrics& m) {
    json j;
    j["nadir_hz"] = m.nadir_hz;
    j["rocof_hz_s"] = m.rocof_hz_s;
    j["settling_hz"] = m.settling_hz;
    if (m.tracking_error_pct) j["tracking_error_pct"] = *m.tracking_error_pct;
    return j;
}

void check_trace(const SimTrace& t, const char* what) {
    if (t.truncated) throw NumericalError(std::string(what) + ": " + t.diagnostic);
}

int cmd_lut(const ScenarioConfig& c) {
    const auto dir = out_dir(c);
    const PanelParams p = scenario_panel(c);
    const PanelLut lut = scenario_lut(c, p);
    {
        auto os = open_out(dir / "lut.csv");
        write_lut_csv(lut, os);
    }
    {
        auto os = open_out(dir / "lut_meta.json");
        write_lut_meta(lut, os);
    }
    {
        auto os = open_out(dir / "lut_surface.csv");
        os << "dv_V,S_pct,dP_W\n";
        for (std::size_t i = 0; i < lut.rows(); ++i)
            for (std::size_t j = 0; j < lut.cols(); ++j)
                os << fmt9(lut.dv_grid[i]) << ',' << fmt9(lut.s_grid[j]) << ',' << fmt9(lut.at(i, j)) << '\n';
    }
    json pj;
    pj["photocurrent_a"] = p.photocurrent_a;
    pj["saturation_current_a"] = p.saturation_current_a;
    pj["ideality"] = p.ideality;
    pj["series_resistance_ohm"] = p.series_resistance_ohm;
    pj["shunt_resistance_ohm"] = p.shunt_resistance_ohm;
    pj["series_cells"] = p.series_cells;
    pj["p_mpp_at_100_w"] = lut.p_mpp_at(100.0);
    pj["v_mpp_at_100_v"] = lut.v_mpp.back();
    pj["v_op_at_100_v"] = lut.v_op.back();
    write_json(dir / "panel.json", pj);
    std::cout << "p_mpp(S=100) = " << lut.p_mpp_at(100.0) << " W; LUT " << lut.rows() << "x" << lut.cols()
              << " written to " << dir.string() << '\n';
    return 0;
}

int cmd_validate(const ScenarioConfig& c) {
    const auto dir = out_dir(c);
    const PanelLut lut = scenario_lut(c, scenario_panel(c));
    const auto& v = c.validation;
    const AggregateInputs computed = aggregate_inputs(v.fleet, v.dv_pv, v.dv_dc_ref);

    json report;
    report["computed_aggregate"] = {{"dV_PV", computed.dv_pv}, {"dV_dc_ref", computed.dv_dc_ref}};
    report["expected_aggregate"] = {{"dV_PV", v.expected_dv_pv_a}, {"dV_dc_ref", v.expected_dv_dc_ref_a}};
    report["aggregate_discrepancy"] = {{"dV_PV", computed.dv_pv - v.expected_dv_pv_a},
                                       {"dV_dc_ref", computed.dv_dc_ref - v.expected_dv_dc_ref_a}};
    report["error_definition"] =
        "steady_state = |agg(t_end) - bench(t_end)| / max|bench|; peak = max|agg - bench| / max|bench|";
    report["tolerance"] = {{"steady_state", 0.05}, {"peak", 0.10}};
    json cases = json::array();
    bool all_ok = true;
    for (int k = 0; k < 2; ++k) {
        const char* name = k == 0 ? "dV_PV_step" : "dV_dc_ref_step";
        ValidationCase vc;
        vc.t_step = v.t_step;
        vc.t_end = v.t_end;
        vc.dt_benchmark = c.run.dt_benchmark;
        vc.dt_aggregate = c.run.dt_linear;
        vc.record_interval = c.run.record_interval;
        for (std::size_t i = 0; i < v.fleet.size(); ++i)
            vc.commands.push_back(k == 0 ? UnitCommand{v.dv_pv[i], 0.0} : UnitCommand{0.0, v.dv_dc_ref[i]});
        const auto r = run_validation(v.fleet, c.shared, lut, vc);
        check_trace(r.benchmark, "benchmark");
        check_trace(r.aggregate, "aggregate");
        {
            auto os = open_out(dir / (std::string("validation_") + name + "_benchmark.csv"));
            write_trace_csv(r.benchmark, os);
        }
        {
            auto os = open_out(dir / (std::string("validation_") + name + "_aggregate.csv"));
            write_trace_csv(r.aggregate, os);
        }
        json cj;
        cj["name"] = name;
        cj["applied_aggregate"] = {{"dV_PV", r.applied.dv_pv}, {"dV_dc_ref", r.applied.dv_dc_ref}};
        bool ok = true;
        for (const char* col : {"dP_PV_a_W", "dV_dc_a_V"}) {
            const auto cmp = compare_columns(r.aggregate, r.benchmark, col);
            cj[col] = {{"steady_state_error", cmp.steady_state_error},
                       {"peak_error", cmp.peak_error},
                       {"scale", cmp.scale}};
            ok = ok && cmp.steady_state_error <= 0.05 && cmp.peak_error <= 0.10;
        }
        cj["within_tolerance"] = ok;
        all_ok = all_ok && ok;
        cases.push_back(cj);
        std::cout << name << ": P ss " << cj["dP_PV_a_W"]["steady_state_error"].get<double>() << ", peak "
                  << cj["dP_PV_a_W"]["peak_error"].get<double>() << "; V ss "
                  << cj["dV_dc_a_V"]["steady_state_error"].get<double>() << ", peak "
                  << cj["dV_dc_a_V"]["peak_error"].get<double>() << (ok ? "  ok" : "  OUT OF TOLERANCE") << '\n';
    }
    report["cases"] = cases;
    write_json(dir / "validation_report.json", report);
    std::cout << "aggregate inputs: computed " << computed.dv_pv << " / " << computed.dv_dc_ref << " V, expected "
              << v.expected_dv_pv_a << " / " << v.expected_dv_dc_ref_a << " V\n";
    return 0;
}

TrackingController design(const ScenarioConfig& c, const PanelLut& lut) {
    return design_event_controller(c.grid, c.event.fleet(), c.shared, lut, c.controller);
}

int cmd_design(const ScenarioConfig& c) {
    const auto dir = out_dir(c);
    const PanelLut lut = scenario_lut(c, scenario_panel(c));
    const auto ctrl = design(c, lut);
    auto os = open_out(dir / "controller_report.txt");
    write_design_report(ctrl, os);
    std::cout << "tracking CARE residual " << ctrl.gain().care.residual << ", observer CARE residual "
              << ctrl.uio().dual_care.residual << ", max closed-loop Re(eig) "
              << max_real_eigenvalue(ctrl.closed_loop_matrix()) << '\n';
    return 0;
}

int cmd_event(const ScenarioConfig& c) {
    const auto dir = out_dir(c);
    const PanelLut lut = scenario_lut(c, scenario_panel(c));
    const Fleet fleet = c.event.fleet();
    const auto ctrl = design(c, lut);
    {
        auto os = open_out(dir / "controller_report.txt");
        write_design_report(ctrl, os);
    }
    EventConfig ev;
    ev.load_step_pu = c.event.load_step_pu;
    ev.t_event = c.event.t_event;
    ev.t_end = c.event.t_end;
    ev.plant = c.event.plant;
    ev.dt = ev.plant == PlantModel::benchmark ? c.run.dt_benchmark : c.run.dt_linear;
    ev.record_interval = c.run.record_interval;
    const auto r = run_frequency_event(c.grid, fleet, c.shared, lut, ctrl, ev);
    {
        auto os = open_out(dir / "event_trace.csv");
        write_trace_csv(r.trace, os);
    }
    check_trace(r.trace, "frequency event");

    const Metrics mc = compute_metrics(r.trace, "f_Hz", "f_ref_Hz");
    const Metrics mr = compute_metrics(r.trace, "f_ref_Hz");
    const Metrics mu = compute_metrics(r.trace, "f_unc_Hz");
    LfcParams ref_grid = c.grid;
    ref_grid.r_g = c.controller.r_ref;
    const double f_ss_ref = kNominalFrequencyHz * (1.0 + steady_state_freq(ref_grid, c.event.load_step_pu));
    const double f_ss_unc = kNominalFrequencyHz * (1.0 + steady_state_freq(c.grid, c.event.load_step_pu));

    // first time after which d_hat stays within 2% of the step
    double t_settle = -1.0;
    if (c.event.load_step_pu != 0.0) {
        const auto& t = r.trace.time();
        const auto& dh = r.trace.column("d_hat_pu");
        for (std::size_t i = t.size(); i-- > 0;) {
            if (std::abs(dh[i] - c.event.load_step_pu) > 0.02 * std::abs(c.event.load_step_pu)) break;
            t_settle = t[i] - c.event.t_event;
        }
    }

    json m;
    m["controlled"] = metrics_json(mc);
    m["reference"] = metrics_json(mr);
    m["uncontrolled"] = metrics_json(mu);
    m["tracking_error_pct"] = *mc.tracking_error_pct;
    m["tracking_error_pass_bar_pct"] = 0.02;
    m["tracking_error_stretch_pct"] = 0.005;
    m["steady_state_freq_reference_hz"] = f_ss_ref;
    m["steady_state_freq_uncontrolled_hz"] = f_ss_unc;
    m["d_hat_settling_time_s"] = t_settle;
    write_json(dir / "event_metrics.json", m);

    if (!r.unit_final_dp_w.empty()) {
        const UnitGroups g = comparison_groups(fleet);
        auto os = open_out(dir / "unit_groups.csv");
        os << "group,unit,feeder,index_in_feeder,P_r_kw,S_pct,final_dP_PV_W\n";
        std::size_t per_feeder = c.event.feeders.front().size();
        auto emit = [&](const char* name, const std::vector<std::size_t>& idx) {
            for (auto i : idx)
                os << name << ',' << i << ',' << i / per_feeder + 1 << ',' << i % per_feeder << ','
                   << fmt9(fleet[i].rated_power_w / 1e3) << ',' << fmt9(fleet[i].irradiance_pct) << ','
                   << fmt9(r.unit_final_dp_w[i]) << '\n';
        };
        emit("same_rating", g.same_rating);
        emit("same_irradiance", g.same_irradiance);
    }
    std::cout << "nadir: controlled " << mc.nadir_hz << " Hz, reference " << mr.nadir_hz << " Hz, uncontrolled "
              << mu.nadir_hz << " Hz\n"
              << "tracking error " << *mc.tracking_error_pct << " % of 60 Hz\n";
    return 0;
}

int cmd_mcs(const ScenarioConfig& c) {
    const auto dir = out_dir(c);
    const PanelLut lut = scenario_lut(c, scenario_panel(c));
    const ErrorStats st = run_mcs(c.mcs, lut);
    {
        auto os = open_out(dir / "mcs_histogram.csv");
        write_histogram_csv(st.histogram(0.5), os);
    }
    std::vector<double> sorted = st.errors;
    std::sort(sorted.begin(), sorted.end());
    auto q = [&](double p) { return sorted[static_cast<std::size_t>(p * static_cast<double>(sorted.size() - 1))]; };
    json s;
    s["trials"] = c.mcs.trials;
    s["samples_per_trial"] = c.mcs.samples_per_trial;
    s["seed"] = c.mcs.seed;
    s["fraction_below_5pct"] = st.fraction_below(5.0);
    s["target_fraction"] = 0.84;
    s["accept_band"] = {0.79, 0.89};
    s["median_error_pct"] = q(0.5);
    s["p95_error_pct"] = q(0.95);
    write_json(dir / "mcs_summary.json", s);
    std::cout << "fraction of errors below 5%: " << st.fraction_below(5.0) << " (" << c.mcs.trials << " trials)\n";
    return 0;
}

void fail(const char* kind, const std::string& message, const std::string& key = {}) {
    json j;
    j["error"] = kind;
    if (!key.empty()) j["key"] = key;
    j["message"] = message;
    std::cerr << j.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Aggregate distributed-PV modeling and frequency-support toolkit"};
    app.fallthrough();
    app.require_subcommand(1);
    Overrides o;
    app.add_option("--config", o.config, "scenario JSON (defaults built in)");
    app.add_option("--seed", o.seed, "random seed");
    app.add_option("--dt", o.dt, "integration step, s");
    app.add_option("--out", o.out, "output directory");
    app.add_option("--parallel", o.parallel, "worker threads for independent trials")->check(CLI::PositiveNumber);

    auto* lut = app.add_subcommand("lut", "calibrate the panel and export the lookup table");
    auto* val = app.add_subcommand("validate", "aggregate model against the benchmark fleet");
    auto* evt = app.add_subcommand("event", "frequency event with the tracking controller");
    auto* mcs = app.add_subcommand("mcs", "Monte Carlo study of the aggregation error");
    mcs->add_option("--trials", o.trials, "override the trial count")->check(CLI::PositiveNumber);
    auto* des = app.add_subcommand("design", "controller design report only");

    CLI11_PARSE(app, argc, argv);

    try {
        const ScenarioConfig c = load(o);
        if (*lut) return cmd_lut(c);
        if (*val) return cmd_validate(c);
        if (*evt) return cmd_event(c);
        if (*mcs) return cmd_mcs(c);
        if (*des) return cmd_design(c);
    } catch (const ConfigError& e) {
        fail("config", e.what(), e.key());
        return kExitConfig;
    } catch (const DomainError& e) {
        fail("config", e.what());
        return kExitConfig;
    } catch (const NumericalError& e) {
        fail("numerical", e.what());
        return kExitNumerical;
    } catch (const SaturationError& e) {
        fail("numerical", e.what());
        return kExitNumerical;
    } catch (const std::exception& e) {
        fail("io", e.what());
        return 1;
    }
    return 0;
}
