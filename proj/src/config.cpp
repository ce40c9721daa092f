#include "pvagg/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "pvagg/errors.hpp"

namespace pvagg {

using nlohmann::json;

namespace {

Fleet make_fleet(const std::vector<double>& s, const std::vector<double>& p_kw, const std::vector<double>& kp,
                 const std::vector<double>& ki) {
    Fleet f;
    for (std::size_t i = 0; i < s.size(); ++i) f.push_back({p_kw[i] * 1e3, kp[i], ki[i], s[i]});
    return f;
}

// Walks one JSON object, rejecting keys not consumed.
class Section {
  public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "must be an object");
    }
    ~Section() = default;

    std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

    const json* find(const std::string& k) {
        seen_.insert(k);
        const auto it = j_.find(k);
        return it == j_.end() ? nullptr : &*it;
    }

    void num(const std::string& k, double& out) {
        if (const json* v = find(k)) {
            if (!v->is_number()) throw ConfigError(key(k), "must be a number");
            out = v->get<double>();
            if (!std::isfinite(out)) throw ConfigError(key(k), "must be finite");
        }
    }
    template <class I>
    void integer(const std::string& k, I& out) {
        if (const json* v = find(k)) {
            if (!v->is_number_integer() || v->get<long long>() < 0)
                throw ConfigError(key(k), "must be a non-negative integer");
            out = static_cast<I>(v->get<unsigned long long>());
        }
    }
    void boolean(const std::string& k, bool& out) {
        if (const json* v = find(k)) {
            if (!v->is_boolean()) throw ConfigError(key(k), "must be true or false");
            out = v->get<bool>();
        }
    }
    void str(const std::string& k, std::string& out) {
        if (const json* v = find(k)) {
            if (!v->is_string()) throw ConfigError(key(k), "must be a string");
            out = v->get<std::string>();
        }
    }
    void vec(const std::string& k, std::vector<double>& out) {
        if (const json* v = find(k)) {
            if (!v->is_array()) throw ConfigError(key(k), "must be an array of numbers");
            out.clear();
            for (const auto& e : *v) {
                if (!e.is_number()) throw ConfigError(key(k), "must be an array of numbers");
                out.push_back(e.get<double>());
            }
        }
    }
    void range(const std::string& k, UniformRange& r) {
        std::vector<double> v{r.lo, r.hi};
        vec(k, v);
        if (v.size() != 2) throw ConfigError(key(k), "must be [lo, hi]");
        r = {v[0], v[1]};
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError(key(it.key()), "unknown key");
    }

  private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void read_grid_spec(Section& parent, const std::string& k, GridSpec& g) {
    if (const json* v = parent.find(k)) {
        Section s(*v, parent.key(k));
        s.num("lo", g.lo);
        s.num("hi", g.hi);
        s.num("step", g.step);
        s.finish();
    }
}

Fleet read_fleet(const json& j, const std::string& path) {
    Section s(j, path);
    std::vector<double> S, p, kp, ki;
    s.vec("S", S);
    s.vec("P_r_kw", p);
    s.vec("k_p", kp);
    s.vec("k_i", ki);
    s.finish();
    if (S.empty()) throw ConfigError(path + ".S", "must be a non-empty array");
    if (p.size() != S.size()) throw ConfigError(path + ".P_r_kw", "length must match S");
    if (kp.size() != S.size()) throw ConfigError(path + ".k_p", "length must match S");
    if (ki.size() != S.size()) throw ConfigError(path + ".k_i", "length must match S");
    return make_fleet(S, p, kp, ki);
}

json fleet_json(const Fleet& f) {
    json j;
    std::vector<double> S, p, kp, ki;
    for (const auto& u : f) {
        S.push_back(u.irradiance_pct);
        p.push_back(u.rated_power_w / 1e3);
        kp.push_back(u.kp);
        ki.push_back(u.ki);
    }
    j["S"] = S;
    j["P_r_kw"] = p;
    j["k_p"] = kp;
    j["k_i"] = ki;
    return j;
}

void check_fleet(const Fleet& f, const std::string& path) {
    if (f.empty()) throw ConfigError(path, "fleet is empty");
    for (std::size_t i = 0; i < f.size(); ++i) {
        const auto& u = f[i];
        const std::string at = "[" + std::to_string(i) + "]";
        if (!(u.rated_power_w > 0)) throw ConfigError(path + ".P_r_kw" + at, "must be > 0");
        if (!(u.kp > 0)) throw ConfigError(path + ".k_p" + at, "must be > 0");
        if (!(u.ki > 0)) throw ConfigError(path + ".k_i" + at, "must be > 0");
        if (!(u.irradiance_pct > 0 && u.irradiance_pct <= 100)) throw ConfigError(path + ".S" + at, "must be in (0, 100]");
    }
}

void positive(double v, const std::string& key) {
    if (!(v > 0)) throw ConfigError(key, "must be > 0");
}

}  // namespace

Fleet EventSection::fleet() const {
    Fleet all;
    for (const auto& f : feeders) all.insert(all.end(), f.begin(), f.end());
    return all;
}

ScenarioConfig default_config() {
    ScenarioConfig c;
    c.validation.fleet = make_fleet({100, 70, 65, 80, 85, 90, 92, 75, 83, 90},
                                    {200, 250, 220, 175, 200, 200, 250, 220, 175, 190},
                                    {10, 15, 20, 20, 17, 10, 15, 20, 20, 17},
                                    {50, 100, 150, 80, 50, 50, 100, 150, 80, 50});
    c.validation.dv_pv = {-10, -12, -15, -11, -8, -5, -18, -20, -17, -10};
    c.validation.dv_dc_ref = {-10, -5, -8, -7, -5, -4, -9, -11, -6, -12};

    c.event.feeders = {
        make_fleet({100, 90, 65, 85, 80, 90, 92, 75, 83, 70}, {200, 250, 220, 175, 200, 200, 250, 220, 175, 200},
                   {10, 15, 20, 20, 17, 10, 15, 20, 20, 17}, {50, 100, 150, 80, 50, 50, 100, 150, 80, 50}),
        make_fleet({95, 85, 90, 70, 77, 75, 88, 83, 96, 100}, {250, 220, 230, 180, 190, 220, 200, 240, 190, 195},
                   {20, 20, 17, 15, 20, 22, 25, 15, 10, 12}, {100, 100, 120, 200, 150, 150, 100, 50, 80, 200}),
        make_fleet({60, 70, 80, 75, 86, 95, 98, 68, 70, 83}, {165, 200, 185, 200, 195, 200, 210, 200, 220, 190},
                   {10, 25, 25, 22, 19, 15, 10, 12, 17, 20}, {50, 80, 80, 95, 120, 110, 100, 100, 80, 75}),
        make_fleet({80, 80, 85, 86, 87, 95, 89, 70, 73, 65}, {195, 190, 178, 196, 220, 210, 190, 240, 170, 250},
                   {17, 19, 16, 20, 25, 23, 22, 20, 20, 17}, {75, 75, 90, 150, 180, 200, 200, 220, 150, 100}),
    };
    return c;
}

void ScenarioConfig::validate() const {
    const auto& d = panel.design;
    if (d.series_cells <= 0) throw ConfigError("panel.series_cells", "must be > 0");
    positive(d.ideality, "panel.ideality");
    if (!(d.series_resistance_ohm >= 0)) throw ConfigError("panel.series_resistance_ohm", "must be >= 0");
    positive(d.shunt_resistance_ohm, "panel.shunt_resistance_ohm");
    positive(d.open_circuit_voltage_v, "panel.open_circuit_voltage_v");
    for (const auto& [g, name] : {std::pair{panel.dv_grid, "panel.dv_grid"}, std::pair{panel.s_grid, "panel.s_grid"}}) {
        positive(g.step, std::string(name) + ".step");
        if (!(g.hi > g.lo)) throw ConfigError(std::string(name) + ".hi", "must exceed lo");
    }
    if (!(panel.dv_grid.lo <= -60 && panel.dv_grid.hi >= 20))
        throw ConfigError("panel.dv_grid", "must span at least [-60, 20] V");
    if (!(panel.s_grid.lo <= 10 && panel.s_grid.hi >= 100 && panel.s_grid.lo > 0))
        throw ConfigError("panel.s_grid", "must span at least [10, 100] and stay positive");
    if (panel.s_grid.hi > 100) throw ConfigError("panel.s_grid.hi", "irradiance cannot exceed 100");

    positive(shared.unit_capacitance, "shared.C_d_F_per_W");
    positive(shared.tau, "shared.tau_s");
    positive(shared.v_sd, "shared.V_sd_V");
    positive(shared.v_dc0, "shared.V_dc0_ref_V");
    positive(shared.panel_rating_w, "shared.P_pa_W");
    positive(shared.temperature_k, "shared.t_K");
    if (!(shared.deload_fraction > 0 && shared.deload_fraction < 1))
        throw ConfigError("shared.deload_fraction", "must be in (0, 1)");

    check_fleet(validation.fleet, "validation.fleet");
    if (validation.dv_pv.size() != validation.fleet.size())
        throw ConfigError("validation.dV_PV", "needs one entry per unit");
    if (validation.dv_dc_ref.size() != validation.fleet.size())
        throw ConfigError("validation.dV_dc_ref", "needs one entry per unit");
    if (!(validation.t_step >= 0)) throw ConfigError("validation.t_step_s", "must be >= 0");
    if (!(validation.t_end > validation.t_step)) throw ConfigError("validation.t_end_s", "must exceed t_step_s");

    if (event.feeders.empty()) throw ConfigError("event.feeders", "needs at least one feeder");
    for (std::size_t i = 0; i < event.feeders.size(); ++i)
        check_fleet(event.feeders[i], "event.feeders[" + std::to_string(i) + "]");
    if (!(event.t_event >= 0)) throw ConfigError("event.t_event_s", "must be >= 0");
    if (!(event.t_end > event.t_event)) throw ConfigError("event.t_end_s", "must exceed t_event_s");
    if (!std::isfinite(event.load_step_pu)) throw ConfigError("event.load_step_pu", "must be finite");

    positive(grid.t_g, "grid.T_g");
    positive(grid.t_t, "grid.T_t");
    positive(grid.h_g, "grid.H_g");
    positive(grid.r_g, "grid.R_g");
    positive(grid.d, "grid.D");
    positive(grid.s_base, "grid.S_b_mva");

    positive(controller.h_ref, "controller.H_ref");
    positive(controller.r_ref, "controller.R_ref");
    positive(controller.filter_tau, "controller.filter_tau_s");
    const auto& w = controller.weights;
    if (!(w.state >= 0)) throw ConfigError("controller.weights.state", "must be >= 0");
    positive(w.error, "controller.weights.error");
    positive(w.integral, "controller.weights.integral");
    positive(w.power_input, "controller.weights.power_input");
    positive(w.voltage_input, "controller.weights.voltage_input");

    positive(run.dt_benchmark, "run.dt_benchmark_s");
    positive(run.dt_linear, "run.dt_linear_s");
    positive(run.record_interval, "run.record_interval_s");
    if (run.record_interval < run.dt_benchmark || run.record_interval < run.dt_linear)
        throw ConfigError("run.record_interval_s", "must not be shorter than the integration steps");
    if (run.parallel == 0) throw ConfigError("run.parallel", "must be >= 1");
    if (run.output_dir.empty()) throw ConfigError("run.output_dir", "must not be empty");

    if (mcs.trials == 0) throw ConfigError("mcs.trials", "must be > 0");
    if (mcs.samples_per_trial == 0) throw ConfigError("mcs.samples_per_trial", "must be > 0");
    const std::pair<const UniformRange*, const char*> ranges[] = {
        {&mcs.mu_p, "mcs.mu_p"},       {&mcs.sigma_p, "mcs.sigma_p"}, {&mcs.mu_v, "mcs.mu_v"},
        {&mcs.sigma_v, "mcs.sigma_v"}, {&mcs.mu_s, "mcs.mu_s"},       {&mcs.sigma_s, "mcs.sigma_s"}};
    for (const auto& [r, name] : ranges)
        if (!(r->lo <= r->hi)) throw ConfigError(name, "needs lo <= hi");
    try {
        mcs.validate();
    } catch (const DomainError& e) {
        throw ConfigError("mcs", e.what());
    }
}

ScenarioConfig parse_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
    }
    ScenarioConfig c = default_config();
    Section r(root, "");

    if (const json* v = r.find("panel")) {
        Section s(*v, "panel");
        s.integer("series_cells", c.panel.design.series_cells);
        s.num("ideality", c.panel.design.ideality);
        s.num("series_resistance_ohm", c.panel.design.series_resistance_ohm);
        s.num("shunt_resistance_ohm", c.panel.design.shunt_resistance_ohm);
        s.num("open_circuit_voltage_v", c.panel.design.open_circuit_voltage_v);
        read_grid_spec(s, "dv_grid", c.panel.dv_grid);
        read_grid_spec(s, "s_grid", c.panel.s_grid);
        s.finish();
    }
    if (const json* v = r.find("shared")) {
        Section s(*v, "shared");
        auto& sh = c.shared;
        s.num("t_K", sh.temperature_k);
        s.integer("n_s", sh.cells_per_string);
        s.integer("n_p", sh.strings);
        s.num("C_d_F_per_W", sh.unit_capacitance);
        s.num("R_f_ohm", sh.filter_r_ohm);
        s.num("L_f_H", sh.filter_l_h);
        s.num("V_sd_V", sh.v_sd);
        s.num("V_dc0_ref_V", sh.v_dc0);
        s.num("tau_s", sh.tau);
        s.num("k_p_current", sh.current_loop_kp);
        s.num("k_f_current", sh.current_loop_kf);
        s.num("P_pa_W", sh.panel_rating_w);
        s.num("deload_fraction", sh.deload_fraction);
        s.finish();
    }
    if (const json* v = r.find("validation")) {
        Section s(*v, "validation");
        if (const json* f = s.find("fleet")) c.validation.fleet = read_fleet(*f, "validation.fleet");
        s.vec("dV_PV", c.validation.dv_pv);
        s.vec("dV_dc_ref", c.validation.dv_dc_ref);
        if (const json* p = s.find("expected_aggregate")) {
            Section ps(*p, "validation.expected_aggregate");
            ps.num("dV_PV", c.validation.expected_dv_pv_a);
            ps.num("dV_dc_ref", c.validation.expected_dv_dc_ref_a);
            ps.finish();
        }
        s.num("t_step_s", c.validation.t_step);
        s.num("t_end_s", c.validation.t_end);
        s.finish();
    }
    if (const json* v = r.find("event")) {
        Section s(*v, "event");
        if (const json* f = s.find("feeders")) {
            if (!f->is_array()) throw ConfigError("event.feeders", "must be an array of fleets");
            c.event.feeders.clear();
            for (std::size_t i = 0; i < f->size(); ++i)
                c.event.feeders.push_back(read_fleet((*f)[i], "event.feeders[" + std::to_string(i) + "]"));
        }
        s.num("load_step_pu", c.event.load_step_pu);
        s.num("t_event_s", c.event.t_event);
        s.num("t_end_s", c.event.t_end);
        std::string plant = c.event.plant == PlantModel::benchmark ? "benchmark" : "aggregate";
        s.str("plant", plant);
        if (plant == "benchmark") c.event.plant = PlantModel::benchmark;
        else if (plant == "aggregate") c.event.plant = PlantModel::aggregate;
        else throw ConfigError("event.plant", "must be \"benchmark\" or \"aggregate\"");
        s.finish();
    }
    if (const json* v = r.find("grid")) {
        Section s(*v, "grid");
        s.num("T_g", c.grid.t_g);
        s.num("T_t", c.grid.t_t);
        s.num("H_g", c.grid.h_g);
        s.num("R_g", c.grid.r_g);
        s.num("D", c.grid.d);
        double sb = c.grid.s_base / 1e6;
        s.num("S_b_mva", sb);
        c.grid.s_base = sb * 1e6;
        s.finish();
    }
    if (const json* v = r.find("controller")) {
        Section s(*v, "controller");
        s.num("H_ref", c.controller.h_ref);
        s.num("R_ref", c.controller.r_ref);
        s.num("filter_tau_s", c.controller.filter_tau);
        s.boolean("saturate", c.controller.saturate);
        if (const json* w = s.find("weights")) {
            Section ws(*w, "controller.weights");
            auto& cw = c.controller.weights;
            ws.num("state", cw.state);
            ws.num("error", cw.error);
            ws.num("integral", cw.integral);
            ws.num("power_input", cw.power_input);
            ws.num("voltage_input", cw.voltage_input);
            ws.finish();
        }
        s.finish();
    }
    if (const json* v = r.find("mcs")) {
        Section s(*v, "mcs");
        s.integer("trials", c.mcs.trials);
        s.integer("samples_per_trial", c.mcs.samples_per_trial);
        s.range("mu_p", c.mcs.mu_p);
        s.range("sigma_p", c.mcs.sigma_p);
        s.range("mu_v", c.mcs.mu_v);
        s.range("sigma_v", c.mcs.sigma_v);
        s.range("mu_s", c.mcs.mu_s);
        s.range("sigma_s", c.mcs.sigma_s);
        s.finish();
    }
    if (const json* v = r.find("run")) {
        Section s(*v, "run");
        s.num("dt_benchmark_s", c.run.dt_benchmark);
        s.num("dt_linear_s", c.run.dt_linear);
        s.num("record_interval_s", c.run.record_interval);
        s.integer("seed", c.run.seed);
        s.str("output_dir", c.run.output_dir);
        s.integer("parallel", c.run.parallel);
        s.finish();
    }
    r.finish();

    c.panel.design.rated_power_w = c.shared.panel_rating_w;
    c.panel.design.temperature_k = c.shared.temperature_k;
    c.mcs.seed = c.run.seed;
    c.mcs.threads = c.run.parallel;
    c.validate();
    return c;
}

ScenarioConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("--config", "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string config_to_json(const ScenarioConfig& c) {
    nlohmann::ordered_json j;
    const auto& d = c.panel.design;
    j["panel"] = {{"series_cells", d.series_cells},
                  {"ideality", d.ideality},
                  {"series_resistance_ohm", d.series_resistance_ohm},
                  {"shunt_resistance_ohm", d.shunt_resistance_ohm},
                  {"open_circuit_voltage_v", d.open_circuit_voltage_v},
                  {"dv_grid", {{"lo", c.panel.dv_grid.lo}, {"hi", c.panel.dv_grid.hi}, {"step", c.panel.dv_grid.step}}},
                  {"s_grid", {{"lo", c.panel.s_grid.lo}, {"hi", c.panel.s_grid.hi}, {"step", c.panel.s_grid.step}}}};
    const auto& sh = c.shared;
    j["shared"] = {{"t_K", sh.temperature_k},        {"n_s", sh.cells_per_string},  {"n_p", sh.strings},
                   {"C_d_F_per_W", sh.unit_capacitance}, {"R_f_ohm", sh.filter_r_ohm}, {"L_f_H", sh.filter_l_h},
                   {"V_sd_V", sh.v_sd},               {"V_dc0_ref_V", sh.v_dc0},     {"tau_s", sh.tau},
                   {"k_p_current", sh.current_loop_kp}, {"k_f_current", sh.current_loop_kf},
                   {"P_pa_W", sh.panel_rating_w},     {"deload_fraction", sh.deload_fraction}};
    j["validation"] = {{"fleet", fleet_json(c.validation.fleet)},
                       {"dV_PV", c.validation.dv_pv},
                       {"dV_dc_ref", c.validation.dv_dc_ref},
                       {"expected_aggregate",
                        {{"dV_PV", c.validation.expected_dv_pv_a}, {"dV_dc_ref", c.validation.expected_dv_dc_ref_a}}},
                       {"t_step_s", c.validation.t_step},
                       {"t_end_s", c.validation.t_end}};
    json feeders = json::array();
    for (const auto& f : c.event.feeders) feeders.push_back(fleet_json(f));
    j["event"] = {{"feeders", feeders},
                  {"load_step_pu", c.event.load_step_pu},
                  {"t_event_s", c.event.t_event},
                  {"t_end_s", c.event.t_end},
                  {"plant", c.event.plant == PlantModel::benchmark ? "benchmark" : "aggregate"}};
    j["grid"] = {{"T_g", c.grid.t_g}, {"T_t", c.grid.t_t}, {"H_g", c.grid.h_g},
                 {"R_g", c.grid.r_g}, {"D", c.grid.d},     {"S_b_mva", c.grid.s_base / 1e6}};
    const auto& w = c.controller.weights;
    j["controller"] = {{"H_ref", c.controller.h_ref},
                       {"R_ref", c.controller.r_ref},
                       {"filter_tau_s", c.controller.filter_tau},
                       {"saturate", c.controller.saturate},
                       {"weights",
                        {{"state", w.state},
                         {"error", w.error},
                         {"integral", w.integral},
                         {"power_input", w.power_input},
                         {"voltage_input", w.voltage_input}}}};
    auto rg = [](const UniformRange& r) { return std::vector<double>{r.lo, r.hi}; };
    j["mcs"] = {{"trials", c.mcs.trials},       {"samples_per_trial", c.mcs.samples_per_trial},
                {"mu_p", rg(c.mcs.mu_p)},       {"sigma_p", rg(c.mcs.sigma_p)},
                {"mu_v", rg(c.mcs.mu_v)},       {"sigma_v", rg(c.mcs.sigma_v)},
                {"mu_s", rg(c.mcs.mu_s)},       {"sigma_s", rg(c.mcs.sigma_s)}};
    j["run"] = {{"dt_benchmark_s", c.run.dt_benchmark},
                {"dt_linear_s", c.run.dt_linear},
                {"record_interval_s", c.run.record_interval},
                {"seed", c.run.seed},
                {"output_dir", c.run.output_dir},
                {"parallel", c.run.parallel}};
    return j.dump(2) + "\n";
}

PanelParams scenario_panel(const ScenarioConfig& cfg) {
    PanelDesign d = cfg.panel.design;
    d.rated_power_w = cfg.shared.panel_rating_w;
    d.temperature_k = cfg.shared.temperature_k;
    return calibrate_panel(d);
}

PanelLut scenario_lut(const ScenarioConfig& cfg, const PanelParams& panel) {
    const auto& dv = cfg.panel.dv_grid;
    const auto& s = cfg.panel.s_grid;
    return build_lut(panel, uniform_grid(dv.lo, dv.hi, dv.step), uniform_grid(s.lo, s.hi, s.step),
                     cfg.shared.temperature_k, cfg.shared.deload_fraction);
}

}  // namespace pvagg
