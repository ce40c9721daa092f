#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "fixtures.hpp"
#include "pvagg/control.hpp"
#include "pvagg/errors.hpp"
#include "pvagg/grid.hpp"
#include "pvagg/integrate.hpp"
#include "pvagg/sim.hpp"

using namespace pvagg;

namespace {

StateSpace combined_model() {
    const auto& c = fixtures::config();
    const auto pv = build_aggregate_ssm(aggregate_params(c.event.fleet(), c.shared), c.shared);
    return build_combined(build_lfc(c.grid), pv, c.grid.s_base);
}

const TrackingController& controller() {
    static const TrackingController ctrl = [] {
        const auto& c = fixtures::config();
        return design_event_controller(c.grid, c.event.fleet(), c.shared, fixtures::lut(), c.controller);
    }();
    return ctrl;
}

}  // namespace

TEST_CASE("zero disturbance matrix reduces to a Luenberger observer") {
    StateSpace s;
    s.A = Eigen::MatrixXd(2, 2);
    s.A << -1, 1, 0, -2;
    s.B = Eigen::MatrixXd::Identity(2, 1);
    s.C = Eigen::MatrixXd(1, 2);
    s.C << 1, 0;
    s.E = Eigen::MatrixXd::Zero(2, 1);
    s.state_labels = {"a", "b"};
    s.input_labels = {"u"};
    s.output_labels = {"y"};
    s.disturbance_labels = {"d"};
    const auto u = design_uio(s);
    CHECK(u.H.isZero());
    CHECK(u.T.isIdentity());
    CHECK((u.F - (s.A - u.K1 * s.C)).norm() < 1e-12);
    CHECK(max_real_eigenvalue(u.F) < 0);
}

TEST_CASE("observer for the combined grid and PV model") {
    const auto sys = combined_model();
    const auto& c = fixtures::config();
    const auto sc = default_scaling(sys, c.shared, c.grid.s_base);
    const auto u = design_uio(sys, 0.005, sc.states);
    CHECK((sys.C * sys.E)(0, 0) == doctest::Approx(-1.0 / (2 * c.grid.h_g)));
    CHECK((u.T - (Eigen::MatrixXd::Identity(6, 6) - u.H * sys.C)).norm() < 1e-12);
    CHECK((u.T * sys.E).norm() < 1e-12);  // disturbance decoupled
    CHECK(max_real_eigenvalue(u.F) < 0);
    CHECK(u.dual_care.residual <= 1e-8);
    // H = E ((CE)'(CE))^-1 (CE)'
    const Eigen::MatrixXd CE = sys.C * sys.E;
    const Eigen::MatrixXd H = sys.E * (CE.transpose() * CE).inverse() * CE.transpose();
    CHECK((u.H - H).norm() < 1e-12);
}

TEST_CASE("rank condition failure is rejected") {
    auto sys = combined_model();
    sys.E = Eigen::MatrixXd::Zero(6, 1);
    sys.E(4, 0) = 1.0;  // enters a state the output does not see directly
    CHECK_THROWS_AS(design_uio(sys), DomainError);
}

TEST_CASE("estimation error is independent of the disturbance signal") {
    const auto sys = combined_model();
    const auto& c = fixtures::config();
    const Eigen::VectorXd d = default_scaling(sys, c.shared, c.grid.s_base).states;
    const auto u = design_uio(sys, 0.005, d);
    const Eigen::MatrixXd fs = d.cwiseInverse().asDiagonal() * u.F * d.asDiagonal();
    std::mt19937_64 rng(9);
    std::normal_distribution<double> nd;
    Eigen::VectorXd x0(6);
    for (int i = 0; i < 6; ++i) x0(i) = nd(rng);
    x0(3) *= 5.0;
    x0(4) *= 1e5;
    x0(5) *= 1e3;
    std::vector<double> phase(5);
    for (auto& p : phase) p = 6.28 * std::uniform_real_distribution<double>()(rng);

    auto run = [&](auto dist) {
        std::vector<double> s(12, 0.0);
        for (int i = 0; i < 6; ++i) s[i] = x0(i);
        std::vector<Eigen::VectorXd> err;
        integrate_rk4(
            [&](double t, std::span<const double> v, std::span<double> dv) {
                Eigen::Map<const Eigen::VectorXd> x(v.data(), 6), z(v.data() + 6, 6);
                const Eigen::Vector2d in(2e5 * std::sin(2 * t), 3 * std::cos(5 * t));
                const double y = (sys.C * x)(0);
                Eigen::Map<Eigen::VectorXd>(dv.data(), 6) = sys.A * x + sys.B * in + sys.E.col(0) * dist(t);
                Eigen::Map<Eigen::VectorXd>(dv.data() + 6, 6) = u.F * z + u.T * sys.B * in + u.K.col(0) * y;
            },
            s, 0.0, 1.0, 2e-5, 500, [&](double, std::span<const double> v) {
                Eigen::Map<const Eigen::VectorXd> x(v.data(), 6), z(v.data() + 6, 6);
                err.push_back(x - (z + u.H.col(0) * (sys.C * x)(0)));
            });
        return err;
    };
    const auto e1 = run([](double t) { return t > 0.2 ? 0.086 : 0.0; });
    const auto e2 = run([&](double t) {
        double d = 0;
        for (int k = 0; k < 5; ++k) d += 0.05 * std::sin((k + 1) * 7.0 * t + phase[k]);
        return d;
    });
    REQUIRE(e1.size() == e2.size());
    const Eigen::VectorXd e0 = e1.front();
    for (std::size_t k = 0; k < e1.size(); ++k) {
        const double scale = std::max(1e-12, e0.norm());
        CHECK((e1[k] - e2[k]).norm() <= 1e-8 * scale);
        // and the error follows e' = F e
        // exponentiate in the per-unit coordinates; F itself is badly scaled
        const Eigen::VectorXd pred =
            d.asDiagonal() * (fs * (0.01 * static_cast<double>(k))).exp() * d.cwiseInverse().asDiagonal() * e0;
        CHECK((e1[k] - pred).norm() <= 1e-8 * scale);
    }
}

TEST_CASE("disturbance estimate from the exact output rate") {
    const auto sys = combined_model();
    const auto u = design_uio(sys);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd;
    Eigen::VectorXd x(6);
    for (int i = 0; i < 6; ++i) x(i) = nd(rng);
    const Eigen::Vector2d in(1e5, -2.0);
    for (double d : {0.0, 0.043, 0.086}) {
        const Eigen::VectorXd ydot = sys.C * (sys.A * x + sys.B * in + sys.E.col(0) * d);
        CHECK(estimate_disturbance(u, x, ydot, in)(0) == doctest::Approx(d).scale(1.0).epsilon(1e-12));
    }
}

TEST_CASE("augmented tracking model") {
    const auto sys = combined_model();
    const auto& c = fixtures::config();
    const auto ref = build_reference(c.controller.h_ref, c.controller.r_ref, c.grid);
    const auto a = build_augmented(sys, ref);
    CHECK(a.states() == 8);
    CHECK(a.state_labels[6] == "e");
    CHECK(a.state_labels[7] == "int_e");
    Eigen::RowVectorXd row = a.A.row(7);
    CHECK(row(6) == 1.0);
    row(6) = 0.0;
    CHECK(row.isZero());
    // e - C x_hat is invariant: reference equal to the plant keeps e at zero
    Eigen::RowVectorXd w = Eigen::RowVectorXd::Zero(8);
    w.head(6) = -sys.C;
    w(6) = 1.0;
    CHECK((w * a.A).norm() < 1e-12);
    CHECK((w * a.B).norm() < 1e-12);
    CHECK((w * a.E).norm() < 1e-12);
}

TEST_CASE("controller synthesis meets the design bounds") {
    const auto& ctrl = controller();
    CHECK(ctrl.gain().care.residual <= 1e-8);
    CHECK(ctrl.uio().dual_care.residual <= 1e-8);
    const auto& g = ctrl.gain();
    CHECK(max_real_eigenvalue(g.design_A - g.design_B * g.design_K) < 0);
    CHECK(max_real_eigenvalue(ctrl.closed_loop_matrix()) < 0);
    CHECK(max_real_eigenvalue(ctrl.uio().F) < 0);
    CHECK(ctrl.gain().K.cols() == 8);
    CHECK(ctrl.gain().K(0, 2) == 0.0);  // measured state handled through e
    CHECK(ctrl.gain().K(1, 2) == 0.0);
}

TEST_CASE("controller at rest stays at rest") {
    const auto& ctrl = controller();
    std::vector<double> s(ctrl.state_size(), 0.0);
    const auto step = controller_derivative(ctrl, s, 0.0);
    CHECK(step.out.u.dp_ref_w == 0.0);
    CHECK(step.out.u.dv_dc_ref_v == 0.0);
    CHECK(step.out.dv_pv_agg == 0.0);
    CHECK_FALSE(step.out.saturated);
    CHECK(step.dstate.isZero());
}

TEST_CASE("power reference is clamped to the headroom and the integral frozen") {
    const auto& ctrl = controller();
    std::vector<double> s(ctrl.state_size(), 0.0);
    const std::size_t ie = ctrl.state_size() - 3;
    const double ki = ctrl.gain().K(0, 7);
    s[ie] = -10.0 * ctrl.power_upper_w() / ki;  // drives the raw command far above the limit
    const auto step = controller_derivative(ctrl, s, -0.001);
    CHECK(step.out.raw_dp_ref_w > ctrl.power_upper_w());
    CHECK(step.out.u.dp_ref_w == ctrl.power_upper_w());
    CHECK(step.out.saturated);
    CHECK(step.dstate(static_cast<Eigen::Index>(ie)) == 0.0);
    const auto& agg = ctrl.aggregate();
    CHECK(step.out.dv_pv_agg == doctest::Approx(fixtures::lut().branch_limit_at(agg.irradiance_pct)).epsilon(1e-6));
    // headroom is 15% of available power
    const double avail = agg.rated_power_w / 5695.0 * fixtures::lut().p_mpp_at(agg.irradiance_pct);
    CHECK(ctrl.power_upper_w() == doctest::Approx(0.15 * avail).epsilon(0.02));
}

TEST_CASE("table block") {
    const auto& c = fixtures::config();
    const auto agg = aggregate_params(c.event.fleet(), c.shared);
    const auto& lut = fixtures::lut();
    CHECK(lut_block(0.0, agg, 5695.0, lut) == 0.0);
    const double full = agg.rated_power_w / 5695.0 * lut.headroom_at(agg.irradiance_pct);
    CHECK(lut_block(full, agg, 5695.0, lut) == doctest::Approx(lut.branch_limit_at(agg.irradiance_pct)));
    CHECK_THROWS_AS(lut_block(1.5 * full, agg, 5695.0, lut), SaturationError);
    // the fleet delivers the requested power in steady state within the aggregation budget
    const BenchmarkFleet bf(c.event.fleet(), c.shared, lut);
    for (double req : {0.25 * full, 0.5 * full, 0.9 * full}) {
        const double dv = lut_block(req, agg, 5695.0, lut);
        double got = 0;
        for (std::size_t i = 0; i < bf.size(); ++i) got += bf.array_power(i, dv) - bf.nominal_power(i);
        CHECK(std::abs(got - req) <= 0.05 * req);
    }
}

TEST_CASE("inversion hands every unit the aggregate command") {
    const auto& fleet = fixtures::config().validation.fleet;
    const auto cmds = invert_controls({-12.775, -7.730}, 10);
    REQUIRE(cmds.size() == 10);
    std::vector<double> v, r;
    for (const auto& c : cmds) {
        CHECK(c.dv_pv == -12.775);
        CHECK(c.dv_dc_ref == -7.730);
        v.push_back(c.dv_pv);
        r.push_back(c.dv_dc_ref);
    }
    const auto back = aggregate_inputs(fleet, v, r);
    CHECK(back.dv_pv == doctest::Approx(-12.775).epsilon(1e-15));
    CHECK(back.dv_dc_ref == doctest::Approx(-7.730).epsilon(1e-15));
    for (const auto& c : invert_controls({0.0, 0.0}, 4)) CHECK((c.dv_pv == 0.0 && c.dv_dc_ref == 0.0));
    CHECK_THROWS_AS(invert_controls({1, 1}, 0), DomainError);
}

TEST_CASE("closed loop on the aggregate plant: estimate, integral action, linearity") {
    const auto& c = fixtures::config();
    EventConfig ev;
    ev.plant = PlantModel::aggregate;
    ev.dt = 5e-5;
    ev.t_end = 6.0;
    auto run = [&](double d, bool sat) {
        ControllerConfig cc = c.controller;
        cc.saturate = sat;
        const auto ctrl = design_event_controller(c.grid, c.event.fleet(), c.shared, fixtures::lut(), cc);
        ev.load_step_pu = d;
        return run_frequency_event(c.grid, c.event.fleet(), c.shared, fixtures::lut(), ctrl, ev);
    };
    const auto r = run(0.086, true);
    REQUIRE_FALSE(r.status.truncated);
    const auto& t = r.trace.time();
    const auto& dh = r.trace.column("d_hat_pu");
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] >= ev.t_event + 1.0) CHECK(std::abs(dh[i] - 0.086) <= 0.02 * 0.086);
    const auto& f = r.trace.column("f_Hz");
    const auto& fr = r.trace.column("f_ref_Hz");
    CHECK(std::abs(f.back() - fr.back()) < 1e-3);

    const auto r1 = run(0.02, false);
    const auto r2 = run(0.04, false);
    CHECK(r2.trace.column("d_hat_pu").back() == doctest::Approx(2.0 * r1.trace.column("d_hat_pu").back()).epsilon(1e-6));
}
