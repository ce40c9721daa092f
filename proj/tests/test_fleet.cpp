#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "pvagg/errors.hpp"
#include "pvagg/fleet.hpp"
#include "pvagg/integrate.hpp"

using namespace pvagg;

namespace {

const Fleet& table_fleet() { return fixtures::config().validation.fleet; }
const SharedParams& shared() { return fixtures::config().shared; }

}  // namespace

TEST_CASE("capacitance scales with rating") {
    CHECK(capacitor_of(200000.0, shared()) == doctest::Approx(0.04));
    CHECK(capacitor_of(0.0, shared()) == 0.0);
    CHECK(capacitor_of(400000.0, shared()) == doctest::Approx(2.0 * capacitor_of(200000.0, shared())));
    CHECK_THROWS_AS(capacitor_of(-1.0, shared()), DomainError);
}

TEST_CASE("aggregate parameters of the ten-unit fleet") {
    const auto agg = aggregate_params(table_fleet(), shared());
    CHECK(agg.rated_power_w == 2080000.0);
    // mean of k_p / P_r and k_i / P_r over the table, evaluated separately
    CHECK(agg.cp == doctest::Approx(8.048632946001367e-05).epsilon(1e-12));
    CHECK(agg.ci == doctest::Approx(4.0910799726589196e-04).epsilon(1e-12));
    CHECK(agg.irradiance_pct == doctest::Approx(82.65625).epsilon(1e-12));
    CHECK(agg.unit_count == 10);
}

TEST_CASE("identical units collapse exactly") {
    Fleet f(5, PvUnitParams{150000.0, 12.0, 60.0, 70.0});
    const auto agg = aggregate_params(f, shared());
    CHECK(agg.cp == 12.0 / 150000.0);
    CHECK(verify_gain_collapse(f, 12.0 / 150000.0) == 0.0);
    CHECK_THROWS_AS(aggregate_params(Fleet{}, shared()), DomainError);
}

TEST_CASE("aggregate inputs are rating-weighted means") {
    const auto& c = fixtures::config().validation;
    const auto a = aggregate_inputs(table_fleet(), c.dv_pv, c.dv_dc_ref);
    CHECK(a.dv_pv == doctest::Approx(-12.788461538461538).epsilon(1e-12));
    CHECK(a.dv_dc_ref == doctest::Approx(-7.709134615384615).epsilon(1e-12));
    std::vector<double> same(10, -3.5);
    CHECK(aggregate_inputs(table_fleet(), same, same).dv_pv == doctest::Approx(-3.5));
    std::vector<double> short_vec(3, 0.0);
    CHECK_THROWS_AS(aggregate_inputs(table_fleet(), short_vec, same), DomainError);
}

TEST_CASE("gain-collapse objective is minimized by the mean and is convex") {
    const auto agg = aggregate_params(table_fleet(), shared());
    const double best = verify_gain_collapse(table_fleet(), agg.cp);
    for (int k = -5000; k <= 5000; ++k) {
        if (k == 0) continue;
        CHECK(verify_gain_collapse(table_fleet(), agg.cp + k * 1e-7) > best);
    }
    const double h = 1e-6;
    const double second = verify_gain_collapse(table_fleet(), agg.cp + h) - 2 * best +
                          verify_gain_collapse(table_fleet(), agg.cp - h);
    CHECK(second > 0);
}

TEST_CASE("unit small-signal model entries") {
    const PvUnitParams u{175000.0, 20.0, 80.0, 80.0};
    const auto m = build_unit_ssm(u, shared());
    const double a = 1.0 / (capacitor_of(u.rated_power_w, shared()) * shared().v_dc0);
    CHECK(m.A(1, 1) == -1000.0);
    CHECK(std::abs(m.A(1, 0)) == doctest::Approx(3.17e6));
    CHECK(std::abs(m.B(1, 1)) == doctest::Approx(3.17e6));
    CHECK(m.A(0, 1) == doctest::Approx(-a));
    CHECK(m.B(0, 0) == doctest::Approx(a));
    CHECK(m.A(1, 2) == doctest::Approx(317.0 / 2e-3));
    CHECK(std::abs(m.A(2, 0)) == u.ki);
    CHECK(m.A(2, 1) == 0.0);
    CHECK(m.A(2, 2) == 0.0);
    CHECK(std::abs(m.B(2, 1)) == u.ki);
    CHECK(m.A(2, 0) == -m.B(2, 1));
    CHECK(max_real_eigenvalue(m.A) < 0);
}

TEST_CASE("aggregate model entries and unit DC gain") {
    const auto agg = aggregate_params(table_fleet(), shared());
    const auto m = build_aggregate_ssm(agg, shared());
    CHECK(m.A(0, 1) == doctest::Approx(-1.0 / 208.0));
    CHECK(m.B(0, 0) == doctest::Approx(1.0 / 208.0));
    CHECK(m.C(0, 1) == 1.0);
    CHECK(m.C(0, 0) == 0.0);
    CHECK(m.C(0, 2) == 0.0);
    // steady state under a constant power input: 0 = A x + B [1, 0]
    const Eigen::VectorXd x = m.A.fullPivLu().solve(-m.B.col(0));
    CHECK(x(1) == doctest::Approx(1.0).epsilon(1e-12));
    const Eigen::VectorXd xv = m.A.fullPivLu().solve(-m.B.col(1));
    CHECK(xv(0) == doctest::Approx(1.0).epsilon(1e-12));  // DC link follows its reference
    CHECK(std::abs(xv(1)) < 1e-9);
}

TEST_CASE("aggregate model is stable for random draws of fleet parameters") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> p(150e3, 250e3), kp(10, 25), ki(50, 220), s(60, 100);
    for (int k = 0; k < 200; ++k) {
        Fleet f;
        for (int i = 0; i < 10; ++i) f.push_back({p(rng), kp(rng), ki(rng), s(rng)});
        CHECK(max_real_eigenvalue(build_aggregate_ssm(aggregate_params(f, shared()), shared()).A) < 0);
    }
}

TEST_CASE("with uniform per-watt gains the unit models aggregate exactly") {
    const double cp = 8e-5, ci = 4e-4;
    Fleet f{{150e3, cp * 150e3, ci * 150e3, 70}, {200e3, cp * 200e3, ci * 200e3, 80}, {250e3, cp * 250e3, ci * 250e3, 90}};
    const auto agg = build_aggregate_ssm(aggregate_params(f, shared()), shared());
    const Eigen::Index n = 3 * static_cast<Eigen::Index>(f.size());
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n), B = Eigen::MatrixXd::Zero(n, 2 * f.size());
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(3, n), N = Eigen::MatrixXd::Zero(2, 2 * f.size());
    double total = 0;
    for (const auto& u : f) total += u.rated_power_w;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const auto m = build_unit_ssm(f[i], shared());
        const Eigen::Index o = 3 * static_cast<Eigen::Index>(i);
        A.block(o, o, 3, 3) = m.A;
        B.block(o, 2 * i, 3, 2) = m.B;
        const double w = f[i].rated_power_w / total;
        M(0, o) = w;       // voltages are rating-weighted
        M(1, o + 1) = 1;   // powers are summed
        M(2, o + 2) = 1;   // integrator increments are summed
        N(0, 2 * i) = 1;
        N(1, 2 * i + 1) = w;
    }
    // M x obeys the aggregate model for any per-unit inputs
    CHECK((M * A - agg.A * M).norm() < 1e-9 * agg.A.norm());
    CHECK((M * B - agg.B * N).norm() < 1e-9 * agg.B.norm());
}

TEST_CASE("benchmark fleet starts at equilibrium") {
    const BenchmarkFleet bf(table_fleet(), shared(), fixtures::lut());
    const auto x = pack_states(bf.equilibrium());
    std::vector<UnitCommand> zero(bf.size());
    std::vector<double> dx(x.size());
    bf.derivative(x, zero, dx);
    for (double d : dx) CHECK(std::abs(d) < 1e-9);
    CHECK(bf.total_pv_deviation(x) == doctest::Approx(0.0).scale(1.0));
    CHECK(bf.aggregate_dc_deviation(x) == 0.0);
    const auto d2 = benchmark_fleet_derivative(bf.equilibrium(), zero, table_fleet(), shared(), fixtures::lut());
    for (const auto& s : d2) CHECK(std::abs(s.v_dc) + std::abs(s.i_d) + std::abs(s.x) < 1e-9);
}

TEST_CASE("collapsed DC link is a numerical error") {
    const BenchmarkFleet bf(table_fleet(), shared(), fixtures::lut());
    auto x = pack_states(bf.equilibrium());
    x[0] = 0.0;
    std::vector<UnitCommand> zero(bf.size());
    std::vector<double> dx(x.size());
    CHECK_THROWS_AS(bf.derivative(x, zero, dx), NumericalError);
}

TEST_CASE("nonlinear unit matches its linearization for small reference steps") {
    const PvUnitParams u{200000.0, 15.0, 100.0, 85.0};
    const Fleet one{u};
    const BenchmarkFleet bf(one, shared(), fixtures::lut());
    const auto lin = build_unit_ssm(u, shared());
    for (double step : {-5.0, 5.0, -2.0}) {
        std::vector<UnitCommand> cmd{{0.0, step}};
        std::vector<double> xn = pack_states(bf.equilibrium());
        std::vector<double> xl(3, 0.0);
        std::vector<double> pn, pl;
        integrate_rk4([&](double, std::span<const double> s, std::span<double> d) { bf.derivative(s, cmd, d); }, xn,
                      0.0, 0.5, 1e-5, 100,
                      [&](double, std::span<const double> s) { pn.push_back(bf.pv_power(s, 0) - bf.nominal_power(0)); });
        integrate_rk4(
            [&](double, std::span<const double> s, std::span<double> d) {
                for (int i = 0; i < 3; ++i) d[i] = lin.A(i, 0) * s[0] + lin.A(i, 1) * s[1] + lin.A(i, 2) * s[2] + lin.B(i, 1) * step;
            },
            xl, 0.0, 0.5, 1e-5, 100, [&](double, std::span<const double> s) { pl.push_back(s[1]); });
        double peak = 0, err = 0;
        for (std::size_t k = 0; k < pn.size(); ++k) {
            peak = std::max(peak, std::abs(pl[k]));
            err = std::max(err, std::abs(pn[k] - pl[k]));
        }
        CHECK(err <= 0.02 * peak);
    }
}

TEST_CASE("array-voltage step settles at the table prediction") {
    const auto& c = fixtures::config().validation;
    const BenchmarkFleet bf(table_fleet(), shared(), fixtures::lut());
    std::vector<UnitCommand> cmd;
    double expect = 0;
    for (std::size_t i = 0; i < bf.size(); ++i) {
        cmd.push_back({c.dv_pv[i], 0.0});
        expect += table_fleet()[i].rated_power_w / shared().panel_rating_w *
                  lut_forward(fixtures::lut(), c.dv_pv[i], table_fleet()[i].irradiance_pct);
    }
    auto x = pack_states(bf.equilibrium());
    integrate_rk4([&](double, std::span<const double> s, std::span<double> d) { bf.derivative(s, cmd, d); }, x, 0.0,
                  3.0, 1e-5);
    CHECK(bf.total_pv_deviation(x) == doctest::Approx(expect).epsilon(1e-4));
    CHECK(std::abs(bf.aggregate_dc_deviation(x)) < 1e-3);  // integrator still closing the last fraction of a mV
}

TEST_CASE("capacitor energy release scales with rating under a common DC reference step") {
    const BenchmarkFleet bf(table_fleet(), shared(), fixtures::lut());
    const std::vector<UnitCommand> cmd(bf.size(), UnitCommand{0.0, -7.73});
    auto x = pack_states(bf.equilibrium());
    const double v0 = shared().v_dc0;
    std::vector<double> peak(bf.size(), 0.0);
    integrate_rk4([&](double, std::span<const double> s, std::span<double> d) { bf.derivative(s, cmd, d); }, x, 0.0,
                  1.0, 1e-5, 10, [&](double, std::span<const double> s) {
                      for (std::size_t i = 0; i < bf.size(); ++i) {
                          const double v = s[3 * i];
                          peak[i] = std::max(peak[i], 0.5 * bf.capacitance(i) * (v0 * v0 - v * v));
                      }
                  });
    std::vector<double> ratio;
    for (std::size_t i = 0; i < bf.size(); ++i) ratio.push_back(peak[i] / table_fleet()[i].rated_power_w);
    const auto [lo, hi] = std::minmax_element(ratio.begin(), ratio.end());
    CHECK(*lo > 0.0);
    CHECK(*hi / *lo - 1.0 <= 0.05);
}
