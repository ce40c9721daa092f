#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "pvagg/errors.hpp"
#include "pvagg/mcs.hpp"

using namespace pvagg;

namespace {

// g given by a closed form on a small grid; interpolation reproduces bilinear forms exactly.
template <class G>
PanelLut synthetic_lut(G g) {
    PanelLut l;
    l.dv_grid = uniform_grid(-10.0, 10.0, 1.0);
    l.s_grid = uniform_grid(10.0, 100.0, 10.0);
    for (double dv : l.dv_grid)
        for (double s : l.s_grid) l.table.push_back(g(dv, s));
    l.clamped.assign(l.table.size(), 0);
    l.v_op.assign(l.cols(), 400.0);
    l.v_mpp.assign(l.cols(), 380.0);
    l.p_mpp.assign(l.cols(), 5695.0);
    finalize_lut(l);
    return l;
}

McsConfig small(std::size_t trials, std::uint64_t seed = 1) {
    McsConfig c;
    c.trials = trials;
    c.seed = seed;
    return c;
}

}  // namespace

TEST_CASE("identical samples carry no aggregation error") {
    const std::vector<McsSample> s(50, McsSample{2e5, -12.0, 55.0});
    CHECK(approximation_error(s, fixtures::lut()) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
}

TEST_CASE("affine table carries no aggregation error") {
    const auto l = synthetic_lut([](double dv, double s) { return 3.0 * dv - 0.5 * s + 100.0; });
    const std::vector<McsSample> s{{1e5, -7.3, 22.0}, {3e5, 4.1, 87.5}, {2e5, 0.25, 50.0}, {1.5e5, -9.9, 11.0}};
    CHECK(approximation_error(s, l) == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
}

TEST_CASE("hand-computed three-sample case") {
    const auto l = synthetic_lut([](double dv, double s) { return dv * s; });
    // weighted mean of g: (-40 + 2*30 + 160) / 4 = 45; g at the means (1, 30) = 30
    const std::vector<McsSample> s{{1.0, -2.0, 20.0}, {2.0, 1.0, 30.0}, {1.0, 4.0, 40.0}};
    CHECK(approximation_error(s, l) == doctest::Approx(100.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("zero weighted mean is rejected") {
    const auto l = synthetic_lut([](double dv, double s) { return dv * s; });
    const std::vector<McsSample> s{{1.0, -1.0, 50.0}, {1.0, 1.0, 50.0}};
    CHECK_THROWS_AS(approximation_error(s, l), DomainError);
    CHECK_THROWS_AS(approximation_error(std::vector<McsSample>{}, l), DomainError);
}

TEST_CASE("collapsed spreads give zero error in every trial") {
    auto c = small(200);
    c.sigma_p = {0, 0};
    c.sigma_v = {0, 0};
    c.sigma_s = {0, 0};
    const auto st = run_mcs(c, fixtures::lut());
    for (double e : st.errors) CHECK(e == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
}

TEST_CASE("results do not depend on the thread count") {
    auto c = small(3000);
    const auto one = run_mcs(c, fixtures::lut());
    c.threads = 4;
    const auto four = run_mcs(c, fixtures::lut());
    CHECK(one.errors == four.errors);
}

TEST_CASE("seeds reproduce and differ") {
    const auto a = run_mcs(small(500, 7), fixtures::lut());
    const auto b = run_mcs(small(500, 7), fixtures::lut());
    const auto c = run_mcs(small(500, 8), fixtures::lut());
    CHECK(a.errors == b.errors);
    CHECK(a.errors != c.errors);
}

TEST_CASE("fraction below is monotone in the threshold") {
    const auto st = run_mcs(small(5000), fixtures::lut());
    double prev = 0.0;
    for (double th = 0.0; th <= 40.0; th += 0.5) {
        const double f = st.fraction_below(th);
        CHECK(f >= prev);
        prev = f;
    }
    CHECK(st.fraction_below(1e9) == 1.0);
}

TEST_CASE("narrower spreads make aggregation more accurate") {
    auto c = small(5000);
    const double wide = run_mcs(c, fixtures::lut()).fraction_below(5.0);
    c.sigma_v = {c.sigma_v.lo / 10, c.sigma_v.hi / 10};
    c.sigma_s = {c.sigma_s.lo / 10, c.sigma_s.hi / 10};
    c.sigma_p = {c.sigma_p.lo / 10, c.sigma_p.hi / 10};
    const double narrow = run_mcs(c, fixtures::lut()).fraction_below(5.0);
    CHECK(narrow > wide);
}

TEST_CASE("histogram is a distribution") {
    const auto st = run_mcs(small(4000), fixtures::lut());
    const auto h = st.histogram(0.5);
    REQUIRE_FALSE(h.empty());
    double sum = 0.0;
    for (const auto& b : h) sum += b.probability;
    CHECK(sum == doctest::Approx(1.0));
    CHECK(h.back().cumulative == doctest::Approx(1.0));
    CHECK(h[10].cumulative == doctest::Approx(st.fraction_below(5.5)));
    std::ostringstream os;
    write_histogram_csv(h, os);
    CHECK(os.str().rfind("bin_lower_pct,probability,cumulative\n", 0) == 0);
    CHECK_THROWS_AS(st.histogram(0.0), DomainError);
}

TEST_CASE("distribution is stable across seeds") {
    const auto a = run_mcs(small(20000, 1), fixtures::lut());
    const auto b = run_mcs(small(20000, 2), fixtures::lut());
    CHECK(ks_distance(a.errors, b.errors) < 0.02);
    CHECK(ks_distance(a.errors, a.errors) == 0.0);
}

TEST_CASE("invalid configurations") {
    auto c = small(0);
    CHECK_THROWS_AS(run_mcs(c, fixtures::lut()), DomainError);
    c = small(10);
    c.sigma_v = {3.0, 1.0};
    CHECK_THROWS_AS(run_mcs(c, fixtures::lut()), DomainError);
    c = small(10);
    c.threads = 0;
    CHECK_THROWS_AS(run_mcs(c, fixtures::lut()), DomainError);
}
