#include "pvagg/panel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pvagg/errors.hpp"

namespace pvagg {

namespace {

constexpr double kBoltzmann = 1.380649e-23;
constexpr double kElectronCharge = 1.602176634e-19;

constexpr double kCurrentTol = 1e-10;
constexpr int kMaxIterations = 200;

double thermal_voltage(const PanelParams& p, double t_k) {
    return p.ideality * p.series_cells * kBoltzmann * t_k / kElectronCharge;
}

void check_operating_args(double s_pct, double t_k) {
    if (!(s_pct >= 0.0 && s_pct <= 100.0))
        throw DomainError("irradiance must lie in [0, 100] %, got " + std::to_string(s_pct));
    if (!(t_k >= 250.0 && t_k <= 350.0))
        throw DomainError("temperature must lie in [250, 350] K, got " + std::to_string(t_k));
}

// Position of x in an ascending grid: cell index i in [0, n-2] and weight in [0, 1].
// Nodes map to weight exactly 0 (or exactly 1 for the last node).
struct Cell {
    std::size_t i;
    double w;
};

Cell locate(const std::vector<double>& grid, double x) {
    const std::size_t n = grid.size();
    if (n == 1) return {0, 0.0};
    if (x >= grid[n - 1]) return {n - 2, 1.0};
    auto it = std::upper_bound(grid.begin(), grid.end(), x);
    std::size_t i = static_cast<std::size_t>(it - grid.begin());
    i = (i == 0) ? 0 : i - 1;
    const double w = (x - grid[i]) / (grid[i + 1] - grid[i]);
    return {i, w};
}

double lerp(double a, double b, double w) {
    if (w == 0.0) return a;
    if (w == 1.0) return b;
    return a + w * (b - a);
}

double interp_column(const std::vector<double>& s_grid, const std::vector<double>& values,
                     double s_pct) {
    const Cell c = locate(s_grid, s_pct);
    if (values.size() == 1) return values[0];
    return lerp(values[c.i], values[c.i + 1], c.w);
}

void check_grid(const std::vector<double>& g, const char* name) {
    if (g.empty()) throw DomainError(std::string(name) + " grid is empty");
    for (std::size_t i = 1; i < g.size(); ++i)
        if (!(g[i] > g[i - 1]))
            throw DomainError(std::string(name) + " grid is not strictly ascending");
}

}  // namespace

void PanelParams::validate() const {
    if (!(photocurrent_a > 0 && saturation_current_a > 0 && ideality > 0 &&
          series_resistance_ohm > 0 && shunt_resistance_ohm > 0 && series_cells > 0 &&
          rated_power_w > 0 && reference_temperature_k > 0))
        throw DomainError("panel parameters must be strictly positive");
}

double panel_current(const PanelParams& p, double v, double s_pct, double t_k) {
    if (!(v >= 0.0)) throw DomainError("panel voltage must be non-negative");
    check_operating_args(s_pct, t_k);

    const double iph = p.photocurrent_a * s_pct / 100.0;
    const double a = thermal_voltage(p, t_k);
    const double rs = p.series_resistance_ohm;
    const double rsh = p.shunt_resistance_ohm;

    auto residual = [&](double i) {
        const double vd = v + i * rs;
        return iph - p.saturation_current_a * std::expm1(vd / a) - vd / rsh - i;
    };
    auto slope = [&](double i) {
        const double vd = v + i * rs;
        return -p.saturation_current_a * std::exp(vd / a) * rs / a - rs / rsh - 1.0;
    };

    // residual(lo) >= 0 >= residual(hi); residual is strictly decreasing.
    double lo = -v / rs;
    double hi = iph;
    if (hi - lo <= kCurrentTol) return 0.5 * (lo + hi);

    double i = std::clamp(iph - v / rsh, lo, hi);
    for (int it = 0; it < kMaxIterations; ++it) {
        const double f = residual(i);
        if (f > 0) lo = i; else hi = i;
        double next = i - f / slope(i);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - i) < kCurrentTol || hi - lo < kCurrentTol) return next;
        i = next;
    }
    throw NumericalError("single-diode current solve did not converge (v=" + std::to_string(v) +
                         ", S=" + std::to_string(s_pct) + ")");
}

double open_circuit_voltage(const PanelParams& p, double s_pct, double t_k) {
    if (!(s_pct > 0.0)) throw DomainError("open-circuit voltage needs S > 0");
    double lo = 0.0;
    double hi = 1.0;
    while (panel_current(p, hi, s_pct, t_k) > 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e7) throw NumericalError("open-circuit voltage search diverged");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (panel_current(p, mid, s_pct, t_k) > 0.0) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

MppPoint find_mpp(const PanelParams& p, double s_pct, double t_k) {
    if (!(s_pct > 0.0)) throw DomainError("maximum power point needs S > 0");
    const double voc = open_circuit_voltage(p, s_pct, t_k);

    // golden-section search, power is unimodal on [0, Voc]
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = 0.0;
    double b = voc;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double pc = panel_power(p, c, s_pct, t_k);
    double pd = panel_power(p, d, s_pct, t_k);
    while (b - a > 1e-9) {
        if (pc > pd) {
            b = d;
            d = c;
            pd = pc;
            c = b - inv_phi * (b - a);
            pc = panel_power(p, c, s_pct, t_k);
        } else {
            a = c;
            c = d;
            pc = pd;
            d = a + inv_phi * (b - a);
            pd = panel_power(p, d, s_pct, t_k);
        }
    }
    const double v = 0.5 * (a + b);
    return {v, panel_power(p, v, s_pct, t_k)};
}

double deload_point(const PanelParams& p, double s_pct, double t_k, double frac) {
    if (!(frac > 0.0 && frac < 1.0)) throw DomainError("de-load fraction must lie in (0, 1)");
    if (!(s_pct > 0.0)) throw DomainError("de-load point needs S > 0");
    const MppPoint mpp = find_mpp(p, s_pct, t_k);
    const double target = frac * mpp.p_mpp;

    // power is decreasing on [v_mpp, Voc]
    double lo = mpp.v_mpp;
    double hi = open_circuit_voltage(p, s_pct, t_k);
    for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (panel_power(p, mid, s_pct, t_k) > target) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

PanelParams calibrate_panel(const PanelDesign& d) {
    if (!(d.open_circuit_voltage_v > 0 && d.rated_power_w > 0 && d.ideality > 0 &&
          d.series_resistance_ohm > 0 && d.shunt_resistance_ohm > 0 && d.series_cells > 0))
        throw DomainError("panel design parameters must be strictly positive");

    PanelParams p;
    p.ideality = d.ideality;
    p.series_resistance_ohm = d.series_resistance_ohm;
    p.shunt_resistance_ohm = d.shunt_resistance_ohm;
    p.series_cells = d.series_cells;
    p.rated_power_w = d.rated_power_w;
    p.reference_temperature_k = d.temperature_k;

    const double voc = d.open_circuit_voltage_v;
    const double a = thermal_voltage(p, d.temperature_k);
    // the saturation current that pins Voc for a given photocurrent
    auto set_photocurrent = [&](double iph) {
        p.photocurrent_a = iph;
        p.saturation_current_a = (iph - voc / p.shunt_resistance_ohm) / std::expm1(voc / a);
    };
    auto excess = [&](double iph) {
        set_photocurrent(iph);
        return find_mpp(p, 100.0, d.temperature_k).p_mpp - d.rated_power_w;
    };

    double lo = d.rated_power_w / voc;
    double hi = 10.0 * lo;
    if (lo <= voc / p.shunt_resistance_ohm)
        throw NumericalError("panel calibration: shunt loss exceeds rated current");
    if (!(excess(lo) < 0.0 && excess(hi) > 0.0))
        throw NumericalError("panel calibration: rated power not bracketed");
    for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (excess(mid) < 0.0) lo = mid; else hi = mid;
    }
    set_photocurrent(0.5 * (lo + hi));
    return p;
}

std::vector<double> uniform_grid(double lo, double hi, double step) {
    if (!(step > 0.0) || !(hi >= lo)) throw DomainError("uniform grid needs lo <= hi and step > 0");
    const auto n = static_cast<std::size_t>(std::llround((hi - lo) / step)) + 1;
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = lo + static_cast<double>(i) * step;
    return g;
}

PanelLut build_lut(const PanelParams& p, std::vector<double> dv_grid, std::vector<double> s_grid,
                   double t_k, double frac) {
    check_grid(dv_grid, "voltage-deviation");
    check_grid(s_grid, "irradiance");
    if (dv_grid.front() > -60.0 || dv_grid.back() < 20.0)
        throw DomainError("voltage-deviation grid must span at least [-60, 20] V");
    if (s_grid.front() > 10.0 || s_grid.back() < 100.0 || s_grid.front() <= 0.0)
        throw DomainError("irradiance grid must span at least [10, 100] % with S > 0");
    if (!(frac > 0.0 && frac < 1.0)) throw DomainError("de-load fraction must lie in (0, 1)");

    PanelLut lut;
    lut.dv_grid = std::move(dv_grid);
    lut.s_grid = std::move(s_grid);
    lut.temperature_k = t_k;
    lut.deload_fraction = frac;
    const std::size_t nr = lut.rows();
    const std::size_t nc = lut.cols();
    lut.table.assign(nr * nc, 0.0);
    lut.clamped.assign(nr * nc, 0);
    lut.v_op.resize(nc);
    lut.v_mpp.resize(nc);
    lut.p_mpp.resize(nc);

    for (std::size_t j = 0; j < nc; ++j) {
        const double s = lut.s_grid[j];
        const MppPoint mpp = find_mpp(p, s, t_k);
        const double v_op = deload_point(p, s, t_k, frac);
        const double p_op = panel_power(p, v_op, s, t_k);
        lut.v_op[j] = v_op;
        lut.v_mpp[j] = mpp.v_mpp;
        lut.p_mpp[j] = mpp.p_mpp;
        for (std::size_t i = 0; i < nr; ++i) {
            double v = v_op + lut.dv_grid[i];
            if (v < mpp.v_mpp) {
                v = mpp.v_mpp;
                lut.clamped[i * nc + j] = 1;
            }
            lut.table[i * nc + j] = (lut.dv_grid[i] == 0.0) ? 0.0 : panel_power(p, v, s, t_k) - p_op;
        }
    }
    finalize_lut(lut);
    return lut;
}

void finalize_lut(PanelLut& lut) {
    lut.headroom.assign(lut.cols(), 0.0);
    for (std::size_t j = 0; j < lut.cols(); ++j) {
        double best = lut.at(0, j);
        for (std::size_t i = 1; i < lut.rows(); ++i) best = std::max(best, lut.at(i, j));
        lut.headroom[j] = best;
    }
}

double PanelLut::p_mpp_at(double s_pct) const { return interp_column(s_grid, p_mpp, s_pct); }

double PanelLut::branch_limit_at(double s_pct) const {
    const Cell c = locate(s_grid, s_pct);
    const double a = v_mpp[c.i] - v_op[c.i];
    if (cols() == 1) return a;
    return lerp(a, v_mpp[c.i + 1] - v_op[c.i + 1], c.w);
}

double PanelLut::headroom_at(double s_pct) const { return interp_column(s_grid, headroom, s_pct); }

double PanelLut::floor_at(double s_pct) const {
    const Cell c = locate(s_grid, s_pct);
    const std::size_t last = rows() - 1;
    return cols() > 1 ? lerp(at(last, c.i), at(last, c.i + 1), c.w) : at(last, c.i);
}

bool PanelLut::in_hull(double dv, double s_pct) const {
    return dv >= dv_grid.front() && dv <= dv_grid.back() && s_pct >= s_grid.front() &&
           s_pct <= s_grid.back();
}

double lut_forward(const PanelLut& lut, double dv, double s_pct) {
    if (!lut.in_hull(dv, s_pct))
        throw DomainError("lookup (" + std::to_string(dv) + " V, " + std::to_string(s_pct) +
                          " %) outside the table hull");
    const Cell r = locate(lut.dv_grid, dv);
    const Cell c = locate(lut.s_grid, s_pct);
    const std::size_t nr = lut.rows();
    const std::size_t nc = lut.cols();
    const std::size_t r1 = nr > 1 ? r.i + 1 : r.i;
    const std::size_t c1 = nc > 1 ? c.i + 1 : c.i;
    const double top = lerp(lut.at(r.i, c.i), lut.at(r.i, c1), c.w);
    const double bottom = lerp(lut.at(r1, c.i), lut.at(r1, c1), c.w);
    return lerp(top, bottom, r.w);
}

double lut_inverse(const PanelLut& lut, double dp, double s_pct) {
    if (!(s_pct >= lut.s_grid.front() && s_pct <= lut.s_grid.back()))
        throw DomainError("inverse lookup irradiance outside the table hull");
    const Cell c = locate(lut.s_grid, s_pct);
    const std::size_t c1 = lut.cols() > 1 ? c.i + 1 : c.i;

    const double limit = lut.branch_limit_at(s_pct);
    const double headroom = lut.headroom_at(s_pct);
    const double floor = lut.floor_at(s_pct);
    if (dp > headroom)
        throw SaturationError("power request exceeds de-load headroom", limit);
    if (dp < floor)
        throw SaturationError("power request below the table floor", lut.dv_grid.back());

    // Piecewise-linear curve in dV: the exact branch boundary (limit, headroom),
    // then every grid node above it. Values are non-increasing along the curve.
    const auto& dv = lut.dv_grid;
    const std::size_t first =
        static_cast<std::size_t>(std::upper_bound(dv.begin(), dv.end(), limit) - dv.begin());
    auto node = [&](std::size_t i) { return lerp(lut.at(i, c.i), lut.at(i, c1), c.w); };

    // first node index with value <= dp
    std::size_t lo = first;
    std::size_t hi = lut.rows();
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (node(mid) <= dp) hi = mid; else lo = mid + 1;
    }
    if (lo == lut.rows()) return dv.back();
    const double y1 = node(lo);
    if (y1 == dp) return dv[lo];
    const double x0 = (lo == first) ? limit : dv[lo - 1];
    const double y0 = (lo == first) ? headroom : node(lo - 1);
    if (y0 == y1) return x0;
    return x0 + (dp - y0) * (dv[lo] - x0) / (y1 - y0);
}

}  // namespace pvagg
