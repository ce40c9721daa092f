#include "pvagg/mcs.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <thread>

#include "pvagg/csv.hpp"
#include "pvagg/errors.hpp"

namespace pvagg {

namespace {

std::uint64_t splitmix(std::uint64_t& s) {
    std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

void check_range(const UniformRange& r, const char* name, bool positive) {
    if (!(std::isfinite(r.lo) && std::isfinite(r.hi) && r.lo <= r.hi))
        throw DomainError(std::string(name) + ": bounds must be finite and ordered");
    if (positive && r.lo < 0) throw DomainError(std::string(name) + ": must be non-negative");
}

double uniform(CounterRng& g, const UniformRange& r) {
    if (r.lo == r.hi) return r.lo;
    return std::uniform_real_distribution<double>(r.lo, r.hi)(g);
}

// Normal draw rejected until it lands in [lo, hi].
double truncated_normal(CounterRng& g, double mu, double sigma, double lo, double hi) {
    if (sigma == 0.0) return std::clamp(mu, lo, hi);
    std::normal_distribution<double> nd(mu, sigma);
    for (int k = 0; k < 10000; ++k) {
        const double v = nd(g);
        if (v >= lo && v <= hi) return v;
    }
    return std::clamp(mu, lo, hi);
}

double trial_error(const McsConfig& cfg, const PanelLut& lut, std::size_t trial, std::vector<McsSample>& buf) {
    const double vlo = lut.dv_grid.front(), vhi = lut.dv_grid.back();
    const double slo = std::max(lut.s_grid.front(), 0.0), shi = std::min(lut.s_grid.back(), 100.0);
    for (std::uint64_t attempt = 0;; ++attempt) {
        CounterRng g(cfg.seed, (static_cast<std::uint64_t>(trial) << 8) | (attempt & 0xff));
        const double mp = uniform(g, cfg.mu_p), sp = uniform(g, cfg.sigma_p);
        const double mv = uniform(g, cfg.mu_v), sv = uniform(g, cfg.sigma_v);
        const double ms = uniform(g, cfg.mu_s), ss = uniform(g, cfg.sigma_s);
        for (auto& s : buf) {
            s.rated_power_w = truncated_normal(g, mp, sp, 1e-9, std::numeric_limits<double>::infinity());
            s.dv_pv = truncated_normal(g, mv, sv, vlo, vhi);
            s.s_pct = truncated_normal(g, ms, ss, slo, shi);
        }
        try {
            return approximation_error(buf, lut);
        } catch (const DomainError&) {
            if (attempt >= 255) throw NumericalError("Monte Carlo trial kept producing a zero weighted mean");
        }
    }
}

}  // namespace

void McsConfig::validate() const {
    if (trials == 0) throw DomainError("trials must be positive");
    if (samples_per_trial == 0) throw DomainError("samples per trial must be positive");
    if (threads == 0) throw DomainError("threads must be positive");
    check_range(mu_p, "mu_p", true);
    check_range(sigma_p, "sigma_p", true);
    check_range(mu_v, "mu_v", false);
    check_range(sigma_v, "sigma_v", true);
    check_range(mu_s, "mu_s", true);
    check_range(sigma_s, "sigma_s", true);
    if (mu_p.lo <= 0) throw DomainError("mu_p: must be positive");
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = seed;
    const std::uint64_t a = splitmix(s);
    s = stream ^ 0x6a09e667f3bcc909ULL;
    const std::uint64_t b = splitmix(s);
    state_ = a ^ (b * 0xd1342543de82ef95ULL);
}

CounterRng::result_type CounterRng::operator()() { return splitmix(state_); }

double approximation_error(std::span<const McsSample> samples, const PanelLut& lut) {
    if (samples.empty()) throw DomainError("no samples");
    double wsum = 0.0, gsum = 0.0, vsum = 0.0, ssum = 0.0;
    for (const auto& s : samples) {
        if (!(s.rated_power_w > 0)) throw DomainError("sample rated power must be positive");
        wsum += s.rated_power_w;
        gsum += s.rated_power_w * lut_forward(lut, s.dv_pv, s.s_pct);
        vsum += s.rated_power_w * s.dv_pv;
        ssum += s.rated_power_w * s.s_pct;
    }
    const double lhs = gsum / wsum;
    if (lhs == 0.0) throw DomainError("weighted mean of g is zero; error undefined");
    const double rhs = lut_forward(lut, vsum / wsum, ssum / wsum);
    return 100.0 * std::abs(lhs - rhs) / std::abs(lhs);
}

ErrorStats run_mcs(const McsConfig& cfg, const PanelLut& lut) {
    cfg.validate();
    ErrorStats st;
    st.errors.assign(cfg.trials, 0.0);
    const unsigned nt = static_cast<unsigned>(std::min<std::size_t>(cfg.threads, cfg.trials));
    auto work = [&](std::size_t begin, std::size_t end) {
        std::vector<McsSample> buf(cfg.samples_per_trial);
        for (std::size_t t = begin; t < end; ++t) st.errors[t] = trial_error(cfg, lut, t, buf);
    };
    if (nt <= 1) {
        work(0, cfg.trials);
        return st;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(nt);
    const std::size_t chunk = (cfg.trials + nt - 1) / nt;
    for (unsigned k = 0; k < nt; ++k) {
        const std::size_t b = k * chunk, e = std::min(cfg.trials, b + chunk);
        pool.emplace_back([&, b, e, k] {
            try {
                work(b, e);
            } catch (...) {
                errs[k] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
    return st;
}

double ErrorStats::fraction_below(double pct) const {
    if (errors.empty()) return 0.0;
    const auto n = std::count_if(errors.begin(), errors.end(), [pct](double e) { return e < pct; });
    return static_cast<double>(n) / static_cast<double>(errors.size());
}

std::vector<HistogramBin> ErrorStats::histogram(double bin_width_pct) const {
    if (!(bin_width_pct > 0)) throw DomainError("bin width must be positive");
    std::vector<HistogramBin> h;
    if (errors.empty()) return h;
    const double top = *std::max_element(errors.begin(), errors.end());
    const std::size_t nb = static_cast<std::size_t>(std::floor(top / bin_width_pct)) + 1;
    std::vector<std::size_t> counts(nb, 0);
    for (double e : errors) counts[std::min(nb - 1, static_cast<std::size_t>(e / bin_width_pct))]++;
    const double n = static_cast<double>(errors.size());
    std::size_t acc = 0;
    for (std::size_t i = 0; i < nb; ++i) {
        acc += counts[i];
        h.push_back({static_cast<double>(i) * bin_width_pct, static_cast<double>(counts[i]) / n,
                     static_cast<double>(acc) / n});
    }
    h.back().cumulative = 1.0;
    return h;
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw DomainError("KS distance needs two non-empty samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == v) ++i;
        while (j < b.size() && b[j] == v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

void write_histogram_csv(const std::vector<HistogramBin>& h, std::ostream& os) {
    os << "bin_lower_pct,probability,cumulative\n";
    for (const auto& b : h) os << fmt9(b.lower_pct) << ',' << fmt9(b.probability) << ',' << fmt9(b.cumulative) << '\n';
}

}  // namespace pvagg
