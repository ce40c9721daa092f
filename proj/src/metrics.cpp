#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "pvagg/errors.hpp"
#include "pvagg/sim.hpp"

namespace pvagg {

SimTrace::SimTrace(std::vector<std::string> labels) : labels_(std::move(labels)), cols_(labels_.size()) {
    for (std::size_t i = 0; i < labels_.size(); ++i)
        for (std::size_t j = i + 1; j < labels_.size(); ++j)
            if (labels_[i] == labels_[j]) throw DomainError("duplicate trace label: " + labels_[i]);
}

void SimTrace::append(double t, std::span<const double> row) {
    if (row.size() != cols_.size()) throw DomainError("trace row has the wrong width");
    t_.push_back(t);
    for (std::size_t i = 0; i < row.size(); ++i) cols_[i].push_back(row[i]);
}

void SimTrace::add_column(std::string label, std::vector<double> values) {
    if (has(label)) throw DomainError("duplicate trace label: " + label);
    if (values.size() != t_.size()) throw DomainError("column length does not match the time grid");
    labels_.push_back(std::move(label));
    cols_.push_back(std::move(values));
}

bool SimTrace::has(std::string_view label) const {
    return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
}

const std::vector<double>& SimTrace::column(std::string_view label) const {
    const auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) throw DomainError("no trace column '" + std::string(label) + "'");
    return cols_[static_cast<std::size_t>(it - labels_.begin())];
}

Metrics compute_metrics(const SimTrace& trace, std::string_view freq_col, std::optional<std::string_view> ref_col,
                        double rocof_window_s) {
    if (trace.rows() == 0) throw DomainError("trace is empty");
    if (!(rocof_window_s > 0)) throw DomainError("RoCoF window must be positive");
    const auto& t = trace.time();
    const auto& f = trace.column(freq_col);
    const std::size_t n = f.size();

    Metrics m;
    m.nadir_hz = *std::min_element(f.begin(), f.end());

    if (n > 1) {
        const double dt = (t.back() - t.front()) / static_cast<double>(n - 1);
        std::size_t w = static_cast<std::size_t>(std::llround(rocof_window_s / dt));
        w = std::clamp<std::size_t>(w, 1, n - 1);
        for (std::size_t i = 0; i + w < n; ++i)
            m.rocof_hz_s = std::max(m.rocof_hz_s, std::abs(f[i + w] - f[i]) / (t[i + w] - t[i]));
    }

    const double t_from = t.back() - 0.1 * (t.back() - t.front());
    double sum = 0.0;
    std::size_t cnt = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (t[i] >= t_from) {
            sum += f[i];
            ++cnt;
        }
    }
    m.settling_hz = sum / static_cast<double>(cnt);

    if (ref_col) {
        const auto& r = trace.column(*ref_col);
        double e = 0.0;
        for (std::size_t i = 0; i < n; ++i) e = std::max(e, std::abs(f[i] - r[i]));
        m.tracking_error_pct = e / kNominalFrequencyHz * 100.0;
    }
    return m;
}

TraceComparison compare_columns(const SimTrace& a, const SimTrace& b, std::string_view label) {
    if (a.rows() != b.rows() || a.rows() == 0) throw DomainError("traces must share a non-empty time grid");
    const auto& x = a.column(label);
    const auto& y = b.column(label);
    TraceComparison c;
    double peak = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        c.scale = std::max(c.scale, std::abs(y[i]));
        peak = std::max(peak, std::abs(x[i] - y[i]));
    }
    const double end = std::abs(x.back() - y.back());
    if (c.scale > 0) {
        c.peak_error = peak / c.scale;
        c.steady_state_error = end / c.scale;
    } else {
        c.peak_error = peak;
        c.steady_state_error = end;
    }
    return c;
}

UnitGroups comparison_groups(const Fleet& fleet) {
    if (fleet.empty()) throw DomainError("fleet is empty");
    std::map<double, std::vector<std::size_t>> by_rating;
    std::map<double, std::vector<std::size_t>> by_s;
    for (std::size_t i = 0; i < fleet.size(); ++i) {
        by_rating[fleet[i].rated_power_w].push_back(i);
        by_s[fleet[i].irradiance_pct].push_back(i);
    }
    UnitGroups g;
    for (const auto& [r, idx] : by_rating)
        if (idx.size() > g.same_rating.size()) g.same_rating = idx;
    std::size_t best = 0;
    for (const auto& [s, idx] : by_s) {
        std::set<double> ratings;
        for (auto i : idx) ratings.insert(fleet[i].rated_power_w);
        if (ratings.size() > best) {
            best = ratings.size();
            g.same_irradiance = idx;
        }
    }
    return g;
}

double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) throw DomainError("correlation needs two equal-length series");
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0 || sbb == 0) throw DomainError("correlation undefined for a constant series");
    return sab / std::sqrt(saa * sbb);
}

}  // namespace pvagg
