#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "pvagg/panel.hpp"

namespace pvagg {

struct UniformRange {
    double lo = 0.0;
    double hi = 0.0;
};

struct McsConfig {
    std::size_t trials = 500000;
    std::size_t samples_per_trial = 50;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    UniformRange mu_p{150000.0, 250000.0};  // W
    UniformRange sigma_p{10.0, 30.0};
    UniformRange mu_v{-30.0, -7.5};         // V
    UniformRange sigma_v{2.0, 7.0};
    UniformRange mu_s{40.0, 70.0};          // %
    UniformRange sigma_s{1.0, 10.0};

    void validate() const;
};

struct McsSample {
    double rated_power_w;
    double dv_pv;
    double s_pct;
};

/// 100 |LHS - RHS| / |LHS| where LHS is the rating-weighted mean of g over the
/// samples and RHS is g at the rating-weighted mean (dV, S). Throws DomainError
/// if LHS is zero.
double approximation_error(std::span<const McsSample> samples, const PanelLut& lut);

/// SplitMix64 stream keyed by (seed, stream); satisfies UniformRandomBitGenerator.
class CounterRng {
  public:
    using result_type = std::uint64_t;
    CounterRng(std::uint64_t seed, std::uint64_t stream);
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()();

  private:
    std::uint64_t state_;
};

struct HistogramBin {
    double lower_pct;
    double probability;
    double cumulative;
};

struct ErrorStats {
    std::vector<double> errors;  // percent, in trial order

    double fraction_below(double pct) const;
    std::vector<HistogramBin> histogram(double bin_width_pct = 0.5) const;
};

ErrorStats run_mcs(const McsConfig& cfg, const PanelLut& lut);

/// Two-sample Kolmogorov-Smirnov distance.
double ks_distance(std::vector<double> a, std::vector<double> b);

// Columns bin_lower_pct, probability, cumulative.
void write_histogram_csv(const std::vector<HistogramBin>& h, std::ostream& os);

}  // namespace pvagg
