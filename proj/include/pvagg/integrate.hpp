#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace pvagg {

using Derivative = std::function<void(double t, std::span<const double> x, std::span<double> dx)>;
using Recorder = std::function<void(double t, std::span<const double> x)>;

struct IntegrationResult {
    std::size_t steps = 0;
    double t_final = 0.0;
    bool truncated = false;
    std::string diagnostic;
};

/// Classical RK4 with fixed step. `record` sees the initial state and every
/// `stride`-th step. A non-finite state or a NumericalError from `f` stops the
/// run; the result is flagged truncated and carries the reason.
IntegrationResult integrate_rk4(const Derivative& f, std::vector<double>& x, double t0, double t_end, double dt,
                                std::size_t stride = 1, const Recorder& record = {});

/// Step count for [t0, t_end] at dt; throws DomainError unless it divides evenly.
std::size_t step_count(double t0, double t_end, double dt);

}  // namespace pvagg
