#include "pvagg/integrate.hpp"

#include <cmath>
#include <sstream>

#include "pvagg/errors.hpp"

namespace pvagg {

std::size_t step_count(double t0, double t_end, double dt) {
    if (!(dt > 0) || !std::isfinite(dt)) throw DomainError("dt must be positive");
    if (!(t_end >= t0)) throw DomainError("t_end must not precede t0");
    const double n = (t_end - t0) / dt;
    const double r = std::round(n);
    if (std::abs(n - r) > 1e-6 * std::max(1.0, r)) throw DomainError("horizon is not a whole number of steps");
    return static_cast<std::size_t>(r);
}

IntegrationResult integrate_rk4(const Derivative& f, std::vector<double>& x, double t0, double t_end, double dt,
                                std::size_t stride, const Recorder& record) {
    if (stride == 0) throw DomainError("record stride must be positive");
    const std::size_t steps = step_count(t0, t_end, dt);
    const std::size_t n = x.size();
    std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);

    IntegrationResult res;
    res.t_final = t0;
    if (record) record(t0, x);
    for (std::size_t s = 0; s < steps; ++s) {
        const double t = t0 + static_cast<double>(s) * dt;
        try {
            f(t, x, k1);
            for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * dt * k1[i];
            f(t + 0.5 * dt, tmp, k2);
            for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * dt * k2[i];
            f(t + 0.5 * dt, tmp, k3);
            for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + dt * k3[i];
            f(t + dt, tmp, k4);
        } catch (const NumericalError& e) {
            res.truncated = true;
            res.diagnostic = e.what();
            return res;
        }
        bool finite = true;
        for (std::size_t i = 0; i < n; ++i) {
            const double v = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            if (!std::isfinite(v)) finite = false;
            tmp[i] = v;
        }
        if (!finite) {
            std::ostringstream os;
            os << "non-finite state at t = " << t + dt;
            res.truncated = true;
            res.diagnostic = os.str();
            return res;
        }
        x.swap(tmp);
        res.steps = s + 1;
        res.t_final = t0 + static_cast<double>(s + 1) * dt;
        if (record && (s + 1) % stride == 0) record(res.t_final, x);
    }
    return res;
}

}  // namespace pvagg
