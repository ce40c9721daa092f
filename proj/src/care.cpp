#include "pvagg/care.hpp"

#include <cmath>
#include <string>

#include "pvagg/errors.hpp"
#include "pvagg/state_space.hpp"

namespace pvagg {

namespace {

constexpr int kMaxSignIterations = 100;
constexpr double kSignTol = 1e-12;

void check_inputs(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                  const Eigen::MatrixXd& R) {
    const Eigen::Index n = A.rows();
    if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n || R.rows() != B.cols() ||
        R.cols() != B.cols())
        throw DomainError("Riccati: inconsistent matrix dimensions");
    if ((Q - Q.transpose()).norm() > 1e-12 * std::max(1.0, Q.norm()))
        throw DomainError("Riccati: Q must be symmetric");
    if ((R - R.transpose()).norm() > 1e-12 * std::max(1.0, R.norm()))
        throw DomainError("Riccati: R must be symmetric");
}

}  // namespace

double care_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                     const Eigen::MatrixXd& R, const Eigen::MatrixXd& P) {
    const Eigen::MatrixXd G = B * R.llt().solve(B.transpose());
    const Eigen::MatrixXd res = A.transpose() * P + P * A - P * G * P + Q;
    return res.norm() / std::max(1.0, P.norm());
}

CareSolution solve_care(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                        const Eigen::MatrixXd& R) {
    check_inputs(A, B, Q, R);
    const Eigen::Index n = A.rows();
    Eigen::LLT<Eigen::MatrixXd> r_llt(R);
    if (r_llt.info() != Eigen::Success) throw DomainError("Riccati: R must be positive definite");
    const Eigen::MatrixXd G = B * r_llt.solve(B.transpose());

    Eigen::MatrixXd Z(2 * n, 2 * n);
    Z << A, -G, -Q, -A.transpose();

    const double dim = static_cast<double>(2 * n);
    double change = 1.0;
    double previous = 1.0;
    int k = 0;
    bool converged = false;
    for (; k < kMaxSignIterations; ++k) {
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(Z);
        const auto& lu_m = lu.matrixLU();
        double log_det = 0.0;
        for (Eigen::Index i = 0; i < 2 * n; ++i) {
            const double piv = std::abs(lu_m(i, i));
            if (piv == 0.0 || !std::isfinite(piv))
                throw NumericalError("Riccati: Hamiltonian has eigenvalues on the imaginary axis");
            log_det += std::log(piv);
        }
        // determinant scaling until the iterate is close to an involution
        const double gamma = change > 1e-2 ? std::exp(-log_det / dim) : 1.0;
        const Eigen::MatrixXd next = 0.5 * (gamma * Z + lu.inverse() / gamma);
        if (!next.allFinite()) throw NumericalError("Riccati: sign iteration produced non-finite values");
        previous = change;
        change = (next - Z).lpNorm<1>() / next.lpNorm<1>();
        Z = next;
        if (change <= kSignTol || (change < 1e-8 && change >= previous)) {
            converged = true;
            ++k;
            break;
        }
    }
    if (!converged)
        throw NumericalError("Riccati: sign iteration hit the cap of " + std::to_string(kMaxSignIterations) +
                             " iterations (Hamiltonian eigenvalues near the imaginary axis?)");

    // stable invariant subspace: (Z + I) [I; P] = 0
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd lhs(2 * n, n);
    Eigen::MatrixXd rhs(2 * n, n);
    lhs << Z.topRightCorner(n, n), Z.bottomRightCorner(n, n) + I;
    rhs << -(Z.topLeftCorner(n, n) + I), -Z.bottomLeftCorner(n, n);
    Eigen::MatrixXd P = lhs.colPivHouseholderQr().solve(rhs);
    P = 0.5 * (P + P.transpose()).eval();

    CareSolution sol;
    sol.P = P;
    sol.iterations = k;
    sol.residual = care_residual(A, B, Q, R, P);
    if (!std::isfinite(sol.residual)) throw NumericalError("Riccati: non-finite solution");
    if (n > 0 && max_real_eigenvalue(A - G * P) >= 0.0)
        throw NumericalError("Riccati: no stabilizing solution (pair not stabilizable/detectable)");
    return sol;
}

LqrResult lqr_gain(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                   const Eigen::MatrixXd& R) {
    LqrResult out;
    out.care = solve_care(A, B, Q, R);
    out.K = R.llt().solve(B.transpose() * out.care.P);
    return out;
}

}  // namespace pvagg
