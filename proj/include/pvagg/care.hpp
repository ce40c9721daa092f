#pragma once

#include <Eigen/Dense>

namespace pvagg {

struct CareSolution {
    Eigen::MatrixXd P;
    double residual = 0.0;  // ||A'P + PA - PBR^-1B'P + Q||_F / max(1, ||P||_F)
    int iterations = 0;
};

/// Continuous algebraic Riccati equation A'P + PA - P B R^-1 B' P + Q = 0 by the
/// matrix sign function of the Hamiltonian (determinant-scaled Newton iteration).
/// Throws NumericalError when the Hamiltonian has eigenvalues on the imaginary
/// axis, the iteration cap is hit, or the result is not stabilizing.
CareSolution solve_care(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                        const Eigen::MatrixXd& R);

double care_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                     const Eigen::MatrixXd& R, const Eigen::MatrixXd& P);

struct LqrResult {
    Eigen::MatrixXd K;  // u = -K x
    CareSolution care;
};

LqrResult lqr_gain(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                   const Eigen::MatrixXd& R);

}  // namespace pvagg
