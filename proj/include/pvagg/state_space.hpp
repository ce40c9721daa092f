#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pvagg {

/// Continuous-time linear model  x' = A x + B u + E d,  y = C x.
struct StateSpace {
    Eigen::MatrixXd A;
    Eigen::MatrixXd B;
    Eigen::MatrixXd C;
    Eigen::MatrixXd E;  // n x 0 when there is no disturbance channel
    std::vector<std::string> state_labels;
    std::vector<std::string> input_labels;
    std::vector<std::string> output_labels;
    std::vector<std::string> disturbance_labels;

    Eigen::Index states() const { return A.rows(); }
    Eigen::Index inputs() const { return B.cols(); }
    Eigen::Index outputs() const { return C.rows(); }
    Eigen::Index disturbances() const { return E.cols(); }

    /// Throws DomainError on inconsistent dimensions or label counts.
    void validate() const;
};

Eigen::VectorXcd eigenvalues(const Eigen::MatrixXd& a);
double max_real_eigenvalue(const Eigen::MatrixXd& a);

}  // namespace pvagg
