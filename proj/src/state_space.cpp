#include "pvagg/state_space.hpp"

#include "pvagg/errors.hpp"

namespace pvagg {

void StateSpace::validate() const {
    const Eigen::Index n = A.rows();
    if (A.cols() != n) throw DomainError("state matrix must be square");
    if (B.rows() != n) throw DomainError("input matrix row count differs from state count");
    if (C.cols() != n) throw DomainError("output matrix column count differs from state count");
    if (E.rows() != n) throw DomainError("disturbance matrix row count differs from state count");
    if (static_cast<Eigen::Index>(state_labels.size()) != n) throw DomainError("state labels do not cover every state");
    if (static_cast<Eigen::Index>(input_labels.size()) != B.cols()) throw DomainError("input label count mismatch");
    if (static_cast<Eigen::Index>(output_labels.size()) != C.rows()) throw DomainError("output label count mismatch");
    if (static_cast<Eigen::Index>(disturbance_labels.size()) != E.cols())
        throw DomainError("disturbance label count mismatch");
}

Eigen::VectorXcd eigenvalues(const Eigen::MatrixXd& a) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
    return es.eigenvalues();
}

double max_real_eigenvalue(const Eigen::MatrixXd& a) { return eigenvalues(a).real().maxCoeff(); }

}  // namespace pvagg
