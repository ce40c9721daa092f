#include "pvagg/grid.hpp"

#include "pvagg/errors.hpp"

namespace pvagg {

void LfcParams::validate() const {
    if (!(t_g > 0 && t_t > 0 && h_g > 0 && r_g > 0 && d > 0 && s_base > 0))
        throw DomainError("LFC parameters must be strictly positive");
}

StateSpace build_lfc(const LfcParams& p) {
    p.validate();
    StateSpace m;
    m.A = Eigen::MatrixXd::Zero(3, 3);
    m.A(0, 0) = -1.0 / p.t_g;
    m.A(0, 2) = -1.0 / (p.r_g * p.t_g);
    m.A(1, 0) = 1.0 / p.t_t;
    m.A(1, 1) = -1.0 / p.t_t;
    m.A(2, 1) = 1.0 / (2.0 * p.h_g);
    m.A(2, 2) = -p.d / (2.0 * p.h_g);
    m.B = Eigen::MatrixXd::Zero(3, 1);
    m.B(2, 0) = 1.0 / (2.0 * p.h_g);
    m.E = Eigen::MatrixXd::Zero(3, 1);
    m.E(2, 0) = -1.0 / (2.0 * p.h_g);
    m.C = Eigen::MatrixXd::Zero(1, 3);
    m.C(0, 2) = 1.0;
    m.state_labels = {"dP_gov", "dP_m", "domega"};
    m.input_labels = {"dP_PV_pu"};
    m.output_labels = {"domega"};
    m.disturbance_labels = {"dP_L"};
    return m;
}

double steady_state_freq(const LfcParams& p, double load_step_pu) {
    return -load_step_pu / (p.d + 1.0 / p.r_g);
}

StateSpace build_reference(double h_ref, double r_ref, const LfcParams& base) {
    if (!(h_ref > 0 && r_ref > 0)) throw DomainError("reference inertia and droop must be positive");
    LfcParams p = base;
    p.h_g = h_ref;
    p.r_g = r_ref;
    StateSpace m = build_lfc(p);
    m.state_labels = {"dP_gov_ref", "dP_m_ref", "domega_ref"};
    m.output_labels = {"domega_ref"};
    return m;
}

StateSpace build_combined(const StateSpace& lfc, const StateSpace& pv, double s_base) {
    lfc.validate();
    pv.validate();
    if (!(s_base > 0)) throw DomainError("system base must be positive");
    if (lfc.inputs() != 1 || pv.outputs() != 1)
        throw DomainError("combined model needs a single-input LFC and a single-output PV model");
    if (lfc.outputs() != 1) throw DomainError("LFC model must expose only the frequency output");

    const Eigen::Index ng = lfc.states();
    const Eigen::Index np = pv.states();
    StateSpace m;
    m.A = Eigen::MatrixXd::Zero(ng + np, ng + np);
    m.A.topLeftCorner(ng, ng) = lfc.A;
    m.A.topRightCorner(ng, np) = lfc.B * pv.C / s_base;
    m.A.bottomRightCorner(np, np) = pv.A;
    m.B = Eigen::MatrixXd::Zero(ng + np, pv.inputs());
    m.B.bottomRows(np) = pv.B;
    m.E = Eigen::MatrixXd::Zero(ng + np, lfc.disturbances());
    m.E.topRows(ng) = lfc.E;
    m.C = Eigen::MatrixXd::Zero(1, ng + np);
    m.C.leftCols(ng) = lfc.C;
    m.state_labels = lfc.state_labels;
    m.state_labels.insert(m.state_labels.end(), pv.state_labels.begin(), pv.state_labels.end());
    m.input_labels = pv.input_labels;
    m.output_labels = lfc.output_labels;
    m.disturbance_labels = lfc.disturbance_labels;
    return m;
}

}  // namespace pvagg
