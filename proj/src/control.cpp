#include "pvagg/control.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "pvagg/errors.hpp"

namespace pvagg {

namespace {

Eigen::MatrixXd pinv(const Eigen::MatrixXd& m) {
    if (m.size() == 0) return Eigen::MatrixXd::Zero(m.cols(), m.rows());
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(m);
    cod.setThreshold(1e-12);
    return cod.pseudoInverse();
}

Eigen::Index rank_of(const Eigen::MatrixXd& m) {
    if (m.size() == 0) return 0;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
    qr.setThreshold(1e-10);
    return qr.rank();
}

Eigen::VectorXd scale_or_ones(const Eigen::VectorXd& s, Eigen::Index n) {
    if (s.size() == 0) return Eigen::VectorXd::Ones(n);
    if (s.size() != n) throw DomainError("scaling vector has the wrong length");
    if ((s.array() <= 0).any()) throw DomainError("scaling entries must be positive");
    return s;
}

}  // namespace

UioDesign design_uio(const StateSpace& sys, double filter_tau, const Eigen::VectorXd& state_scale) {
    sys.validate();
    if (!(filter_tau > 0)) throw DomainError("disturbance filter time constant must be positive");
    const Eigen::Index n = sys.states();
    const Eigen::VectorXd s = scale_or_ones(state_scale, n);

    UioDesign u;
    u.A = sys.A;
    u.B = sys.B;
    u.C = sys.C;
    u.E = sys.E;
    u.filter_tau = filter_tau;

    const Eigen::MatrixXd CE = sys.C * sys.E;
    if (rank_of(CE) != rank_of(sys.E))
        throw DomainError("unknown-input observer needs rank(CE) == rank(E)");
    u.CE_pinv = pinv(CE);
    u.H = sys.E * u.CE_pinv;
    u.T = Eigen::MatrixXd::Identity(n, n) - u.H * sys.C;

    // Dual Riccati on (TA, C) posed in scaled coordinates x = D xs.
    const Eigen::MatrixXd D = s.asDiagonal();
    const Eigen::MatrixXd Dinv = s.cwiseInverse().asDiagonal();
    const Eigen::MatrixXd TAs = Dinv * u.T * sys.A * D;
    const Eigen::MatrixXd Cs = sys.C * D;
    const Eigen::Index p = sys.outputs();
    u.dual_care = solve_care(TAs.transpose(), Cs.transpose(), Eigen::MatrixXd::Identity(n, n),
                             Eigen::MatrixXd::Identity(p, p));
    u.K1 = D * u.dual_care.P * Cs.transpose();
    u.F = u.T * sys.A - u.K1 * sys.C;
    u.K = u.K1 + u.F * u.H;
    if (max_real_eigenvalue(u.F) >= 0) throw NumericalError("observer matrix F is not Hurwitz");
    return u;
}

Eigen::VectorXd output_model_rate(const UioDesign& uio, const Eigen::VectorXd& x_hat, const Eigen::VectorXd& u) {
    return uio.C * (uio.A * x_hat + uio.B * u);
}

Eigen::VectorXd estimate_disturbance(const UioDesign& uio, const Eigen::VectorXd& x_hat,
                                     const Eigen::VectorXd& y_dot_filtered, const Eigen::VectorXd& u) {
    return uio.CE_pinv * (y_dot_filtered - output_model_rate(uio, x_hat, u));
}

StateSpace build_augmented(const StateSpace& combined, const StateSpace& reference) {
    combined.validate();
    reference.validate();
    if (combined.outputs() != 1 || reference.outputs() != 1)
        throw DomainError("tracking augmentation needs single-output models");
    const Eigen::Index n = combined.states();
    const Eigen::Index m = combined.inputs();
    const Eigen::Index q = combined.disturbances();
    StateSpace a;
    a.A = Eigen::MatrixXd::Zero(n + 2, n + 2);
    a.A.topLeftCorner(n, n) = combined.A;
    a.A.block(n, 0, 1, n) = combined.C * combined.A;
    a.A(n + 1, n) = 1.0;
    a.B = Eigen::MatrixXd::Zero(n + 2, m);
    a.B.topRows(n) = combined.B;
    a.B.row(n) = combined.C * combined.B;
    a.E = Eigen::MatrixXd::Zero(n + 2, q);
    a.E.topRows(n) = combined.E;
    if (q > 0) a.E.row(n) = combined.C * combined.E;
    a.C = Eigen::MatrixXd::Zero(1, n + 2);
    a.C(0, n) = 1.0;
    a.state_labels = combined.state_labels;
    a.state_labels.push_back("e");
    a.state_labels.push_back("int_e");
    a.input_labels = combined.input_labels;
    a.output_labels = {"e"};
    a.disturbance_labels = combined.disturbance_labels;
    return a;
}

ControllerScaling default_scaling(const StateSpace& combined, const SharedParams& shared, double s_base) {
    if (combined.states() != 6 || combined.inputs() != 2)
        throw DomainError("default scaling expects the 6-state, 2-input combined model");
    ControllerScaling s;
    s.states = Eigen::VectorXd(6);
    s.states << 1.0, 1.0, 1.0, shared.v_dc0, s_base, 2.0 * s_base / shared.v_sd;
    s.inputs = Eigen::VectorXd(2);
    s.inputs << s_base, 1.0;
    return s;
}

TrackingGain design_tracking_lqr(const StateSpace& combined, const TrackingWeights& w,
                                 const ControllerScaling& scaling) {
    combined.validate();
    if (!(w.state >= 0 && w.error > 0 && w.integral > 0 && w.power_input > 0 && w.voltage_input > 0))
        throw DomainError("tracking weights: Q must be PSD and R positive definite");
    const Eigen::Index n = combined.states();
    const Eigen::Index m = combined.inputs();
    if (m != 2) throw DomainError("tracking design expects two inputs");
    if (combined.outputs() != 1) throw DomainError("tracking design expects one output");

    Eigen::Index out_col = -1;
    for (Eigen::Index j = 0; j < n; ++j) {
        if (combined.C(0, j) != 0.0) {
            if (out_col >= 0) throw DomainError("tracking design needs an output that selects one state");
            out_col = j;
        }
    }
    if (out_col < 0) throw DomainError("output matrix is zero");

    const Eigen::VectorXd sx = scale_or_ones(scaling.states, n);
    const Eigen::VectorXd su = scale_or_ones(scaling.inputs, m);
    const Eigen::MatrixXd Dx = sx.asDiagonal();
    const Eigen::MatrixXd Dxi = sx.cwiseInverse().asDiagonal();
    const Eigen::MatrixXd Du = su.asDiagonal();

    const Eigen::MatrixXd As = Dxi * combined.A * Dx;
    const Eigen::MatrixXd Bs = Dxi * combined.B * Du;
    const Eigen::MatrixXd Cs = combined.C * Dx;

    // Controllable part: [x; int e] with e = C x (reference treated as exogenous).
    Eigen::MatrixXd Ar = Eigen::MatrixXd::Zero(n + 1, n + 1);
    Ar.topLeftCorner(n, n) = As;
    Ar.block(n, 0, 1, n) = Cs;
    Eigen::MatrixXd Br = Eigen::MatrixXd::Zero(n + 1, m);
    Br.topRows(n) = Bs;
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n + 1, n + 1);
    Q.topLeftCorner(n, n) = w.state * Eigen::MatrixXd::Identity(n, n) + w.error * Cs.transpose() * Cs;
    Q(n, n) = w.integral;
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(m, m);
    R(0, 0) = w.power_input;
    R(1, 1) = w.voltage_input;

    TrackingGain g;
    LqrResult lqr = lqr_gain(Ar, Br, Q, R);
    g.care = lqr.care;
    g.design_A = Ar;
    g.design_B = Br;
    g.design_K = lqr.K;

    // Back to engineering units, then move the output-state column onto e.
    Eigen::MatrixXd Kx = Du * lqr.K.leftCols(n) * Dxi;
    const Eigen::VectorXd Ki = Du * lqr.K.col(n);
    const Eigen::VectorXd Ke = Kx.col(out_col) / combined.C(0, out_col);
    Kx.col(out_col).setZero();

    g.K = Eigen::MatrixXd::Zero(m, n + 2);
    g.K.leftCols(n) = Kx;
    g.K.col(n) = Ke;
    g.K.col(n + 1) = Ki;
    return g;
}

double lut_block(double dp_ref_agg_w, const AggregateParams& agg, double panel_rating_w, const PanelLut& lut) {
    if (!(agg.rated_power_w > 0 && panel_rating_w > 0)) throw DomainError("ratings must be positive");
    const double per_panel = dp_ref_agg_w * panel_rating_w / agg.rated_power_w;
    return lut_inverse(lut, per_panel, agg.irradiance_pct);
}

std::vector<UnitCommand> invert_controls(const AggregateInputs& u_agg, std::size_t fleet_size) {
    if (fleet_size == 0) throw DomainError("fleet is empty");
    return std::vector<UnitCommand>(fleet_size, UnitCommand{u_agg.dv_pv, u_agg.dv_dc_ref});
}

TrackingController::TrackingController(const StateSpace& combined, const StateSpace& reference,
                                       const AggregateParams& agg, const SharedParams& shared, double s_base,
                                       const PanelLut& lut, const ControllerConfig& cfg)
    : combined_(combined), reference_(reference), agg_(agg), shared_(shared), lut_(lut), cfg_(cfg) {
    if (!(cfg.filter_tau > 0)) throw DomainError("filter_tau must be positive");
    if (combined.disturbances() != 1 || reference.disturbances() != 1)
        throw DomainError("controller expects a single load disturbance");
    augmented_ = build_augmented(combined, reference);
    const ControllerScaling sc = default_scaling(combined, shared, s_base);
    uio_ = design_uio(combined, cfg.filter_tau, sc.states);
    gain_ = design_tracking_lqr(combined, cfg.weights, sc);
    n_ = combined.states();
    nr_ = reference.states();
    kx_ = gain_.K.leftCols(n_);
    ke_ = gain_.K.col(n_);
    ki_ = gain_.K.col(n_ + 1);

    const double panels = agg.rated_power_w / shared.panel_rating_w;
    p_upper_ = panels * lut_.headroom_at(agg.irradiance_pct);
    p_lower_ = panels * lut_.floor_at(agg.irradiance_pct);
}

TrackingController::Output TrackingController::evaluate(std::span<const double> state, double y) const {
    if (state.size() != state_size()) throw DomainError("controller state has the wrong length");
    Eigen::Map<const Eigen::VectorXd> z(state.data(), n_);
    Eigen::Map<const Eigen::VectorXd> xr(state.data() + n_, nr_);
    const double ie = state[n_ + nr_];
    const double w = state[n_ + nr_ + 1];
    const double mf = state[n_ + nr_ + 2];

    Output o;
    const Eigen::VectorXd x_hat = z + uio_.H.col(0) * y;
    o.y_ref = (reference_.C * xr)(0);
    o.error = y - o.y_ref;
    const Eigen::VectorXd u = -(kx_ * x_hat + ke_ * o.error + ki_ * ie);
    o.raw_dp_ref_w = u(0);
    double dp = u(0);
    if (cfg_.saturate) {
        if (dp > p_upper_) {
            dp = p_upper_;
            o.saturated = true;
        } else if (dp < p_lower_) {
            dp = p_lower_;
            o.saturated = true;
        }
    }
    o.u.dp_ref_w = dp;
    o.u.dv_dc_ref_v = u(1);
    try {
        o.dv_pv_agg = lut_block(dp, agg_, shared_.panel_rating_w, lut_);
    } catch (const SaturationError& e) {
        o.dv_pv_agg = e.clamped();
        o.saturated = true;
    }
    o.d_hat = uio_.CE_pinv(0, 0) * ((y - w) / cfg_.filter_tau - mf);
    return o;
}

void TrackingController::derivative(std::span<const double> state, double y, const Output& out,
                                    std::span<double> dstate) const {
    if (state.size() != state_size() || dstate.size() != state_size())
        throw DomainError("controller state has the wrong length");
    Eigen::Map<const Eigen::VectorXd> z(state.data(), n_);
    Eigen::Map<const Eigen::VectorXd> xr(state.data() + n_, nr_);
    const double w = state[n_ + nr_ + 1];
    const double mf = state[n_ + nr_ + 2];
    Eigen::Vector2d u(out.u.dp_ref_w, out.u.dv_dc_ref_v);
    const Eigen::VectorXd x_hat = z + uio_.H.col(0) * y;

    Eigen::Map<Eigen::VectorXd> dz(dstate.data(), n_);
    Eigen::Map<Eigen::VectorXd> dxr(dstate.data() + n_, nr_);
    dz = uio_.F * z + uio_.T * (uio_.B * u) + uio_.K.col(0) * y;
    dxr = reference_.A * xr + reference_.E.col(0) * out.d_hat;
    dstate[n_ + nr_] = out.saturated ? 0.0 : out.error;
    dstate[n_ + nr_ + 1] = (y - w) / cfg_.filter_tau;
    const double m = output_model_rate(uio_, x_hat, u)(0);
    dstate[n_ + nr_ + 2] = (m - mf) / cfg_.filter_tau;
}

Eigen::MatrixXd TrackingController::closed_loop_matrix() const {
    const Eigen::Index n = n_, nr = nr_;
    const Eigen::Index N = 2 * n + nr + 3;
    const Eigen::Index iz = n, ir = 2 * n, ie = 2 * n + nr, iw = ie + 1, im = ie + 2;
    const Eigen::MatrixXd& A = combined_.A;
    const Eigen::MatrixXd& B = combined_.B;
    const Eigen::RowVectorXd C = combined_.C.row(0);
    const Eigen::VectorXd H = uio_.H.col(0);
    const double tf = cfg_.filter_tau;
    const double ce = uio_.CE_pinv(0, 0);

    // u = Lx x + Lz z + Lr xr + Li ie with x_hat = z + H C x, e = C x - Cr xr
    Eigen::MatrixXd Lx = -(kx_ * H * C + ke_ * C);
    Eigen::MatrixXd Lz = -kx_;
    Eigen::MatrixXd Lr = ke_ * reference_.C.row(0);
    Eigen::MatrixXd Li = -ki_;
    Eigen::MatrixXd U = Eigen::MatrixXd::Zero(B.cols(), N);
    U.leftCols(n) = Lx;
    U.middleCols(iz, n) = Lz;
    U.middleCols(ir, nr) = Lr;
    U.col(ie) = Li;

    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(N, N);
    M.topLeftCorner(n, n) = A;
    M.topRows(n) += B * U;
    M.block(iz, iz, n, n) += uio_.F;
    M.middleRows(iz, n) += uio_.T * B * U;
    M.block(iz, 0, n, n) += uio_.K.col(0) * C;
    // d_hat = ce ((C x - w)/tf - m)
    Eigen::RowVectorXd dhat = Eigen::RowVectorXd::Zero(N);
    dhat.head(n) = ce * C / tf;
    dhat(iw) = -ce / tf;
    dhat(im) = -ce;
    M.block(ir, ir, nr, nr) += reference_.A;
    M.middleRows(ir, nr) += reference_.E.col(0) * dhat;
    M.row(ie).head(n) += C;
    M.row(ie).segment(ir, nr) -= reference_.C.row(0);
    M.row(iw).head(n) += C / tf;
    M(iw, iw) -= 1.0 / tf;
    // m = C (A x_hat + B u)
    Eigen::RowVectorXd mrow = Eigen::RowVectorXd::Zero(N);
    const Eigen::RowVectorXd CA = C * A;
    mrow.head(n) = CA * H * C;
    mrow.segment(iz, n) = CA;
    mrow += C * B * U;
    M.row(im) += mrow / tf;
    M(im, im) -= 1.0 / tf;
    return M;
}

Eigen::MatrixXd TrackingController::closed_loop_disturbance() const {
    const Eigen::Index N = 2 * n_ + nr_ + 3;
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(N, 1);
    G.topRows(n_) = combined_.E;
    return G;
}

ControllerStep controller_derivative(const TrackingController& ctrl, std::span<const double> state, double y) {
    ControllerStep s;
    s.out = ctrl.evaluate(state, y);
    s.dstate = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ctrl.state_size()));
    ctrl.derivative(state, y, s.out, std::span<double>(s.dstate.data(), ctrl.state_size()));
    return s;
}

namespace {

void dump(std::ostream& os, const char* name, const Eigen::MatrixXd& m) {
    os << name << " (" << m.rows() << "x" << m.cols() << ")\n";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? "," : "") << std::setprecision(9) << m(i, j);
        os << '\n';
    }
    os << '\n';
}

void dump_eigs(std::ostream& os, const char* name, const Eigen::MatrixXd& m) {
    const Eigen::VectorXcd ev = eigenvalues(m);
    os << name << " eigenvalues (re,im)\n";
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        os << std::setprecision(9) << ev(i).real() << ',' << ev(i).imag() << '\n';
    os << '\n';
}

}  // namespace

void write_design_report(const TrackingController& ctrl, std::ostream& os) {
    const auto& c = ctrl.combined();
    const auto& u = ctrl.uio();
    os << "states:";
    for (const auto& l : c.state_labels) os << ' ' << l;
    os << "\naugmented states:";
    for (const auto& l : ctrl.augmented().state_labels) os << ' ' << l;
    os << "\ninputs:";
    for (const auto& l : c.input_labels) os << ' ' << l;
    os << "\n\n";
    const Eigen::MatrixXd ce = c.C * c.E;
    os << std::setprecision(9) << "CE = " << ce(0, 0) << "  (rank " << (ce.norm() > 0 ? 1 : 0) << ")\n";
    os << "tracking CARE residual = " << ctrl.gain().care.residual << " (" << ctrl.gain().care.iterations
       << " iterations)\n";
    os << "observer CARE residual = " << u.dual_care.residual << " (" << u.dual_care.iterations << " iterations)\n";
    os << "power reference limits W = [" << ctrl.power_lower_w() << ", " << ctrl.power_upper_w() << "]\n\n";
    dump(os, "K_lqr [x_hat | e | int_e]", ctrl.gain().K);
    dump(os, "H", u.H);
    dump(os, "T", u.T);
    dump(os, "F", u.F);
    dump(os, "K", u.K);
    dump_eigs(os, "observer F", u.F);
    const auto& g = ctrl.gain();
    dump_eigs(os, "design loop (scaled [x; int_e])", g.design_A - g.design_B * g.design_K);
    dump_eigs(os, "full linear closed loop", ctrl.closed_loop_matrix());
}

}  // namespace pvagg
