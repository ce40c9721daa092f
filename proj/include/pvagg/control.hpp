#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pvagg/care.hpp"
#include "pvagg/fleet.hpp"
#include "pvagg/panel.hpp"
#include "pvagg/state_space.hpp"

namespace pvagg {

/// Full-order unknown-input observer  z' = F z + T B u + K y,  x_hat = z + H y.
struct UioDesign {
    Eigen::MatrixXd H;
    Eigen::MatrixXd T;
    Eigen::MatrixXd F;
    Eigen::MatrixXd K;
    Eigen::MatrixXd K1;
    // plant the observer was designed for
    Eigen::MatrixXd A;
    Eigen::MatrixXd B;
    Eigen::MatrixXd C;
    Eigen::MatrixXd E;
    Eigen::MatrixXd CE_pinv;
    double filter_tau = 0.005;  // disturbance-estimate filter, s
    CareSolution dual_care;
};

/// `state_scale` (optional, one entry per state) sets the coordinates in which the
/// identity-weighted dual Riccati equation is posed.
UioDesign design_uio(const StateSpace& sys, double filter_tau = 0.005,
                     const Eigen::VectorXd& state_scale = Eigen::VectorXd());

/// C (A x_hat + B u): the output rate the model predicts without disturbance.
Eigen::VectorXd output_model_rate(const UioDesign& uio, const Eigen::VectorXd& x_hat, const Eigen::VectorXd& u);

/// pinv(CE) (y_dot_f - C (A x_hat + B u)).
Eigen::VectorXd estimate_disturbance(const UioDesign& uio, const Eigen::VectorXd& x_hat,
                                     const Eigen::VectorXd& y_dot_filtered, const Eigen::VectorXd& u);

/// Augmented tracking model: states [x_hat; e; int e], e = y - y_ref with the
/// reference exogenous. The combination e - C x_hat is invariant (uncontrollable).
StateSpace build_augmented(const StateSpace& combined, const StateSpace& reference);

struct TrackingWeights {
    // All weights act on per-unit-scaled states and inputs (see ControllerScaling).
    double state = 1e-2;
    double error = 1e5;
    double integral = 1e6;
    double power_input = 1e-4;
    double voltage_input = 1e-2;
};

/// Diagonal scales from engineering units to the design coordinates.
struct ControllerScaling {
    Eigen::VectorXd states;
    Eigen::VectorXd inputs;
};

ControllerScaling default_scaling(const StateSpace& combined, const SharedParams& shared, double s_base);

struct TrackingGain {
    Eigen::MatrixXd K;        // m x (n + 2), columns [x_hat | e | int e]
    Eigen::MatrixXd design_A; // reduced (n + 1) closed-loop design model, scaled
    Eigen::MatrixXd design_B;
    Eigen::MatrixXd design_K;
    CareSolution care;
};

/// LQR on the controllable part of the augmented model. The gain on the measured
/// output state is moved onto the error column.
TrackingGain design_tracking_lqr(const StateSpace& combined, const TrackingWeights& w,
                                 const ControllerScaling& scaling);

struct ControlSignal {
    double dp_ref_w = 0.0;   // aggregate PV power reference deviation, W
    double dv_dc_ref_v = 0.0;
};

/// Aggregate power command (W) to aggregate array-voltage deviation through the
/// inverse table at aggregate irradiance. Throws SaturationError past the headroom.
double lut_block(double dp_ref_agg_w, const AggregateParams& agg, double panel_rating_w, const PanelLut& lut);

/// Every unit receives the aggregate command unchanged.
std::vector<UnitCommand> invert_controls(const AggregateInputs& u_agg, std::size_t fleet_size);

struct ControllerConfig {
    double h_ref = 6.2365;
    double r_ref = 0.0766;
    double filter_tau = 0.005;
    TrackingWeights weights;
    bool saturate = true;
};

class TrackingController {
  public:
    TrackingController(const StateSpace& combined, const StateSpace& reference, const AggregateParams& agg,
                       const SharedParams& shared, double s_base, const PanelLut& lut, const ControllerConfig& cfg);

    // internal state: z (n) | reference (nr) | int e | y low-pass | model-rate low-pass
    std::size_t state_size() const { return n_ + nr_ + 3; }

    struct Output {
        ControlSignal u;
        double dv_pv_agg = 0.0;
        double raw_dp_ref_w = 0.0;
        bool saturated = false;
        double error = 0.0;
        double y_ref = 0.0;
        double d_hat = 0.0;
    };

    /// Control signal for measured output y; ΔP reference clamped to the headroom.
    Output evaluate(std::span<const double> state, double y) const;
    void derivative(std::span<const double> state, double y, const Output& out, std::span<double> dstate) const;

    const UioDesign& uio() const { return uio_; }
    const TrackingGain& gain() const { return gain_; }
    const StateSpace& augmented() const { return augmented_; }
    const StateSpace& combined() const { return combined_; }
    const StateSpace& reference() const { return reference_; }
    const AggregateParams& aggregate() const { return agg_; }
    double power_upper_w() const { return p_upper_; }
    double power_lower_w() const { return p_lower_; }

    /// Linear closed loop with the combined plant, no saturation. States
    /// [x; z; x_ref; int e; y_lp; m_lp], input d.
    Eigen::MatrixXd closed_loop_matrix() const;
    Eigen::MatrixXd closed_loop_disturbance() const;

  private:
    StateSpace combined_;
    StateSpace reference_;
    StateSpace augmented_;
    AggregateParams agg_;
    SharedParams shared_;
    PanelLut lut_;
    ControllerConfig cfg_;
    UioDesign uio_;
    TrackingGain gain_;
    Eigen::MatrixXd kx_;
    Eigen::VectorXd ke_;
    Eigen::VectorXd ki_;
    Eigen::Index n_ = 0;
    Eigen::Index nr_ = 0;
    double p_upper_ = 0.0;
    double p_lower_ = 0.0;
};

struct ControllerStep {
    Eigen::VectorXd dstate;
    TrackingController::Output out;
};

ControllerStep controller_derivative(const TrackingController& ctrl, std::span<const double> state, double y);

/// Plain-text dump: gains, observer matrices, eigenvalues, Riccati residuals.
void write_design_report(const TrackingController& ctrl, std::ostream& os);

}  // namespace pvagg
