#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pvagg/control.hpp"
#include "pvagg/fleet.hpp"
#include "pvagg/grid.hpp"
#include "pvagg/integrate.hpp"
#include "pvagg/panel.hpp"

namespace pvagg {

/// Labeled columns on a uniform time grid.
class SimTrace {
  public:
    SimTrace() = default;
    explicit SimTrace(std::vector<std::string> labels);

    void append(double t, std::span<const double> row);
    /// Adds a full column; length must equal the number of rows.
    void add_column(std::string label, std::vector<double> values);

    const std::vector<double>& time() const { return t_; }
    const std::vector<std::string>& labels() const { return labels_; }
    const std::vector<double>& column(std::string_view label) const;
    bool has(std::string_view label) const;
    std::size_t rows() const { return t_.size(); }

    bool truncated = false;
    std::string diagnostic;

  private:
    std::vector<std::string> labels_;
    std::vector<double> t_;
    std::vector<std::vector<double>> cols_;
};

struct Metrics {
    double nadir_hz = 0.0;
    double rocof_hz_s = 0.0;       // largest |df/dt| over the window
    double settling_hz = 0.0;
    std::optional<double> tracking_error_pct;  // max |f - f_ref| / 60 Hz * 100
};

/// `freq_col` holds frequency in Hz. RoCoF is the largest |f(t + w) - f(t)| / w
/// for the window w; settling is the mean over the last 10% of the horizon.
Metrics compute_metrics(const SimTrace& trace, std::string_view freq_col,
                        std::optional<std::string_view> ref_col = std::nullopt, double rocof_window_s = 0.1);

// ---- aggregate-model validation --------------------------------------------

struct ValidationCase {
    std::vector<UnitCommand> commands;  // one per unit, applied at t_step
    double t_step = 1.5;
    double t_end = 5.0;
    double dt_benchmark = 1e-5;
    double dt_aggregate = 5e-5;
    double record_interval = 1e-3;
};

struct ValidationResult {
    SimTrace benchmark;   // dP_PV_a_W, dV_dc_a_V, dc_energy_J, net_energy_in_J
    SimTrace aggregate;   // dP_PV_a_W, dV_dc_a_V
    AggregateInputs applied;
};

ValidationResult run_validation(const Fleet& fleet, const SharedParams& shared, const PanelLut& lut,
                                const ValidationCase& vc);

struct TraceComparison {
    double steady_state_error = 0.0;  // |a(end) - b(end)| / max|b|
    double peak_error = 0.0;          // max|a - b| / max|b|
    double scale = 0.0;               // max|b|
};

/// `b` is the benchmark. Traces must share the time grid.
TraceComparison compare_columns(const SimTrace& a, const SimTrace& b, std::string_view label);

// ---- frequency event ---------------------------------------------------------

enum class PlantModel { benchmark, aggregate };

struct EventConfig {
    double load_step_pu = 0.086;
    double t_event = 1.0;
    double t_end = 40.0;
    double dt = 1e-5;
    double record_interval = 1e-3;
    PlantModel plant = PlantModel::benchmark;
};

/// Aggregates the fleet, builds the LFC and reference models and synthesizes
/// the tracking controller.
TrackingController design_event_controller(const LfcParams& grid, const Fleet& fleet, const SharedParams& shared,
                                           const PanelLut& lut, const ControllerConfig& cfg);

struct EventResult {
    SimTrace trace;
    // steady-state array-power deviation per unit at t_end, W (benchmark plant only)
    std::vector<double> unit_final_dp_w;
    IntegrationResult status;
};

/// Runs (i) the controlled system, (ii) the reference LFC driven by the true
/// disturbance and (iii) the uncontrolled LFC on one time grid.
EventResult run_frequency_event(const LfcParams& grid, const Fleet& fleet, const SharedParams& shared,
                                const PanelLut& lut, const TrackingController& ctrl, const EventConfig& ev);

/// Units sharing the most common rating, and units sharing the irradiance value
/// that spans the most distinct ratings. Indices into the fleet.
struct UnitGroups {
    std::vector<std::size_t> same_rating;
    std::vector<std::size_t> same_irradiance;
};

UnitGroups comparison_groups(const Fleet& fleet);

double pearson(std::span<const double> a, std::span<const double> b);

}  // namespace pvagg
