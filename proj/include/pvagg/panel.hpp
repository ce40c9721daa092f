#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace pvagg {

// Irradiance S is a percentage of 1000 W/m^2. Photocurrent scales as S/100.

struct PanelParams {
    double photocurrent_a = 0.0;        // at S = 100
    double saturation_current_a = 0.0;
    double ideality = 1.3;
    double series_resistance_ohm = 0.5;
    double shunt_resistance_ohm = 1000.0;
    int series_cells = 768;
    double rated_power_w = 5695.0;      // P_pa
    double reference_temperature_k = 300.0;

    void validate() const;
};

/// Shape parameters that calibration holds fixed. Photocurrent and saturation
/// current are solved for so that the panel hits `rated_power_w` at S = 100 with
/// the requested open-circuit voltage.
struct PanelDesign {
    double ideality = 1.3;
    double series_resistance_ohm = 0.5;
    double shunt_resistance_ohm = 1000.0;
    int series_cells = 768;
    double open_circuit_voltage_v = 480.0;
    double rated_power_w = 5695.0;
    double temperature_k = 300.0;
};

PanelParams calibrate_panel(const PanelDesign& design);

/// Terminal current of the single-diode model. Throws NumericalError if the
/// implicit solve does not converge.
double panel_current(const PanelParams& p, double v, double s_pct, double t_k);

inline double panel_power(const PanelParams& p, double v, double s_pct, double t_k) {
    return v * panel_current(p, v, s_pct, t_k);
}

double open_circuit_voltage(const PanelParams& p, double s_pct, double t_k);

struct MppPoint {
    double v_mpp;
    double p_mpp;
};

MppPoint find_mpp(const PanelParams& p, double s_pct, double t_k);

/// Operating voltage on the high-voltage side of the MPP where the panel
/// delivers `frac` of its maximum power.
double deload_point(const PanelParams& p, double s_pct, double t_k, double frac);

/// Gridded power-deviation map g(dV, S) around the de-loaded operating point,
/// per panel. Values below the MPP voltage are clamped to the branch boundary.
struct PanelLut {
    std::vector<double> dv_grid;   // volts, ascending
    std::vector<double> s_grid;    // percent, ascending
    std::vector<double> table;     // row-major [dv][s], watts
    std::vector<unsigned char> clamped;  // same layout; 1 where v_op + dv < v_mpp
    std::vector<double> v_op;      // per S
    std::vector<double> v_mpp;     // per S
    std::vector<double> p_mpp;     // per S
    std::vector<double> headroom;  // per S, column maximum of the table
    double temperature_k = 300.0;
    double deload_fraction = 0.85;

    std::size_t rows() const { return dv_grid.size(); }
    std::size_t cols() const { return s_grid.size(); }
    double at(std::size_t i, std::size_t j) const { return table[i * s_grid.size() + j]; }

    /// Per-S quantities, linearly interpolated between grid columns.
    double p_mpp_at(double s_pct) const;
    double branch_limit_at(double s_pct) const;  // v_mpp - v_op, negative
    double headroom_at(double s_pct) const;      // largest deliverable dp
    double floor_at(double s_pct) const;         // g at the top of the dv grid

    bool in_hull(double dv, double s_pct) const;
};

std::vector<double> uniform_grid(double lo, double hi, double step);

/// Recomputes the per-S headroom column maxima after the table is filled.
void finalize_lut(PanelLut& lut);

PanelLut build_lut(const PanelParams& p, std::vector<double> dv_grid, std::vector<double> s_grid,
                   double t_k, double frac);

double lut_forward(const PanelLut& lut, double dv, double s_pct);

/// dV such that lut_forward(dV, S) == dp. Throws SaturationError (carrying the
/// clamped dV) when dp lies outside [floor_at(S), headroom_at(S)].
double lut_inverse(const PanelLut& lut, double dp, double s_pct);

// CSV: header "dv_V,<s0>,<s1>,...", then one row per dV. %.9g formatting.
void write_lut_csv(const PanelLut& lut, std::ostream& os);
// Per-S metadata (v_op, v_mpp, p_mpp, t, frac) as JSON, paired with the CSV.
void write_lut_meta(const PanelLut& lut, std::ostream& os);
PanelLut read_lut(std::istream& csv, std::istream& meta);

}  // namespace pvagg
