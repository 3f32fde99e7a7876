#pragma once

#include <optional>

#include "ringforge/material.hpp"

namespace ringforge {

/// Meander-ring layout. The outer radius is fixed at twice the inner radius.
struct RingGeometry {
  double r_in_um = 0.0;   // inner radius
  double w_nm = 0.0;      // trace width
  double p_nm = 0.0;      // meander pitch (width + spacing)
  double t_nm = 0.0;      // film thickness
  std::optional<double> explicit_length_um;  // overrides the length estimator

  double r_out_um() const { return 2.0 * r_in_um; }
  void validate() const;  // throws validation_error
};

/// Lumped-circuit prediction for one ring.
struct CircuitParams {
  double trace_length_um = 0.0;
  double squares = 0.0;
  double inductance_uH = 0.0;
  double capacitance_fF = 0.0;
  double f0_GHz = 0.0;
  double impedance_kOhm = 0.0;
};

/// Calibrated constants of the lumped model. The default capacitance slope
/// comes from regressing the reference device tables (sapphire substrate).
struct CalibrationConstants {
  double k_C_fF_per_um = 0.160;
  double length_model_tolerance = 0.05;

  void validate() const;
};

namespace ring {

/// Meander trace length estimate N * (r_in + pi*p/2) with N = floor(2*pi*r_in/p),
/// clamped to at least one meander. Accurate to about 5% against measured
/// layouts for geometries the pitch model represents; an explicit length
/// always takes precedence in predict().
double estimate_trace_length(double r_in_um, double p_nm);

/// Number of squares l/w.
double squares(double length_um, double w_nm);

/// Total kinetic inductance (l/w) * L_sq in uH. Geometric inductance is
/// neglected (kinetic fraction ~ 1).
double total_inductance(double length_um, double w_nm, double sheet_inductance_pH_sq);

/// Ring capacitance k_C * r_in in fF.
double capacitance(double r_in_um, double k_C_fF_per_um);

/// Fundamental mode frequency 1/(2*pi*sqrt((L/4)*C)) in GHz. The effective
/// mode inductance L/4 reproduces the reference tables; see README for the
/// circuit-model caveat.
double fundamental_frequency(double inductance_uH, double capacitance_fF);

/// Characteristic impedance 2*pi*f0*L in kOhm.
double impedance(double f0_GHz, double inductance_uH);

/// Inverse of the mode relation: C = 4 / ((2*pi*f0)^2 * L), in fF.
double extract_capacitance_from_measurement(double f0_GHz, double inductance_uH);

/// Full forward model.
CircuitParams predict(const RingGeometry& geometry, const MaterialSpec& material,
                      const CalibrationConstants& constants = {});

/// Same forward model with the sheet inductance supplied directly.
CircuitParams predict_with_sheet_inductance(const RingGeometry& geometry,
                                            double sheet_inductance_pH_sq,
                                            const CalibrationConstants& constants = {});

struct ScalingPredictions {
  double z_relative = 0.0;   // sqrt(r_in * L_sq / (p * w)), SI combination
  double f0_relative = 0.0;  // sqrt(p * w / (r_in^3 * L_sq)), SI combination
};

/// The two scaling combinations for comparative plots.
ScalingPredictions scaling_predictions(const RingGeometry& geometry,
                                       double sheet_inductance_pH_sq);

}  // namespace ring
}  // namespace ringforge
