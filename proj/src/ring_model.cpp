#include "ringforge/ring_model.hpp"

#include <cmath>

#include "ringforge/errors.hpp"
#include "ringforge/units.hpp"

namespace ringforge {

void RingGeometry::validate() const {
  if (!(r_in_um > 0.0))
    throw validation_error("geometry: inner radius must be positive");
  if (!(w_nm > 0.0))
    throw validation_error("geometry: trace width must be positive");
  if (!(w_nm < p_nm))
    throw validation_error("geometry: trace width must be smaller than pitch");
  if (!(t_nm > 0.0))
    throw validation_error("geometry: thickness must be positive");
  if (explicit_length_um && !(*explicit_length_um > 0.0))
    throw validation_error("geometry: explicit length must be positive");
}

void CalibrationConstants::validate() const {
  if (!(k_C_fF_per_um > 0.0))
    throw validation_error("calibration constants: k_C must be positive");
}

namespace ring {

double estimate_trace_length(double r_in_um, double p_nm) {
  if (!(r_in_um > 0.0) || !(p_nm > 0.0))
    throw validation_error("estimate_trace_length: inputs must be positive");
  const double p_um = p_nm * 1e-3;
  const double meanders = std::max(1.0, std::floor(2.0 * units::pi * r_in_um / p_um));
  return meanders * (r_in_um + units::pi * p_um / 2.0);
}

double squares(double length_um, double w_nm) {
  if (!(w_nm > 0.0))
    throw validation_error("squares: width must be positive");
  return (length_um * units::um_to_m) / (w_nm * units::nm_to_m);
}

double total_inductance(double length_um, double w_nm, double sheet_inductance_pH_sq) {
  return squares(length_um, w_nm) * sheet_inductance_pH_sq * units::pH_to_H / units::uH_to_H;
}

double capacitance(double r_in_um, double k_C_fF_per_um) {
  return k_C_fF_per_um * r_in_um;
}

double fundamental_frequency(double inductance_uH, double capacitance_fF) {
  if (!(inductance_uH > 0.0) || !(capacitance_fF > 0.0))
    throw validation_error("fundamental_frequency: L and C must be positive");
  const double l_H = inductance_uH * units::uH_to_H;
  const double c_F = capacitance_fF * units::fF_to_F;
  const double f_hz = 1.0 / (2.0 * units::pi * std::sqrt(l_H / 4.0 * c_F));
  return f_hz / units::GHz_to_Hz;
}

double impedance(double f0_GHz, double inductance_uH) {
  return 2.0 * units::pi * (f0_GHz * units::GHz_to_Hz) * (inductance_uH * units::uH_to_H) /
         units::kohm_to_ohm;
}

double extract_capacitance_from_measurement(double f0_GHz, double inductance_uH) {
  if (!(f0_GHz > 0.0) || !(inductance_uH > 0.0))
    throw validation_error("extract_capacitance: inputs must be positive");
  const double omega = 2.0 * units::pi * f0_GHz * units::GHz_to_Hz;
  return 4.0 / (omega * omega * inductance_uH * units::uH_to_H) / units::fF_to_F;
}

CircuitParams predict(const RingGeometry& geometry, const MaterialSpec& material,
                      const CalibrationConstants& constants) {
  return predict_with_sheet_inductance(geometry, material::sheet_inductance(material),
                                       constants);
}

CircuitParams predict_with_sheet_inductance(const RingGeometry& geometry,
                                            double sheet_inductance_pH_sq,
                                            const CalibrationConstants& constants) {
  geometry.validate();
  constants.validate();
  if (!(sheet_inductance_pH_sq >= 0.0))
    throw validation_error("predict: sheet inductance must be non-negative");

  CircuitParams out;
  out.trace_length_um = geometry.explicit_length_um
                            ? *geometry.explicit_length_um
                            : estimate_trace_length(geometry.r_in_um, geometry.p_nm);
  out.squares = squares(out.trace_length_um, geometry.w_nm);
  out.inductance_uH =
      total_inductance(out.trace_length_um, geometry.w_nm, sheet_inductance_pH_sq);
  out.capacitance_fF = capacitance(geometry.r_in_um, constants.k_C_fF_per_um);
  out.f0_GHz = fundamental_frequency(out.inductance_uH, out.capacitance_fF);
  out.impedance_kOhm = impedance(out.f0_GHz, out.inductance_uH);
  return out;
}

ScalingPredictions scaling_predictions(const RingGeometry& geometry,
                                       double sheet_inductance_pH_sq) {
  geometry.validate();
  if (!(sheet_inductance_pH_sq > 0.0))
    throw validation_error("scaling_predictions: sheet inductance must be positive");
  const double r = geometry.r_in_um * units::um_to_m;
  const double w = geometry.w_nm * units::nm_to_m;
  const double p = geometry.p_nm * units::nm_to_m;
  const double lsq = sheet_inductance_pH_sq * units::pH_to_H;
  ScalingPredictions s;
  s.z_relative = std::sqrt(r * lsq / (p * w));
  s.f0_relative = std::sqrt(p * w / (r * r * r * lsq));
  return s;
}

}  // namespace ring
}  // namespace ringforge
