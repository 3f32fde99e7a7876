#include "ringforge/material.hpp"

#include <cmath>

#include "ringforge/errors.hpp"
#include "ringforge/units.hpp"

namespace ringforge {

void MaterialSpec::validate() const {
  if (!(resistivity_uohm_cm > 0.0))
    throw validation_error("material: resistivity must be positive");
  if (!(thickness_nm > 0.0))
    throw validation_error("material: thickness must be positive");
  if (!(critical_temperature_K > 0.0))
    throw validation_error("material: critical temperature must be positive");
  if (gap_ratio_override && !(*gap_ratio_override > 0.0))
    throw validation_error("material: gap ratio override must be positive");
}

namespace material {

namespace {

double effective_gap_ratio(const MaterialSpec& m) {
  return m.gap_ratio_override ? *m.gap_ratio_override : gap_ratio(m.resistivity_uohm_cm);
}

// L_sq[H] = hbar * R_n / (C * kB * Tc * pi)
double sheet_inductance_H(double sheet_resistance_ohm, double ratio, double tc_K) {
  return units::hbar_J_s * sheet_resistance_ohm /
         (ratio * units::boltzmann_J_per_K * tc_K * units::pi);
}

}  // namespace

double sheet_resistance(const MaterialSpec& m) {
  m.validate();
  const double rho_ohm_m = m.resistivity_uohm_cm * units::uohm_cm_to_ohm_m;
  const double t_m = m.thickness_nm * units::nm_to_m;
  return rho_ohm_m / t_m;
}

double gap_ratio(double resistivity_uohm_cm) {
  if (!(resistivity_uohm_cm > 0.0))
    throw validation_error("gap_ratio: resistivity must be positive");
  return resistivity_uohm_cm <= gap_ratio_boundary_uohm_cm ? gap_ratio_low : gap_ratio_high;
}

double sheet_inductance(const MaterialSpec& m) {
  const double rn = sheet_resistance(m);
  return sheet_inductance_H(rn, effective_gap_ratio(m), m.critical_temperature_K) /
         units::pH_to_H;
}

SheetParams sheet_params(const MaterialSpec& m) {
  SheetParams p;
  p.sheet_resistance_ohm_sq = sheet_resistance(m);
  p.gap_ratio = effective_gap_ratio(m);
  p.sheet_inductance_pH_sq =
      sheet_inductance_H(p.sheet_resistance_ohm_sq, p.gap_ratio, m.critical_temperature_K) /
      units::pH_to_H;
  return p;
}

ResistivityInversion resistivity_from_sheet_inductance(double sheet_inductance_pH_sq,
                                                       double thickness_nm,
                                                       double critical_temperature_K) {
  if (!(sheet_inductance_pH_sq > 0.0) || !(thickness_nm > 0.0) ||
      !(critical_temperature_K > 0.0))
    throw validation_error("resistivity_from_sheet_inductance: inputs must be positive");

  const double lsq_H = sheet_inductance_pH_sq * units::pH_to_H;
  const auto rho_for = [&](double ratio) {
    const double rn = lsq_H * ratio * units::boltzmann_J_per_K * critical_temperature_K *
                      units::pi / units::hbar_J_s;
    return rn * thickness_nm * units::nm_to_m / units::uohm_cm_to_ohm_m;
  };

  ResistivityInversion inv;
  inv.candidate_low = rho_for(gap_ratio_low);
  inv.candidate_high = rho_for(gap_ratio_high);
  const bool low_ok = inv.candidate_low <= gap_ratio_boundary_uohm_cm;
  const bool high_ok = inv.candidate_high > gap_ratio_boundary_uohm_cm;

  if (!low_ok && !high_ok)
    throw ambiguity_error("resistivity_from_sheet_inductance: no self-consistent branch",
                          {inv.candidate_low, inv.candidate_high});
  if (low_ok) {
    inv.resistivity_uohm_cm = inv.candidate_low;
    inv.gap_ratio = gap_ratio_low;
    inv.ambiguous = high_ok;
  } else {
    inv.resistivity_uohm_cm = inv.candidate_high;
    inv.gap_ratio = gap_ratio_high;
  }
  return inv;
}

SitReport check_sit(double resistivity_uohm_cm) {
  if (!(resistivity_uohm_cm > 0.0))
    throw validation_error("check_sit: resistivity must be positive");
  SitReport report;
  report.resistivity_uohm_cm = resistivity_uohm_cm;
  if (resistivity_uohm_cm < 10000.0) {
    report.status = SitStatus::Ok;
    report.message = "below superconductor-insulator transition";
  } else if (resistivity_uohm_cm <= 20000.0) {
    report.status = SitStatus::Warning;
    report.message = "near superconductor-insulator transition (~10 mOhm*cm)";
  } else {
    report.status = SitStatus::Reject;
    report.message = "above superconductor-insulator transition";
  }
  return report;
}

MaterialSpec material_for_sheet_inductance(double sheet_inductance_pH_sq, double thickness_nm,
                                           double critical_temperature_K) {
  const auto inv = resistivity_from_sheet_inductance(sheet_inductance_pH_sq, thickness_nm,
                                                     critical_temperature_K);
  MaterialSpec m;
  m.resistivity_uohm_cm = inv.resistivity_uohm_cm;
  m.thickness_nm = thickness_nm;
  m.critical_temperature_K = critical_temperature_K;
  // Pin the branch so the round trip is exact even inside the crossover window.
  m.gap_ratio_override = inv.gap_ratio;
  return m;
}

}  // namespace material
}  // namespace ringforge
