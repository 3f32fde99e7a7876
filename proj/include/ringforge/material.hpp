#pragma once

#include <optional>
#include <string>

namespace ringforge {

/// Granular-aluminum film description. Interface units follow the device
/// tables: resistivity in uOhm*cm, thickness in nm, critical temperature in K.
struct MaterialSpec {
  double resistivity_uohm_cm = 0.0;
  double thickness_nm = 0.0;
  double critical_temperature_K = 2.2;
  std::optional<double> gap_ratio_override;

  void validate() const;  // throws validation_error
};

/// Derived per-square film quantities.
struct SheetParams {
  double sheet_resistance_ohm_sq = 0.0;
  double sheet_inductance_pH_sq = 0.0;
  double gap_ratio = 0.0;
};

namespace material {

/// Resistivity boundary between the two gap-ratio plateaus, uOhm*cm.
/// The low plateau applies at the boundary (inclusive below).
inline constexpr double gap_ratio_boundary_uohm_cm = 2000.0;
inline constexpr double gap_ratio_low = 1.76;
inline constexpr double gap_ratio_high = 2.1;

/// Normal-state sheet resistance R_n = rho / t, in Ohm/sq.
double sheet_resistance(const MaterialSpec& m);

/// Gap-to-Tc ratio: 1.76 for rho <= 2000 uOhm*cm, 2.1 above.
double gap_ratio(double resistivity_uohm_cm);

/// Kinetic sheet inductance L_sq = hbar * R_n / (C * kB * Tc * pi), pH/sq.
double sheet_inductance(const MaterialSpec& m);

/// All sheet quantities at once.
SheetParams sheet_params(const MaterialSpec& m);

struct ResistivityInversion {
  double resistivity_uohm_cm = 0.0;
  double gap_ratio = 0.0;
  bool ambiguous = false;          // both branch candidates are self-consistent
  double candidate_low = 0.0;      // gap ratio 1.76 branch
  double candidate_high = 0.0;     // gap ratio 2.1 branch
};

/// Inverts sheet_inductance for resistivity. Both gap-ratio branches are
/// evaluated; a candidate is kept when its resistivity falls on the same side
/// of the 2000 uOhm*cm boundary as its branch. If both candidates are
/// self-consistent the low branch is returned with `ambiguous` set; if
/// neither is, an ambiguity_error carrying both candidates is thrown.
ResistivityInversion resistivity_from_sheet_inductance(double sheet_inductance_pH_sq,
                                                       double thickness_nm,
                                                       double critical_temperature_K = 2.2);

enum class SitStatus { Ok, Warning, Reject };

struct SitReport {
  SitStatus status = SitStatus::Ok;
  double resistivity_uohm_cm = 0.0;
  std::string message;
};

/// Validity of a resistivity against the superconductor-insulator transition:
/// Ok below 10000 uOhm*cm, Warning in [10000, 20000], Reject above.
SitReport check_sit(double resistivity_uohm_cm);

/// Convenience: MaterialSpec whose sheet inductance equals the given value.
MaterialSpec material_for_sheet_inductance(double sheet_inductance_pH_sq, double thickness_nm,
                                           double critical_temperature_K = 2.2);

}  // namespace material
}  // namespace ringforge
