#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ringforge/material.hpp"
#include "ringforge/ring_model.hpp"

namespace ringforge {

/// Lithographic, material and band constraints for the design search.
struct DesignConstraints {
  double f_min_GHz = 4.0;
  double f_max_GHz = 8.0;
  double w_min_nm = 150.0;
  double p_min_nm = 200.0;
  double t_min_nm = 20.0;
  double resistivity_max_uohm_cm = 10000.0;
  std::optional<double> sheet_inductance_max_pH;
  double r_in_min_um = 0.5;
  double r_in_max_um = 50.0;
  bool suspended = false;

  void validate() const;
};

struct ConstraintViolation {
  std::string constraint;
  double margin = 0.0;  // positive = amount by which the constraint is missed
  std::string message;
};

struct DesignCandidate {
  std::string label;
  RingGeometry geometry;
  MaterialSpec material;
  double sheet_inductance_pH = 0.0;
  CircuitParams predicted;
  std::vector<ConstraintViolation> violations;
  std::optional<double> suspended_impedance_kOhm;

  bool feasible() const { return violations.empty(); }
};

namespace design {

/// Band tolerance for candidate frequencies: f0 may sit within the band
/// widened by this relative amount on each edge.
inline constexpr double band_tolerance = 1e-3;

/// Every violated constraint with its margin; empty means feasible.
std::vector<ConstraintViolation> feasibility_check(const DesignCandidate& candidate,
                                                   const DesignConstraints& constraints);

struct InfeasibleMaterial {
  MaterialSpec material;
  std::string reason;
};

struct OptimizeResult {
  std::vector<DesignCandidate> candidates;  // feasible, sorted by impedance
  std::vector<InfeasibleMaterial> infeasible;
};

/// Maximum-impedance design per material: pitch and width at their minimum,
/// inner radius solved so the fundamental sits at the low band edge (the
/// impedance optimum, since Z*f0 ~ 1/r_in with f0 decreasing in r_in).
/// The returned list is sorted by predicted impedance, descending; ties
/// break to higher f0, then smaller radius.
OptimizeResult optimize(const DesignConstraints& constraints, double k_C_fF_per_um,
                        const std::vector<MaterialSpec>& materials);

struct GridOptions {
  int pitch_steps = 4;
  int width_steps = 4;
  int radius_steps = 4000;
};

/// Verification mode: coarse sweep over (p, w, r_in) picking the feasible
/// in-band candidate with maximal impedance. Must agree with optimize()
/// within 1% for sane grids.
std::optional<DesignCandidate> grid_search(const DesignConstraints& constraints,
                                           double k_C_fF_per_um, const MaterialSpec& material,
                                           const GridOptions& options = {});

/// Substrate-released impedance annotation: 3x the on-substrate value.
/// Reporting only; never fed back into the frequency model.
double suspended_annotation(double impedance_kOhm);

}  // namespace design
}  // namespace ringforge
