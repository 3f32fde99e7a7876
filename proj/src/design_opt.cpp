#include "ringforge/design_opt.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ringforge/errors.hpp"
#include "ringforge/levmar.hpp"
#include "ringforge/units.hpp"

namespace ringforge {

void DesignConstraints::validate() const {
  if (!(f_min_GHz > 0.0) || !(f_max_GHz > 0.0) || !(f_min_GHz <= f_max_GHz))
    throw validation_error("constraints: need 0 < f_min <= f_max");
  if (!(w_min_nm > 0.0) || !(p_min_nm > 0.0) || !(t_min_nm > 0.0))
    throw validation_error("constraints: lithographic minima must be positive");
  if (!(w_min_nm <= p_min_nm))
    throw validation_error("constraints: w_min must not exceed p_min");
  if (!(resistivity_max_uohm_cm > 0.0))
    throw validation_error("constraints: resistivity limit must be positive");
  if (!(r_in_min_um > 0.0) || !(r_in_min_um < r_in_max_um))
    throw validation_error("constraints: need 0 < r_in_min < r_in_max");
  if (sheet_inductance_max_pH && !(*sheet_inductance_max_pH > 0.0))
    throw validation_error("constraints: sheet inductance limit must be positive");
}

namespace design {

namespace {

std::string material_label(const MaterialSpec& m) {
  std::ostringstream os;
  os << "rho=" << m.resistivity_uohm_cm << "uOhm.cm,t=" << m.thickness_nm << "nm";
  return os.str();
}

DesignCandidate make_candidate(const RingGeometry& geometry, const MaterialSpec& material,
                               double k_C, const DesignConstraints& constraints) {
  DesignCandidate cand;
  cand.geometry = geometry;
  cand.material = material;
  cand.label = material_label(material);
  cand.sheet_inductance_pH = material::sheet_inductance(material);
  CalibrationConstants cc;
  cc.k_C_fF_per_um = k_C;
  cand.predicted = ring::predict(geometry, material, cc);
  cand.violations = feasibility_check(cand, constraints);
  if (constraints.suspended && cand.predicted.impedance_kOhm > 0.0)
    cand.suspended_impedance_kOhm = suspended_annotation(cand.predicted.impedance_kOhm);
  return cand;
}

}  // namespace

std::vector<ConstraintViolation> feasibility_check(const DesignCandidate& candidate,
                                                   const DesignConstraints& constraints) {
  constraints.validate();
  std::vector<ConstraintViolation> violations;
  const auto add = [&](const std::string& name, double margin, const std::string& msg) {
    violations.push_back({name, margin, msg});
  };

  const auto& g = candidate.geometry;
  if (g.w_nm < constraints.w_min_nm)
    add("w_min", constraints.w_min_nm - g.w_nm, "trace width below stability bound");
  if (g.p_nm < constraints.p_min_nm)
    add("p_min", constraints.p_min_nm - g.p_nm, "pitch below lithographic bound");
  if (g.t_nm < constraints.t_min_nm)
    add("t_min", constraints.t_min_nm - g.t_nm, "film thinner than stability bound");
  if (g.r_in_um < constraints.r_in_min_um)
    add("r_in_min", constraints.r_in_min_um - g.r_in_um, "radius below search range");
  if (g.r_in_um > constraints.r_in_max_um)
    add("r_in_max", g.r_in_um - constraints.r_in_max_um, "radius above search range");

  const double rho = candidate.material.resistivity_uohm_cm;
  if (rho > constraints.resistivity_max_uohm_cm)
    add("resistivity_max", rho - constraints.resistivity_max_uohm_cm,
        "resistivity beyond configured limit");
  if (material::check_sit(rho).status == material::SitStatus::Reject)
    add("sit", rho - 20000.0, "film beyond the superconductor-insulator transition");
  if (constraints.sheet_inductance_max_pH &&
      candidate.sheet_inductance_pH > *constraints.sheet_inductance_max_pH)
    add("sheet_inductance_max",
        candidate.sheet_inductance_pH - *constraints.sheet_inductance_max_pH,
        "sheet inductance beyond configured limit");

  const double f0 = candidate.predicted.f0_GHz;
  const double lo = constraints.f_min_GHz * (1.0 - band_tolerance);
  const double hi = constraints.f_max_GHz * (1.0 + band_tolerance);
  if (f0 < lo) add("band_low", lo - f0, "fundamental below the target band");
  if (f0 > hi) add("band_high", f0 - hi, "fundamental above the target band");

  return violations;
}

double suspended_annotation(double impedance_kOhm) {
  if (!(impedance_kOhm > 0.0))
    throw validation_error("suspended_annotation: impedance must be positive");
  return 3.0 * impedance_kOhm;
}

namespace {

// f0 of the floored-N forward model as a function of r_in; non-increasing in
// r_in (decreasing within a meander-count plateau, dropping at each plateau
// boundary).
double f0_at(double r_in_um, double w_nm, double p_nm, double t_nm, double lsq_pH,
             double k_C) {
  RingGeometry g{r_in_um, w_nm, p_nm, t_nm, std::nullopt};
  CalibrationConstants cc;
  cc.k_C_fF_per_um = k_C;
  return ring::predict_with_sheet_inductance(g, lsq_pH, cc).f0_GHz;
}

// Exact radius for f0 == f_target within the plateau of meander count N:
// (N (r + pi p/2) / w) * Lsq * kC * r = (1/(pi f))^2 is quadratic in r.
std::optional<double> plateau_solve(double n_meanders, double f_target_GHz, double w_nm,
                                    double p_nm, double lsq_pH, double k_C) {
  const double w = w_nm * units::nm_to_m;
  const double p = p_nm * units::nm_to_m;
  const double lsq = lsq_pH * units::pH_to_H;
  const double kc = k_C * units::fF_to_F / units::um_to_m;  // F/m
  const double f = f_target_GHz * units::GHz_to_Hz;
  const double target = w / (units::pi * units::pi * f * f * lsq * kc * n_meanders);
  const double half_turn = units::pi * p / 2.0;
  const double disc = half_turn * half_turn + 4.0 * target;
  const double r = (-half_turn + std::sqrt(disc)) / 2.0;  // meters
  const double r_um = r / units::um_to_m;
  const double lo = n_meanders * p_nm * 1e-3 / (2.0 * units::pi);
  const double hi = (n_meanders + 1.0) * p_nm * 1e-3 / (2.0 * units::pi);
  if (r_um >= lo && r_um < hi) return r_um;
  return std::nullopt;
}

}  // namespace

OptimizeResult optimize(const DesignConstraints& constraints, double k_C_fF_per_um,
                        const std::vector<MaterialSpec>& materials) {
  constraints.validate();
  if (materials.empty())
    throw validation_error("optimize: need at least one material option");
  if (!(k_C_fF_per_um > 0.0))
    throw validation_error("optimize: k_C must be positive");

  OptimizeResult result;
  for (const auto& material : materials) {
    material.validate();
    const double t_nm = material.thickness_nm;
    const double w_nm = constraints.w_min_nm;
    const double p_nm = std::max(constraints.p_min_nm, std::nextafter(w_nm, 1e300));
    const double lsq = material::sheet_inductance(material);

    const auto f0_of = [&](double r) {
      return f0_at(r, w_nm, p_nm, t_nm, lsq, k_C_fF_per_um);
    };

    double r_lo = constraints.r_in_min_um;
    double r_hi = constraints.r_in_max_um;
    const double f_target = constraints.f_min_GHz;

    if (f0_of(r_lo) < f_target) {
      result.infeasible.push_back(
          {material, "band unreachable: fundamental below f_min at the smallest radius"});
      continue;
    }

    double r_star;
    if (f0_of(r_hi) >= f_target) {
      // Even the largest radius stays at or above the band edge.
      r_star = r_hi;
    } else {
      // Bisect the non-increasing f0(r) for the largest radius with
      // f0 >= f_min, then a golden-section polish on |f0 - f_min| and an
      // exact in-plateau solve.
      double lo = r_lo, hi = r_hi;
      for (int i = 0; i < 200 && (hi - lo) > 1e-9 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (f0_of(mid) >= f_target ? lo : hi) = mid;
      }
      r_star = lo;
      const double bracket = std::max(1e-6, (hi - lo) * 4.0);
      r_star = golden_section_min(
          [&](double r) {
            const double d = f0_of(r) - f_target;
            return d >= 0.0 ? d : 1e9 * -d;  // stay on the in-band side
          },
          std::max(r_lo, r_star - bracket), std::min(r_hi, r_star + bracket), 1e-10);
      if (f0_of(r_star) < f_target) r_star = lo;

      const double p_um = p_nm * 1e-3;
      const double n_meanders =
          std::max(1.0, std::floor(2.0 * units::pi * r_star / p_um));
      if (const auto exact =
              plateau_solve(n_meanders, f_target, w_nm, p_nm, lsq, k_C_fF_per_um)) {
        if (*exact >= r_lo && *exact <= r_hi && f0_of(*exact) >= f_target * (1.0 - 1e-12))
          r_star = *exact;
      }
    }

    RingGeometry geometry{r_star, w_nm, p_nm, t_nm, std::nullopt};
    DesignCandidate cand = make_candidate(geometry, material, k_C_fF_per_um, constraints);
    if (!cand.feasible()) {
      std::string reasons;
      for (const auto& v : cand.violations) reasons += (reasons.empty() ? "" : "; ") + v.constraint;
      result.infeasible.push_back({material, "constraint violations: " + reasons});
      continue;
    }
    result.candidates.push_back(std::move(cand));
  }

  std::stable_sort(result.candidates.begin(), result.candidates.end(),
                   [](const DesignCandidate& a, const DesignCandidate& b) {
                     if (a.predicted.impedance_kOhm != b.predicted.impedance_kOhm)
                       return a.predicted.impedance_kOhm > b.predicted.impedance_kOhm;
                     if (a.predicted.f0_GHz != b.predicted.f0_GHz)
                       return a.predicted.f0_GHz > b.predicted.f0_GHz;
                     return a.geometry.r_in_um < b.geometry.r_in_um;
                   });
  return result;
}

std::optional<DesignCandidate> grid_search(const DesignConstraints& constraints,
                                           double k_C_fF_per_um, const MaterialSpec& material,
                                           const GridOptions& options) {
  constraints.validate();
  material.validate();
  if (options.pitch_steps < 1 || options.width_steps < 1 || options.radius_steps < 2)
    throw validation_error("grid_search: invalid grid");

  std::optional<DesignCandidate> best;
  const double p_span = constraints.p_min_nm;  // sweep p in [p_min, 2 p_min]
  const double w_span = constraints.w_min_nm;
  for (int ip = 0; ip < options.pitch_steps; ++ip) {
    const double p_nm = constraints.p_min_nm +
                        p_span * double(ip) / double(std::max(1, options.pitch_steps - 1));
    for (int iw = 0; iw < options.width_steps; ++iw) {
      const double w_nm =
          constraints.w_min_nm +
          w_span * double(iw) / double(std::max(1, options.width_steps - 1));
      if (w_nm >= p_nm) continue;
      for (int ir = 0; ir < options.radius_steps; ++ir) {
        const double r = constraints.r_in_min_um +
                         (constraints.r_in_max_um - constraints.r_in_min_um) * double(ir) /
                             double(options.radius_steps - 1);
        RingGeometry geometry{r, w_nm, p_nm, material.thickness_nm, std::nullopt};
        DesignCandidate cand = make_candidate(geometry, material, k_C_fF_per_um, constraints);
        if (!cand.feasible()) continue;
        if (!best || cand.predicted.impedance_kOhm > best->predicted.impedance_kOhm)
          best = std::move(cand);
      }
    }
  }
  return best;
}

}  // namespace design
}  // namespace ringforge
