#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace ringforge {

/// One-port complex reflection sweep.
struct ComplexTrace {
  Eigen::VectorXd freq_hz;    // strictly increasing
  Eigen::VectorXcd s11;
  std::optional<double> power_dbm;  // drive power at the device

  void validate() const;  // throws validation_error
};

/// Parameters of the one-port reflection model
///   S11(f) = a e^{i theta} e^{-2 pi i f tau}
///            [1 - (2 Ql/Qc) e^{i phi} / (1 + 2 i Ql (f/f0 - 1))].
struct ReflectionModel {
  double f0_hz = 0.0;
  double q_loaded = 0.0;
  double q_coupling = 0.0;
  double mismatch_angle_rad = 0.0;
  double amplitude = 1.0;
  double phase_offset_rad = 0.0;
  double delay_s = 0.0;
};

std::complex<double> evaluate(const ReflectionModel& model, double f_hz);

struct ResonanceFit {
  double f0_hz = 0.0;
  double q_loaded = 0.0;
  double q_coupling = 0.0;
  double q_internal = 0.0;
  double q_internal_min = 0.0;   // Fano uncertainty band
  double q_internal_max = 0.0;
  double mismatch_angle_rad = 0.0;
  double mismatch_angle_sigma = 0.0;
  double amplitude = 0.0;
  double phase_offset_rad = 0.0;
  double delay_s = 0.0;
  double residual_rms = 0.0;     // RMS model deviation, relative to amplitude
  int iterations = 0;

  ReflectionModel model() const {
    return {f0_hz, q_loaded, q_coupling, mismatch_angle_rad, amplitude, phase_offset_rad,
            delay_s};
  }
};

namespace resfit {

struct FitOptions {
  double wing_fraction = 0.2;    // span fraction per side used for the delay fit
  bool refine_delay = true;      // polish tau by minimizing circle deviation
  bool worst_case_fano = false;  // widen the Qi band by sweeping phi in [-|phi|, |phi|]
};

/// Fano-aware circle fit of a single resonance. Throws fit_error when no
/// resonance is present or the fit diverges.
ResonanceFit fit_reflection(const ComplexTrace& trace, const FitOptions& options = {});

/// Splits a trace containing up to two resonances into single-resonance
/// windows (dips located via smoothed magnitude minima confirmed by group
/// delay). Returns zero windows for a flat trace; throws ambiguity_error
/// listing candidate frequencies when more than two dips are found.
std::vector<ComplexTrace> detect_doublet(const ComplexTrace& trace);

/// Mean circulating photon number n = 2 Qc P / (hbar w0^2).
double photon_number(double q_coupling, double f0_hz, double power_dbm);

struct PowerPoint {
  double power_dbm = 0.0;
  double nbar = 0.0;
  double q_internal = 0.0;
  double q_internal_min = 0.0;
  double q_internal_max = 0.0;
  double residual_rms = 0.0;
  bool excluded = false;        // at or beyond the bifurcation threshold
  std::string error;            // non-empty if this power failed to fit
};

struct PowerSweepResult {
  std::vector<PowerPoint> points;           // input order
  std::optional<double> bifurcation_power_dbm;
};

/// Per-power fits of Qi vs photon number. Bifurcation is flagged at the first
/// power (ascending) whose fit residual exceeds 5x the low-power baseline or
/// whose response jumps discontinuously; points at and beyond it are excluded.
PowerSweepResult qi_vs_power(const std::vector<ComplexTrace>& traces,
                             const FitOptions& options = {});

}  // namespace resfit
}  // namespace ringforge
