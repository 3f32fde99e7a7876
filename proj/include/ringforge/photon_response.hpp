#pragma once

#include <Eigen/Dense>
#include <optional>

namespace ringforge {

/// Frequency shift vs mean photon number, relative to the lowest-power point.
struct ShiftCurve {
  Eigen::VectorXd nbar;    // strictly increasing, > 0
  Eigen::VectorXd df_hz;   // first entry 0 by construction
  std::optional<Eigen::VectorXd> sigma_hz;

  void validate() const;  // throws validation_error
};

struct KerrFit {
  double k11_hz = 0.0;      // frequency shift per photon
  double k11_sigma_hz = 0.0;
  double intercept_hz = 0.0;
  double window_lo = 0.0;   // fitted nbar range
  double window_hi = 0.0;
  double residual_rms_hz = 0.0;
};

enum class AnomalyPresence { No, Yes, Undetermined };

struct AnomalousShift {
  AnomalyPresence present = AnomalyPresence::No;
  double amplitude_hz = 0.0;      // |A|, >= 0
  int sign = 0;                   // +1 upward shift, -1 downward, 0 none
  double scale_photons = 0.0;     // n_c
  double amplitude_sigma_hz = 0.0;
  double k11_hz = 0.0;
  double k11_sigma_hz = 0.0;
  double aicc_linear = 0.0;
  double aicc_saturating = 0.0;
  double residual_rms_hz = 0.0;
};

namespace kerr {

/// Weighted linear fit df = K11*nbar + b over points with nbar >= threshold.
KerrFit fit_kerr(const ShiftCurve& curve, double nbar_threshold);

/// Default fit threshold: 10x the anomaly scale when one is present,
/// otherwise the median photon number.
double default_threshold(const ShiftCurve& curve, const AnomalousShift* anomaly = nullptr);

/// Fits df = A (1 - e^{-nbar/n_c}) + K11 nbar against the pure-linear model.
/// Presence requires |A| significant at 3 sigma (including the variance of
/// the lowest-power reference the curve is zeroed against), an AICc win by
/// more than 2 points, and n_c inside the observed nbar range. Requires
/// >= 8 points over >= 2 decades.
AnomalousShift detect_anomalous_shift(const ShiftCurve& curve);

struct KerrReference {
  double resistivity_uohm_cm = 0.0;
  double mode_volume_um3 = 0.0;
  double k11_hz = 0.0;
};

/// K11 scaling estimate K11_ref * (rho/rho_ref) * (V_ref/V).
double kerr_scaling_estimate(double resistivity_uohm_cm, double mode_volume_um3,
                             const KerrReference& reference);

/// Current mode volume l*w*t in um^3.
double mode_volume_um3(double length_um, double w_nm, double t_nm);

}  // namespace kerr
}  // namespace ringforge
