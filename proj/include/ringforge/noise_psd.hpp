#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace ringforge {

/// Uniformly sampled resonance-frequency record. The sample interval is a
/// declared property, never inferred from the data.
struct TimeSeries {
  double dt_s = 0.0;
  Eigen::VectorXd values_hz;

  double sample_rate_hz() const { return 1.0 / dt_s; }
  void validate() const;  // throws validation_error
};

/// One-sided amplitude spectral density estimate, DC excluded.
struct NoiseSpectrum {
  Eigen::VectorXd freq_hz;
  Eigen::VectorXd asd_hz_rthz;
  int segment_count = 0;
  std::string normalization = "one-sided";

  Eigen::VectorXd psd() const { return asd_hz_rthz.array().square(); }
};

/// Fitted S(f) = S0 + S1/f^alpha (+ A / (1 + (f/fc)^2)).
struct NoiseModelFit {
  double S0 = 0.0;       // Hz^2/Hz
  double S1 = 0.0;       // Hz^2 * Hz^(alpha-1) / Hz
  double alpha = 0.0;
  double alpha_sigma = 0.0;
  std::optional<double> lorentz_amp;  // Hz^2/Hz
  std::optional<double> lorentz_fc;   // Hz
  std::string selected_model;         // "white" | "powerlaw" | "powerlaw+lorentzian"
  double aicc_white = 0.0;
  double aicc_powerlaw = 0.0;
  std::optional<double> aicc_lorentzian;
  std::vector<double> per_decade_residual_rms;  // log-space, lowest decade first
  bool converged = true;
};

namespace noise {

/// Bartlett PSD estimate: equal non-overlapping rectangular segments, per-
/// segment mean removal, averaged periodograms, one-sided normalization. The
/// integral of the PSD over frequency equals the variance of the mean-removed
/// segments exactly; drifts slower than a segment show up as removed mean,
/// not as spectral power. Returns ASD = sqrt(PSD).
NoiseSpectrum bartlett_psd(const TimeSeries& series, int n_segments);

/// Weighted least squares in log-log space on the PSD. Model selection among
/// white / white+powerlaw (/ +Lorentzian) by AICc with a 2-point margin
/// before preferring the larger model. Requires >= 8 bins over >= 1.5 decades.
NoiseModelFit fit_noise_model(const NoiseSpectrum& spectrum, bool include_lorentzian);

/// Model ASD at frequency f, Hz/sqrt(Hz).
double asd_at(const NoiseModelFit& fit, double f_hz);

/// Variance of the series after per-segment mean removal (the quantity the
/// Bartlett estimate integrates to).
double segment_detrended_variance(const TimeSeries& series, int n_segments);

}  // namespace noise
}  // namespace ringforge
