#include "ringforge/photon_response.hpp"

#include <algorithm>
#include <cmath>

#include "ringforge/errors.hpp"
#include "ringforge/levmar.hpp"

namespace ringforge {

void ShiftCurve::validate() const {
  if (nbar.size() != df_hz.size())
    throw validation_error("shift curve: nbar and df arrays differ in length");
  if (nbar.size() < 2)
    throw validation_error("shift curve: need at least 2 points");
  if (!(nbar[0] > 0.0))
    throw validation_error("shift curve: photon numbers must be positive");
  for (Eigen::Index i = 1; i < nbar.size(); ++i)
    if (!(nbar[i] > nbar[i - 1]))
      throw validation_error("shift curve: photon numbers must be strictly increasing");
  if (sigma_hz && sigma_hz->size() != nbar.size())
    throw validation_error("shift curve: sigma array length mismatch");
}

namespace kerr {

KerrFit fit_kerr(const ShiftCurve& curve, double nbar_threshold) {
  curve.validate();
  std::vector<Eigen::Index> sel;
  for (Eigen::Index i = 0; i < curve.nbar.size(); ++i)
    if (curve.nbar[i] >= nbar_threshold) sel.push_back(i);
  if (sel.size() < 3)
    throw validation_error("fit_kerr: fewer than 3 points above the photon threshold");

  // Weighted normal equations for df = k*n + b.
  double sw = 0.0, swn = 0.0, swnn = 0.0, swd = 0.0, swnd = 0.0;
  for (const auto i : sel) {
    const double s = curve.sigma_hz ? (*curve.sigma_hz)[i] : 1.0;
    if (!(s > 0.0)) throw validation_error("fit_kerr: non-positive uncertainty");
    const double w = 1.0 / (s * s);
    const double n = curve.nbar[i];
    const double d = curve.df_hz[i];
    sw += w;
    swn += w * n;
    swnn += w * n * n;
    swd += w * d;
    swnd += w * n * d;
  }
  const double det = sw * swnn - swn * swn;
  if (std::abs(det) < 1e-300)
    throw fit_error("fit_kerr: degenerate design (photon numbers too clustered)");

  KerrFit fit;
  fit.k11_hz = (sw * swnd - swn * swd) / det;
  fit.intercept_hz = (swnn * swd - swn * swnd) / det;
  fit.window_lo = curve.nbar[sel.front()];
  fit.window_hi = curve.nbar[sel.back()];

  double rss = 0.0;
  for (const auto i : sel) {
    const double r = curve.df_hz[i] - (fit.k11_hz * curve.nbar[i] + fit.intercept_hz);
    rss += r * r;
  }
  fit.residual_rms_hz = std::sqrt(rss / double(sel.size()));
  const double dof = double(sel.size()) - 2.0;
  const double scale = curve.sigma_hz ? 1.0 : rss / std::max(dof, 1.0);
  fit.k11_sigma_hz = std::sqrt(scale * sw / det);
  return fit;
}

double default_threshold(const ShiftCurve& curve, const AnomalousShift* anomaly) {
  curve.validate();
  if (anomaly && anomaly->present == AnomalyPresence::Yes)
    return 10.0 * anomaly->scale_photons;
  Eigen::VectorXd sorted = curve.nbar;
  std::sort(sorted.data(), sorted.data() + sorted.size());
  return sorted[sorted.size() / 2];
}

AnomalousShift detect_anomalous_shift(const ShiftCurve& curve) {
  curve.validate();
  const Eigen::Index n = curve.nbar.size();
  if (n < 8)
    throw validation_error("detect_anomalous_shift: need at least 8 points");
  if (!(curve.nbar[n - 1] / curve.nbar[0] >= 100.0))
    throw validation_error("detect_anomalous_shift: need at least 2 decades in nbar");

  // Pure-linear comparison model, df = k*n + b.
  double sn = 0.0, snn = 0.0, sd = 0.0, snd = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    sn += curve.nbar[i];
    snn += curve.nbar[i] * curve.nbar[i];
    sd += curve.df_hz[i];
    snd += curve.nbar[i] * curve.df_hz[i];
  }
  const double det = double(n) * snn - sn * sn;
  const double k_lin = (double(n) * snd - sn * sd) / det;
  const double b_lin = (snn * sd - sn * snd) / det;
  double rss_lin = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = curve.df_hz[i] - (k_lin * curve.nbar[i] + b_lin);
    rss_lin += r * r;
  }

  // Saturating model df = A (1 - e^{-n/nc}) + k n, deterministic multi-start
  // over the corner-scale candidates.
  const auto residual = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(n);
    const double nc = std::exp(p[1]);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double x = std::min(curve.nbar[i] / nc, 700.0);
      r[i] = p[0] * (1.0 - std::exp(-x)) + p[2] * curve.nbar[i] - curve.df_hz[i];
    }
    return r;
  };
  const double geo_mean = std::sqrt(curve.nbar[0] * curve.nbar[n - 1]);
  LevMarResult best;
  best.rss = std::numeric_limits<double>::infinity();
  for (const double nc0 : {curve.nbar[0] * 3.0, geo_mean, curve.nbar[n - 1] / 3.0}) {
    Eigen::VectorXd p0(3);
    const Eigen::Index mid = n / 2;
    p0 << curve.df_hz[mid] - k_lin * curve.nbar[mid], std::log(nc0), k_lin;
    LevMarOptions options;
    options.max_iterations = 300;
    const LevMarResult trial = levmar_fit(residual, p0, options);
    if (trial.rss < best.rss) best = trial;
  }

  AnomalousShift out;
  const int aic_correction_n = int(n);
  const auto aicc = [aic_correction_n](double rss, int k) {
    return aic_correction_n * std::log(rss / aic_correction_n) + 2.0 * k +
           2.0 * double(k) * double(k + 1) / double(aic_correction_n - k - 1);
  };
  out.aicc_linear = aicc(std::max(rss_lin, 1e-300), 2);
  out.aicc_saturating = aicc(std::max(best.rss, 1e-300), 3);
  out.k11_hz = best.parameters[2];
  out.k11_sigma_hz = std::sqrt(std::max(0.0, best.covariance(2, 2)));
  out.scale_photons = std::exp(best.parameters[1]);
  out.residual_rms_hz = std::sqrt(best.rss / double(n));

  if (!best.converged) {
    out.present = AnomalyPresence::Undetermined;
    out.amplitude_hz = std::abs(best.parameters[0]);
    out.sign = best.parameters[0] >= 0.0 ? 1 : -1;
    return out;
  }

  // Significance of A. The curve is zeroed against its lowest-power point,
  // so any step-like amplitude inherits that reference's noise variance in
  // addition to its own fit variance.
  const double s2 = best.rss / double(n - 3);
  const double sigma_a = std::sqrt(std::max(0.0, best.covariance(0, 0)) + s2);
  out.amplitude_sigma_hz = sigma_a;
  const double a = best.parameters[0];
  const bool significant = std::abs(a) > 3.0 * sigma_a;
  const bool selected = out.aicc_saturating < out.aicc_linear - 2.0;
  const bool resolvable =
      out.scale_photons >= curve.nbar[0] && out.scale_photons <= curve.nbar[n - 1];

  if (significant && selected && resolvable) {
    out.present = AnomalyPresence::Yes;
    out.amplitude_hz = std::abs(a);
    out.sign = a >= 0.0 ? 1 : -1;
  } else {
    out.present = AnomalyPresence::No;
    out.amplitude_hz = 0.0;
    out.sign = 0;
    out.k11_hz = k_lin;
    const double s2_lin = rss_lin / double(n - 2);
    out.k11_sigma_hz = std::sqrt(s2_lin * double(n) / det);
    out.residual_rms_hz = std::sqrt(rss_lin / double(n));
  }
  return out;
}

double kerr_scaling_estimate(double resistivity_uohm_cm, double mode_volume_um3,
                             const KerrReference& reference) {
  if (!(resistivity_uohm_cm > 0.0) || !(mode_volume_um3 > 0.0))
    throw validation_error("kerr_scaling_estimate: inputs must be positive");
  if (!(reference.resistivity_uohm_cm > 0.0) || !(reference.mode_volume_um3 > 0.0))
    throw validation_error("kerr_scaling_estimate: reference must be positive");
  return reference.k11_hz * (resistivity_uohm_cm / reference.resistivity_uohm_cm) *
         (reference.mode_volume_um3 / mode_volume_um3);
}

double mode_volume_um3(double length_um, double w_nm, double t_nm) {
  if (!(length_um > 0.0) || !(w_nm > 0.0) || !(t_nm > 0.0))
    throw validation_error("mode_volume: inputs must be positive");
  return length_um * (w_nm * 1e-3) * (t_nm * 1e-3);
}

}  // namespace kerr
}  // namespace ringforge
