#include "ringforge/noise_psd.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>

#include "ringforge/errors.hpp"
#include "ringforge/levmar.hpp"
#include "ringforge/units.hpp"

namespace ringforge {

void TimeSeries::validate() const {
  if (!(dt_s > 0.0))
    throw validation_error("time series: sample interval must be positive");
  if (values_hz.size() < 256)
    throw validation_error("time series: need at least 256 samples");
}

namespace noise {

NoiseSpectrum bartlett_psd(const TimeSeries& series, int n_segments) {
  series.validate();
  if (n_segments < 2)
    throw validation_error("bartlett_psd: need at least 2 segments");
  const Eigen::Index total = series.values_hz.size();
  const Eigen::Index seg_len = total / n_segments;
  if (seg_len < 64)
    throw validation_error("bartlett_psd: series too short, segments would have fewer "
                           "than 64 samples");

  const double fs = series.sample_rate_hz();
  const Eigen::Index n_bins = seg_len / 2;  // k = 1 .. seg_len/2, DC dropped
  Eigen::VectorXd accum = Eigen::VectorXd::Zero(n_bins);

  Eigen::FFT<double> fft;
  std::vector<double> buffer(static_cast<std::size_t>(seg_len));
  std::vector<std::complex<double>> spectrum;
  for (int s = 0; s < n_segments; ++s) {
    const auto segment = series.values_hz.segment(Eigen::Index(s) * seg_len, seg_len);
    const double mean = segment.mean();
    for (Eigen::Index i = 0; i < seg_len; ++i) buffer[std::size_t(i)] = segment[i] - mean;
    fft.fwd(spectrum, buffer);
    for (Eigen::Index k = 1; k <= n_bins; ++k) {
      // Rectangular-window periodogram, one-sided: factor 2 except at Nyquist.
      const double two_sided = std::norm(spectrum[std::size_t(k)]) / (fs * double(seg_len));
      const bool nyquist = (seg_len % 2 == 0) && (k == n_bins);
      accum[k - 1] += nyquist ? two_sided : 2.0 * two_sided;
    }
  }

  NoiseSpectrum out;
  out.segment_count = n_segments;
  out.freq_hz.resize(n_bins);
  out.asd_hz_rthz.resize(n_bins);
  for (Eigen::Index k = 1; k <= n_bins; ++k) {
    out.freq_hz[k - 1] = double(k) * fs / double(seg_len);
    out.asd_hz_rthz[k - 1] = std::sqrt(accum[k - 1] / double(n_segments));
  }
  return out;
}

double segment_detrended_variance(const TimeSeries& series, int n_segments) {
  const Eigen::Index seg_len = series.values_hz.size() / n_segments;
  double ss = 0.0;
  for (int s = 0; s < n_segments; ++s) {
    const auto segment = series.values_hz.segment(Eigen::Index(s) * seg_len, seg_len);
    ss += (segment.array() - segment.mean()).square().sum();
  }
  return ss / double(Eigen::Index(n_segments) * seg_len);
}

namespace {

double aicc(double rss, int n, int k) {
  return double(n) * std::log(rss / double(n)) + 2.0 * k +
         2.0 * double(k) * double(k + 1) / double(n - k - 1);
}

struct LogFitData {
  Eigen::VectorXd f;
  Eigen::VectorXd log_psd;
};

// Parameters are log-amplitudes so the model stays positive: the white model
// is (u0), the power-law model (u0, u1, alpha) and the Lorentzian variant
// (u0, u1, alpha, uA, ufc).
Eigen::VectorXd model_log_psd(const LogFitData& d, const Eigen::VectorXd& p) {
  const int np = int(p.size());
  Eigen::VectorXd out(d.f.size());
  for (Eigen::Index i = 0; i < d.f.size(); ++i) {
    double s = std::exp(p[0]);
    if (np >= 3) s += std::exp(p[1]) * std::pow(d.f[i], -p[2]);
    if (np >= 5) {
      const double ratio = d.f[i] / std::exp(p[4]);
      s += std::exp(p[3]) / (1.0 + ratio * ratio);
    }
    out[i] = std::log(s);
  }
  return out;
}

LevMarResult fit_log_model(const LogFitData& d, Eigen::VectorXd initial,
                           const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
  LevMarOptions options;
  options.max_iterations = 400;
  options.lower = lower;
  options.upper = upper;
  const auto residual = [&](const Eigen::VectorXd& p) {
    return Eigen::VectorXd(model_log_psd(d, p) - d.log_psd);
  };
  return levmar_fit(residual, std::move(initial), options);
}

}  // namespace

NoiseModelFit fit_noise_model(const NoiseSpectrum& spectrum, bool include_lorentzian) {
  const Eigen::Index n = spectrum.freq_hz.size();
  if (n < 8)
    throw validation_error("fit_noise_model: need at least 8 frequency bins");
  if (!(spectrum.freq_hz[n - 1] / spectrum.freq_hz[0] >= std::pow(10.0, 1.5)))
    throw validation_error("fit_noise_model: spectrum must span at least 1.5 decades");

  LogFitData data;
  data.f = spectrum.freq_hz;
  data.log_psd = spectrum.psd().array().max(1e-300).log();
  const int nn = int(n);

  // White model: closed form in log space.
  const double u0_white = data.log_psd.mean();
  double rss_white = (data.log_psd.array() - u0_white).square().sum();

  // Power-law + white.
  const double log_top = data.log_psd.tail(std::max<Eigen::Index>(4, n / 8)).mean();
  const double log_low = data.log_psd.head(std::max<Eigen::Index>(2, n / 64)).mean();
  const double f_low = data.f.head(std::max<Eigen::Index>(2, n / 64)).mean();
  Eigen::VectorXd p3(3), lo3(3), hi3(3);
  p3 << log_top, log_low + std::log(f_low), 1.0;
  lo3 << log_top - 60.0, log_low - 60.0, 0.0;
  hi3 << log_top + 30.0, log_low + 60.0, 2.0;
  const LevMarResult power = fit_log_model(data, p3, lo3, hi3);

  NoiseModelFit fit;
  fit.aicc_white = aicc(rss_white, nn, 1);
  fit.aicc_powerlaw = aicc(power.rss, nn, 3);
  fit.converged = power.converged;

  LevMarResult lorentz;
  if (include_lorentzian) {
    // Seed the Lorentzian at the strongest positive deviation from the
    // power-law fit, with a few deterministic corner candidates.
    const Eigen::VectorXd power_model = model_log_psd(data, power.parameters);
    Eigen::Index peak = 0;
    (data.log_psd - power_model).maxCoeff(&peak);
    const double fc0 = data.f[peak];
    double best_cost = std::numeric_limits<double>::infinity();
    for (const double fc_try : {fc0, 10.0 * fc0, 0.1 * fc0}) {
      Eigen::VectorXd p5(5), lo5(5), hi5(5);
      const double excess = std::max(data.log_psd[peak], power.parameters[1]);
      p5 << power.parameters[0], power.parameters[1], power.parameters[2], excess,
          std::log(fc_try);
      lo5 << lo3[0], lo3[1], 0.0, excess - 60.0, std::log(data.f[0] * 0.1);
      hi5 << hi3[0], hi3[1], 2.0, excess + 30.0, std::log(data.f[n - 1] * 10.0);
      const LevMarResult trial = fit_log_model(data, p5, lo5, hi5);
      if (trial.rss < best_cost) {
        best_cost = trial.rss;
        lorentz = trial;
      }
    }
    fit.aicc_lorentzian = aicc(lorentz.rss, nn, 5);
  }

  // Smallest model within a 2-point AICc margin wins.
  fit.selected_model = "white";
  double best_aicc = fit.aicc_white;
  const auto challenge = [&](const std::string& name, double a) {
    if (a < best_aicc - 2.0) {
      fit.selected_model = name;
      best_aicc = a;
    }
  };
  challenge("powerlaw", fit.aicc_powerlaw);
  if (include_lorentzian) challenge("powerlaw+lorentzian", *fit.aicc_lorentzian);

  Eigen::VectorXd residual_vec;
  if (fit.selected_model == "white") {
    fit.S0 = std::exp(u0_white);
    fit.S1 = 0.0;
    fit.alpha = 0.0;
    residual_vec = data.log_psd.array() - u0_white;
  } else {
    const LevMarResult& chosen =
        fit.selected_model == "powerlaw" ? power : lorentz;
    fit.S0 = std::exp(chosen.parameters[0]);
    fit.S1 = std::exp(chosen.parameters[1]);
    fit.alpha = chosen.parameters[2];
    fit.alpha_sigma = std::sqrt(std::max(0.0, chosen.covariance(2, 2)));
    if (fit.selected_model == "powerlaw+lorentzian") {
      fit.lorentz_amp = std::exp(chosen.parameters[3]);
      fit.lorentz_fc = std::exp(chosen.parameters[4]);
    }
    fit.converged = chosen.converged;
    residual_vec = model_log_psd(data, chosen.parameters) - data.log_psd;
  }

  // Log-space residual RMS per decade, lowest decade first.
  const double decade_lo = std::floor(std::log10(data.f[0]));
  const double decade_hi = std::ceil(std::log10(data.f[n - 1]));
  for (double d = decade_lo; d < decade_hi; d += 1.0) {
    double ss = 0.0;
    int count = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double lf = std::log10(data.f[i]);
      if (lf >= d && lf < d + 1.0) {
        ss += residual_vec[i] * residual_vec[i];
        ++count;
      }
    }
    if (count > 0) fit.per_decade_residual_rms.push_back(std::sqrt(ss / count));
  }
  return fit;
}

double asd_at(const NoiseModelFit& fit, double f_hz) {
  if (!(f_hz > 0.0))
    throw validation_error("asd_at: frequency must be positive");
  double s = fit.S0 + fit.S1 * std::pow(f_hz, -fit.alpha);
  if (fit.lorentz_amp && fit.lorentz_fc) {
    const double ratio = f_hz / *fit.lorentz_fc;
    s += *fit.lorentz_amp / (1.0 + ratio * ratio);
  }
  return std::sqrt(s);
}

}  // namespace noise
}  // namespace ringforge
