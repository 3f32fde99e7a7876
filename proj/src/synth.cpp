#include "ringforge/synth.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>

#include "ringforge/errors.hpp"
#include "ringforge/rng.hpp"
#include "ringforge/units.hpp"

namespace ringforge::synth {

namespace {

double loaded_q(double q_internal, double q_coupling, double phi) {
  const double inv = 1.0 / q_internal + std::cos(phi) / q_coupling;
  if (!(inv > 0.0)) throw validation_error("synth: parameters imply non-positive loaded Q");
  return 1.0 / inv;
}

void add_complex_noise(Eigen::VectorXcd& z, double amplitude,
                       std::optional<double> snr_db, Rng& rng) {
  if (!snr_db) return;
  const double sigma = amplitude * std::pow(10.0, -*snr_db / 20.0);
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] += sigma * rng.complex_gaussian();
}

}  // namespace

double S11Spec::q_loaded() const {
  return loaded_q(q_internal, q_coupling, mismatch_angle_rad);
}

ComplexTrace synth_s11(const S11Spec& spec) {
  if (!(spec.q_internal > 0.0) || !(spec.q_coupling > 0.0) || !(spec.f0_hz > 0.0))
    throw validation_error("synth_s11: quality factors and f0 must be positive");
  if (spec.n_points < 32) throw validation_error("synth_s11: need at least 32 points");
  if (!(spec.span_linewidths >= 10.0))
    throw validation_error("synth_s11: span must cover at least 10 linewidths");

  const double ql = spec.q_loaded();
  const double linewidth = spec.f0_hz / ql;
  const double span = spec.span_linewidths * linewidth;

  ReflectionModel model{spec.f0_hz, ql,        spec.q_coupling, spec.mismatch_angle_rad,
                        spec.amplitude, spec.phase_offset_rad, spec.delay_s};

  ComplexTrace trace;
  trace.freq_hz.resize(spec.n_points);
  trace.s11.resize(spec.n_points);
  for (int i = 0; i < spec.n_points; ++i) {
    const double f = spec.f0_hz - span / 2.0 + span * double(i) / double(spec.n_points - 1);
    trace.freq_hz[i] = f;
    trace.s11[i] = evaluate(model, f);
  }
  Rng rng(spec.seed);
  add_complex_noise(trace.s11, spec.amplitude, spec.snr_db, rng);
  trace.power_dbm = spec.power_dbm;
  return trace;
}

ComplexTrace synth_doublet(const DoubletSpec& spec) {
  if (spec.n_points < 64) throw validation_error("synth_doublet: need at least 64 points");
  if (!(spec.separation_hz > 0.0))
    throw validation_error("synth_doublet: separation must be positive");

  const double ql1 = loaded_q(spec.q_internal_1, spec.q_coupling_1, spec.mismatch_angle_rad);
  const double ql2 = loaded_q(spec.q_internal_2, spec.q_coupling_2, spec.mismatch_angle_rad);
  const double f1 = spec.f0_hz;
  const double f2 = spec.f0_hz + spec.separation_hz;
  // Cover both modes with generous wings on either side.
  const double margin = 10.0 * std::max(f1 / ql1, f2 / ql2);
  const double lo = f1 - margin;
  const double hi = f2 + margin;

  const std::complex<double> i1(0.0, 1.0);
  ComplexTrace trace;
  trace.freq_hz.resize(spec.n_points);
  trace.s11.resize(spec.n_points);
  for (int i = 0; i < spec.n_points; ++i) {
    const double f = lo + (hi - lo) * double(i) / double(spec.n_points - 1);
    const auto dip = [&](double f0, double ql, double qc) {
      const std::complex<double> denom = 1.0 + 2.0 * i1 * ql * (f / f0 - 1.0);
      return (2.0 * ql / qc) * std::exp(i1 * spec.mismatch_angle_rad) / denom;
    };
    const std::complex<double> unit =
        1.0 - dip(f1, ql1, spec.q_coupling_1) - dip(f2, ql2, spec.q_coupling_2);
    trace.freq_hz[i] = f;
    trace.s11[i] = spec.amplitude * std::exp(i1 * spec.phase_offset_rad) *
                   std::exp(-2.0 * units::pi * i1 * f * spec.delay_s) * unit;
  }
  Rng rng(spec.seed);
  add_complex_noise(trace.s11, spec.amplitude, spec.snr_db, rng);
  return trace;
}

double target_psd(const TimeSeriesSpec& spec, double f_hz) {
  if (!(f_hz > 0.0)) return 0.0;
  double s = spec.S0 + spec.S1 * std::pow(f_hz, -spec.alpha);
  if (spec.lorentz_amp > 0.0) {
    const double ratio = f_hz / spec.lorentz_fc_hz;
    s += spec.lorentz_amp / (1.0 + ratio * ratio);
  }
  return s;
}

TimeSeries synth_timeseries(const TimeSeriesSpec& spec) {
  if (!(spec.sample_rate_hz > 0.0))
    throw validation_error("synth_timeseries: sample rate must be positive");
  if (spec.n_samples < 1024)
    throw validation_error("synth_timeseries: need at least 1024 samples");
  if (!(spec.alpha >= 0.0 && spec.alpha <= 2.0))
    throw validation_error("synth_timeseries: alpha must lie in [0, 2]");

  const int n = spec.n_samples;
  const double fs = spec.sample_rate_hz;
  Rng rng(spec.seed);

  // Hermitian spectrum with E|X_k|^2 = S(f_k) * fs * n / 2 so the one-sided
  // periodogram estimates the target PSD.
  std::vector<std::complex<double>> coeff(std::size_t(n) / 2 + 1);
  coeff[0] = 0.0;  // zero mean
  for (std::size_t k = 1; k < coeff.size(); ++k) {
    const double f = double(k) * fs / double(n);
    const double scale = std::sqrt(target_psd(spec, f) * fs * double(n) / 2.0);
    if (n % 2 == 0 && k + 1 == coeff.size())
      coeff[k] = scale * rng.gaussian();  // Nyquist coefficient is real
    else
      coeff[k] = scale * rng.complex_gaussian();
  }

  Eigen::FFT<double> fft;
  std::vector<double> series(static_cast<std::size_t>(n));
  fft.inv(series, coeff, n);

  TimeSeries out;
  out.dt_s = 1.0 / fs;
  out.values_hz = Eigen::Map<Eigen::VectorXd>(series.data(), n);
  return out;
}

ShiftCurve synth_shift_curve(const ShiftCurveSpec& spec) {
  if (spec.n_points < 2) throw validation_error("synth_shift_curve: need at least 2 points");
  if (!(spec.nbar_min > 0.0) || !(spec.decades > 0.0))
    throw validation_error("synth_shift_curve: grid parameters must be positive");
  if (!(spec.anomaly_scale > 0.0))
    throw validation_error("synth_shift_curve: anomaly scale must be positive");

  Rng rng(spec.seed);
  ShiftCurve curve;
  curve.nbar.resize(spec.n_points);
  curve.df_hz.resize(spec.n_points);
  for (int i = 0; i < spec.n_points; ++i) {
    const double exponent = spec.decades * double(i) / double(spec.n_points - 1);
    const double nbar = spec.nbar_min * std::pow(10.0, exponent);
    curve.nbar[i] = nbar;
    const double model = spec.anomaly_amp_hz * (1.0 - std::exp(-nbar / spec.anomaly_scale)) +
                         spec.k11_hz * nbar;
    curve.df_hz[i] = model + spec.noise_sigma_hz * rng.gaussian();
  }
  const double offset = curve.df_hz[0];
  curve.df_hz.array() -= offset;  // relative to the lowest-power point
  if (spec.noise_sigma_hz > 0.0) {
    Eigen::VectorXd sigma = Eigen::VectorXd::Constant(spec.n_points, spec.noise_sigma_hz);
    curve.sigma_hz = sigma;
  }
  return curve;
}

}  // namespace ringforge::synth
