#include "ringforge/resonance_fit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "ringforge/errors.hpp"
#include "ringforge/levmar.hpp"
#include "ringforge/units.hpp"

namespace ringforge {

void ComplexTrace::validate() const {
  if (freq_hz.size() != s11.size())
    throw validation_error("trace: frequency and S11 arrays differ in length");
  if (freq_hz.size() < 32)
    throw validation_error("trace: need at least 32 samples");
  for (Eigen::Index i = 1; i < freq_hz.size(); ++i)
    if (!(freq_hz[i] > freq_hz[i - 1]))
      throw validation_error("trace: frequencies must be strictly increasing");
}

std::complex<double> evaluate(const ReflectionModel& m, double f_hz) {
  const std::complex<double> i1(0.0, 1.0);
  const std::complex<double> denom = 1.0 + 2.0 * i1 * m.q_loaded * (f_hz / m.f0_hz - 1.0);
  const std::complex<double> dip =
      (2.0 * m.q_loaded / m.q_coupling) * std::exp(i1 * m.mismatch_angle_rad) / denom;
  return m.amplitude * std::exp(i1 * m.phase_offset_rad) *
         std::exp(-2.0 * units::pi * i1 * f_hz * m.delay_s) * (1.0 - dip);
}

namespace resfit {

namespace {

Eigen::VectorXd unwrap(const Eigen::VectorXd& phase) {
  Eigen::VectorXd out = phase;
  double offset = 0.0;
  for (Eigen::Index i = 1; i < phase.size(); ++i) {
    const double d = phase[i] - phase[i - 1];
    if (d > units::pi) offset -= 2.0 * units::pi;
    else if (d < -units::pi) offset += 2.0 * units::pi;
    out[i] = phase[i] + offset;
  }
  return out;
}

double wrap_angle(double a) {
  while (a > units::pi) a -= 2.0 * units::pi;
  while (a <= -units::pi) a += 2.0 * units::pi;
  return a;
}

Eigen::VectorXd arg_of(const Eigen::VectorXcd& z) {
  Eigen::VectorXd out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) out[i] = std::arg(z[i]);
  return out;
}

struct Circle {
  double cx = 0.0, cy = 0.0, r = 0.0;
  double rms = 0.0;  // geometric residual
};

// Algebraic Taubin fit as a 3x3 generalized symmetric eigenproblem on
// centered data, then one Gauss-Newton pass on the geometric distances.
Circle fit_circle(const Eigen::VectorXcd& z) {
  const Eigen::Index n = z.size();
  const double mx = z.real().mean();
  const double my = z.imag().mean();
  Eigen::VectorXd u = z.real().array() - mx;
  Eigen::VectorXd v = z.imag().array() - my;
  Eigen::VectorXd w = u.array().square() + v.array().square();

  const double mzz = w.squaredNorm() / double(n);
  const double mz = w.mean();
  const double muu = u.squaredNorm() / double(n);
  const double mvv = v.squaredNorm() / double(n);
  const double muv = u.dot(v) / double(n);
  const double muz = u.dot(w) / double(n);
  const double mvz = v.dot(w) / double(n);

  Eigen::Matrix3d scatter;
  scatter << mzz - mz * mz, muz, mvz, muz, muu, muv, mvz, muv, mvv;
  Eigen::Matrix3d constraint = Eigen::Matrix3d::Zero();
  constraint(0, 0) = 4.0 * mz;
  constraint(1, 1) = 1.0;
  constraint(2, 2) = 1.0;
  if (!(mz > 0.0)) throw fit_error("circle fit: degenerate point cloud");

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::Matrix3d> solver(scatter, constraint);
  if (solver.info() != Eigen::Success)
    throw fit_error("circle fit: eigen decomposition failed");
  const Eigen::Vector3d a = solver.eigenvectors().col(0);  // smallest eigenvalue
  if (std::abs(a[0]) < 1e-14)
    throw fit_error("circle fit: locus is a line, no resonance circle");

  Circle c;
  c.cx = -a[1] / (2.0 * a[0]);
  c.cy = -a[2] / (2.0 * a[0]);
  c.r = std::sqrt(c.cx * c.cx + c.cy * c.cy + mz);

  // One Gauss-Newton refinement pass on sum (|p_i - c| - r)^2.
  for (int pass = 0; pass < 1; ++pass) {
    Eigen::MatrixXd jac(n, 3);
    Eigen::VectorXd res(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double dx = u[i] - c.cx, dy = v[i] - c.cy;
      const double rho = std::hypot(dx, dy);
      if (rho < 1e-300) throw fit_error("circle fit: point coincides with center");
      res[i] = rho - c.r;
      jac(i, 0) = -dx / rho;
      jac(i, 1) = -dy / rho;
      jac(i, 2) = -1.0;
    }
    const Eigen::Vector3d step = jac.colPivHouseholderQr().solve(-res);
    c.cx += step[0];
    c.cy += step[1];
    c.r += step[2];
  }

  double ss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = std::hypot(u[i] - c.cx, v[i] - c.cy) - c.r;
    ss += d * d;
  }
  c.rms = std::sqrt(ss / double(n));
  c.cx += mx;
  c.cy += my;
  return c;
}

// Robust per-point complex noise scale from first differences.
double point_noise_scale(const Eigen::VectorXcd& z) {
  const Eigen::Index n = z.size();
  std::vector<double> steps;
  steps.reserve(n - 1);
  for (Eigen::Index i = 1; i < n; ++i) steps.push_back(std::abs(z[i] - z[i - 1]));
  std::nth_element(steps.begin(), steps.begin() + steps.size() / 2, steps.end());
  const double med = steps[steps.size() / 2];
  // Differences of iid complex noise have E|d|^2 = 2 sigma^2; the median of a
  // Rayleigh variate is sigma*sqrt(2 ln 2).
  return med / std::sqrt(2.0 * std::log(2.0) * 2.0);
}

// Slope of a straight-line least-squares fit y(x).
double line_slope(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  const double mx = x.mean(), my = y.mean();
  const Eigen::ArrayXd dx = x.array() - mx;
  const double denom = dx.square().sum();
  return denom > 0.0 ? (dx * (y.array() - my)).sum() / denom : 0.0;
}

Eigen::VectorXcd remove_delay(const ComplexTrace& trace, double tau_s) {
  const std::complex<double> i1(0.0, 1.0);
  Eigen::VectorXcd out(trace.s11.size());
  for (Eigen::Index i = 0; i < out.size(); ++i)
    out[i] = trace.s11[i] * std::exp(2.0 * units::pi * i1 * trace.freq_hz[i] * tau_s);
  return out;
}

// Initial electrical delay from the phase slope on the off-resonant wings.
// The median of the local slopes is used rather than an edge-window line fit:
// the off-resonant samples dominate the count wherever the resonance sits,
// so the median is immune to a resonance close to one end of the span.
double wing_delay_estimate(const ComplexTrace& trace, double wing_fraction) {
  const Eigen::Index n = trace.freq_hz.size();
  const Eigen::VectorXd phase = unwrap(arg_of(trace.s11));
  std::vector<double> slopes;
  slopes.reserve(n - 1);
  for (Eigen::Index i = 1; i < n; ++i)
    slopes.push_back((phase[i] - phase[i - 1]) / (trace.freq_hz[i] - trace.freq_hz[i - 1]));
  std::nth_element(slopes.begin(), slopes.begin() + slopes.size() / 2, slopes.end());
  const double median_slope = slopes[slopes.size() / 2];

  // Cross-check against edge-window line fits; keep the median if they
  // disagree (a resonance inside an edge window corrupts the line fit).
  const Eigen::Index k = std::max<Eigen::Index>(4, Eigen::Index(double(n) * wing_fraction));
  const double slope_left = line_slope(trace.freq_hz.head(k), phase.head(k));
  const double slope_right = line_slope(trace.freq_hz.tail(k), phase.tail(k));
  const double span = trace.freq_hz[n - 1] - trace.freq_hz[0];
  const double edge = (slope_left + slope_right) / 2.0;
  const double slope = std::abs(edge - median_slope) * span < units::pi ? edge : median_slope;
  return -slope / (2.0 * units::pi);
}

struct PhaseFit {
  double f0 = 0.0;
  double q_loaded = 0.0;
  double theta0 = 0.0;  // angle at resonance, about the circle center
  double theta0_var = 0.0;
  double q_loaded_var = 0.0;
  double rss = 0.0;
  int iterations = 0;
};

// Fits the winding angle about the circle center:
//   u(f) = theta0 + 2 atan(2 Ql (1 - f/f0)).
PhaseFit fit_phase(const Eigen::VectorXd& freq, const Eigen::VectorXd& angle_unwrapped) {
  const Eigen::Index n = freq.size();
  const Eigen::VectorXd& u = angle_unwrapped;

  // Initial guesses from the phase swing: the resonance is where the phase
  // crosses the midpoint between its asymptotes.
  const double u_first = u.head(8).mean();
  const double u_last = u.tail(8).mean();
  const double mid = 0.5 * (u_first + u_last);
  if (std::abs(u_first - u_last) < 0.5 * units::pi)
    throw fit_error("phase fit: phase swing too small for a resonance");

  const bool decreasing = u_last < u_first;
  const auto crossing = [&](double level) -> double {
    for (Eigen::Index i = 1; i < n; ++i) {
      const bool crossed = decreasing ? (u[i] <= level && u[i - 1] > level)
                                      : (u[i] >= level && u[i - 1] < level);
      if (crossed) {
        const double t = (level - u[i - 1]) / (u[i] - u[i - 1]);
        return freq[i - 1] + t * (freq[i] - freq[i - 1]);
      }
    }
    return decreasing == (level < mid) ? freq[n - 1] : freq[0];
  };

  const double f0_init = crossing(mid);
  const double quarter = 0.5 * units::pi;
  const double f_lo = crossing(decreasing ? mid + quarter : mid - quarter);
  const double f_hi = crossing(decreasing ? mid - quarter : mid + quarter);
  const double width = std::max(std::abs(f_hi - f_lo), (freq[n - 1] - freq[0]) * 1e-6);
  double ql_init = f0_init / width;

  Eigen::VectorXd p0(3);
  p0 << mid, ql_init, f0_init;

  const auto residual = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(n);
    for (Eigen::Index i = 0; i < n; ++i)
      r[i] = p[0] + 2.0 * std::atan(2.0 * p[1] * (1.0 - freq[i] / p[2])) - u[i];
    return r;
  };
  const auto jacobian = [&](const Eigen::VectorXd& p) {
    Eigen::MatrixXd jac(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double x = 1.0 - freq[i] / p[2];
      const double t = 2.0 * p[1] * x;
      const double g = 2.0 / (1.0 + t * t);
      jac(i, 0) = 1.0;
      jac(i, 1) = g * 2.0 * x;
      jac(i, 2) = g * 2.0 * p[1] * freq[i] / (p[2] * p[2]);
    }
    return jac;
  };

  LevMarOptions options;
  options.max_iterations = 120;
  Eigen::VectorXd lower(3), upper(3);
  lower << mid - 2.0 * units::pi, 1.0, freq[0];
  upper << mid + 2.0 * units::pi, 1e10, freq[n - 1];
  options.lower = lower;
  options.upper = upper;
  const LevMarResult res = levmar_fit(residual, p0, options, jacobian);
  if (!res.converged || !(res.parameters[1] > 0.0))
    throw fit_error("phase fit did not converge");

  PhaseFit fit;
  fit.theta0 = res.parameters[0];
  fit.q_loaded = res.parameters[1];
  fit.f0 = res.parameters[2];
  fit.theta0_var = res.covariance(0, 0);
  fit.q_loaded_var = res.covariance(1, 1);
  fit.rss = res.rss;
  fit.iterations = res.iterations;
  return fit;
}

}  // namespace

ResonanceFit fit_reflection(const ComplexTrace& trace, const FitOptions& options) {
  trace.validate();
  const Eigen::Index n = trace.freq_hz.size();

  // (1) Electrical delay: wing phase slope as the seed, then polish by
  // minimizing the deviation from circularity (the wing slope alone carries
  // the resonance-tail bias).
  double tau = wing_delay_estimate(trace, options.wing_fraction);
  if (options.refine_delay) {
    const auto circle_rms_at = [&](double t) {
      try {
        return fit_circle(remove_delay(trace, t)).rms;
      } catch (const fit_error&) {
        return 1e300;
      }
    };
    // Scan broadly enough to cover a delay-alias spacing of 1/span on either
    // side of the seed, finely enough to resolve the true basin.
    const double span_hz = trace.freq_hz[n - 1] - trace.freq_hz[0];
    const double half_window = std::max(2.5 / span_hz, 25e-9);
    const int coarse = 251;
    double best_tau = tau, best = circle_rms_at(tau);
    if (const double at_zero = circle_rms_at(0.0); at_zero < best) {
      best = at_zero;
      best_tau = 0.0;
    }
    for (int i = 0; i < coarse; ++i) {
      const double t = tau - half_window + 2.0 * half_window * double(i) / double(coarse - 1);
      const double c = circle_rms_at(t);
      if (c < best) {
        best = c;
        best_tau = t;
      }
    }
    const double hop = 2.0 * half_window / double(coarse - 1);
    tau = golden_section_min(circle_rms_at, best_tau - hop, best_tau + hop, 1e-16);
  }

  const Eigen::VectorXcd z = remove_delay(trace, tau);

  // (2) Circle fit.
  const Circle circle = fit_circle(z);
  const double noise = point_noise_scale(z);
  if (circle.r < 5.0 * noise)
    throw fit_error("no resonance found: circle radius below the noise floor");

  // (3) Winding-angle fit for f0 and Ql.
  Eigen::VectorXcd centered(n);
  for (Eigen::Index i = 0; i < n; ++i)
    centered[i] = z[i] - std::complex<double>(circle.cx, circle.cy);
  const Eigen::VectorXd angles = unwrap(arg_of(centered));
  const PhaseFit phase = fit_phase(trace.freq_hz, angles);

  // (4) Off-resonant point, amplitude, rotation and mismatch angle.
  const std::complex<double> center(circle.cx, circle.cy);
  const std::complex<double> z_res =
      center + circle.r * std::exp(std::complex<double>(0.0, phase.theta0));
  const std::complex<double> z_inf = 2.0 * center - z_res;
  const double amplitude = std::abs(z_inf);
  if (amplitude < 10.0 * noise && amplitude < 1e-12)
    throw fit_error("reflection amplitude indistinguishable from zero");
  const double theta = std::arg(z_inf);
  const double phi = wrap_angle(std::arg(z_inf - center) - theta);

  ResonanceFit fit;
  fit.f0_hz = phase.f0;
  fit.q_loaded = phase.q_loaded;
  fit.q_coupling = phase.q_loaded * amplitude / circle.r;
  fit.mismatch_angle_rad = phi;
  fit.amplitude = amplitude;
  fit.phase_offset_rad = theta;
  fit.delay_s = tau;
  fit.iterations = phase.iterations;

  // (5) Joint maximum-likelihood polish of all parameters on the complex
  // residuals, seeded by the geometric solution. Its covariance carries the
  // parameter correlations the per-step estimates cannot see.
  const double span = trace.freq_hz[n - 1] - trace.freq_hz[0];
  const double linewidth = fit.f0_hz / fit.q_loaded;
  const double f0_seed = fit.f0_hz;
  // Dimensionless parameter vector: detuning in linewidths, log quality
  // factors and amplitude, angles, delay as phase turns across the span.
  const auto unpack = [&](const Eigen::VectorXd& p) {
    ReflectionModel m;
    m.f0_hz = f0_seed + p[0] * linewidth;
    m.q_loaded = std::exp(p[1]);
    m.q_coupling = std::exp(p[2]);
    m.mismatch_angle_rad = p[3];
    m.amplitude = std::exp(p[4]);
    m.phase_offset_rad = p[5];
    m.delay_s = p[6] / (2.0 * units::pi * span);
    return m;
  };
  const auto residual = [&](const Eigen::VectorXd& p) {
    const ReflectionModel m = unpack(p);
    Eigen::VectorXd r(2 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const std::complex<double> d = evaluate(m, trace.freq_hz[i]) - trace.s11[i];
      r[2 * i] = d.real();
      r[2 * i + 1] = d.imag();
    }
    return r;
  };
  Eigen::VectorXd p0(7);
  p0 << 0.0, std::log(fit.q_loaded), std::log(fit.q_coupling), phi, std::log(amplitude),
      theta, tau * 2.0 * units::pi * span;
  LevMarOptions polish_options;
  polish_options.max_iterations = 60;
  const LevMarResult polish = levmar_fit(residual, p0, polish_options);

  double var_phi = 0.0, var_log_ql = 0.0, var_log_qc = 0.0;
  double cov_ql_qc = 0.0, cov_ql_phi = 0.0, cov_qc_phi = 0.0;
  if (polish.converged && polish.rss <= residual(p0).squaredNorm() * (1.0 + 1e-9)) {
    const ReflectionModel m = unpack(polish.parameters);
    fit.f0_hz = m.f0_hz;
    fit.q_loaded = m.q_loaded;
    fit.q_coupling = m.q_coupling;
    fit.mismatch_angle_rad = wrap_angle(m.mismatch_angle_rad);
    fit.amplitude = m.amplitude;
    fit.phase_offset_rad = wrap_angle(m.phase_offset_rad);
    fit.delay_s = m.delay_s;
    fit.iterations += polish.iterations;
    var_log_ql = polish.covariance(1, 1);
    var_log_qc = polish.covariance(2, 2);
    var_phi = polish.covariance(3, 3);
    cov_ql_qc = polish.covariance(1, 2);
    cov_ql_phi = polish.covariance(1, 3);
    cov_qc_phi = polish.covariance(2, 3);
  } else {
    // Fall back to the per-step error estimates.
    const double var_center = 2.0 * circle.rms * circle.rms / double(n);
    const double var_radius = circle.rms * circle.rms / double(n);
    var_phi = phase.theta0_var + var_center / (circle.r * circle.r) +
              (var_center + var_radius + circle.r * circle.r * phase.theta0_var) /
                  (amplitude * amplitude);
    var_log_ql = phase.q_loaded_var / (fit.q_loaded * fit.q_loaded);
    var_log_qc = var_log_ql + var_radius / (circle.r * circle.r) +
                 (var_center + var_radius + circle.r * circle.r * phase.theta0_var) /
                     (amplitude * amplitude);
  }
  fit.mismatch_angle_sigma = std::sqrt(std::max(var_phi, 0.0));

  // Internal quality factor from 1/Ql = 1/Qi + cos(phi)/Qc.
  const double phi_fit = fit.mismatch_angle_rad;
  const double inv_qi = 1.0 / fit.q_loaded - std::cos(phi_fit) / fit.q_coupling;
  if (!(inv_qi > 0.0))
    throw fit_error("fit implies non-positive internal loss (Qi <= 0); "
                    "check coupling regime or trace quality");
  fit.q_internal = 1.0 / inv_qi;

  // Delta-method statistical sigma of 1/Qi over (log Ql, log Qc, phi).
  const double g_ql = -1.0 / fit.q_loaded;
  const double g_qc = std::cos(phi_fit) / fit.q_coupling;
  const double g_phi = std::sin(phi_fit) / fit.q_coupling;
  double var_inv_qi = g_ql * g_ql * var_log_ql + g_qc * g_qc * var_log_qc +
                      g_phi * g_phi * var_phi + 2.0 * g_ql * g_qc * cov_ql_qc +
                      2.0 * g_ql * g_phi * cov_ql_phi + 2.0 * g_qc * g_phi * cov_qc_phi;
  const double qi_stat_sigma = fit.q_internal * fit.q_internal *
                               std::sqrt(std::max(var_inv_qi, 0.0));

  // Fano band: Qi swept over the mismatch-angle uncertainty interval
  // (optionally widened to the worst-case sweep through zero mismatch),
  // broadened by twice the statistical sigma.
  double phi_lo = phi_fit - fit.mismatch_angle_sigma;
  double phi_hi = phi_fit + fit.mismatch_angle_sigma;
  if (options.worst_case_fano) {
    phi_lo = std::min(phi_lo, -std::abs(phi_fit) - fit.mismatch_angle_sigma);
    phi_hi = std::max(phi_hi, std::abs(phi_fit) + fit.mismatch_angle_sigma);
  }
  const bool spans_zero = phi_lo <= 0.0 && phi_hi >= 0.0;
  const double cos_max =
      spans_zero ? 1.0 : std::max(std::cos(phi_lo), std::cos(phi_hi));
  const double cos_min = std::min(std::cos(phi_lo), std::cos(phi_hi));
  const auto qi_at = [&](double c) {
    const double inv = 1.0 / fit.q_loaded - c / fit.q_coupling;
    return inv > 0.0 ? 1.0 / inv : std::numeric_limits<double>::infinity();
  };
  fit.q_internal_min = qi_at(cos_min);
  fit.q_internal_max = qi_at(cos_max);
  if (fit.q_internal_min > fit.q_internal_max) std::swap(fit.q_internal_min, fit.q_internal_max);
  fit.q_internal_min = std::min(fit.q_internal_min, fit.q_internal) - 2.0 * qi_stat_sigma;
  fit.q_internal_min = std::max(fit.q_internal_min, 0.0);
  if (std::isfinite(fit.q_internal_max))
    fit.q_internal_max = std::max(fit.q_internal_max, fit.q_internal) + 2.0 * qi_stat_sigma;

  // Full-model residual, relative to the amplitude.
  const ReflectionModel model = fit.model();
  double ss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    ss += std::norm(evaluate(model, trace.freq_hz[i]) - trace.s11[i]);
  fit.residual_rms = std::sqrt(ss / double(n)) / fit.amplitude;
  return fit;
}

namespace {

Eigen::VectorXd boxcar(const Eigen::VectorXd& x, Eigen::Index half) {
  const Eigen::Index n = x.size();
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, i - half);
    const Eigen::Index hi = std::min<Eigen::Index>(n - 1, i + half);
    out[i] = x.segment(lo, hi - lo + 1).mean();
  }
  return out;
}

struct Dip {
  Eigen::Index index;
  double prominence;
};

std::vector<Dip> find_dips(const Eigen::VectorXd& s, double min_prominence) {
  std::vector<Dip> dips;
  const Eigen::Index n = s.size();
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    if (!(s[i] <= s[i - 1] && s[i] < s[i + 1])) continue;
    const double left = s.head(i + 1).maxCoeff();
    const double right = s.tail(n - i).maxCoeff();
    const double prom = std::min(left, right) - s[i];
    if (prom >= min_prominence) dips.push_back({i, prom});
  }
  // Merge plateaus/near-duplicates: keep the deepest dip in any run of
  // candidates closer than 1/32 of the trace.
  std::vector<Dip> merged;
  for (const auto& d : dips) {
    if (!merged.empty() && d.index - merged.back().index < n / 32) {
      if (s[d.index] < s[merged.back().index]) merged.back() = d;
    } else {
      merged.push_back(d);
    }
  }
  return merged;
}

double robust_mad(const Eigen::VectorXd& x) {
  std::vector<double> v(x.data(), x.data() + x.size());
  const auto med_of = [](std::vector<double> w) {
    std::nth_element(w.begin(), w.begin() + w.size() / 2, w.end());
    return w[w.size() / 2];
  };
  const double med = med_of(v);
  for (auto& e : v) e = std::abs(e - med);
  return med_of(v);
}

ComplexTrace slice(const ComplexTrace& trace, Eigen::Index begin, Eigen::Index count) {
  ComplexTrace out;
  out.freq_hz = trace.freq_hz.segment(begin, count);
  out.s11 = trace.s11.segment(begin, count);
  out.power_dbm = trace.power_dbm;
  return out;
}

}  // namespace

std::vector<ComplexTrace> detect_doublet(const ComplexTrace& trace) {
  trace.validate();
  const Eigen::Index n = trace.freq_hz.size();
  const Eigen::Index half = std::max<Eigen::Index>(2, n / 128);

  Eigen::VectorXd mag(n);
  for (Eigen::Index i = 0; i < n; ++i) mag[i] = std::abs(trace.s11[i]);
  const Eigen::VectorXd smooth = boxcar(mag, half);

  // Noise scale of the raw magnitude from first differences.
  Eigen::VectorXd dmag(n - 1);
  for (Eigen::Index i = 0; i + 1 < n; ++i) dmag[i] = mag[i + 1] - mag[i];
  const double sigma = 1.4826 * robust_mad(dmag) / std::sqrt(2.0);
  const double floor_level = 0.02 * smooth.maxCoeff();
  const auto dips = find_dips(smooth, std::max(6.0 * sigma, floor_level));

  // Group-delay confirmation: dips of a real resonance come with a local
  // group-delay peak.
  const Eigen::VectorXd phase = unwrap(arg_of(trace.s11));
  Eigen::VectorXd gd(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, i - 1);
    const Eigen::Index hi = std::min<Eigen::Index>(n - 1, i + 1);
    gd[i] = -(phase[hi] - phase[lo]) / (2.0 * units::pi * (trace.freq_hz[hi] - trace.freq_hz[lo]));
  }
  const Eigen::VectorXd gd_smooth = boxcar(gd, half);
  const double gd_mad = robust_mad(gd_smooth);
  const auto gd_peaks = find_dips(-gd_smooth, 6.0 * gd_mad);

  std::vector<Dip> confirmed;
  for (const auto& d : dips) {
    bool ok = false;
    for (const auto& p : gd_peaks)
      if (std::abs(p.index - d.index) <= 4 * half) ok = true;
    if (ok) confirmed.push_back(d);
  }
  if (confirmed.empty() && !gd_peaks.empty() && !dips.empty()) confirmed = dips;

  if (confirmed.empty()) return {};
  if (confirmed.size() == 1) return {trace};
  if (confirmed.size() > 2) {
    std::vector<double> freqs;
    for (const auto& d : confirmed) freqs.push_back(trace.freq_hz[d.index]);
    throw ambiguity_error("detect_doublet: more than two candidate resonances", freqs);
  }

  const double f_mid =
      0.5 * (trace.freq_hz[confirmed[0].index] + trace.freq_hz[confirmed[1].index]);
  Eigen::Index split = 0;
  while (split < n && trace.freq_hz[split] < f_mid) ++split;
  return {slice(trace, 0, split), slice(trace, split, n - split)};
}

double photon_number(double q_coupling, double f0_hz, double power_dbm) {
  if (!(q_coupling > 0.0) || !(f0_hz > 0.0))
    throw validation_error("photon_number: Qc and f0 must be positive");
  const double p_watt = units::dbm_to_watt(power_dbm);
  const double omega = 2.0 * units::pi * f0_hz;
  return 2.0 * q_coupling * p_watt / (units::hbar_J_s * omega * omega);
}

PowerSweepResult qi_vs_power(const std::vector<ComplexTrace>& traces,
                             const FitOptions& options) {
  if (traces.size() < 2)
    throw validation_error("qi_vs_power: need at least two powers");
  for (const auto& t : traces)
    if (!t.power_dbm)
      throw validation_error("qi_vs_power: every trace needs a drive power");

  PowerSweepResult result;
  result.points.resize(traces.size());

  struct Aux {
    bool jump = false;
    bool ok = false;
  };
  std::vector<Aux> aux(traces.size());

  for (std::size_t i = 0; i < traces.size(); ++i) {
    auto& pt = result.points[i];
    pt.power_dbm = *traces[i].power_dbm;
    // Discontinuity check: a bifurcated response jumps between branches.
    const auto& z = traces[i].s11;
    const Eigen::Index n = z.size();
    Eigen::VectorXd steps(n - 1);
    for (Eigen::Index k = 0; k + 1 < n; ++k) steps[k] = std::abs(z[k + 1] - z[k]);
    for (Eigen::Index k = 2; k + 3 < n; ++k) {
      const double neighborhood = std::max({steps[k - 2], steps[k - 1], steps[k + 1], steps[k + 2]});
      if (steps[k] > 10.0 * neighborhood && steps[k] > 30.0 * point_noise_scale(z)) {
        aux[i].jump = true;
        break;
      }
    }
    try {
      const ResonanceFit fit = fit_reflection(traces[i], options);
      pt.nbar = photon_number(fit.q_coupling, fit.f0_hz, pt.power_dbm);
      pt.q_internal = fit.q_internal;
      pt.q_internal_min = fit.q_internal_min;
      pt.q_internal_max = fit.q_internal_max;
      pt.residual_rms = fit.residual_rms;
      aux[i].ok = true;
    } catch (const error& e) {
      pt.error = e.what();
    }
  }

  // Residual baseline from the lowest powers.
  std::vector<std::size_t> order(traces.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return result.points[a].power_dbm < result.points[b].power_dbm;
  });
  std::vector<double> base;
  for (std::size_t k = 0; k < order.size() && base.size() < 3; ++k)
    if (aux[order[k]].ok) base.push_back(result.points[order[k]].residual_rms);
  if (base.empty())
    throw fit_error("qi_vs_power: no trace fit successfully");
  std::sort(base.begin(), base.end());
  const double baseline = base[base.size() / 2];

  bool bifurcated = false;
  for (std::size_t k = 0; k < order.size(); ++k) {
    auto& pt = result.points[order[k]];
    const bool beyond_baseline = k >= base.size();
    const bool trips =
        aux[order[k]].jump ||
        (beyond_baseline && aux[order[k]].ok && pt.residual_rms > 5.0 * baseline) ||
        (beyond_baseline && !aux[order[k]].ok);
    if (!bifurcated && trips) {
      bifurcated = true;
      result.bifurcation_power_dbm = pt.power_dbm;
    }
    if (bifurcated) pt.excluded = true;
  }
  return result;
}

}  // namespace resfit
}  // namespace ringforge
