#pragma once

#include <cstdint>
#include <optional>

#include "ringforge/noise_psd.hpp"
#include "ringforge/photon_response.hpp"
#include "ringforge/resonance_fit.hpp"

// Deterministic generators for synthetic traces, time series and shift
// curves: the independent oracles the fitters are validated against. All
// outputs are pure functions of the spec (including its seed).

namespace ringforge::synth {

struct S11Spec {
  std::uint64_t seed = 0;
  double f0_hz = 5e9;
  double q_internal = 1e5;
  double q_coupling = 5e4;
  double mismatch_angle_rad = 0.0;
  double delay_s = 0.0;
  double amplitude = 1.0;
  double phase_offset_rad = 0.0;
  std::optional<double> snr_db;  // 20*log10(amplitude / E|noise|); absent = noiseless
  int n_points = 2001;
  double span_linewidths = 20.0;  // in loaded linewidths, >= 10
  std::optional<double> power_dbm;

  double q_loaded() const;
};

ComplexTrace synth_s11(const S11Spec& spec);

struct DoubletSpec {
  std::uint64_t seed = 0;
  double f0_hz = 5e9;             // lower mode
  double separation_hz = 25e6;
  double q_internal_1 = 1e5;
  double q_coupling_1 = 5e4;
  double q_internal_2 = 1e5;
  double q_coupling_2 = 2e5;      // couplings differing by ~4x by default
  double mismatch_angle_rad = 0.0;
  double delay_s = 0.0;
  double amplitude = 1.0;
  double phase_offset_rad = 0.0;
  std::optional<double> snr_db;
  int n_points = 6001;
};

ComplexTrace synth_doublet(const DoubletSpec& spec);

struct TimeSeriesSpec {
  std::uint64_t seed = 0;
  double sample_rate_hz = 100.0;
  int n_samples = 1 << 16;
  double S0 = 0.0;           // white PSD level, Hz^2/Hz
  double S1 = 0.0;           // 1/f^alpha amplitude
  double alpha = 1.0;
  double lorentz_amp = 0.0;  // Hz^2/Hz
  double lorentz_fc_hz = 1.0;
};

/// Spectral synthesis: Hermitian Fourier coefficients drawn with variance
/// proportional to the target one-sided PSD, inverse transformed to a real
/// series.
TimeSeries synth_timeseries(const TimeSeriesSpec& spec);

/// Target one-sided PSD of a TimeSeriesSpec at frequency f.
double target_psd(const TimeSeriesSpec& spec, double f_hz);

struct ShiftCurveSpec {
  std::uint64_t seed = 0;
  double k11_hz = -40.0;
  double anomaly_amp_hz = 0.0;   // signed
  double anomaly_scale = 10.0;   // n_c
  double noise_sigma_hz = 0.0;
  double nbar_min = 0.01;
  double decades = 4.0;
  int n_points = 40;
};

/// Logarithmic nbar grid; shift per the saturating-plus-linear model with
/// Gaussian noise; first point re-zeroed.
ShiftCurve synth_shift_curve(const ShiftCurveSpec& spec);

}  // namespace ringforge::synth
