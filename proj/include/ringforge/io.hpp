#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ringforge/noise_psd.hpp"
#include "ringforge/photon_response.hpp"
#include "ringforge/resonance_fit.hpp"

namespace ringforge::io {

// ---- low-level helpers -----------------------------------------------------

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

/// Locale-independent strict double parse; throws io_error with `context`.
double parse_double(const std::string& token, const std::string& context);

/// Splits one CSV line on commas (no quoting; the formats here never need it).
std::vector<std::string> split_csv(const std::string& line);

/// printf %.*g with 6 significant digits, the canonical table precision.
std::string format_sig6(double value);

// ---- trace formats ----------------------------------------------------------

/// CSV with header freq_hz,re,im.
ComplexTrace read_trace_csv(const std::string& path);
ComplexTrace parse_trace_csv(const std::string& text, const std::string& label);
std::string trace_to_csv(const ComplexTrace& trace);

/// Touchstone .s1p subset: RI format, HZ/KHZ/MHZ/GHZ unit lines, '!' comments.
ComplexTrace read_touchstone_s1p(const std::string& path);

/// Dispatch by extension (.csv vs .s1p/.S1P).
ComplexTrace read_trace(const std::string& path);

/// Power sweep manifest: JSON array of {"file": ..., "power_dbm": ...}.
/// Paths are resolved relative to the manifest location.
std::vector<std::pair<std::string, double>> read_sweep_manifest(const std::string& path);

// ---- time series / spectra ---------------------------------------------------

/// CSV with header t_s,f0_hz. The sample interval is taken from the first
/// pair of rows and all further gaps must match it to 1e-6 relative.
TimeSeries read_timeseries_csv(const std::string& path);
TimeSeries parse_timeseries_csv(const std::string& text, const std::string& label);
std::string timeseries_to_csv(const TimeSeries& series);

/// Plot data: f_hz,asd_hzrthz,model_asd (model column from `fit`).
std::string spectrum_to_csv(const NoiseSpectrum& spectrum, const NoiseModelFit* fit = nullptr);

// ---- shift curves -------------------------------------------------------------

/// CSV with header nbar,df_hz[,sigma_hz].
ShiftCurve read_shift_curve_csv(const std::string& path);
ShiftCurve parse_shift_curve_csv(const std::string& text, const std::string& label);
std::string shift_curve_to_csv(const ShiftCurve& curve);

}  // namespace ringforge::io
