#include "ringforge/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ringforge/errors.hpp"

namespace ringforge::io {

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open '" + path + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw io_error("write failure on '" + path + "'");
}

double parse_double(const std::string& token, const std::string& context) {
  std::string t = token;
  // Trim ASCII whitespace.
  const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!t.empty() && is_space(t.front())) t.erase(t.begin());
  while (!t.empty() && is_space(t.back())) t.pop_back();
  double value = 0.0;
  const char* begin = t.data();
  const char* end = t.data() + t.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end)
    throw io_error(context + ": '" + token + "' is not a number");
  return value;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cell);
      cell.clear();
    } else {
      cell += c;
    }
  }
  cells.push_back(cell);
  return cells;
}

std::string format_sig6(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.6g", value);
  return buffer;
}

namespace {

struct CsvReader {
  CsvReader(const std::string& text, const std::string& label)
      : path_(label), stream_(text) {}

  bool next_line(std::string& line) {
    while (std::getline(stream_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw io_error(path_ + " line " + std::to_string(line_no_) + ": " + what);
  }

  std::string context(const std::string& column) const {
    return path_ + " line " + std::to_string(line_no_) + " column " + column;
  }

  const std::string path_;
  std::istringstream stream_;
  std::size_t line_no_ = 0;
};

}  // namespace

ComplexTrace parse_trace_csv(const std::string& text, const std::string& label) {
  const std::string& path = label;
  CsvReader reader(text, label);
  std::string line;
  if (!reader.next_line(line)) throw io_error(path + ": empty trace file");
  if (line != "freq_hz,re,im")
    throw io_error(path + ": expected header 'freq_hz,re,im', got '" + line + "'");

  std::vector<double> freq, re, im;
  while (reader.next_line(line)) {
    const auto cells = split_csv(line);
    if (cells.size() != 3) reader.fail("expected 3 cells");
    freq.push_back(parse_double(cells[0], reader.context("freq_hz")));
    re.push_back(parse_double(cells[1], reader.context("re")));
    im.push_back(parse_double(cells[2], reader.context("im")));
  }
  if (freq.empty()) throw io_error(path + ": no data rows");

  ComplexTrace trace;
  trace.freq_hz = Eigen::Map<Eigen::VectorXd>(freq.data(), Eigen::Index(freq.size()));
  trace.s11.resize(Eigen::Index(freq.size()));
  for (std::size_t i = 0; i < freq.size(); ++i)
    trace.s11[Eigen::Index(i)] = {re[i], im[i]};
  return trace;
}

ComplexTrace read_trace_csv(const std::string& path) {
  return parse_trace_csv(read_text_file(path), path);
}

std::string trace_to_csv(const ComplexTrace& trace) {
  std::string out = "freq_hz,re,im\n";
  char buffer[120];
  for (Eigen::Index i = 0; i < trace.freq_hz.size(); ++i) {
    std::snprintf(buffer, sizeof buffer, "%.17g,%.17g,%.17g\n", trace.freq_hz[i],
                  trace.s11[i].real(), trace.s11[i].imag());
    out += buffer;
  }
  return out;
}

ComplexTrace read_touchstone_s1p(const std::string& path) {
  CsvReader reader(read_text_file(path), path);
  std::string line;
  double unit_scale = 1e9;  // Touchstone default unit is GHz
  bool format_ri = true;
  bool saw_option = false;
  std::vector<double> freq, re, im;

  while (reader.next_line(line)) {
    if (line[0] == '!') continue;
    if (line[0] == '#') {
      if (saw_option) reader.fail("multiple option lines");
      saw_option = true;
      std::istringstream opts(line.substr(1));
      std::string token;
      while (opts >> token) {
        std::string upper;
        for (char c : token) upper += char(std::toupper(static_cast<unsigned char>(c)));
        if (upper == "HZ") unit_scale = 1.0;
        else if (upper == "KHZ") unit_scale = 1e3;
        else if (upper == "MHZ") unit_scale = 1e6;
        else if (upper == "GHZ") unit_scale = 1e9;
        else if (upper == "RI") format_ri = true;
        else if (upper == "MA" || upper == "DB")
          throw io_error(path + ": only RI-format Touchstone files are supported");
      }
      continue;
    }
    std::istringstream cells(line);
    double f, a, b;
    if (!(cells >> f >> a >> b)) reader.fail("expected 'freq re im'");
    freq.push_back(f * unit_scale);
    re.push_back(a);
    im.push_back(b);
  }
  if (!format_ri) throw io_error(path + ": only RI format supported");
  if (freq.empty()) throw io_error(path + ": no data rows");

  ComplexTrace trace;
  trace.freq_hz = Eigen::Map<Eigen::VectorXd>(freq.data(), Eigen::Index(freq.size()));
  trace.s11.resize(Eigen::Index(freq.size()));
  for (std::size_t i = 0; i < freq.size(); ++i)
    trace.s11[Eigen::Index(i)] = {re[i], im[i]};
  return trace;
}

ComplexTrace read_trace(const std::string& path) {
  const auto dot = path.rfind('.');
  std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  for (auto& c : ext) c = char(std::tolower(static_cast<unsigned char>(c)));
  if (ext == "s1p") return read_touchstone_s1p(path);
  return read_trace_csv(path);
}

std::vector<std::pair<std::string, double>> read_sweep_manifest(const std::string& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw io_error(path + ": JSON parse failure: " + e.what());
  }
  if (!doc.is_array()) throw io_error(path + ": expected a JSON array");
  const auto base = std::filesystem::path(path).parent_path();
  std::vector<std::pair<std::string, double>> out;
  for (const auto& item : doc) {
    if (!item.is_object() || !item.contains("file") || !item.contains("power_dbm"))
      throw io_error(path + ": each entry needs 'file' and 'power_dbm'");
    std::filesystem::path file = item.at("file").get<std::string>();
    if (file.is_relative()) file = base / file;
    out.emplace_back(file.string(), item.at("power_dbm").get<double>());
  }
  if (out.empty()) throw io_error(path + ": empty sweep manifest");
  return out;
}

TimeSeries read_timeseries_csv(const std::string& path) {
  return parse_timeseries_csv(read_text_file(path), path);
}

TimeSeries parse_timeseries_csv(const std::string& text, const std::string& label) {
  const std::string& path = label;
  CsvReader reader(text, label);
  std::string line;
  if (!reader.next_line(line)) throw io_error(path + ": empty time-series file");
  if (line != "t_s,f0_hz")
    throw io_error(path + ": expected header 't_s,f0_hz', got '" + line + "'");

  std::vector<double> t, v;
  while (reader.next_line(line)) {
    const auto cells = split_csv(line);
    if (cells.size() != 2) reader.fail("expected 2 cells");
    t.push_back(parse_double(cells[0], reader.context("t_s")));
    v.push_back(parse_double(cells[1], reader.context("f0_hz")));
  }
  if (t.size() < 2) throw io_error(path + ": need at least 2 samples");

  const double dt = t[1] - t[0];
  if (!(dt > 0.0)) throw io_error(path + ": non-increasing time column");
  for (std::size_t i = 1; i < t.size(); ++i) {
    const double gap = t[i] - t[i - 1];
    if (std::abs(gap - dt) > 1e-6 * dt)
      throw io_error(path + ": non-uniform sampling at row " + std::to_string(i + 1));
  }

  TimeSeries series;
  series.dt_s = dt;
  series.values_hz = Eigen::Map<Eigen::VectorXd>(v.data(), Eigen::Index(v.size()));
  return series;
}

std::string timeseries_to_csv(const TimeSeries& series) {
  std::string out = "t_s,f0_hz\n";
  char buffer[80];
  for (Eigen::Index i = 0; i < series.values_hz.size(); ++i) {
    std::snprintf(buffer, sizeof buffer, "%.17g,%.17g\n", double(i) * series.dt_s,
                  series.values_hz[i]);
    out += buffer;
  }
  return out;
}

std::string spectrum_to_csv(const NoiseSpectrum& spectrum, const NoiseModelFit* fit) {
  std::string out = "f_hz,asd_hzrthz,model_asd\n";
  char buffer[120];
  for (Eigen::Index i = 0; i < spectrum.freq_hz.size(); ++i) {
    const double model = fit ? noise::asd_at(*fit, spectrum.freq_hz[i]) : 0.0;
    std::snprintf(buffer, sizeof buffer, "%.17g,%.17g,%.17g\n", spectrum.freq_hz[i],
                  spectrum.asd_hz_rthz[i], model);
    out += buffer;
  }
  return out;
}

ShiftCurve read_shift_curve_csv(const std::string& path) {
  return parse_shift_curve_csv(read_text_file(path), path);
}

ShiftCurve parse_shift_curve_csv(const std::string& text, const std::string& label) {
  const std::string& path = label;
  CsvReader reader(text, label);
  std::string line;
  if (!reader.next_line(line)) throw io_error(path + ": empty shift-curve file");
  bool has_sigma = false;
  if (line == "nbar,df_hz,sigma_hz") has_sigma = true;
  else if (line != "nbar,df_hz")
    throw io_error(path + ": expected header 'nbar,df_hz[,sigma_hz]', got '" + line + "'");

  std::vector<double> nbar, df, sigma;
  while (reader.next_line(line)) {
    const auto cells = split_csv(line);
    if (cells.size() != (has_sigma ? 3u : 2u)) reader.fail("cell count mismatch");
    nbar.push_back(parse_double(cells[0], reader.context("nbar")));
    df.push_back(parse_double(cells[1], reader.context("df_hz")));
    if (has_sigma) sigma.push_back(parse_double(cells[2], reader.context("sigma_hz")));
  }
  if (nbar.empty()) throw io_error(path + ": no data rows");

  ShiftCurve curve;
  curve.nbar = Eigen::Map<Eigen::VectorXd>(nbar.data(), Eigen::Index(nbar.size()));
  curve.df_hz = Eigen::Map<Eigen::VectorXd>(df.data(), Eigen::Index(df.size()));
  if (has_sigma)
    curve.sigma_hz = Eigen::Map<Eigen::VectorXd>(sigma.data(), Eigen::Index(sigma.size()));
  return curve;
}

std::string shift_curve_to_csv(const ShiftCurve& curve) {
  const bool has_sigma = curve.sigma_hz.has_value();
  std::string out = has_sigma ? "nbar,df_hz,sigma_hz\n" : "nbar,df_hz\n";
  char buffer[120];
  for (Eigen::Index i = 0; i < curve.nbar.size(); ++i) {
    if (has_sigma)
      std::snprintf(buffer, sizeof buffer, "%.17g,%.17g,%.17g\n", curve.nbar[i],
                    curve.df_hz[i], (*curve.sigma_hz)[i]);
    else
      std::snprintf(buffer, sizeof buffer, "%.17g,%.17g\n", curve.nbar[i], curve.df_hz[i]);
    out += buffer;
  }
  return out;
}

}  // namespace ringforge::io
