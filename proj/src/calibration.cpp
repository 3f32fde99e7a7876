#include "ringforge/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "ringforge/errors.hpp"
#include "ringforge/io.hpp"
#include "ringforge/ring_model.hpp"
#include "ringforge/units.hpp"

namespace ringforge::cal {

namespace {

constexpr double consistency_level = 0.02;  // table values carry 2-3 digits

const std::vector<std::string>& columns() {
  static const std::vector<std::string> cols = {"id",     "r_in_um", "w_nm",  "l_um",
                                                "p_nm",   "t_nm",    "f0_GHz", "Lsq_pH",
                                                "L_uH",   "C_fF",    "Z_kOhm", "Qc"};
  return cols;
}

void validate_record(const DeviceRecord& r, const std::string& where) {
  const auto fail = [&](const std::string& what) {
    throw validation_error("device table " + where + ", id '" + r.id + "': " + what);
  };
  if (r.id.empty()) fail("empty id");
  if (!(r.r_in_um > 0.0)) fail("r_in_um must be positive");
  if (!(r.w_nm > 0.0)) fail("w_nm must be positive");
  if (!(r.l_um > 0.0)) fail("l_um must be positive");
  if (!(r.p_nm > 0.0)) fail("p_nm must be positive");
  if (!(r.t_nm > 0.0)) fail("t_nm must be positive");
  if (!(r.w_nm < r.p_nm)) fail("w_nm must be smaller than p_nm");
  if (!(r.f0_GHz > 0.0)) fail("f0_GHz must be positive");
  if (!(r.Lsq_pH > 0.0)) fail("Lsq_pH must be positive");
  if (!(r.L_uH > 0.0)) fail("L_uH must be positive");
  if (!(r.C_fF > 0.0)) fail("C_fF must be positive");
  if (!(r.Z_kOhm > 0.0)) fail("Z_kOhm must be positive");
  if (r.Qc && !(*r.Qc > 0.0)) fail("Qc must be positive when present");
}

void finalize(DeviceTable& table) {
  std::map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < table.records.size(); ++i) {
    const auto& id = table.records[i].id;
    auto [it, inserted] = seen.emplace(id, i);
    if (!inserted)
      throw validation_error("device table " + table.source_label + ": duplicate id '" + id +
                             "' (rows " + std::to_string(it->second + 1) + " and " +
                             std::to_string(i + 1) + ")");
  }

  table.rings = group_rings(table.records);
  table.ring_f0_GHz.assign(table.records.size(), 0.0);
  for (const auto& ring : table.rings) {
    double f_first = table.records[ring.front()].f0_GHz;
    for (auto idx : ring) f_first = std::min(f_first, table.records[idx].f0_GHz);
    for (auto idx : ring) table.ring_f0_GHz[idx] = f_first;
  }

  table.flags.clear();
  for (std::size_t i = 0; i < table.records.size(); ++i) {
    const auto& r = table.records[i];
    const double l_model = ring::total_inductance(r.l_um, r.w_nm, r.Lsq_pH);
    const double dl = std::abs(r.L_uH - l_model) / r.L_uH;
    if (dl > consistency_level)
      table.flags.push_back({r.id, "L_uH", dl, "L deviates from (l/w)*Lsq"});
    // The impedance column is defined at the ring's first fundamental mode.
    const double z_model = ring::impedance(table.ring_f0_GHz[i], r.L_uH);
    const double dz = std::abs(r.Z_kOhm - z_model) / r.Z_kOhm;
    if (dz > consistency_level)
      table.flags.push_back({r.id, "Z_kOhm", dz, "Z deviates from 2*pi*f0*L at first mode"});
  }
}

TableFormat detect_format(const std::string& path, TableFormat format) {
  if (format != TableFormat::Auto) return format;
  const auto dot = path.rfind('.');
  const std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  if (ext == "json" || ext == "JSON") return TableFormat::Json;
  return TableFormat::Csv;
}

DeviceTable parse_device_json(const std::string& text, const std::string& label) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw io_error("device table " + label + ": JSON parse failure: " + e.what());
  }
  if (!doc.is_array())
    throw io_error("device table " + label + ": expected a JSON array of row objects");
  DeviceTable table;
  table.source_label = label;
  std::size_t row = 0;
  for (const auto& item : doc) {
    ++row;
    const std::string where = "row " + std::to_string(row);
    if (!item.is_object()) throw io_error("device table " + label + ": " + where + " not an object");
    for (const auto& col : columns()) {
      if (col != "Qc" && !item.contains(col))
        throw io_error("device table " + label + ": " + where + " missing column '" + col + "'");
    }
    DeviceRecord r;
    try {
      r.id = item.at("id").is_string() ? item.at("id").get<std::string>()
                                       : item.at("id").dump();
      r.r_in_um = item.at("r_in_um").get<double>();
      r.w_nm = item.at("w_nm").get<double>();
      r.l_um = item.at("l_um").get<double>();
      r.p_nm = item.at("p_nm").get<double>();
      r.t_nm = item.at("t_nm").get<double>();
      r.f0_GHz = item.at("f0_GHz").get<double>();
      r.Lsq_pH = item.at("Lsq_pH").get<double>();
      r.L_uH = item.at("L_uH").get<double>();
      r.C_fF = item.at("C_fF").get<double>();
      r.Z_kOhm = item.at("Z_kOhm").get<double>();
      if (item.contains("Qc") && !item.at("Qc").is_null())
        r.Qc = item.at("Qc").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw io_error("device table " + label + ": " + where + ": " + e.what());
    }
    validate_record(r, where);
    table.records.push_back(std::move(r));
  }
  if (table.records.empty())
    throw io_error("device table " + label + ": no rows");
  finalize(table);
  return table;
}

}  // namespace

std::vector<std::vector<std::size_t>> group_rings(const std::vector<DeviceRecord>& records) {
  using Key = std::tuple<double, double, double, double, double, double>;
  std::map<Key, std::vector<std::size_t>> groups;
  std::vector<Key> order;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    Key key{r.r_in_um, r.w_nm, r.l_um, r.p_nm, r.t_nm, r.Lsq_pH};
    auto it = groups.find(key);
    if (it == groups.end()) {
      groups.emplace(key, std::vector<std::size_t>{i});
      order.push_back(key);
    } else {
      it->second.push_back(i);
    }
  }
  std::vector<std::vector<std::size_t>> out;
  out.reserve(order.size());
  for (const auto& key : order) out.push_back(groups.at(key));
  return out;
}

DeviceTable parse_device_csv(const std::string& text, const std::string& label) {
  std::istringstream stream(text);
  std::string line;
  std::size_t line_no = 0;
  std::string header;
  while (std::getline(stream, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    header = line;
    break;
  }
  if (header.empty())
    throw io_error("device table " + label + ": empty file");
  if (header != device_csv_header)
    throw io_error("device table " + label + ": header mismatch, expected '" +
                   std::string(device_csv_header) + "' got '" + header + "'");

  DeviceTable table;
  table.source_label = label;
  while (std::getline(stream, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = io::split_csv(line);
    if (cells.size() != columns().size())
      throw io_error("device table " + label + ": line " + std::to_string(line_no) + " has " +
                     std::to_string(cells.size()) + " cells, expected " +
                     std::to_string(columns().size()));
    const std::string where = "line " + std::to_string(line_no);
    DeviceRecord r;
    r.id = cells[0];
    const auto num = [&](std::size_t col) {
      return io::parse_double(cells[col], label + " " + where + " column '" + columns()[col] + "'");
    };
    r.r_in_um = num(1);
    r.w_nm = num(2);
    r.l_um = num(3);
    r.p_nm = num(4);
    r.t_nm = num(5);
    r.f0_GHz = num(6);
    r.Lsq_pH = num(7);
    r.L_uH = num(8);
    r.C_fF = num(9);
    r.Z_kOhm = num(10);
    if (!cells[11].empty()) r.Qc = num(11);
    validate_record(r, where);
    table.records.push_back(std::move(r));
  }
  if (table.records.empty())
    throw io_error("device table " + label + ": no data rows");
  finalize(table);
  return table;
}

DeviceTable load_device_table(const std::string& path, TableFormat format) {
  const std::string text = io::read_text_file(path);
  if (detect_format(path, format) == TableFormat::Json)
    return parse_device_json(text, path);
  return parse_device_csv(text, path);
}

std::string device_table_to_csv(const DeviceTable& table) {
  std::string out = device_csv_header;
  out += '\n';
  for (const auto& r : table.records) {
    out += r.id;
    for (double v : {r.r_in_um, r.w_nm, r.l_um, r.p_nm, r.t_nm, r.f0_GHz, r.Lsq_pH, r.L_uH,
                     r.C_fF, r.Z_kOhm}) {
      out += ',';
      out += io::format_sig6(v);
    }
    out += ',';
    if (r.Qc) out += io::format_sig6(*r.Qc);
    out += '\n';
  }
  return out;
}

std::string device_table_to_json(const DeviceTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : table.records) {
    nlohmann::json row{{"id", r.id},       {"r_in_um", r.r_in_um}, {"w_nm", r.w_nm},
                       {"l_um", r.l_um},   {"p_nm", r.p_nm},       {"t_nm", r.t_nm},
                       {"f0_GHz", r.f0_GHz}, {"Lsq_pH", r.Lsq_pH}, {"L_uH", r.L_uH},
                       {"C_fF", r.C_fF},   {"Z_kOhm", r.Z_kOhm}};
    if (r.Qc)
      row["Qc"] = *r.Qc;
    else
      row["Qc"] = nullptr;
    rows.push_back(std::move(row));
  }
  return rows.dump(2) + "\n";
}

void write_device_table(const DeviceTable& table, const std::string& path, TableFormat format) {
  if (detect_format(path, format) == TableFormat::Json)
    io::write_text_file(path, device_table_to_json(table));
  else
    io::write_text_file(path, device_table_to_csv(table));
}

KcFit fit_kC(const DeviceTable& table) {
  std::size_t usable = 0;
  double srr = 0.0, src = 0.0;
  for (const auto& r : table.records) {
    if (r.C_fF > 0.0 && r.r_in_um > 0.0) {
      ++usable;
      srr += r.r_in_um * r.r_in_um;
      src += r.r_in_um * r.C_fF;
    }
  }
  if (usable < 2)
    throw validation_error("fit_kC: need at least 2 records with C and r_in");

  KcFit fit;
  fit.k_C_fF_per_um = src / srr;
  double rss = 0.0;
  fit.relative_residuals.reserve(table.records.size());
  for (const auto& r : table.records) {
    const double pred = fit.k_C_fF_per_um * r.r_in_um;
    const double res = (r.C_fF - pred) / pred;
    fit.relative_residuals.push_back(res);
    fit.max_abs_residual = std::max(fit.max_abs_residual, std::abs(res));
    rss += (r.C_fF - pred) * (r.C_fF - pred);
  }
  if (usable > 1) fit.stderr_fF_per_um = std::sqrt(rss / double(usable - 1) / srr);
  return fit;
}

SheetInductanceFit fit_sheet_inductance(std::span<const DeviceRecord> records,
                                        double k_C_fF_per_um) {
  if (records.empty())
    throw validation_error("fit_sheet_inductance: empty record set");
  if (!(k_C_fF_per_um > 0.0))
    throw validation_error("fit_sheet_inductance: k_C must be positive");

  // f0 = a * u with u = 1/sqrt(Lsq), a = (1/pi) sqrt(w / (l * kC * r_in)); the
  // least squares over Lsq is exact in u.
  double sa2 = 0.0, saf = 0.0;
  for (const auto& r : records) {
    const double w = r.w_nm * units::nm_to_m;
    const double l = r.l_um * units::um_to_m;
    const double c = k_C_fF_per_um * r.r_in_um * units::fF_to_F;
    const double a = (1.0 / units::pi) * std::sqrt(w / (l * c));
    const double f = r.f0_GHz * units::GHz_to_Hz;
    sa2 += a * a;
    saf += a * f;
  }
  const double u = saf / sa2;
  SheetInductanceFit fit;
  fit.Lsq_pH = 1.0 / (u * u) / units::pH_to_H;

  double ss = 0.0;
  for (const auto& r : records) {
    const double w = r.w_nm * units::nm_to_m;
    const double l = r.l_um * units::um_to_m;
    const double c = k_C_fF_per_um * r.r_in_um * units::fF_to_F;
    const double f_model = (1.0 / units::pi) * std::sqrt(w / (l * c)) * u;
    const double f = r.f0_GHz * units::GHz_to_Hz;
    ss += (f_model / f - 1.0) * (f_model / f - 1.0);
  }
  fit.rms_relative_residual = std::sqrt(ss / double(records.size()));
  return fit;
}

namespace {

OriginFit origin_fit(const std::vector<double>& x, const std::vector<double>& y) {
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  OriginFit fit;
  fit.slope = sxy / sxx;
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double pred = fit.slope * x[i];
    rss += (y[i] - pred) * (y[i] - pred);
    fit.max_relative_deviation =
        std::max(fit.max_relative_deviation, std::abs(y[i] - pred) / std::abs(pred));
  }
  fit.r_squared = 1.0 - rss / syy;
  return fit;
}

}  // namespace

ScalingReport validate_scaling(const DeviceTable& table) {
  if (table.rings.size() < 3)
    throw validation_error("validate_scaling: need at least 3 rings");

  std::vector<double> xz, yz, xf, yf, prod;
  for (const auto& ring_rows : table.rings) {
    // One point per ring, at its first (lowest) fundamental mode.
    std::size_t first = ring_rows.front();
    for (auto idx : ring_rows)
      if (table.records[idx].f0_GHz < table.records[first].f0_GHz) first = idx;
    const auto& r = table.records[first];
    const double rin = r.r_in_um * units::um_to_m;
    const double w = r.w_nm * units::nm_to_m;
    const double p = r.p_nm * units::nm_to_m;
    const double lsq = r.Lsq_pH * units::pH_to_H;
    const double z = r.Z_kOhm * units::kohm_to_ohm;
    const double f0 = r.f0_GHz * units::GHz_to_Hz;
    xz.push_back(std::sqrt(rin * lsq / (p * w)));
    yz.push_back(z);
    xf.push_back(1.0 / rin);
    yf.push_back(z * f0);
    prod.push_back(z * f0 * rin);
  }

  ScalingReport report;
  report.ring_count = table.rings.size();
  report.impedance_fit = origin_fit(xz, yz);
  report.impedance_freq_fit = origin_fit(xf, yf);
  double mean = 0.0;
  for (double v : prod) mean += v;
  mean /= double(prod.size());
  report.zf0r_mean = mean;
  for (double v : prod)
    report.zf0r_max_deviation = std::max(report.zf0r_max_deviation, std::abs(v - mean) / mean);
  return report;
}

}  // namespace ringforge::cal
