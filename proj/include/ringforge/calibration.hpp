#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ringforge {

/// One measured or simulated device row, in table units.
struct DeviceRecord {
  std::string id;
  double r_in_um = 0.0;
  double w_nm = 0.0;
  double l_um = 0.0;
  double p_nm = 0.0;
  double t_nm = 0.0;
  double f0_GHz = 0.0;
  double Lsq_pH = 0.0;
  double L_uH = 0.0;
  double C_fF = 0.0;
  double Z_kOhm = 0.0;
  std::optional<double> Qc;
};

/// A soft inconsistency between table columns, reported but not fatal.
struct ConsistencyFlag {
  std::string record_id;
  std::string field;
  double deviation = 0.0;  // relative
  std::string message;
};

/// Immutable device table. Rows that belong to the same physical ring (two
/// doublet modes share one geometry row set) are grouped on load; the
/// impedance column of the reference tables is defined at the ring's first
/// (lowest) fundamental mode, so impedance consistency is checked against
/// the group's lowest f0.
struct DeviceTable {
  std::vector<DeviceRecord> records;
  std::string source_label;
  std::vector<ConsistencyFlag> flags;
  std::vector<std::vector<std::size_t>> rings;  // record indices per ring
  std::vector<double> ring_f0_GHz;              // per record: group's lowest f0
};

namespace cal {

inline constexpr const char* device_csv_header =
    "id,r_in_um,w_nm,l_um,p_nm,t_nm,f0_GHz,Lsq_pH,L_uH,C_fF,Z_kOhm,Qc";

enum class TableFormat { Auto, Csv, Json };

/// Loads a device table from CSV or JSON (schema per device_csv_header).
/// Hard invariant violations (non-positive geometry, w >= p, duplicate ids)
/// reject the load with a row-level diagnostic; 2%-level column mismatches
/// become ConsistencyFlags on the returned table.
DeviceTable load_device_table(const std::string& path, TableFormat format = TableFormat::Auto);

/// Parses a table from CSV text (same rules as load_device_table).
DeviceTable parse_device_csv(const std::string& text, const std::string& source_label);

/// Canonical serialization: 6 significant digits, fixed column order, LF.
std::string device_table_to_csv(const DeviceTable& table);

/// JSON mirror (full precision, array of objects keyed as the CSV header).
std::string device_table_to_json(const DeviceTable& table);

void write_device_table(const DeviceTable& table, const std::string& path,
                        TableFormat format = TableFormat::Auto);

struct KcFit {
  double k_C_fF_per_um = 0.0;
  double stderr_fF_per_um = 0.0;
  std::vector<double> relative_residuals;  // (C - k*r) / (k*r), per record
  double max_abs_residual = 0.0;
};

/// Least-squares slope of C vs r_in through the origin.
KcFit fit_kC(const DeviceTable& table);

struct SheetInductanceFit {
  double Lsq_pH = 0.0;
  double rms_relative_residual = 0.0;  // on f0
};

/// Least-squares sheet inductance from measured f0 over records sharing a
/// film, using explicit lengths and C = k_C * r_in. The model frequency is
/// linear in 1/sqrt(L_sq), so the minimization is exact.
SheetInductanceFit fit_sheet_inductance(std::span<const DeviceRecord> records,
                                        double k_C_fF_per_um);

struct OriginFit {
  double slope = 0.0;
  double r_squared = 0.0;  // uncentered, the convention for origin fits
  double max_relative_deviation = 0.0;
};

struct ScalingReport {
  OriginFit impedance_fit;       // Z vs sqrt(r_in*Lsq/(p*w)), SI
  OriginFit impedance_freq_fit;  // Z*f0 vs 1/r_in, SI
  double zf0r_mean = 0.0;        // Z*f0*r_in, Ohm*Hz*m
  double zf0r_max_deviation = 0.0;
  std::size_t ring_count = 0;
};

/// Scaling collapse over the table, one point per ring at its first mode.
ScalingReport validate_scaling(const DeviceTable& table);

/// Groups of records that share (r_in, w, l, p, t, Lsq).
std::vector<std::vector<std::size_t>> group_rings(const std::vector<DeviceRecord>& records);

}  // namespace cal
}  // namespace ringforge
