// ringforge: design, optimization and measurement-analysis front end for
// high-impedance granular-aluminum meander ring resonators.

#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>
#include <memory>
#include <sstream>

#include "cli_util.hpp"
#include "ringforge/calibration.hpp"
#include "ringforge/design_opt.hpp"
#include "ringforge/errors.hpp"
#include "ringforge/io.hpp"
#include "ringforge/manifest.hpp"
#include "ringforge/material.hpp"
#include "ringforge/noise_psd.hpp"
#include "ringforge/photon_response.hpp"
#include "ringforge/resonance_fit.hpp"
#include "ringforge/ring_model.hpp"
#include "ringforge/svg.hpp"
#include "ringforge/synth.hpp"
#include "ringforge/version.hpp"

using nlohmann::json;
using namespace ringforge;

namespace {

std::string slurp_stdin() {
  std::ostringstream buffer;
  buffer << std::cin.rdbuf();
  return buffer.str();
}

json circuit_to_json(const CircuitParams& c) {
  return json{{"trace_length_um", c.trace_length_um}, {"squares", c.squares},
              {"inductance_uH", c.inductance_uH},     {"capacitance_fF", c.capacitance_fF},
              {"f0_GHz", c.f0_GHz},                   {"impedance_kOhm", c.impedance_kOhm}};
}

json fit_to_json(const ResonanceFit& fit) {
  return json{{"f0_hz", fit.f0_hz},
              {"q_loaded", fit.q_loaded},
              {"q_coupling", fit.q_coupling},
              {"q_internal", fit.q_internal},
              {"q_internal_band", {fit.q_internal_min, fit.q_internal_max}},
              {"mismatch_angle_rad", fit.mismatch_angle_rad},
              {"mismatch_angle_sigma", fit.mismatch_angle_sigma},
              {"amplitude", fit.amplitude},
              {"phase_offset_rad", fit.phase_offset_rad},
              {"delay_s", fit.delay_s},
              {"residual_rms", fit.residual_rms}};
}

const char* sit_name(material::SitStatus s) {
  switch (s) {
    case material::SitStatus::Ok: return "ok";
    case material::SitStatus::Warning: return "warning";
    default: return "reject";
  }
}

// ---------------------------------------------------------------- material --

struct MaterialArgs {
  double rho = 0.0, t = 0.0, tc = 2.2, lsq = 0.0;
  bool invert = false;
  std::string out = "-";
};

void setup_material(CLI::App& app) {
  auto args = std::make_shared<MaterialArgs>();
  auto* cmd = app.add_subcommand("material",
                                 "Film sheet resistance / kinetic sheet inductance");
  auto* rho = cmd->add_option("--rho", args->rho, "resistivity, uOhm*cm");
  cmd->add_option("--t", args->t, "film thickness, nm")->required();
  cmd->add_option("--tc", args->tc, "critical temperature, K")->capture_default_str();
  auto* lsq = cmd->add_option("--lsq", args->lsq, "sheet inductance, pH/sq");
  cmd->add_flag("--invert", args->invert, "solve for resistivity from --lsq");
  cmd->add_option("-o,--out", args->out, "output JSON path ('-' = stdout)")->capture_default_str();
  rho->excludes(lsq);

  cmd->callback([args, cmd]() {
    json params{{"rho", args->rho}, {"t", args->t}, {"tc", args->tc},
                {"lsq", args->lsq}, {"invert", args->invert}};
    cli::OutputSet outputs("material", params);
    json doc;
    if (args->invert) {
      if (!cmd->count("--lsq"))
        throw validation_error("material --invert needs --lsq");
      const auto inv =
          material::resistivity_from_sheet_inductance(args->lsq, args->t, args->tc);
      doc = json{{"sheet_inductance_pH_sq", args->lsq},
                 {"thickness_nm", args->t},
                 {"critical_temperature_K", args->tc},
                 {"resistivity_uohm_cm", inv.resistivity_uohm_cm},
                 {"gap_ratio", inv.gap_ratio},
                 {"ambiguous", inv.ambiguous},
                 {"sit_status", sit_name(material::check_sit(inv.resistivity_uohm_cm).status)}};
    } else {
      if (!cmd->count("--rho"))
        throw validation_error("material needs --rho (or --lsq with --invert)");
      MaterialSpec m{args->rho, args->t, args->tc, std::nullopt};
      const SheetParams sheet = material::sheet_params(m);
      doc = json{{"resistivity_uohm_cm", args->rho},
                 {"thickness_nm", args->t},
                 {"critical_temperature_K", args->tc},
                 {"sheet_resistance_ohm_sq", sheet.sheet_resistance_ohm_sq},
                 {"sheet_inductance_pH_sq", sheet.sheet_inductance_pH_sq},
                 {"gap_ratio", sheet.gap_ratio},
                 {"sit_status", sit_name(material::check_sit(args->rho).status)}};
    }
    outputs.stage(args->out, doc.dump(2) + "\n");
    outputs.commit();
  });
}

// -------------------------------------------------------------------- ring --

struct RingArgs {
  double rin = 0.0, w = 0.0, p = 0.0, t = 0.0, tc = 2.2, kc = 0.160;
  double rho = 0.0, lsq = 0.0, length = 0.0;
  std::string sweep_param, sweep_range;
  std::string out = "-";
  std::string sweep_out = "ring_sweep.csv";
};

void setup_ring(CLI::App& app) {
  auto args = std::make_shared<RingArgs>();
  auto* cmd = app.add_subcommand("ring", "Forward model for one ring design");
  cmd->add_option("--rin", args->rin, "inner radius, um")->required();
  cmd->add_option("--w", args->w, "trace width, nm")->required();
  cmd->add_option("--p", args->p, "meander pitch, nm")->required();
  cmd->add_option("--t", args->t, "film thickness, nm")->required();
  cmd->add_option("--tc", args->tc, "critical temperature, K")->capture_default_str();
  auto* rho = cmd->add_option("--rho", args->rho, "resistivity, uOhm*cm");
  auto* lsq = cmd->add_option("--lsq", args->lsq, "sheet inductance, pH/sq");
  cmd->add_option("--length", args->length, "explicit trace length, um");
  cmd->add_option("--kc", args->kc, "capacitance constant, fF/um")->capture_default_str();
  cmd->add_option("--sweep", args->sweep_param, "sweep parameter: r_in|w|p|lsq");
  cmd->add_option("--sweep-range", args->sweep_range, "sweep range lo:hi:step");
  cmd->add_option("--sweep-out", args->sweep_out, "sweep CSV path")->capture_default_str();
  cmd->add_option("-o,--out", args->out, "output JSON path ('-' = stdout)")->capture_default_str();
  rho->excludes(lsq);

  cmd->callback([args, cmd]() {
    if (!cmd->count("--rho") && !cmd->count("--lsq"))
      throw validation_error("ring needs a film: --rho or --lsq");
    const double lsq_pH = cmd->count("--lsq")
                              ? args->lsq
                              : material::sheet_inductance(
                                    MaterialSpec{args->rho, args->t, args->tc, std::nullopt});
    RingGeometry geom{args->rin, args->w, args->p, args->t, std::nullopt};
    if (cmd->count("--length")) geom.explicit_length_um = args->length;
    CalibrationConstants constants;
    constants.k_C_fF_per_um = args->kc;

    json params{{"rin", args->rin}, {"w", args->w},   {"p", args->p},
                {"t", args->t},     {"kc", args->kc}, {"lsq_pH", lsq_pH}};
    cli::OutputSet outputs("ring", params);

    const CircuitParams circuit =
        ring::predict_with_sheet_inductance(geom, lsq_pH, constants);
    const auto scaling = ring::scaling_predictions(geom, lsq_pH);
    json doc{{"geometry",
              {{"r_in_um", geom.r_in_um},
               {"w_nm", geom.w_nm},
               {"p_nm", geom.p_nm},
               {"t_nm", geom.t_nm}}},
             {"sheet_inductance_pH_sq", lsq_pH},
             {"circuit", circuit_to_json(circuit)},
             {"scaling", {{"z_relative", scaling.z_relative},
                          {"f0_relative", scaling.f0_relative}}}};
    outputs.stage(args->out, doc.dump(2) + "\n");

    if (cmd->count("--sweep")) {
      if (!cmd->count("--sweep-range"))
        throw validation_error("--sweep needs --sweep-range lo:hi:step");
      const auto range = cli::parse_range(args->sweep_range, "--sweep-range");
      if (!range.step) throw validation_error("--sweep-range needs a step");
      std::string csv = args->sweep_param +
                        ",trace_length_um,inductance_uH,capacitance_fF,f0_GHz,impedance_kOhm\n";
      for (double v = range.lo; v <= range.hi * (1.0 + 1e-12); v += *range.step) {
        RingGeometry g = geom;
        double point_lsq = lsq_pH;
        if (args->sweep_param == "r_in") g.r_in_um = v;
        else if (args->sweep_param == "w") g.w_nm = v;
        else if (args->sweep_param == "p") g.p_nm = v;
        else if (args->sweep_param == "lsq") point_lsq = v;
        else throw validation_error("unknown sweep parameter '" + args->sweep_param + "'");
        const CircuitParams c = ring::predict_with_sheet_inductance(g, point_lsq, constants);
        csv += io::format_sig6(v) + "," + io::format_sig6(c.trace_length_um) + "," +
               io::format_sig6(c.inductance_uH) + "," + io::format_sig6(c.capacitance_fF) +
               "," + io::format_sig6(c.f0_GHz) + "," + io::format_sig6(c.impedance_kOhm) +
               "\n";
      }
      outputs.stage(args->sweep_out, csv);
    }
    outputs.commit();
  });
}

// --------------------------------------------------------------- calibrate --

struct CalibrateArgs {
  std::string table;
  std::string fit_lsq_ids;
  double kc_override = 0.0;
  std::string out = "-";
  std::string plot_data;
};

void setup_calibrate(CLI::App& app) {
  auto args = std::make_shared<CalibrateArgs>();
  auto* cmd = app.add_subcommand("calibrate", "Fit k_C and validate scaling on a device table");
  cmd->add_option("table", args->table, "device table CSV/JSON")->required();
  cmd->add_option("--fit-lsq", args->fit_lsq_ids,
                  "comma-separated record ids of one film; fits its sheet inductance");
  cmd->add_option("--kc", args->kc_override, "k_C used for --fit-lsq instead of the fitted one");
  cmd->add_option("-o,--out", args->out, "output JSON path ('-' = stdout)")->capture_default_str();
  cmd->add_option("--plot-data", args->plot_data, "write r_in vs C fit data CSV");

  cmd->callback([args, cmd]() {
    json params{{"table", args->table}, {"fit_lsq", args->fit_lsq_ids}};
    cli::OutputSet outputs("calibrate", params);
    outputs.add_input(args->table);

    const DeviceTable table = cal::load_device_table(args->table);
    const cal::KcFit kc = cal::fit_kC(table);
    const cal::ScalingReport scaling = cal::validate_scaling(table);

    json flags = json::array();
    for (const auto& f : table.flags)
      flags.push_back(json{{"id", f.record_id},
                           {"field", f.field},
                           {"deviation", f.deviation},
                           {"message", f.message}});
    json residuals = json::object();
    for (std::size_t i = 0; i < table.records.size(); ++i)
      residuals[table.records[i].id] = kc.relative_residuals[i];

    const auto fit_json = [](const cal::OriginFit& f) {
      return json{{"slope", f.slope},
                  {"r_squared", f.r_squared},
                  {"max_relative_deviation", f.max_relative_deviation}};
    };
    json scaling_json{{"impedance_fit", fit_json(scaling.impedance_fit)},
                      {"impedance_freq_fit", fit_json(scaling.impedance_freq_fit)},
                      {"zf0r_mean_ohm_hz_m", scaling.zf0r_mean},
                      {"zf0r_max_deviation", scaling.zf0r_max_deviation}};
    json doc{{"source", table.source_label},
             {"records", table.records.size()},
             {"rings", scaling.ring_count},
             {"consistency_flags", flags},
             {"k_C_fF_per_um", kc.k_C_fF_per_um},
             {"k_C_stderr", kc.stderr_fF_per_um},
             {"max_abs_residual", kc.max_abs_residual},
             {"residuals", residuals},
             {"scaling", scaling_json}};

    if (cmd->count("--fit-lsq")) {
      std::vector<DeviceRecord> subset;
      std::stringstream ids(args->fit_lsq_ids);
      std::string id;
      while (std::getline(ids, id, ',')) {
        bool found = false;
        for (const auto& r : table.records)
          if (r.id == id) {
            subset.push_back(r);
            found = true;
          }
        if (!found) throw validation_error("--fit-lsq: id '" + id + "' not in table");
      }
      const double kc_used = cmd->count("--kc") ? args->kc_override : kc.k_C_fF_per_um;
      const auto lsq = cal::fit_sheet_inductance(subset, kc_used);
      doc["sheet_inductance_fit"] = {{"ids", args->fit_lsq_ids},
                                     {"k_C_used", kc_used},
                                     {"Lsq_pH", lsq.Lsq_pH},
                                     {"rms_relative_residual", lsq.rms_relative_residual}};
    }

    outputs.stage(args->out, doc.dump(2) + "\n");
    if (cmd->count("--plot-data")) {
      std::string csv = "r_in_um,C_fF,fit_C_fF\n";
      for (const auto& r : table.records)
        csv += io::format_sig6(r.r_in_um) + "," + io::format_sig6(r.C_fF) + "," +
               io::format_sig6(kc.k_C_fF_per_um * r.r_in_um) + "\n";
      outputs.stage(args->plot_data, csv);
    }
    outputs.commit();
  });
}

// ---------------------------------------------------------------- optimize --

struct OptimizeArgs {
  std::string band = "4:8";
  std::string lsq_list, rho_list;
  double t = 20.0, tc = 2.2, kc = 0.160;
  std::string profile = "default";
  bool relaxed = false;
  bool suspended = false;
  bool grid_verify = false;
  double wmin = 0.0, pmin = 0.0, tmin = 0.0, rhomax = 0.0, lsqmax = 0.0;
  std::string rin_range;
  std::string out = "-";
  std::string candidates_out;
  std::string config;
  int top = 0;
};

void setup_optimize(CLI::App& app, const std::string* config_path) {
  auto args = std::make_shared<OptimizeArgs>();
  auto* cmd = app.add_subcommand("optimize", "Search for maximum-impedance in-band designs");
  cmd->add_option("--band", args->band, "target band f_min:f_max, GHz")->capture_default_str();
  auto* lsq = cmd->add_option("--lsq", args->lsq_list, "sheet inductances, pH/sq (comma list)");
  auto* rho = cmd->add_option("--rho", args->rho_list, "resistivities, uOhm*cm (comma list)");
  cmd->add_option("--t", args->t, "film thickness, nm")->capture_default_str();
  cmd->add_option("--tc", args->tc, "critical temperature, K")->capture_default_str();
  cmd->add_option("--kc", args->kc, "capacitance constant, fF/um")->capture_default_str();
  cmd->add_option("--profile", args->profile, "constraint profile name")->capture_default_str();
  cmd->add_flag("--relaxed", args->relaxed, "shortcut for --profile relaxed");
  cmd->add_flag("--suspended", args->suspended, "annotate released-device impedance (3x)");
  cmd->add_flag("--grid-verify", args->grid_verify, "cross-check with a grid sweep");
  cmd->add_option("--wmin", args->wmin, "override w_min, nm");
  cmd->add_option("--pmin", args->pmin, "override p_min, nm");
  cmd->add_option("--tmin", args->tmin, "override t_min, nm");
  cmd->add_option("--rhomax", args->rhomax, "override resistivity limit, uOhm*cm");
  cmd->add_option("--lsqmax", args->lsqmax, "override sheet-inductance limit, pH/sq");
  cmd->add_option("--rin-range", args->rin_range, "inner-radius search range lo:hi, um");
  cmd->add_option("--top", args->top, "keep only the best N candidates");
  cmd->add_option("-o,--out", args->out, "report JSON path ('-' = stdout)")->capture_default_str();
  cmd->add_option("--candidates", args->candidates_out,
                  "write ranked candidates as a device table (CSV or JSON by extension)");
  rho->excludes(lsq);

  cmd->callback([args, cmd, config_path]() {
    if (!cmd->count("--lsq") && !cmd->count("--rho"))
      throw validation_error("optimize needs material options: --lsq or --rho");

    const std::string profile = args->relaxed ? "relaxed" : args->profile;
    DesignConstraints constraints = cli::profile_constraints(profile, *config_path);
    const auto band = cli::parse_range(args->band, "--band");
    constraints.f_min_GHz = band.lo;
    constraints.f_max_GHz = band.hi;
    if (cmd->count("--wmin")) constraints.w_min_nm = args->wmin;
    if (cmd->count("--pmin")) constraints.p_min_nm = args->pmin;
    if (cmd->count("--tmin")) constraints.t_min_nm = args->tmin;
    if (cmd->count("--rhomax")) constraints.resistivity_max_uohm_cm = args->rhomax;
    if (cmd->count("--lsqmax")) constraints.sheet_inductance_max_pH = args->lsqmax;
    if (cmd->count("--rin-range")) {
      const auto rr = cli::parse_range(args->rin_range, "--rin-range");
      constraints.r_in_min_um = rr.lo;
      constraints.r_in_max_um = rr.hi;
    }
    constraints.suspended = args->suspended;

    std::vector<MaterialSpec> materials;
    if (cmd->count("--lsq")) {
      for (double v : cli::parse_double_list(args->lsq_list, "--lsq"))
        materials.push_back(material::material_for_sheet_inductance(v, args->t, args->tc));
    } else {
      for (double v : cli::parse_double_list(args->rho_list, "--rho"))
        materials.push_back(MaterialSpec{v, args->t, args->tc, std::nullopt});
    }

    json params{{"band", args->band},       {"profile", profile}, {"kc", args->kc},
                {"t", args->t},             {"lsq", args->lsq_list},
                {"rho", args->rho_list},    {"suspended", args->suspended}};
    cli::OutputSet outputs("optimize", params);

    design::OptimizeResult result = design::optimize(constraints, args->kc, materials);
    if (args->top > 0 && int(result.candidates.size()) > args->top)
      result.candidates.resize(std::size_t(args->top));

    json candidates = json::array();
    for (const auto& c : result.candidates) {
      json row{{"label", c.label},
               {"r_in_um", c.geometry.r_in_um},
               {"w_nm", c.geometry.w_nm},
               {"p_nm", c.geometry.p_nm},
               {"t_nm", c.geometry.t_nm},
               {"resistivity_uohm_cm", c.material.resistivity_uohm_cm},
               {"sheet_inductance_pH_sq", c.sheet_inductance_pH},
               {"circuit", circuit_to_json(c.predicted)}};
      if (c.suspended_impedance_kOhm)
        row["suspended_impedance_kOhm"] = *c.suspended_impedance_kOhm;
      candidates.push_back(std::move(row));
    }
    json infeasible = json::array();
    for (const auto& inf : result.infeasible)
      infeasible.push_back(json{{"resistivity_uohm_cm", inf.material.resistivity_uohm_cm},
                                {"thickness_nm", inf.material.thickness_nm},
                                {"reason", inf.reason}});

    json doc{{"band_GHz", {constraints.f_min_GHz, constraints.f_max_GHz}},
             {"profile", profile},
             {"k_C_fF_per_um", args->kc},
             {"candidates", candidates},
             {"infeasible", infeasible}};

    if (args->grid_verify) {
      json grid = json::array();
      for (const auto& m : materials) {
        const auto best = design::grid_search(constraints, args->kc, m);
        if (!best) continue;
        json row{{"resistivity_uohm_cm", m.resistivity_uohm_cm},
                 {"circuit", circuit_to_json(best->predicted)}};
        for (const auto& c : result.candidates)
          if (c.material.resistivity_uohm_cm == m.resistivity_uohm_cm)
            row["impedance_agreement"] = best->predicted.impedance_kOhm /
                                         c.predicted.impedance_kOhm;
        grid.push_back(std::move(row));
      }
      doc["grid_verify"] = grid;
    }

    outputs.stage(args->out, doc.dump(2) + "\n");

    if (cmd->count("--candidates")) {
      DeviceTable table;
      table.source_label = "optimize";
      int k = 0;
      for (const auto& c : result.candidates) {
        DeviceRecord r;
        r.id = "cand-" + std::to_string(++k);
        r.r_in_um = c.geometry.r_in_um;
        r.w_nm = c.geometry.w_nm;
        r.l_um = c.predicted.trace_length_um;
        r.p_nm = c.geometry.p_nm;
        r.t_nm = c.geometry.t_nm;
        r.f0_GHz = c.predicted.f0_GHz;
        r.Lsq_pH = c.sheet_inductance_pH;
        r.L_uH = c.predicted.inductance_uH;
        r.C_fF = c.predicted.capacitance_fF;
        r.Z_kOhm = c.predicted.impedance_kOhm;
        table.records.push_back(std::move(r));
      }
      const bool is_json = args->candidates_out.size() > 5 &&
                           args->candidates_out.substr(args->candidates_out.size() - 5) ==
                               ".json";
      outputs.stage(args->candidates_out, is_json ? cal::device_table_to_json(table)
                                                  : cal::device_table_to_csv(table));
    }
    outputs.commit();
  });
}

// ----------------------------------------------------------------- fit-s11 --

struct FitS11Args {
  std::string trace = "-";
  std::string sweep_manifest;
  double power = 0.0;
  bool doublet = false;
  bool worst_case = false;
  bool no_delay_refine = false;
  double wing_fraction = 0.2;
  std::string out = "-";
};

void setup_fit_s11(CLI::App& app) {
  auto args = std::make_shared<FitS11Args>();
  auto* cmd = app.add_subcommand("fit-s11", "Circle fit of one-port reflection traces");
  cmd->add_option("trace", args->trace, "trace CSV/.s1p ('-' = stdin CSV)")->capture_default_str();
  cmd->add_option("--sweep", args->sweep_manifest,
                  "power-sweep manifest JSON: [{file, power_dbm}, ...]");
  cmd->add_option("--power", args->power, "drive power at the device, dBm");
  cmd->add_flag("--doublet", args->doublet, "split a doublet before fitting");
  cmd->add_flag("--worst-case-fano", args->worst_case, "widen the Qi band to phi in [-|phi|,|phi|]");
  cmd->add_flag("--no-delay-refine", args->no_delay_refine, "skip the delay polish");
  cmd->add_option("--wing-fraction", args->wing_fraction, "span fraction per wing")->capture_default_str();
  cmd->add_option("-o,--out", args->out, "output JSON path ('-' = stdout)")->capture_default_str();

  cmd->callback([args, cmd]() {
    resfit::FitOptions options;
    options.worst_case_fano = args->worst_case;
    options.refine_delay = !args->no_delay_refine;
    options.wing_fraction = args->wing_fraction;

    json params{{"trace", args->trace}, {"sweep", args->sweep_manifest},
                {"doublet", args->doublet}, {"worst_case_fano", args->worst_case}};
    cli::OutputSet outputs("fit-s11", params);

    if (cmd->count("--sweep")) {
      outputs.add_input(args->sweep_manifest);
      std::vector<ComplexTrace> traces;
      for (const auto& [file, power] : io::read_sweep_manifest(args->sweep_manifest)) {
        outputs.add_input(file);
        ComplexTrace t = io::read_trace(file);
        t.power_dbm = power;
        traces.push_back(std::move(t));
      }
      const auto sweep = resfit::qi_vs_power(traces, options);
      json points = json::array();
      std::string csv = "power_dbm,nbar,q_internal,q_internal_min,q_internal_max,residual_rms,excluded\n";
      for (const auto& p : sweep.points) {
        json row{{"power_dbm", p.power_dbm},           {"nbar", p.nbar},
                 {"q_internal", p.q_internal},         {"q_internal_min", p.q_internal_min},
                 {"q_internal_max", p.q_internal_max}, {"residual_rms", p.residual_rms},
                 {"excluded", p.excluded}};
        if (!p.error.empty()) row["error"] = p.error;
        points.push_back(std::move(row));
        char line[200];
        std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n",
                      p.power_dbm, p.nbar, p.q_internal, p.q_internal_min, p.q_internal_max,
                      p.residual_rms, p.excluded ? 1 : 0);
        csv += line;
      }
      json doc{{"points", points}};
      if (sweep.bifurcation_power_dbm)
        doc["bifurcation_power_dbm"] = *sweep.bifurcation_power_dbm;
      outputs.stage(args->out, doc.dump(2) + "\n");
      if (args->out != "-") outputs.stage(args->out + ".csv", csv);
      outputs.commit();
      return;
    }

    ComplexTrace trace;
    if (args->trace == "-") {
      trace = io::parse_trace_csv(slurp_stdin(), "<stdin>");
    } else {
      outputs.add_input(args->trace);
      trace = io::read_trace(args->trace);
    }
    if (cmd->count("--power")) trace.power_dbm = args->power;

    json doc;
    if (args->doublet) {
      const auto windows = resfit::detect_doublet(trace);
      json fits = json::array();
      for (const auto& w : windows) {
        json f = fit_to_json(resfit::fit_reflection(w, options));
        if (trace.power_dbm) {
          const double nbar = resfit::photon_number(
              f.at("q_coupling").get<double>(), f.at("f0_hz").get<double>(), *trace.power_dbm);
          f["nbar"] = nbar;
        }
        fits.push_back(std::move(f));
      }
      doc = json{{"windows", windows.size()}, {"fits", fits}};
    } else {
      const ResonanceFit fit = resfit::fit_reflection(trace, options);
      doc = fit_to_json(fit);
      if (trace.power_dbm)
        doc["nbar"] = resfit::photon_number(fit.q_coupling, fit.f0_hz, *trace.power_dbm);
    }
    outputs.stage(args->out, doc.dump(2) + "\n");
    outputs.commit();
  });
}

// --------------------------------------------------------------- fit-noise --

struct FitNoiseArgs {
  std::string series = "-";
  int segments = 16;
  bool lorentzian = false;
  double asd_at_hz = 10.0;
  std::string out = "-";
  std::string plot_data;
  std::string svg_path;
};

void setup_fit_noise(CLI::App& app) {
  auto args = std::make_shared<FitNoiseArgs>();
  auto* cmd = app.add_subcommand("fit-noise",
                                 "Bartlett spectrum and white + 1/f^alpha model fit");
  cmd->add_option("series", args->series, "time-series CSV t_s,f0_hz ('-' = stdin)")->capture_default_str();
  cmd->add_option("--segments", args->segments, "Bartlett segment count")->capture_default_str();
  cmd->add_flag("--lorentzian", args->lorentzian, "also try a Lorentzian component");
  cmd->add_option("--asd-at", args->asd_at_hz, "report model ASD at this frequency, Hz")->capture_default_str();
  cmd->add_option("-o,--out", args->out, "output JSON path ('-' = stdout)")->capture_default_str();
  cmd->add_option("--plot-data", args->plot_data, "write f,asd,model CSV");
  cmd->add_option("--svg", args->svg_path, "write a log-log SVG plot");

  cmd->callback([args]() {
    json params{{"series", args->series}, {"segments", args->segments},
                {"lorentzian", args->lorentzian}};
    cli::OutputSet outputs("fit-noise", params);

    TimeSeries series;
    if (args->series == "-") {
      series = io::parse_timeseries_csv(slurp_stdin(), "<stdin>");
    } else {
      outputs.add_input(args->series);
      series = io::read_timeseries_csv(args->series);
    }

    const NoiseSpectrum spectrum = noise::bartlett_psd(series, args->segments);
    const NoiseModelFit fit = noise::fit_noise_model(spectrum, args->lorentzian);

    json doc{{"segments", spectrum.segment_count},
             {"bins", spectrum.freq_hz.size()},
             {"S0", fit.S0},
             {"S1", fit.S1},
             {"alpha", fit.alpha},
             {"alpha_sigma", fit.alpha_sigma},
             {"selected_model", fit.selected_model},
             {"aicc", {{"white", fit.aicc_white}, {"powerlaw", fit.aicc_powerlaw}}},
             {"per_decade_residual_rms", fit.per_decade_residual_rms},
             {"asd_at", {{"f_hz", args->asd_at_hz},
                         {"asd_hz_rthz", noise::asd_at(fit, args->asd_at_hz)}}},
             {"converged", fit.converged}};
    if (fit.lorentz_amp) {
      doc["lorentzian"] = {{"amp", *fit.lorentz_amp}, {"fc_hz", *fit.lorentz_fc}};
    } else {
      doc["lorentzian"] = nullptr;
    }
    if (fit.aicc_lorentzian) doc["aicc"]["lorentzian"] = *fit.aicc_lorentzian;

    outputs.stage(args->out, doc.dump(2) + "\n");
    if (!args->plot_data.empty())
      outputs.stage(args->plot_data, io::spectrum_to_csv(spectrum, &fit));
    if (!args->svg_path.empty()) {
      svg::Series data, model;
      for (Eigen::Index i = 0; i < spectrum.freq_hz.size(); ++i) {
        data.x.push_back(spectrum.freq_hz[i]);
        data.y.push_back(spectrum.asd_hz_rthz[i]);
        model.x.push_back(spectrum.freq_hz[i]);
        model.y.push_back(noise::asd_at(fit, spectrum.freq_hz[i]));
      }
      model.color = "#d1242f";
      svg::PlotOptions plot;
      plot.log_x = plot.log_y = true;
      plot.title = "frequency noise";
      plot.x_label = "f (Hz)";
      plot.y_label = "ASD (Hz/rtHz)";
      outputs.stage(args->svg_path, svg::line_plot({data, model}, plot));
    }
    outputs.commit();
  });
}

// ---------------------------------------------------------------- fit-kerr --

struct FitKerrArgs {
  std::string curve = "-";
  double threshold = 0.0;
  bool no_anomaly = false;
  std::string out = "-";
};

void setup_fit_kerr(CLI::App& app) {
  auto args = std::make_shared<FitKerrArgs>();
  auto* cmd = app.add_subcommand("fit-kerr", "Kerr coefficient and anomalous-shift detection");
  cmd->add_option("curve", args->curve, "shift curve CSV nbar,df_hz[,sigma_hz] ('-' = stdin)")->capture_default_str();
  cmd->add_option("--threshold", args->threshold, "photon-number threshold for the linear fit");
  cmd->add_flag("--no-anomaly", args->no_anomaly, "skip anomalous-shift detection");
  cmd->add_option("-o,--out", args->out, "output JSON path ('-' = stdout)")->capture_default_str();

  cmd->callback([args, cmd]() {
    json params{{"curve", args->curve}, {"threshold", args->threshold}};
    cli::OutputSet outputs("fit-kerr", params);

    ShiftCurve curve;
    if (args->curve == "-") {
      curve = io::parse_shift_curve_csv(slurp_stdin(), "<stdin>");
    } else {
      outputs.add_input(args->curve);
      curve = io::read_shift_curve_csv(args->curve);
    }

    json doc;
    std::optional<AnomalousShift> anomaly;
    const bool can_detect =
        curve.nbar.size() >= 8 && curve.nbar[curve.nbar.size() - 1] / curve.nbar[0] >= 100.0;
    if (!args->no_anomaly && can_detect) anomaly = kerr::detect_anomalous_shift(curve);

    const double threshold = cmd->count("--threshold")
                                 ? args->threshold
                                 : kerr::default_threshold(curve, anomaly ? &*anomaly : nullptr);
    const KerrFit fit = kerr::fit_kerr(curve, threshold);

    doc = json{{"k11_hz", fit.k11_hz},
               {"k11_sigma_hz", fit.k11_sigma_hz},
               {"intercept_hz", fit.intercept_hz},
               {"window", {fit.window_lo, fit.window_hi}},
               {"residual_rms_hz", fit.residual_rms_hz},
               {"threshold", threshold}};
    if (anomaly) {
      const char* presence = anomaly->present == AnomalyPresence::Yes ? "yes"
                             : anomaly->present == AnomalyPresence::No ? "no"
                                                                       : "undetermined";
      doc["anomalous"] = {{"present", presence},
                          {"amplitude_hz", anomaly->amplitude_hz},
                          {"sign", anomaly->sign},
                          {"scale_photons", anomaly->scale_photons},
                          {"amplitude_sigma_hz", anomaly->amplitude_sigma_hz},
                          {"k11_hz", anomaly->k11_hz},
                          {"aicc_linear", anomaly->aicc_linear},
                          {"aicc_saturating", anomaly->aicc_saturating}};
    } else {
      doc["anomalous"] = nullptr;
    }
    outputs.stage(args->out, doc.dump(2) + "\n");
    outputs.commit();
  });
}

// ------------------------------------------------------------------- synth --

void setup_synth(CLI::App& app) {
  auto* cmd = app.add_subcommand("synth", "Seeded synthetic data generators");
  cmd->require_subcommand(1);

  // s11
  {
    auto spec = std::make_shared<synth::S11Spec>();
    auto snr = std::make_shared<double>(0.0);
    auto out = std::make_shared<std::string>("-");
    auto* sub = cmd->add_subcommand("s11", "single reflection resonance");
    sub->add_option("--seed", spec->seed, "RNG seed")->capture_default_str();
    sub->add_option("--f0", spec->f0_hz, "resonance frequency, Hz")->capture_default_str();
    sub->add_option("--qi", spec->q_internal, "internal quality factor")->capture_default_str();
    sub->add_option("--qc", spec->q_coupling, "coupling quality factor")->capture_default_str();
    sub->add_option("--phi", spec->mismatch_angle_rad, "mismatch angle, rad")->capture_default_str();
    sub->add_option("--tau", spec->delay_s, "electrical delay, s")->capture_default_str();
    sub->add_option("--amp", spec->amplitude, "amplitude")->capture_default_str();
    sub->add_option("--theta", spec->phase_offset_rad, "global phase, rad")->capture_default_str();
    auto* snr_opt = sub->add_option("--snr", *snr, "SNR in dB (omit for noiseless)");
    sub->add_option("--points", spec->n_points, "samples")->capture_default_str();
    sub->add_option("--span-linewidths", spec->span_linewidths, "span, loaded linewidths")->capture_default_str();
    sub->add_option("-o,--out", *out, "trace CSV path ('-' = stdout)")->capture_default_str();
    sub->callback([spec, snr, snr_opt, out]() {
      if (snr_opt->count()) spec->snr_db = *snr;
      json params{{"seed", spec->seed}, {"f0", spec->f0_hz}, {"qi", spec->q_internal},
                  {"qc", spec->q_coupling}, {"phi", spec->mismatch_angle_rad}};
      cli::OutputSet outputs("synth s11", params);
      outputs.stage(*out, io::trace_to_csv(synth::synth_s11(*spec)));
      outputs.commit();
    });
  }

  // doublet
  {
    auto spec = std::make_shared<synth::DoubletSpec>();
    auto snr = std::make_shared<double>(0.0);
    auto out = std::make_shared<std::string>("-");
    auto* sub = cmd->add_subcommand("doublet", "two-mode reflection trace");
    sub->add_option("--seed", spec->seed, "RNG seed")->capture_default_str();
    sub->add_option("--f0", spec->f0_hz, "lower mode frequency, Hz")->capture_default_str();
    sub->add_option("--separation", spec->separation_hz, "mode separation, Hz")->capture_default_str();
    sub->add_option("--qi1", spec->q_internal_1, "internal Q, lower mode")->capture_default_str();
    sub->add_option("--qc1", spec->q_coupling_1, "coupling Q, lower mode")->capture_default_str();
    sub->add_option("--qi2", spec->q_internal_2, "internal Q, upper mode")->capture_default_str();
    sub->add_option("--qc2", spec->q_coupling_2, "coupling Q, upper mode")->capture_default_str();
    sub->add_option("--phi", spec->mismatch_angle_rad, "mismatch angle, rad")->capture_default_str();
    sub->add_option("--tau", spec->delay_s, "electrical delay, s")->capture_default_str();
    auto* snr_opt = sub->add_option("--snr", *snr, "SNR in dB (omit for noiseless)");
    sub->add_option("--points", spec->n_points, "samples")->capture_default_str();
    sub->add_option("-o,--out", *out, "trace CSV path ('-' = stdout)")->capture_default_str();
    sub->callback([spec, snr, snr_opt, out]() {
      if (snr_opt->count()) spec->snr_db = *snr;
      json params{{"seed", spec->seed}, {"separation", spec->separation_hz}};
      cli::OutputSet outputs("synth doublet", params);
      outputs.stage(*out, io::trace_to_csv(synth::synth_doublet(*spec)));
      outputs.commit();
    });
  }

  // timeseries
  {
    auto spec = std::make_shared<synth::TimeSeriesSpec>();
    auto out = std::make_shared<std::string>("-");
    auto* sub = cmd->add_subcommand("timeseries", "frequency-noise time series");
    sub->add_option("--seed", spec->seed, "RNG seed")->capture_default_str();
    sub->add_option("--fs", spec->sample_rate_hz, "sample rate, Hz")->capture_default_str();
    sub->add_option("--samples", spec->n_samples, "sample count")->capture_default_str();
    sub->add_option("--s0", spec->S0, "white PSD level, Hz^2/Hz")->capture_default_str();
    sub->add_option("--s1", spec->S1, "1/f^alpha amplitude")->capture_default_str();
    sub->add_option("--alpha", spec->alpha, "power-law exponent")->capture_default_str();
    sub->add_option("--lorentz-amp", spec->lorentz_amp, "Lorentzian amplitude, Hz^2/Hz")->capture_default_str();
    sub->add_option("--lorentz-fc", spec->lorentz_fc_hz, "Lorentzian corner, Hz")->capture_default_str();
    sub->add_option("-o,--out", *out, "series CSV path ('-' = stdout)")->capture_default_str();
    sub->callback([spec, out]() {
      json params{{"seed", spec->seed}, {"fs", spec->sample_rate_hz},
                  {"samples", spec->n_samples}, {"alpha", spec->alpha}};
      cli::OutputSet outputs("synth timeseries", params);
      outputs.stage(*out, io::timeseries_to_csv(synth::synth_timeseries(*spec)));
      outputs.commit();
    });
  }

  // shiftcurve
  {
    auto spec = std::make_shared<synth::ShiftCurveSpec>();
    auto out = std::make_shared<std::string>("-");
    auto* sub = cmd->add_subcommand("shiftcurve", "frequency shift vs photon number");
    sub->add_option("--seed", spec->seed, "RNG seed")->capture_default_str();
    sub->add_option("--k11", spec->k11_hz, "Kerr coefficient, Hz/photon")->capture_default_str();
    sub->add_option("--anomaly-amp", spec->anomaly_amp_hz, "anomalous amplitude, Hz")->capture_default_str();
    sub->add_option("--anomaly-scale", spec->anomaly_scale, "anomaly scale, photons")->capture_default_str();
    sub->add_option("--sigma", spec->noise_sigma_hz, "noise sigma, Hz")->capture_default_str();
    sub->add_option("--nbar-min", spec->nbar_min, "lowest photon number")->capture_default_str();
    sub->add_option("--decades", spec->decades, "decades of photon number")->capture_default_str();
    sub->add_option("--points", spec->n_points, "point count")->capture_default_str();
    sub->add_option("-o,--out", *out, "curve CSV path ('-' = stdout)")->capture_default_str();
    sub->callback([spec, out]() {
      json params{{"seed", spec->seed}, {"k11", spec->k11_hz},
                  {"anomaly_amp", spec->anomaly_amp_hz}};
      cli::OutputSet outputs("synth shiftcurve", params);
      outputs.stage(*out, io::shift_curve_to_csv(synth::synth_shift_curve(*spec)));
      outputs.commit();
    });
  }
}

// ------------------------------------------------------------------ report --

struct ReportArgs {
  std::vector<std::string> manifests;
  std::string out = "-";
};

void setup_report(CLI::App& app) {
  auto args = std::make_shared<ReportArgs>();
  auto* cmd = app.add_subcommand("report",
                                 "Aggregate run manifests into a model-vs-table summary");
  cmd->add_option("manifests", args->manifests, "run manifest JSON files")->required();
  cmd->add_option("-o,--out", args->out, "summary CSV path ('-' = stdout)")->capture_default_str();

  cmd->callback([args]() {
    std::string csv =
        "source,id,r_in_um,w_nm,l_um,p_nm,t_nm,f0_GHz,Lsq_pH,"
        "L_uH,L_model_uH,dL_pct,C_fF,C_model_fF,dC_pct,Z_kOhm,Z_model_kOhm,dZ_pct\n";
    for (const auto& path : args->manifests) {
      const RunManifest m = manifest::from_json_file(path);
      const auto stale = manifest::stale_inputs(m);
      if (!stale.empty()) {
        std::string list;
        for (const auto& s : stale) list += (list.empty() ? "" : ", ") + s;
        throw io_error("manifest " + path + ": stale inputs: " + list);
      }
      // Any input or output that parses as a device table joins the summary.
      std::vector<std::string> tables;
      for (const auto& in : m.inputs) tables.push_back(in.path);
      for (const auto& out : m.outputs) tables.push_back(out);
      for (const auto& candidate : tables) {
        DeviceTable table;
        try {
          table = cal::load_device_table(candidate);
        } catch (const error&) {
          continue;
        }
        for (std::size_t i = 0; i < table.records.size(); ++i) {
          const auto& r = table.records[i];
          const double l_model = ring::total_inductance(r.l_um, r.w_nm, r.Lsq_pH);
          const double z_model = ring::impedance(table.ring_f0_GHz[i], r.L_uH);
          const double c_model = ring::extract_capacitance_from_measurement(r.f0_GHz, r.L_uH);
          const auto pct = [](double got, double ref) { return 100.0 * (got - ref) / ref; };
          csv += table.source_label + "," + r.id + "," + io::format_sig6(r.r_in_um) + "," +
                 io::format_sig6(r.w_nm) + "," + io::format_sig6(r.l_um) + "," +
                 io::format_sig6(r.p_nm) + "," + io::format_sig6(r.t_nm) + "," +
                 io::format_sig6(r.f0_GHz) + "," + io::format_sig6(r.Lsq_pH) + "," +
                 io::format_sig6(r.L_uH) + "," + io::format_sig6(l_model) + "," +
                 io::format_sig6(pct(l_model, r.L_uH)) + "," + io::format_sig6(r.C_fF) + "," +
                 io::format_sig6(c_model) + "," + io::format_sig6(pct(c_model, r.C_fF)) +
                 "," + io::format_sig6(r.Z_kOhm) + "," + io::format_sig6(z_model) + "," +
                 io::format_sig6(pct(z_model, r.Z_kOhm)) + "\n";
        }
      }
    }
    json params{{"manifests", args->manifests}};
    cli::OutputSet outputs("report", params);
    for (const auto& path : args->manifests) outputs.add_input(path);
    outputs.stage(args->out, csv);
    outputs.commit();
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ringforge: granular-aluminum meander ring resonator toolkit"};
  app.set_version_flag("--version", RINGFORGE_VERSION);
  app.require_subcommand(1);
  auto config_path = std::make_shared<std::string>();
  app.add_option("--config", *config_path,
                 "JSON config with constraint profiles (or env RINGFORGE_CONFIG)");

  setup_material(app);
  setup_ring(app);
  setup_calibrate(app);
  setup_optimize(app, config_path.get());
  setup_fit_s11(app);
  setup_fit_noise(app);
  setup_fit_kerr(app);
  setup_synth(app);
  setup_report(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    ringforge::cli::emit_error("usage", e.what());
    return ringforge::cli::exit_usage;
  } catch (const std::exception& e) {
    return ringforge::cli::report_exception(e);
  }
  return ringforge::cli::exit_ok;
}
