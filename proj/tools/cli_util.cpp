#include "cli_util.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <iostream>

#include "ringforge/errors.hpp"
#include "ringforge/io.hpp"
#include "ringforge/version.hpp"

namespace ringforge::cli {

void emit_error(const std::string& type, const std::string& message) {
  nlohmann::json doc{{"error", {{"type", type}, {"message", message}}}};
  std::cerr << doc.dump() << "\n";
}

int report_exception(const std::exception& e) {
  if (dynamic_cast<const validation_error*>(&e)) {
    emit_error("validation", e.what());
    return exit_usage;
  }
  if (dynamic_cast<const ambiguity_error*>(&e)) {
    emit_error("ambiguity", e.what());
    return exit_runtime;
  }
  if (dynamic_cast<const io_error*>(&e)) {
    emit_error("io", e.what());
    return exit_runtime;
  }
  if (dynamic_cast<const fit_error*>(&e)) {
    emit_error("fit", e.what());
    return exit_runtime;
  }
  emit_error("internal", e.what());
  return exit_runtime;
}

std::string iso8601_utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

Range parse_range(const std::string& text, const std::string& flag) {
  const auto first = text.find(':');
  if (first == std::string::npos)
    throw validation_error(flag + ": expected 'lo:hi' or 'lo:hi:step', got '" + text + "'");
  const auto second = text.find(':', first + 1);
  Range r;
  r.lo = io::parse_double(text.substr(0, first), flag);
  if (second == std::string::npos) {
    r.hi = io::parse_double(text.substr(first + 1), flag);
  } else {
    r.hi = io::parse_double(text.substr(first + 1, second - first - 1), flag);
    r.step = io::parse_double(text.substr(second + 1), flag);
    if (!(*r.step > 0.0)) throw validation_error(flag + ": step must be positive");
  }
  if (!(r.lo <= r.hi)) throw validation_error(flag + ": lower bound exceeds upper bound");
  return r;
}

std::vector<double> parse_double_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::string token;
  for (char c : text) {
    if (c == ',') {
      out.push_back(io::parse_double(token, flag));
      token.clear();
    } else {
      token += c;
    }
  }
  if (!token.empty()) out.push_back(io::parse_double(token, flag));
  if (out.empty()) throw validation_error(flag + ": empty list");
  return out;
}

OutputSet::OutputSet(std::string command, nlohmann::json parameters) {
  manifest_.command = std::move(command);
  manifest_.parameters_json = parameters.dump();
  manifest_.tool_version = RINGFORGE_VERSION;
}

void OutputSet::add_input(const std::string& path) {
  manifest_.inputs.push_back({path, manifest::sha256_file(path)});
}

void OutputSet::stage(const std::string& path, std::string content) {
  staged_.emplace_back(path, std::move(content));
}

void OutputSet::commit() {
  std::string first_file;
  for (const auto& [path, content] : staged_) {
    if (path == "-") {
      std::cout << content;
      continue;
    }
    io::write_text_file(path, content);
    manifest_.outputs.push_back(path);
    if (first_file.empty()) first_file = path;
  }
  if (first_file.empty()) return;
  manifest_.timestamp_utc = iso8601_utc_now();
  manifest::write_atomic(manifest_, manifest::path_for_output(first_file));
}

namespace {

void apply_profile_json(DesignConstraints& c, const nlohmann::json& profile) {
  const auto set = [&](const char* key, double& field) {
    if (profile.contains(key)) field = profile.at(key).get<double>();
  };
  set("f_min_GHz", c.f_min_GHz);
  set("f_max_GHz", c.f_max_GHz);
  set("w_min_nm", c.w_min_nm);
  set("p_min_nm", c.p_min_nm);
  set("t_min_nm", c.t_min_nm);
  set("resistivity_max_uohm_cm", c.resistivity_max_uohm_cm);
  set("r_in_min_um", c.r_in_min_um);
  set("r_in_max_um", c.r_in_max_um);
  if (profile.contains("sheet_inductance_max_pH"))
    c.sheet_inductance_max_pH = profile.at("sheet_inductance_max_pH").get<double>();
  if (profile.contains("suspended")) c.suspended = profile.at("suspended").get<bool>();
}

}  // namespace

DesignConstraints profile_constraints(const std::string& profile_name,
                                      const std::string& config_path) {
  DesignConstraints c;  // built-in `default`
  if (profile_name == "relaxed") {
    // Mirrors the simulated high-resistivity designs: sub-stability width.
    c.w_min_nm = 120.0;
    c.p_min_nm = 200.0;
    c.t_min_nm = 20.0;
  } else if (profile_name != "default") {
    // Unknown names must come from the config file below.
    c = DesignConstraints{};
  }

  std::string path = config_path;
  if (path.empty()) {
    if (const char* env = std::getenv("RINGFORGE_CONFIG")) path = env;
  }
  if (path.empty()) {
    if (profile_name != "default" && profile_name != "relaxed")
      throw validation_error("unknown constraint profile '" + profile_name +
                             "' and no config file given");
    return c;
  }

  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(io::read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw io_error(path + ": config parse failure: " + e.what());
  }
  if (doc.contains("profiles")) {
    const auto& profiles = doc.at("profiles");
    if (profiles.contains(profile_name)) {
      apply_profile_json(c, profiles.at(profile_name));
    } else if (profile_name != "default" && profile_name != "relaxed") {
      throw validation_error("profile '" + profile_name + "' not found in " + path);
    }
  }
  return c;
}

}  // namespace ringforge::cli
