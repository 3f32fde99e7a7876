#pragma once

#include <json.hpp>

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ringforge/design_opt.hpp"
#include "ringforge/manifest.hpp"

namespace ringforge::cli {

/// Exit codes: 0 success, 1 runtime/fit failure, 2 usage/validation.
inline constexpr int exit_ok = 0;
inline constexpr int exit_runtime = 1;
inline constexpr int exit_usage = 2;

/// Machine-readable error JSON on stderr.
void emit_error(const std::string& type, const std::string& message);

/// Maps a thrown ringforge error to {exit code, error type}.
int report_exception(const std::exception& e);

std::string iso8601_utc_now();

/// "a:b" or "a:b:step" range flags.
struct Range {
  double lo = 0.0;
  double hi = 0.0;
  std::optional<double> step;
};
Range parse_range(const std::string& text, const std::string& flag);

std::vector<double> parse_double_list(const std::string& text, const std::string& flag);

/// Collects outputs for one command invocation and writes them together with
/// a RunManifest named after the first file output. Writing to "-" streams to
/// stdout and is excluded from the manifest.
class OutputSet {
public:
  OutputSet(std::string command, nlohmann::json parameters);

  void add_input(const std::string& path);
  void stage(const std::string& path, std::string content);
  /// Writes staged outputs plus the manifest; no-op manifest when everything
  /// went to stdout.
  void commit();

private:
  RunManifest manifest_;
  std::vector<std::pair<std::string, std::string>> staged_;
};

/// Constraint profiles: the built-in `default` and `relaxed` profiles can be
/// overridden by a JSON config file (flag --config or env RINGFORGE_CONFIG).
DesignConstraints profile_constraints(const std::string& profile_name,
                                      const std::string& config_path);

}  // namespace ringforge::cli
