#pragma once

#include <string>
#include <vector>

namespace ringforge {

/// Provenance record written next to every set of CLI outputs.
struct RunManifest {
  std::string command;
  std::string parameters_json;  // full flag set, serialized object
  struct Input {
    std::string path;
    std::string sha256;
  };
  std::vector<Input> inputs;
  std::string tool_version;
  std::string timestamp_utc;
  std::vector<std::string> outputs;
};

namespace manifest {

std::string sha256_file(const std::string& path);
std::string sha256_bytes(const std::string& bytes);

std::string to_json(const RunManifest& m);
RunManifest from_json_file(const std::string& path);

/// Writes via a temporary file in the same directory plus rename, so a
/// manifest is either absent or complete.
void write_atomic(const RunManifest& m, const std::string& path);

/// Default manifest path for a given primary output file.
std::string path_for_output(const std::string& output_path);

/// Re-hashes the recorded inputs; returns the paths whose digest changed
/// or which disappeared.
std::vector<std::string> stale_inputs(const RunManifest& m);

}  // namespace manifest
}  // namespace ringforge
