#include "ringforge/manifest.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>

#include <json.hpp>

#include "ringforge/errors.hpp"
#include "ringforge/io.hpp"

namespace ringforge::manifest {

std::string sha256_bytes(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1)
    throw io_error("sha256 digest failure");
  static const char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

std::string sha256_file(const std::string& path) {
  return sha256_bytes(io::read_text_file(path));
}

std::string to_json(const RunManifest& m) {
  nlohmann::json doc;
  doc["command"] = m.command;
  doc["parameters"] = nlohmann::json::parse(
      m.parameters_json.empty() ? std::string("{}") : m.parameters_json);
  doc["inputs"] = nlohmann::json::array();
  for (const auto& in : m.inputs)
    doc["inputs"].push_back({{"path", in.path}, {"sha256", in.sha256}});
  doc["tool_version"] = m.tool_version;
  doc["timestamp_utc"] = m.timestamp_utc;
  doc["outputs"] = m.outputs;
  return doc.dump(2) + "\n";
}

RunManifest from_json_file(const std::string& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(io::read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw io_error(path + ": manifest parse failure: " + e.what());
  }
  RunManifest m;
  try {
    m.command = doc.at("command").get<std::string>();
    m.parameters_json = doc.at("parameters").dump();
    for (const auto& in : doc.at("inputs"))
      m.inputs.push_back({in.at("path").get<std::string>(), in.at("sha256").get<std::string>()});
    m.tool_version = doc.at("tool_version").get<std::string>();
    m.timestamp_utc = doc.at("timestamp_utc").get<std::string>();
    for (const auto& out : doc.at("outputs")) m.outputs.push_back(out.get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw io_error(path + ": manifest field missing: " + e.what());
  }
  return m;
}

void write_atomic(const RunManifest& m, const std::string& path) {
  const std::string tmp = path + ".tmp";
  io::write_text_file(tmp, to_json(m));
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::remove(tmp.c_str());
    throw io_error("cannot move manifest into place at '" + path + "': " + ec.message());
  }
}

std::string path_for_output(const std::string& output_path) {
  std::filesystem::path p(output_path);
  p.replace_extension();
  return p.string() + ".manifest.json";
}

std::vector<std::string> stale_inputs(const RunManifest& m) {
  std::vector<std::string> stale;
  for (const auto& in : m.inputs) {
    try {
      if (sha256_file(in.path) != in.sha256) stale.push_back(in.path);
    } catch (const io_error&) {
      stale.push_back(in.path);
    }
  }
  return stale;
}

}  // namespace ringforge::manifest
