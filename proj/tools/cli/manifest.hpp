#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace difflab::cli {

using Json = nlohmann::ordered_json;

struct InputFile {
  std::string role;
  std::filesystem::path path;  // absolute
};

/// Everything needed to re-run a command: `replay` is a complete argument
/// list (minus --out) with absolute input paths and every default spelled out.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  std::vector<std::string> replay;
  Json config = Json::object();
  Json kinds = Json::object();  // schedule / forward / objective / sampler, where relevant
  std::uint64_t seed = 0;
  std::vector<InputFile> inputs;
  std::vector<std::string> outputs;  // primary artifacts, relative to the run directory
};

inline constexpr const char* kManifestName = "manifest.json";

/// Hashes inputs and outputs and writes <dir>/manifest.json.
void write_manifest(const std::filesystem::path& dir, const RunManifest& manifest);

Json read_manifest(const std::filesystem::path& path);

}  // namespace difflab::cli
