#include "manifest.hpp"

#include <difflab/common.hpp>
#include <difflab/io.hpp>

namespace difflab::cli {

#ifndef DIFFLAB_VERSION
#define DIFFLAB_VERSION "unknown"
#endif

void write_manifest(const std::filesystem::path& dir, const RunManifest& m) {
  Json j;
  j["tool"] = "difflab";
  j["version"] = DIFFLAB_VERSION;
  j["command"] = m.command;
  j["argv"] = m.argv;
  j["replay"] = m.replay;
  j["seed"] = m.seed;
  j["kinds"] = m.kinds;
  j["config"] = m.config;
  auto& inputs = j["inputs"] = Json::array();
  for (const auto& in : m.inputs) {
    inputs.push_back({{"role", in.role}, {"path", in.path.string()}, {"sha256", io::sha256_file(in.path)}});
  }
  auto& outputs = j["outputs"] = Json::array();
  for (const auto& name : m.outputs) {
    outputs.push_back({{"path", name}, {"sha256", io::sha256_file(dir / name)}});
  }
  io::write_file(dir / kManifestName, j.dump(2) + "\n");
}

Json read_manifest(const std::filesystem::path& path) {
  const std::string text = io::read_file(path);
  Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw UsageError("malformed manifest: " + path.string());
  for (const char* key : {"command", "replay", "outputs", "inputs"}) {
    if (!j.contains(key)) throw UsageError(std::string("manifest lacks \"") + key + "\": " + path.string());
  }
  return j;
}

}  // namespace difflab::cli
