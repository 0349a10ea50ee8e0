#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace pdmkws::cli {

/// JSON record written beside a command's output. `argv` alone re-runs the
/// command (`pdm --replay <manifest>`).
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json seeds = nlohmann::json::object();
  nlohmann::json inputs = nlohmann::json::object();    // name -> {path, sha256}
  nlohmann::json variants = nlohmann::json::object();  // chosen algorithm variants
  nlohmann::json outputs = nlohmann::json::object();   // name -> {path, sha256}
  nlohmann::json results = nlohmann::json::object();

  void add_input(const std::string& name, const std::filesystem::path& p);
  void add_output(const std::string& name, const std::filesystem::path& p);
  nlohmann::json to_json() const;
};

nlohmann::json version_info();

std::string sha256_hex(std::span<const unsigned char> bytes);
std::string sha256_file(const std::filesystem::path& p);
/// Hash of "relative/path sha256" lines over every file below `root`, sorted.
std::string tree_sha256(const std::filesystem::path& root);

/// `out.pdm` -> `out.pdm.manifest.json`; directories get the same suffix on
/// their own name, in their parent.
std::filesystem::path manifest_path(const std::filesystem::path& output);
std::filesystem::path write_manifest(const RunManifest& m, const std::filesystem::path& output);
RunManifest read_manifest(const std::filesystem::path& p);

}  // namespace pdmkws::cli
