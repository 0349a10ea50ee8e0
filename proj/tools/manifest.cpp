#include "manifest.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <memory>

#include <Eigen/Core>
#include <openssl/evp.h>

#include "pdmkws/errors.hpp"

#ifndef PDMKWS_VERSION
#define PDMKWS_VERSION "unknown"
#endif

namespace fs = std::filesystem;

namespace pdmkws::cli {

namespace {

using Ctx = std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)>;

Ctx new_ctx() {
  Ctx ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256 init failed");
  return ctx;
}

std::string finish(EVP_MD_CTX* ctx) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned len = 0;
  if (EVP_DigestFinal_ex(ctx, md.data(), &len) != 1) throw std::runtime_error("sha256 final failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string s;
  for (unsigned i = 0; i < len; ++i) {
    s += hex[md[i] >> 4];
    s += hex[md[i] & 15];
  }
  return s;
}

nlohmann::json file_entry(const fs::path& p) { return {{"path", p.string()}, {"sha256", sha256_file(p)}}; }

}  // namespace

std::string sha256_hex(std::span<const unsigned char> bytes) {
  auto ctx = new_ctx();
  EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size());
  return finish(ctx.get());
}

std::string sha256_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  auto ctx = new_ctx();
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return finish(ctx.get());
}

std::string tree_sha256(const fs::path& root) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), root));
  std::sort(files.begin(), files.end());
  std::string text;
  for (const auto& f : files) text += f.generic_string() + ' ' + sha256_file(root / f) + '\n';
  return sha256_hex({reinterpret_cast<const unsigned char*>(text.data()), text.size()});
}

void RunManifest::add_input(const std::string& name, const fs::path& p) { inputs[name] = file_entry(p); }
void RunManifest::add_output(const std::string& name, const fs::path& p) { outputs[name] = file_entry(p); }

nlohmann::json version_info() {
  return {{"pdmkws", PDMKWS_VERSION},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"compiler", __VERSION__},
          {"manifest_schema", 1}};
}

nlohmann::json RunManifest::to_json() const {
  return {{"command", command}, {"argv", argv},       {"versions", version_info()}, {"config", config},
          {"seeds", seeds},     {"inputs", inputs},   {"variants", variants},      {"outputs", outputs},
          {"results", results}};
}

fs::path manifest_path(const fs::path& output) {
  fs::path p = fs::absolute(output).lexically_normal();
  if (!p.has_filename()) p = p.parent_path();
  return p.parent_path() / (p.filename().string() + ".manifest.json");
}

fs::path write_manifest(const RunManifest& m, const fs::path& output) {
  const auto path = manifest_path(output);
  std::ofstream out(path);
  out << m.to_json().dump(2) << '\n';
  if (!out) throw IoError("cannot write " + path.string());
  return path;
}

RunManifest read_manifest(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open " + p.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(p.string() + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("argv") || !j.at("argv").is_array() || !j.contains("command"))
    throw FormatError(p.string() + ": not a run manifest");
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.argv = j.at("argv").get<std::vector<std::string>>();
  for (const char* k : {"config", "seeds", "inputs", "variants", "outputs", "results"})
    if (!j.contains(k)) throw FormatError(p.string() + ": missing '" + k + "'");
  m.config = j.at("config");
  m.seeds = j.at("seeds");
  m.inputs = j.at("inputs");
  m.variants = j.at("variants");
  m.outputs = j.at("outputs");
  m.results = j.at("results");
  return m;
}

}  // namespace pdmkws::cli
