#include "xanchor/manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>

#include "xanchor/error.hpp"

namespace xanchor {
namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
      throw Error("cannot initialise SHA-256");
    }
  }
  void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx_.get(), data, n); }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_.get(), md.data(), &len);
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
      out += digits[md[i] >> 4];
      out += digits[md[i] & 15];
    }
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

std::string digest_entry(const std::filesystem::path& path) { return "sha256:" + sha256_file(path); }

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  Sha256 h;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

void RunManifest::add_input(const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) {
    for (const auto& e : std::filesystem::recursive_directory_iterator(path)) {
      if (e.is_regular_file()) inputs[e.path().generic_string()] = digest_entry(e.path());
    }
    return;
  }
  inputs[path.generic_string()] = digest_entry(path);
}

void RunManifest::add_output(const std::filesystem::path& path) {
  outputs[path.generic_string()] = digest_entry(path);
}

nlohmann::json RunManifest::to_json() const {
  return {{"subcommand", subcommand},
          {"flags", flags},
          {"inputs", inputs},
          {"outputs", outputs},
          {"seed", seed},
          {"tool_version", tool_version},
          {"wall_time_seconds", wall_time_seconds},
          {"exit_code", exit_code}};
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  try {
    RunManifest m;
    m.subcommand = j.at("subcommand").get<std::string>();
    m.flags = j.at("flags");
    m.inputs = j.value("inputs", std::map<std::string, std::string>{});
    m.outputs = j.value("outputs", std::map<std::string, std::string>{});
    m.seed = j.value("seed", std::uint64_t{0});
    m.tool_version = j.value("tool_version", std::string{});
    m.wall_time_seconds = j.value("wall_time_seconds", 0.0);
    m.exit_code = j.value("exit_code", 0);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad manifest: ") + e.what());
  }
}

void RunManifest::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << to_json().dump(2) << '\n';
}

RunManifest RunManifest::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open manifest " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("manifest " + path.string() + ": " + e.what());
  }
}

std::filesystem::path manifest_path_for(const std::filesystem::path& output) {
  auto p = output;
  p += ".manifest.json";
  return p;
}

}  // namespace xanchor
