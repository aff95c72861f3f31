#include "manifest.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <ctime>
#include <fstream>
#include <iterator>
#include <memory>

#include "gridmech/error.hpp"

#ifndef GRIDMECH_VERSION
#define GRIDMECH_VERSION "unknown"
#endif

namespace gridmech::cli {

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
    throw Error("SHA-256 digest failed");
  std::string hex;
  char byte[3];
  for (unsigned int k = 0; k < len; ++k) {
    std::snprintf(byte, sizeof byte, "%02x", digest[k]);
    hex += byte;
  }
  return hex;
}

std::string file_sha256(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(0, "cannot open " + path.string());
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return sha256_hex(data);
}

RunManifest::RunManifest(std::string command, nlohmann::json config)
    : command_(std::move(command)),
      config_(std::move(config)),
      started_(std::chrono::system_clock::now()),
      clock_(std::chrono::steady_clock::now()) {}

void RunManifest::add_input(const std::filesystem::path& path) {
  inputs_[path.string()] = file_sha256(path);
}

void RunManifest::set_settings(const qp::Settings& s) {
  settings_ = {{"tol_primal", s.tol_primal},
               {"tol_dual", s.tol_dual},
               {"tol_gap", s.tol_gap},
               {"max_iter", s.max_iter},
               {"scale", s.scale}};
}

nlohmann::json RunManifest::to_json() const {
  const std::time_t t = std::chrono::system_clock::to_time_t(started_);
  std::tm utc{};
  gmtime_r(&t, &utc);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &utc);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_).count();
  return {{"command", command_},
          {"tool_version", GRIDMECH_VERSION},
          {"config", config_},
          {"config_hash", sha256_hex(config_.dump())},
          {"inputs", inputs_},
          {"solver_settings", settings_},
          {"timing", {{"started_at", stamp}, {"wall_seconds", wall}}}};
}

}  // namespace gridmech::cli
