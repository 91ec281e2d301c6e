#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace pedeval::cli {

inline constexpr std::string_view kToolVersion = "0.1.0";

std::string sha256_hex(std::string_view data);

// Digest of a file, or of a directory's regular files (relative path and
// content digest, sorted by path).
std::string sha256_path(const std::filesystem::path& path);

// Record of one command run: inputs with digests, configuration, tool
// version and the digests of the files written. No timestamps.
class Manifest {
 public:
  explicit Manifest(std::string command) : command_(std::move(command)) {}

  void add_input(const std::string& role, const std::filesystem::path& path);
  nlohmann::ordered_json& config() { return config_; }

  std::string render(const std::map<std::string, std::string>& outputs) const;

 private:
  std::string command_;
  nlohmann::ordered_json inputs_ = nlohmann::ordered_json::array();
  nlohmann::ordered_json config_ = nlohmann::ordered_json::object();
};

}  // namespace pedeval::cli
