#include "pedeval/cli/manifest.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <memory>

#include "pedeval/dataio.hpp"
#include "pedeval/error.hpp"

namespace pedeval::cli {

namespace fs = std::filesystem;

std::string sha256_hex(std::string_view data) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &length) != 1) {
    throw Error(ErrorCategory::io, "sha256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

std::string sha256_path(const fs::path& path) {
  if (!fs::is_directory(path)) return sha256_hex(read_file(path));
  std::vector<std::string> lines;
  for (const auto& entry : fs::recursive_directory_iterator(path)) {
    if (!entry.is_regular_file()) continue;
    lines.push_back(fs::relative(entry.path(), path).generic_string() + " " + sha256_hex(read_file(entry.path())));
  }
  std::sort(lines.begin(), lines.end());
  std::string joined;
  for (const auto& l : lines) joined += l + "\n";
  return sha256_hex(joined);
}

void Manifest::add_input(const std::string& role, const fs::path& path) {
  inputs_.push_back({{"role", role}, {"path", path.generic_string()}, {"sha256", sha256_path(path)}});
}

std::string Manifest::render(const std::map<std::string, std::string>& outputs) const {
  nlohmann::ordered_json out_list = nlohmann::ordered_json::array();
  for (const auto& [name, content] : outputs) out_list.push_back({{"name", name}, {"sha256", sha256_hex(content)}});
  nlohmann::ordered_json doc;
  doc["tool"] = "pedeval";
  doc["version"] = kToolVersion;
  doc["command"] = command_;
  doc["inputs"] = inputs_;
  doc["config"] = config_;
  doc["outputs"] = out_list;
  return doc.dump(2) + "\n";
}

}  // namespace pedeval::cli
