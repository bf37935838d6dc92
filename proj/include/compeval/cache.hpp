#pragma once

#include <filesystem>
#include <optional>
#include <shared_mutex>
#include <string>

#include <openssl/evp.h>

#include "json.hpp"

#include "compeval/detail/util.hpp"
#include "compeval/errors.hpp"

namespace compeval {

inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw EvalError(ErrorCode::IoError, "SHA-256 digest failed");
  }
  return detail::hex_encode(digest, len);
}

inline std::string cache_key(const std::string& model_name, const nlohmann::json& request) {
  return sha256_hex(model_name + "\n" + request.dump());
}

/// Disk-backed response cache: one JSON file per key. Reads are shared,
/// writes serialized and atomic, so concurrent evaluation workers can mix
/// lookups with inserts.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  const std::filesystem::path& dir() const { return dir_; }

  std::optional<nlohmann::json> get(const std::string& key) const {
    std::shared_lock lock(mutex_);
    const std::filesystem::path path = entry_path(key);
    if (!std::filesystem::exists(path)) return std::nullopt;
    try {
      return nlohmann::json::parse(detail::read_file(path));
    } catch (const nlohmann::json::exception&) {
      return std::nullopt;  // treat a torn entry as a miss
    }
  }

  void put(const std::string& key, const nlohmann::json& value) {
    std::unique_lock lock(mutex_);
    detail::atomic_write_file(entry_path(key), value.dump());
  }

 private:
  std::filesystem::path entry_path(const std::string& key) const { return dir_ / (key + ".json"); }

  std::filesystem::path dir_;
  mutable std::shared_mutex mutex_;
};

}  // namespace compeval
