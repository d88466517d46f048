#ifndef CAHAR_RESPONSE_CACHE_H_
#define CAHAR_RESPONSE_CACHE_H_

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cahar/providers.h"

namespace cahar {

// Lowercase hex SHA-256 of `bytes`.
std::string sha256_hex(std::string_view bytes);

// Key of one provider's answer for one image content. Depends only on the
// provider name and the content digest, never on a path.
std::string cache_key(std::string_view provider_name,
                      std::string_view image_content_digest);

struct CacheEntry {
  std::string provider;
  std::string image_digest;
  std::vector<RawTag> raw_tags;
  std::string fetched_at;

  friend bool operator==(const CacheEntry&, const CacheEntry&) = default;
};

std::string serialize_cache_entry(const CacheEntry& entry);
CacheEntry parse_cache_entry(std::string_view document);

// Append-only content-addressed store: one JSON file per key. Writers go
// through a unique temporary file and an atomic rename, so concurrent
// writers of distinct keys never interfere and duplicate writers of one key
// leave exactly one complete document behind.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path path_for(std::string_view key) const;

  std::optional<CacheEntry> lookup(std::string_view key) const;
  // No-op when the key is already present.
  void store(std::string_view key, const CacheEntry& entry) const;

  std::size_t size() const;

 private:
  std::filesystem::path dir_;
};

}  // namespace cahar

#endif  // CAHAR_RESPONSE_CACHE_H_
