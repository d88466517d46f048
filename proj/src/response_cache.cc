#include "cahar/response_cache.h"

#include <atomic>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include <openssl/evp.h>
#include <unistd.h>

#include "cahar/error.h"
#include "json_util.h"

namespace cahar {

using nlohmann::ordered_json;

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(),
                 nullptr) != 1) {
    throw std::runtime_error("SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string cache_key(std::string_view provider_name,
                      std::string_view image_content_digest) {
  std::string material;
  material.reserve(provider_name.size() + image_content_digest.size() + 1);
  material.append(provider_name);
  material.push_back('\0');
  material.append(image_content_digest);
  return sha256_hex(material);
}

std::string serialize_cache_entry(const CacheEntry& entry) {
  ordered_json j;
  j["provider"] = entry.provider;
  j["image_digest"] = entry.image_digest;
  ordered_json tags = ordered_json::array();
  for (const auto& tag : entry.raw_tags) {
    ordered_json t;
    t["text"] = tag.text;
    if (tag.score) t["score"] = *tag.score;
    tags.push_back(std::move(t));
  }
  j["raw_tags"] = std::move(tags);
  j["fetched_at"] = entry.fetched_at;
  return j.dump(2) + "\n";
}

CacheEntry parse_cache_entry(std::string_view document) {
  const auto j = json_util::parse(document, "cache entry");
  json_util::require_keys(j, "cache entry",
                          {"provider", "image_digest", "raw_tags", "fetched_at"});
  CacheEntry entry;
  entry.provider = json_util::get<std::string>(j, "provider", "cache entry");
  entry.image_digest =
      json_util::get<std::string>(j, "image_digest", "cache entry");
  entry.fetched_at = json_util::get<std::string>(j, "fetched_at", "cache entry");
  const auto& tags = j.at("raw_tags");
  if (!tags.is_array()) throw DataError("cache entry raw_tags must be an array");
  for (const auto& t : tags) {
    json_util::require_keys(t, "cache entry raw_tags[]", {"text"}, {"score"});
    entry.raw_tags.push_back(
        {json_util::get<std::string>(t, "text", "raw_tags"),
         json_util::get_optional<double>(t, "score", "raw_tags")});
  }
  return entry;
}

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) {
    throw ConfigError("cannot create cache directory '" + dir_.string() +
                      "': " + ec.message());
  }
}

std::filesystem::path ResponseCache::path_for(std::string_view key) const {
  return dir_ / (std::string(key) + ".json");
}

std::optional<CacheEntry> ResponseCache::lookup(std::string_view key) const {
  std::ifstream in(path_for(key), std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_cache_entry(buf.str());
}

void ResponseCache::store(std::string_view key, const CacheEntry& entry) const {
  const auto target = path_for(key);
  if (std::filesystem::exists(target)) return;

  static std::atomic<std::uint64_t> counter{0};
  std::ostringstream tmp_name;
  tmp_name << "." << key << ".tmp." << ::getpid() << "."
           << std::hash<std::thread::id>{}(std::this_thread::get_id()) << "."
           << counter++;
  const auto tmp = dir_ / tmp_name.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << serialize_cache_entry(entry);
    if (!out) throw DataError("cannot write cache file '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw DataError("cannot commit cache entry '" + target.string() + "'");
  }
}

std::size_t ResponseCache::size() const {
  std::size_t n = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir_)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && e.path().extension() == ".json" &&
        name.front() != '.') {
      ++n;
    }
  }
  return n;
}

}  // namespace cahar
