#include "cahar/extract.h"

#include <fstream>
#include <future>
#include <sstream>

#include "cahar/error.h"
#include "json_util.h"

namespace cahar {

using nlohmann::ordered_json;

namespace {

std::string read_file(const std::filesystem::path& path,
                      const std::string& provider) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ProviderError(provider + ": cannot read '" + path.string() + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct ProviderResult {
  ProviderOutcome outcome;
  TagResponse response;
};

ProviderResult query(const ImageRef& image, const TagProvider& provider,
                     const ResponseCache* cache) {
  ProviderResult result;
  result.outcome.provider = provider.name();
  try {
    const std::string content =
        read_file(provider.source_path(image), provider.name());
    const std::string key = cache_key(provider.name(), sha256_hex(content));
    if (cache != nullptr) {
      if (auto hit = cache->lookup(key)) {
        result.response = {hit->provider, image.image_id, hit->raw_tags,
                           hit->fetched_at};
        result.outcome.status = FetchStatus::kCacheHit;
        return result;
      }
    }
    result.response = provider.fetch(image, content);
    if (cache != nullptr) {
      cache->store(key, {provider.name(), sha256_hex(content),
                         result.response.raw_tags, result.response.fetched_at});
    }
    result.outcome.status = FetchStatus::kFetched;
  } catch (const std::exception& e) {
    result.outcome.status = FetchStatus::kFailed;
    result.outcome.message = e.what();
  }
  return result;
}

}  // namespace

TagSet tagset_from_responses(const std::string& image_id,
                             std::span<const TagResponse> responses) {
  TagSet tags(image_id);
  for (const auto& response : responses) {
    for (const auto& raw : response.raw_tags) {
      tags.add(Tag::semantic(raw.text), response.provider);
    }
  }
  return tags;
}

ExtractResult extract_tags(const ImageRef& image,
                           std::span<const TagProvider* const> providers,
                           const ResponseCache* cache) {
  if (providers.empty()) throw ConfigError("no tag providers configured");

  std::vector<std::future<ProviderResult>> pending;
  pending.reserve(providers.size());
  for (const TagProvider* provider : providers) {
    pending.push_back(std::async(std::launch::async, query, std::cref(image),
                                 std::cref(*provider), cache));
  }

  ExtractResult result;
  std::vector<TagResponse> responses;
  std::string failures;
  for (auto& f : pending) {
    ProviderResult r = f.get();
    if (r.outcome.status == FetchStatus::kFailed) {
      failures += "\n  " + r.outcome.provider + ": " + r.outcome.message;
    } else {
      responses.push_back(std::move(r.response));
    }
    result.outcomes.push_back(std::move(r.outcome));
  }
  if (responses.empty()) {
    throw ProviderError("all providers failed for '" + image.image_id + "':" +
                        failures);
  }
  result.tags = tagset_from_responses(image.image_id, responses);
  return result;
}

std::string serialize_tag_index(const TagIndex& index) {
  ordered_json j;
  j["schema_version"] = 1;
  ordered_json sets = ordered_json::array();
  for (const auto& [image_id, tagset] : index) {
    ordered_json entry;
    entry["image_id"] = image_id;
    ordered_json tags = ordered_json::array();
    for (const auto& [tag, sources] : tagset.entries()) {
      ordered_json t;
      t["kind"] = to_string(tag.kind());
      t["text"] = tag.text();
      t["sources"] = sources;
      tags.push_back(std::move(t));
    }
    entry["tags"] = std::move(tags);
    sets.push_back(std::move(entry));
  }
  j["tagsets"] = std::move(sets);
  return j.dump(2) + "\n";
}

TagIndex parse_tag_index(std::string_view document) {
  const auto j = json_util::parse(document, "tag index");
  json_util::require_keys(j, "tag index", {"schema_version", "tagsets"});
  if (json_util::get<int>(j, "schema_version", "tag index") != 1) {
    throw DataError("tag index schema_version is not supported");
  }
  TagIndex index;
  for (const auto& entry : j.at("tagsets")) {
    json_util::require_keys(entry, "tagsets[]", {"image_id", "tags"});
    const auto image_id = json_util::get<std::string>(entry, "image_id", "tagsets[]");
    TagSet tags(image_id);
    for (const auto& t : entry.at("tags")) {
      json_util::require_keys(t, "tagsets[].tags[]", {"kind", "text", "sources"});
      const Tag tag = Tag::make(
          tag_kind_from_string(json_util::get<std::string>(t, "kind", "tags[]")),
          json_util::get<std::string>(t, "text", "tags[]"));
      const auto sources =
          json_util::get<std::vector<std::string>>(t, "sources", "tags[]");
      if (sources.empty()) {
        throw DataError("tag '" + tag.display() + "' of '" + image_id +
                        "' has no source");
      }
      for (const auto& s : sources) tags.add(tag, s);
    }
    if (!index.emplace(image_id, std::move(tags)).second) {
      throw DataError("duplicate image_id '" + image_id + "' in tag index");
    }
  }
  return index;
}

}  // namespace cahar
