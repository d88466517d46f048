#ifndef CAHAR_EXTRACT_H_
#define CAHAR_EXTRACT_H_

#include <map>
#include <span>
#include <string>
#include <vector>

#include "cahar/manifest.h"
#include "cahar/providers.h"
#include "cahar/response_cache.h"
#include "cahar/tag.h"

namespace cahar {

enum class FetchStatus { kCacheHit, kFetched, kFailed };

struct ProviderOutcome {
  std::string provider;
  FetchStatus status = FetchStatus::kFailed;
  std::string message;  // failure cause; empty otherwise
};

struct ExtractResult {
  TagSet tags;
  std::vector<ProviderOutcome> outcomes;  // one per provider, in input order
};

TagSet tagset_from_responses(const std::string& image_id,
                             std::span<const TagResponse> responses);

// Queries every provider (cache first, fanned out concurrently), normalizes
// the returned tags and unions them with per-provider attribution. Provider
// scores are dropped. A failing provider is reported in the outcomes; when
// every provider fails a ProviderError lists each cause. `cache` may be
// null.
ExtractResult extract_tags(const ImageRef& image,
                           std::span<const TagProvider* const> providers,
                           const ResponseCache* cache);

// Tag sets keyed by image id, as written by `cahar extract`.
using TagIndex = std::map<std::string, TagSet>;

std::string serialize_tag_index(const TagIndex& index);
TagIndex parse_tag_index(std::string_view document);

}  // namespace cahar

#endif  // CAHAR_EXTRACT_H_
