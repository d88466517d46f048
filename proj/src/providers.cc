#include "cahar/providers.h"

#include <atomic>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>
#include <thread>

#include <openssl/evp.h>

#include "cahar/error.h"
#include "json_util.h"

namespace cahar {

using nlohmann::ordered_json;

namespace {

std::atomic<std::uint64_t> g_network_requests{0};

std::string_view to_string(ProviderKind kind) {
  return kind == ProviderKind::kHttpService ? "http_service" : "fixture";
}

std::string base64(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(
      reinterpret_cast<unsigned char*>(out.data()),
      reinterpret_cast<const unsigned char*>(bytes.data()),
      static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<RawTag> tags_from_json_list(const ordered_json& list,
                                        std::string_view where) {
  if (!list.is_array()) {
    throw DataError(std::string(where) + " must be an array of tags");
  }
  std::vector<RawTag> out;
  for (const auto& item : list) {
    if (item.is_string()) {
      out.push_back({item.get<std::string>(), std::nullopt});
      continue;
    }
    json_util::require_keys(item, where, {"text"}, {"score"});
    out.push_back({json_util::get<std::string>(item, "text", where),
                   json_util::get_optional<double>(item, "score", where)});
  }
  return out;
}

// Pulls the list of {name_key, score_key} objects at `list` into raw tags.
std::vector<RawTag> collect(const ordered_json& list, const char* name_key,
                            const char* score_key, std::string_view api) {
  if (!list.is_array()) {
    throw ProviderError(std::string(api) + ": tag list missing in response");
  }
  std::vector<RawTag> out;
  for (const auto& item : list) {
    if (!item.is_object() || !item.contains(name_key) ||
        !item[name_key].is_string()) {
      throw ProviderError(std::string(api) + ": malformed tag entry");
    }
    RawTag tag{item[name_key].get<std::string>(), std::nullopt};
    if (item.contains(score_key) && item[score_key].is_number()) {
      tag.score = item[score_key].get<double>();
    }
    out.push_back(std::move(tag));
  }
  return out;
}

ordered_json parse_body(std::string_view body, std::string_view api) {
  try {
    return ordered_json::parse(body.begin(), body.end());
  } catch (const nlohmann::json::parse_error&) {
    throw ProviderError(std::string(api) + ": response is not JSON");
  }
}

class ClarifaiAdapter : public ServiceAdapter {
 public:
  HttpRequest build_request(const std::string& endpoint,
                            std::string_view image_bytes,
                            const std::string& credential) const override {
    ordered_json body;
    body["inputs"] = ordered_json::array(
        {{{"data", {{"image", {{"base64", base64(image_bytes)}}}}}}});
    return {endpoint,
            {{"Authorization", "Key " + credential}},
            body.dump(),
            "application/json"};
  }

  std::vector<RawTag> parse_response(std::string_view body) const override {
    const auto j = parse_body(body, "clarifai");
    const auto& outputs = j.value("outputs", ordered_json::array());
    if (!outputs.is_array() || outputs.empty()) {
      throw ProviderError("clarifai: response has no outputs");
    }
    const auto& data = outputs[0].value("data", ordered_json::object());
    return collect(data.value("concepts", ordered_json::array()), "name",
                   "value", "clarifai");
  }
};

class MicrosoftAdapter : public ServiceAdapter {
 public:
  HttpRequest build_request(const std::string& endpoint,
                            std::string_view image_bytes,
                            const std::string& credential) const override {
    return {endpoint,
            {{"Ocp-Apim-Subscription-Key", credential}},
            std::string(image_bytes),
            "application/octet-stream"};
  }

  std::vector<RawTag> parse_response(std::string_view body) const override {
    const auto j = parse_body(body, "microsoft");
    if (!j.is_object() || !j.contains("tags")) {
      throw ProviderError("microsoft: response has no tags");
    }
    return collect(j["tags"], "name", "confidence", "microsoft");
  }
};

class GoogleAdapter : public ServiceAdapter {
 public:
  HttpRequest build_request(const std::string& endpoint,
                            std::string_view image_bytes,
                            const std::string& credential) const override {
    ordered_json request;
    request["image"] = {{"content", base64(image_bytes)}};
    request["features"] =
        ordered_json::array({{{"type", "LABEL_DETECTION"}, {"maxResults", 50}}});
    ordered_json body;
    body["requests"] = ordered_json::array({request});
    const char sep = endpoint.find('?') == std::string::npos ? '?' : '&';
    return {endpoint + sep + "key=" + credential, {}, body.dump(),
            "application/json"};
  }

  std::vector<RawTag> parse_response(std::string_view body) const override {
    const auto j = parse_body(body, "google");
    const auto& responses = j.value("responses", ordered_json::array());
    if (!responses.is_array() || responses.empty()) {
      throw ProviderError("google: response has no responses");
    }
    const auto& first = responses[0];
    if (first.contains("error")) {
      throw ProviderError("google: service reported an error");
    }
    // An image with no labels comes back without the field at all.
    return collect(first.value("labelAnnotations", ordered_json::array()),
                   "description", "score", "google");
  }
};

bool retriable_status(int status) { return status == 429 || status >= 500; }

}  // namespace

void ProviderDescriptor::validate() const {
  const std::string who = "provider '" + name + "'";
  if (name.empty()) throw ConfigError("provider with empty name");
  if (timeout.count() <= 0) throw ConfigError(who + ": timeout must be > 0");
  if (max_retries < 0 || max_retries > 10) {
    throw ConfigError(who + ": max_retries must be in [0, 10]");
  }
  if (kind == ProviderKind::kHttpService) {
    if (!endpoint || endpoint->empty()) {
      throw ConfigError(who + ": endpoint is required for http_service");
    }
    if (!credential_ref || credential_ref->empty()) {
      throw ConfigError(who + ": credential_ref is required for http_service");
    }
    if (!api) throw ConfigError(who + ": api is required for http_service");
    make_service_adapter(*api);
    if (fixture_dir) {
      throw ConfigError(who + ": fixture_dir is only valid for fixtures");
    }
  } else {
    if (endpoint || credential_ref || api) {
      throw ConfigError(who +
                        ": endpoint/credential_ref/api are not valid for a "
                        "fixture provider");
    }
  }
}

ProviderDescriptor provider_descriptor_from_json(const ordered_json& j) {
  const std::string where = "providers[]";
  try {
    json_util::require_keys(j, where, {"name", "kind"},
                            {"endpoint", "credential_ref", "timeout_ms",
                             "max_retries", "api", "fixture_dir"});
    ProviderDescriptor d;
    d.name = json_util::get<std::string>(j, "name", where);
    const auto kind = json_util::get<std::string>(j, "kind", where);
    if (kind == "http_service") {
      d.kind = ProviderKind::kHttpService;
    } else if (kind == "fixture") {
      d.kind = ProviderKind::kFixture;
    } else {
      throw ConfigError("providers[].kind: unknown kind '" + kind + "'");
    }
    d.endpoint = json_util::get_optional<std::string>(j, "endpoint", where);
    d.credential_ref =
        json_util::get_optional<std::string>(j, "credential_ref", where);
    if (auto t = json_util::get_optional<std::int64_t>(j, "timeout_ms", where)) {
      d.timeout = std::chrono::milliseconds(*t);
    }
    if (auto r = json_util::get_optional<int>(j, "max_retries", where)) {
      d.max_retries = *r;
    }
    d.api = json_util::get_optional<std::string>(j, "api", where);
    if (auto dir = json_util::get_optional<std::string>(j, "fixture_dir", where)) {
      d.fixture_dir = *dir;
    }
    d.validate();
    return d;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kConfig) throw;
    throw ConfigError(e.what());
  }
}

ordered_json to_json(const ProviderDescriptor& d) {
  ordered_json j;
  j["name"] = d.name;
  j["kind"] = to_string(d.kind);
  if (d.endpoint) j["endpoint"] = *d.endpoint;
  if (d.credential_ref) j["credential_ref"] = *d.credential_ref;
  j["timeout_ms"] = d.timeout.count();
  j["max_retries"] = d.max_retries;
  if (d.api) j["api"] = *d.api;
  if (d.fixture_dir) j["fixture_dir"] = d.fixture_dir->generic_string();
  return j;
}

void TagResponse::validate() const {
  for (const auto& tag : raw_tags) {
    if (tag.text.empty()) {
      throw DataError(provider + " returned an empty tag for '" + image_id +
                      "'");
    }
    if (tag.score && !(*tag.score >= 0.0 && *tag.score <= 1.0)) {
      throw DataError(provider + " returned score outside [0,1] for tag '" +
                      tag.text + "'");
    }
  }
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<RawTag> parse_fixture(std::string_view content,
                                  std::string_view provider) {
  std::size_t first = content.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos &&
      (content[first] == '{' || content[first] == '[')) {
    const auto j = json_util::parse(content, "fixture");
    if (j.is_array()) return tags_from_json_list(j, "fixture");
    json_util::require_keys(j, "fixture", {}, {"tags", "providers", "image_id"});
    if (j.contains("providers")) {
      const auto& by_provider = j["providers"];
      if (!by_provider.is_object() ||
          !by_provider.contains(std::string(provider))) {
        throw ProviderError("fixture has no tags for provider '" +
                            std::string(provider) + "'");
      }
      return tags_from_json_list(by_provider[std::string(provider)],
                                 "fixture.providers");
    }
    if (!j.contains("tags")) throw DataError("fixture has no 'tags' field");
    return tags_from_json_list(j["tags"], "fixture.tags");
  }
  std::vector<RawTag> out;
  std::istringstream lines{std::string(content)};
  std::string line;
  while (std::getline(lines, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back({line, std::nullopt});
  }
  return out;
}

FixtureProvider::FixtureProvider(ProviderDescriptor descriptor)
    : descriptor_(std::move(descriptor)) {
  descriptor_.validate();
}

std::filesystem::path FixtureProvider::source_path(const ImageRef& image) const {
  if (descriptor_.fixture_dir) {
    return *descriptor_.fixture_dir / (image.image_id + ".json");
  }
  return image.path;
}

TagResponse FixtureProvider::fetch(const ImageRef& image,
                                   std::string_view content) const {
  TagResponse response;
  response.provider = descriptor_.name;
  response.image_id = image.image_id;
  try {
    response.raw_tags = parse_fixture(content, descriptor_.name);
  } catch (const Error& e) {
    throw ProviderError(descriptor_.name + ": " + e.what());
  }
  response.fetched_at = utc_timestamp();
  response.validate();
  return response;
}

std::unique_ptr<ServiceAdapter> make_service_adapter(std::string_view api) {
  if (api == "clarifai") return std::make_unique<ClarifaiAdapter>();
  if (api == "microsoft") return std::make_unique<MicrosoftAdapter>();
  if (api == "google") return std::make_unique<GoogleAdapter>();
  throw ConfigError("unknown provider api '" + std::string(api) +
                    "' (expected clarifai, microsoft or google)");
}

std::uint64_t network_request_count() { return g_network_requests.load(); }

HttpProvider::HttpProvider(ProviderDescriptor descriptor,
                           std::shared_ptr<HttpTransport> transport,
                           Sleeper sleeper)
    : descriptor_(std::move(descriptor)),
      transport_(std::move(transport)),
      sleeper_(std::move(sleeper)) {
  descriptor_.validate();
  if (descriptor_.kind != ProviderKind::kHttpService) {
    throw ConfigError("provider '" + descriptor_.name +
                      "' is not an http_service");
  }
  adapter_ = make_service_adapter(*descriptor_.api);
  if (!transport_) transport_ = make_default_transport();
  if (!sleeper_) {
    sleeper_ = [](std::chrono::milliseconds d) {
      std::this_thread::sleep_for(d);
    };
  }
}

std::chrono::milliseconds HttpProvider::backoff_delay(int attempt) {
  constexpr std::int64_t kBase = 250;
  constexpr std::int64_t kCap = 8000;
  std::int64_t delay = kBase << std::min(attempt - 1, 10);
  return std::chrono::milliseconds(std::min(delay, kCap));
}

TagResponse HttpProvider::fetch(const ImageRef& image,
                                std::string_view content) const {
  const char* credential = std::getenv(descriptor_.credential_ref->c_str());
  if (credential == nullptr || *credential == '\0') {
    throw ProviderError(descriptor_.name + ": environment variable " +
                        *descriptor_.credential_ref + " is not set");
  }
  const HttpRequest request =
      adapter_->build_request(*descriptor_.endpoint, content, credential);

  std::string last_failure;
  for (int attempt = 0; attempt <= descriptor_.max_retries; ++attempt) {
    if (attempt > 0) sleeper_(backoff_delay(attempt));
    ++g_network_requests;
    HttpResponse response;
    try {
      response = transport_->post(request, descriptor_.timeout);
    } catch (const std::exception& e) {
      last_failure = std::string("transport error: ") + e.what();
      continue;
    }
    if (response.status >= 200 && response.status < 300) {
      TagResponse out;
      out.provider = descriptor_.name;
      out.image_id = image.image_id;
      out.raw_tags = adapter_->parse_response(response.body);
      out.fetched_at = utc_timestamp();
      try {
        out.validate();
      } catch (const Error& e) {
        throw ProviderError(e.what());
      }
      return out;
    }
    last_failure = "HTTP status " + std::to_string(response.status);
    if (!retriable_status(response.status)) break;
  }
  throw ProviderError(descriptor_.name + ": request for '" + image.image_id +
                      "' failed: " + last_failure);
}

std::unique_ptr<TagProvider> make_provider(
    const ProviderDescriptor& descriptor,
    std::shared_ptr<HttpTransport> transport) {
  if (descriptor.kind == ProviderKind::kFixture) {
    return std::make_unique<FixtureProvider>(descriptor);
  }
  return std::make_unique<HttpProvider>(descriptor, std::move(transport));
}

}  // namespace cahar
