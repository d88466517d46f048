#ifndef CAHAR_PROVIDERS_H_
#define CAHAR_PROVIDERS_H_

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace cahar {

enum class ProviderKind { kHttpService, kFixture };

struct ProviderDescriptor {
  std::string name;
  ProviderKind kind = ProviderKind::kFixture;
  std::optional<std::string> endpoint;
  // Name of the environment variable holding the API key.
  std::optional<std::string> credential_ref;
  std::chrono::milliseconds timeout{10000};
  int max_retries = 2;
  // HTTP only: request/response mapping, one of clarifai, microsoft, google.
  std::optional<std::string> api;
  // Fixture only: look up <fixture_dir>/<image_id>.json instead of the
  // record locator.
  std::optional<std::filesystem::path> fixture_dir;

  // Throws ConfigError naming the provider and the offending field.
  void validate() const;
};

ProviderDescriptor provider_descriptor_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json to_json(const ProviderDescriptor& descriptor);

struct RawTag {
  std::string text;
  std::optional<double> score;

  friend bool operator==(const RawTag&, const RawTag&) = default;
};

struct TagResponse {
  std::string provider;
  std::string image_id;
  std::vector<RawTag> raw_tags;
  std::string fetched_at;  // ISO 8601, UTC

  // Throws DataError on an empty tag text or a score outside [0,1].
  void validate() const;
};

// Current UTC time as 2026-01-31T12:00:00Z.
std::string utc_timestamp();

// What a provider needs to know about one image.
struct ImageRef {
  std::string image_id;
  std::filesystem::path path;
};

class TagProvider {
 public:
  virtual ~TagProvider() = default;
  virtual const std::string& name() const = 0;
  // File whose bytes this provider consumes for `image`.
  virtual std::filesystem::path source_path(const ImageRef& image) const {
    return image.path;
  }
  // `content` is the bytes at source_path(image), read by the caller.
  // Throws ProviderError on failure.
  virtual TagResponse fetch(const ImageRef& image,
                            std::string_view content) const = 0;
};

// Parses a fixture document: either {"tags": [...]} or
// {"providers": {"<name>": [...]}} where each tag is a string or
// {"text": ..., "score": ...}; anything that is not JSON is read as one tag
// per line. `provider` selects the list in the keyed form.
std::vector<RawTag> parse_fixture(std::string_view content,
                                  std::string_view provider);

class FixtureProvider : public TagProvider {
 public:
  explicit FixtureProvider(ProviderDescriptor descriptor);

  const std::string& name() const override { return descriptor_.name; }
  TagResponse fetch(const ImageRef& image,
                    std::string_view content) const override;

  std::filesystem::path source_path(const ImageRef& image) const override;

 private:
  ProviderDescriptor descriptor_;
};

struct HttpRequest {
  std::string url;
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;
  std::string content_type;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  // Throws std::runtime_error on connection-level failures.
  virtual HttpResponse post(const HttpRequest& request,
                            std::chrono::milliseconds timeout) = 0;
};

// cpp-httplib backed transport (HTTPS via OpenSSL).
std::shared_ptr<HttpTransport> make_default_transport();

// Per-service request/response mapping.
class ServiceAdapter {
 public:
  virtual ~ServiceAdapter() = default;
  virtual HttpRequest build_request(const std::string& endpoint,
                                    std::string_view image_bytes,
                                    const std::string& credential) const = 0;
  // Throws ProviderError on an error payload or an unexpected shape.
  virtual std::vector<RawTag> parse_response(std::string_view body) const = 0;
};

std::unique_ptr<ServiceAdapter> make_service_adapter(std::string_view api);

// Total HTTP attempts issued by every HttpProvider in this process.
std::uint64_t network_request_count();

using Sleeper = std::function<void(std::chrono::milliseconds)>;

class HttpProvider : public TagProvider {
 public:
  HttpProvider(ProviderDescriptor descriptor,
               std::shared_ptr<HttpTransport> transport,
               Sleeper sleeper = nullptr);

  const std::string& name() const override { return descriptor_.name; }
  TagResponse fetch(const ImageRef& image,
                    std::string_view content) const override;

  // Delay before retry number `attempt` (1-based): 250ms doubling, capped.
  static std::chrono::milliseconds backoff_delay(int attempt);

 private:
  ProviderDescriptor descriptor_;
  std::shared_ptr<HttpTransport> transport_;
  std::unique_ptr<ServiceAdapter> adapter_;
  Sleeper sleeper_;
};

std::unique_ptr<TagProvider> make_provider(
    const ProviderDescriptor& descriptor,
    std::shared_ptr<HttpTransport> transport = nullptr);

}  // namespace cahar

#endif  // CAHAR_PROVIDERS_H_
