#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "cahar/error.h"
#include "cahar/extract.h"
#include "cahar/providers.h"
#include "cahar/response_cache.h"
#include "test_support.h"

using namespace cahar;
namespace fs = std::filesystem;

namespace {

std::string recorded(const std::string& name) {
  std::ifstream in(fs::path(CAHAR_TEST_DATA_DIR) / "recorded" / name);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

std::set<std::string> texts(const TagSet& s) {
  std::set<std::string> out;
  for (const auto& t : s.tags()) out.insert(t.text());
  return out;
}

ProviderDescriptor fixture(const std::string& name,
                           std::optional<fs::path> dir = std::nullopt) {
  ProviderDescriptor d;
  d.name = name;
  d.kind = ProviderKind::kFixture;
  d.fixture_dir = std::move(dir);
  return d;
}

ProviderDescriptor http(const std::string& name, const std::string& api,
                        const std::string& env) {
  ProviderDescriptor d;
  d.name = name;
  d.kind = ProviderKind::kHttpService;
  d.endpoint = "https://vision.example.test/v1/tag";
  d.credential_ref = env;
  d.api = api;
  return d;
}

// Replays scripted responses and records what was asked.
class FakeTransport : public HttpTransport {
 public:
  explicit FakeTransport(std::vector<HttpResponse> script)
      : script_(std::move(script)) {}
  HttpResponse post(const HttpRequest& request,
                    std::chrono::milliseconds) override {
    std::lock_guard lock(mu_);
    requests.push_back(request);
    if (calls_ >= script_.size()) throw std::runtime_error("connection refused");
    const HttpResponse r = script_[calls_++];
    if (r.status == 0) throw std::runtime_error("connection reset");
    return r;
  }
  std::vector<HttpRequest> requests;

 private:
  std::mutex mu_;
  std::vector<HttpResponse> script_;
  std::size_t calls_ = 0;
};

struct EnvGuard {
  EnvGuard(const char* name, const char* value) : name_(name) {
    setenv(name, value, 1);
  }
  ~EnvGuard() { unsetenv(name_); }
  const char* name_;
};

}  // namespace

TEST_CASE("provider descriptors are validated") {
  CHECK_NOTHROW(fixture("f").validate());
  ProviderDescriptor d = http("svc", "clarifai", "X_KEY");
  CHECK_NOTHROW(d.validate());
  SUBCASE("http service without endpoint") {
    d.endpoint.reset();
    CHECK_THROWS_WITH_AS(d.validate(), doctest::Contains("endpoint"), Error);
  }
  SUBCASE("http service without credential_ref") {
    d.credential_ref.reset();
    CHECK_THROWS_WITH_AS(d.validate(), doctest::Contains("credential_ref"), Error);
  }
  SUBCASE("unknown api") {
    d.api = "acme";
    CHECK_THROWS_AS(d.validate(), Error);
  }
  SUBCASE("json round trip") {
    const ProviderDescriptor back = provider_descriptor_from_json(to_json(d));
    CHECK(to_json(back) == to_json(d));
  }
  SUBCASE("unknown json field") {
    auto j = to_json(d);
    j["api_key"] = "secret";
    CHECK_THROWS_AS(provider_descriptor_from_json(j), Error);
  }
}

TEST_CASE("fixture documents in every accepted shape") {
  CHECK(parse_fixture(R"({"tags": ["Bed", {"text": "bedroom", "score": 0.5}]})", "f") ==
        std::vector<RawTag>{{"Bed", std::nullopt}, {"bedroom", 0.5}});
  CHECK(parse_fixture(R"(["a", "b"])", "f").size() == 2);
  CHECK(parse_fixture("Bed\nbedroom\n\nPerson\n", "f").size() == 3);
  const std::string keyed = R"({"providers": {"one": ["x"], "two": ["y", "z"]}})";
  CHECK(parse_fixture(keyed, "two").size() == 2);
  CHECK_THROWS_AS(parse_fixture(keyed, "three"), Error);
  CHECK_THROWS_AS(parse_fixture(R"({"tags": ["x"], "extra": 1})", "f"), Error);
}

TEST_CASE("fixture provider normalizes the recorded tags") {
  const auto dir = cahar::testing::scratch_dir("fixture");
  write(dir / "img.json", R"({"tags": ["Bed", " bedroom", "Person"]})");
  const auto p = make_provider(fixture("fixture"));
  const TagProvider* raw[] = {p.get()};
  const ExtractResult r = extract_tags({"img", dir / "img.json"}, raw, nullptr);
  CHECK(texts(r.tags) == std::set<std::string>{"bed", "bedroom", "person"});
  CHECK(r.tags.sources(Tag::semantic("bed")) == std::set<std::string>{"fixture"});
  fs::remove_all(dir);
}

TEST_CASE("tags from several providers are unioned with attribution") {
  const auto dir = cahar::testing::scratch_dir("union");
  write(dir / "a" / "img.json", R"(["bed", "room"])");
  write(dir / "b" / "img.json", R"(["Room", "futon"])");
  const auto a = make_provider(fixture("a", dir / "a"));
  const auto b = make_provider(fixture("b", dir / "b"));
  const TagProvider* ab[] = {a.get(), b.get()};
  const TagProvider* ba[] = {b.get(), a.get()};
  const ImageRef ref{"img", dir / "unused"};

  const ExtractResult r1 = extract_tags(ref, ab, nullptr);
  const ExtractResult r2 = extract_tags(ref, ba, nullptr);
  CHECK(texts(r1.tags) == std::set<std::string>{"bed", "futon", "room"});
  CHECK(r1.tags.sources(Tag::semantic("room")) == std::set<std::string>{"a", "b"});
  CHECK(r1.tags == r2.tags);
  fs::remove_all(dir);
}

TEST_CASE("one failing provider degrades, all failing is an error") {
  const auto dir = cahar::testing::scratch_dir("degraded");
  write(dir / "good" / "img.json", R"(["bed"])");
  const auto good = make_provider(fixture("good", dir / "good"));
  const auto bad = make_provider(fixture("bad", dir / "missing"));
  const ImageRef ref{"img", dir / "unused"};

  const TagProvider* both[] = {good.get(), bad.get()};
  const ExtractResult r = extract_tags(ref, both, nullptr);
  CHECK(texts(r.tags) == std::set<std::string>{"bed"});
  REQUIRE(r.outcomes.size() == 2);
  CHECK(r.outcomes[1].status == FetchStatus::kFailed);
  CHECK_FALSE(r.outcomes[1].message.empty());

  const TagProvider* only_bad[] = {bad.get()};
  try {
    extract_tags(ref, only_bad, nullptr);
    FAIL("expected a provider error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kProvider);
    CHECK(std::string(e.what()).find("bad") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("a warm cache answers without network requests") {
  const auto dir = cahar::testing::scratch_dir("warm");
  write(dir / "img.jpg", "\xFF\xD8\xFF\xE0 not really a jpeg");
  EnvGuard key("CAHAR_TEST_WARM_KEY", "k-123");
  auto transport = std::make_shared<FakeTransport>(
      std::vector<HttpResponse>{{200, recorded("microsoft.json")}});
  const auto p = make_provider(http("ms", "microsoft", "CAHAR_TEST_WARM_KEY"), transport);
  const TagProvider* raw[] = {p.get()};
  const ResponseCache cache(dir / "cache");
  const ImageRef ref{"img", dir / "img.jpg"};

  const std::uint64_t before = network_request_count();
  const ExtractResult cold = extract_tags(ref, raw, &cache);
  CHECK(network_request_count() - before == 1);
  CHECK(cold.outcomes[0].status == FetchStatus::kFetched);

  const std::uint64_t warm_start = network_request_count();
  const ExtractResult warm = extract_tags(ref, raw, &cache);
  CHECK(network_request_count() == warm_start);
  CHECK(warm.outcomes[0].status == FetchStatus::kCacheHit);
  CHECK(warm.tags == cold.tags);
  CHECK(transport->requests.size() == 1);
  fs::remove_all(dir);
}

TEST_CASE("recorded service responses map onto raw tags") {
  SUBCASE("clarifai") {
    const auto tags = make_service_adapter("clarifai")->parse_response(recorded("clarifai.json"));
    REQUIRE(tags.size() == 4);
    CHECK(tags[0] == RawTag{"Bed", 0.9912});
    CHECK(tags[3].text == "sleep");
  }
  SUBCASE("microsoft") {
    const auto tags = make_service_adapter("microsoft")->parse_response(recorded("microsoft.json"));
    REQUIRE(tags.size() == 4);
    CHECK(tags[1] == RawTag{"bed", 0.9871});
  }
  SUBCASE("google") {
    const auto tags = make_service_adapter("google")->parse_response(recorded("google.json"));
    REQUIRE(tags.size() == 4);
    CHECK(tags[3].text == "Person ");
    CHECK_THROWS_AS(make_service_adapter("google")->parse_response(recorded("google_error.json")),
                    Error);
  }
  SUBCASE("garbage") {
    CHECK_THROWS_AS(make_service_adapter("microsoft")->parse_response("<html>"), Error);
    CHECK_THROWS_AS(make_service_adapter("clarifai")->parse_response("{}"), Error);
  }
}

TEST_CASE("requests carry the credential the way each service expects") {
  const std::string bytes = "abc";
  const auto c = make_service_adapter("clarifai")->build_request("https://c", bytes, "K");
  CHECK(c.headers.at(0) == std::pair<std::string, std::string>{"Authorization", "Key K"});
  CHECK(c.body.find("YWJj") != std::string::npos);  // base64("abc")

  const auto m = make_service_adapter("microsoft")->build_request("https://m", bytes, "K");
  CHECK(m.headers.at(0).first == "Ocp-Apim-Subscription-Key");
  CHECK(m.body == "abc");
  CHECK(m.content_type == "application/octet-stream");

  const auto g = make_service_adapter("google")->build_request("https://g/v1/images:annotate", bytes, "K");
  CHECK(g.url == "https://g/v1/images:annotate?key=K");
  CHECK(g.body.find("LABEL_DETECTION") != std::string::npos);
}

TEST_CASE("http provider end to end over recorded responses") {
  EnvGuard key("CAHAR_TEST_KEY", "secret-value");
  for (const char* api : {"clarifai", "microsoft", "google"}) {
    CAPTURE(api);
    auto transport = std::make_shared<FakeTransport>(
        std::vector<HttpResponse>{{200, recorded(std::string(api) + ".json")}});
    HttpProvider p(http(api, api, "CAHAR_TEST_KEY"), transport,
                   [](std::chrono::milliseconds) {});
    const TagResponse r = p.fetch({"img", "img.jpg"}, "bytes");
    CHECK(r.provider == api);
    CHECK(r.raw_tags.size() == 4);
    CHECK_FALSE(r.fetched_at.empty());
  }
}

TEST_CASE("retries back off on 429, 5xx and transport errors") {
  EnvGuard key("CAHAR_TEST_KEY", "k");
  std::vector<std::chrono::milliseconds> slept;
  auto sleeper = [&](std::chrono::milliseconds d) { slept.push_back(d); };

  SUBCASE("recovers within the retry budget") {
    auto t = std::make_shared<FakeTransport>(std::vector<HttpResponse>{
        {429, ""}, {0, ""}, {200, recorded("microsoft.json")}});
    HttpProvider p(http("ms", "microsoft", "CAHAR_TEST_KEY"), t, sleeper);
    CHECK(p.fetch({"img", ""}, "x").raw_tags.size() == 4);
    CHECK(t->requests.size() == 3);
    CHECK(slept == std::vector<std::chrono::milliseconds>{
                       std::chrono::milliseconds(250), std::chrono::milliseconds(500)});
  }
  SUBCASE("gives up after max_retries") {
    auto t = std::make_shared<FakeTransport>(
        std::vector<HttpResponse>{{503, ""}, {502, ""}, {500, ""}, {200, "{}"}});
    HttpProvider p(http("ms", "microsoft", "CAHAR_TEST_KEY"), t, sleeper);
    CHECK_THROWS_WITH_AS(p.fetch({"img", ""}, "x"), doctest::Contains("500"), Error);
    CHECK(t->requests.size() == 3);
  }
  SUBCASE("client errors are not retried") {
    auto t = std::make_shared<FakeTransport>(std::vector<HttpResponse>{{401, ""}});
    HttpProvider p(http("ms", "microsoft", "CAHAR_TEST_KEY"), t, sleeper);
    CHECK_THROWS_AS(p.fetch({"img", ""}, "x"), Error);
    CHECK(t->requests.size() == 1);
    CHECK(slept.empty());
  }
  CHECK(HttpProvider::backoff_delay(1).count() == 250);
  CHECK(HttpProvider::backoff_delay(3).count() == 1000);
  CHECK(HttpProvider::backoff_delay(12).count() == 8000);
}

TEST_CASE("a missing credential fails without touching the network") {
  unsetenv("CAHAR_TEST_ABSENT_KEY");
  auto t = std::make_shared<FakeTransport>(std::vector<HttpResponse>{});
  HttpProvider p(http("svc", "google", "CAHAR_TEST_ABSENT_KEY"), t,
                 [](std::chrono::milliseconds) {});
  try {
    p.fetch({"img", ""}, "x");
    FAIL("expected a provider error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kProvider);
    CHECK(std::string(e.what()).find("CAHAR_TEST_ABSENT_KEY") != std::string::npos);
  }
  CHECK(t->requests.empty());
}

TEST_CASE("the credential never reaches the cache") {
  const auto dir = cahar::testing::scratch_dir("secret");
  write(dir / "img.jpg", "pixels");
  EnvGuard key("CAHAR_TEST_SECRET", "top-secret-credential");
  auto t = std::make_shared<FakeTransport>(
      std::vector<HttpResponse>{{200, recorded("google.json")}});
  const auto p = make_provider(http("g", "google", "CAHAR_TEST_SECRET"), t);
  const TagProvider* raw[] = {p.get()};
  const ResponseCache cache(dir / "cache");
  extract_tags({"img", dir / "img.jpg"}, raw, &cache);
  REQUIRE(cache.size() == 1);
  for (const auto& e : fs::directory_iterator(dir / "cache")) {
    std::ifstream in(e.path());
    std::ostringstream buf;
    buf << in.rdbuf();
    CHECK(buf.str().find("top-secret-credential") == std::string::npos);
  }
  fs::remove_all(dir);
}
