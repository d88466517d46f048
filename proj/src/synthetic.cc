#include "cahar/synthetic.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "cahar/error.h"
#include "cahar/model.h"
#include "cahar/tag.h"
#include "json_util.h"
#include "rng.h"

namespace cahar {

using nlohmann::ordered_json;

namespace {

void check_pool(const std::vector<PoolEntry>& pool, const std::string& where) {
  for (const auto& e : pool) {
    if (e.tag.empty()) throw ConfigError(where + ": empty tag");
    if (!(e.probability >= 0.0 && e.probability <= 1.0)) {
      throw ConfigError(where + ": probability of '" + e.tag +
                        "' is outside [0,1]");
    }
  }
}

std::vector<PoolEntry> pool_from_json(const ordered_json& j,
                                      const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + " must be an array");
  std::vector<PoolEntry> out;
  for (const auto& e : j) {
    json_util::require_keys(e, where, {"tag", "p"});
    out.push_back({json_util::get<std::string>(e, "tag", where),
                   json_util::get<double>(e, "p", where)});
  }
  return out;
}

ordered_json pool_to_json(const std::vector<PoolEntry>& pool) {
  ordered_json out = ordered_json::array();
  for (const auto& e : pool) out.push_back({{"tag", e.tag}, {"p", e.probability}});
  return out;
}

// Whole-image counts per culture, in the class's declared order.
std::vector<std::size_t> culture_counts(const SyntheticClass& cls,
                                        std::size_t n) {
  std::vector<std::size_t> counts;
  std::size_t total = 0;
  for (const auto& [culture, share] : cls.cultures) {
    const double exact = share * static_cast<double>(n);
    const double rounded = std::round(exact);
    if (std::abs(exact - rounded) > 1e-9) {
      throw ConfigError("class '" + cls.name + "': culture share of '" +
                        culture + "' does not give a whole number of images");
    }
    counts.push_back(static_cast<std::size_t>(rounded));
    total += counts.back();
  }
  if (total != n) {
    throw ConfigError("class '" + cls.name +
                      "': culture shares do not cover images_per_class");
  }
  return counts;
}

void draw(const std::vector<PoolEntry>& pool, std::mt19937_64& engine,
          std::vector<RawTag>& out) {
  for (const auto& e : pool) {
    // One draw per entry even at p = 0 or 1 keeps streams aligned.
    if (rng::bernoulli(engine, e.probability)) {
      out.push_back({e.tag, std::nullopt});
    }
  }
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw DataError("cannot write '" + path.string() + "'");
}

}  // namespace

void GeneratorSpec::validate() const {
  if (images_per_class == 0) throw ConfigError("images_per_class must be >= 1");
  if (subsets_per_class) {
    const std::size_t s = *subsets_per_class;
    if (s == 0 || images_per_class < s || images_per_class % s != 0) {
      throw ConfigError("images_per_class " + std::to_string(images_per_class) +
                        " cannot be split into " + std::to_string(s) +
                        " equal subsets");
    }
  }
  if (classes.empty()) throw ConfigError("generator spec has no classes");
  const auto registry = normalize_registry(culture_registry);
  std::set<std::string> names;
  for (const auto& cls : classes) {
    if (cls.name.empty() || !names.insert(cls.name).second) {
      throw ConfigError("class names must be non-empty and distinct ('" +
                        cls.name + "')");
    }
    if (cls.cultures.empty()) {
      throw ConfigError("class '" + cls.name + "' has no culture profile");
    }
    for (const auto& [culture, share] : cls.cultures) {
      if (std::find(registry.begin(), registry.end(), culture) ==
          registry.end()) {
        throw ConfigError("class '" + cls.name + "': culture '" + culture +
                          "' is not in culture_registry");
      }
      if (!(share >= 0.0 && share <= 1.0)) {
        throw ConfigError("class '" + cls.name + "': share outside [0,1]");
      }
    }
    culture_counts(cls, images_per_class);
    check_pool(cls.tags, "classes." + cls.name + ".tags");
  }
  for (const auto& cls : classes) {
    if (cls.parent && names.count(*cls.parent)) {
      throw ConfigError("parent '" + *cls.parent +
                        "' collides with a generated class name");
    }
  }
  check_pool(shared_ambiguity_pool, "shared_ambiguity_pool");
  for (const auto& [culture, pool] : background_pools) {
    if (std::find(registry.begin(), registry.end(), culture) == registry.end()) {
      throw ConfigError("background_pools: culture '" + culture +
                        "' is not in culture_registry");
    }
    check_pool(pool, "background_pools." + culture);
  }
}

GeneratorSpec generator_spec_from_json(std::string_view document) {
  try {
    const auto j = json_util::parse(document, "generator spec");
    json_util::require_keys(
        j, "generator spec",
        {"seed", "images_per_class", "culture_registry", "classes"},
        {"schema_version", "subsets_per_class", "shared_ambiguity_pool",
         "background_pools", "description"});
    if (auto v = json_util::get_optional<int>(j, "schema_version", "spec");
        v && *v != 1) {
      throw ConfigError("generator spec schema_version must be 1");
    }
    GeneratorSpec spec;
    spec.seed = json_util::get<std::uint64_t>(j, "seed", "spec");
    spec.images_per_class =
        json_util::get<std::size_t>(j, "images_per_class", "spec");
    spec.subsets_per_class =
        json_util::get_optional<std::size_t>(j, "subsets_per_class", "spec");
    spec.culture_registry =
        json_util::get<std::vector<std::string>>(j, "culture_registry", "spec");
    for (const auto& cj : j.at("classes")) {
      json_util::require_keys(cj, "classes[]", {"name", "cultures", "tags"},
                              {"parent", "label_source", "shares_ambiguity"});
      SyntheticClass cls;
      cls.name = json_util::get<std::string>(cj, "name", "classes[]");
      cls.parent = json_util::get_optional<std::string>(cj, "parent", "classes[]");
      const auto& cultures = cj.at("cultures");
      if (!cultures.is_object()) {
        throw ConfigError("classes[].cultures must map culture to share");
      }
      for (const auto& item : cultures.items()) {
        cls.cultures.emplace_back(normalize_tag_text(item.key()),
                                  item.value().get<double>());
      }
      const auto source =
          json_util::get_optional<std::string>(cj, "label_source", "classes[]")
              .value_or("person");
      if (source == "person") {
        cls.label_source = CultureLabelSource::kPerson;
      } else if (source == "background") {
        cls.label_source = CultureLabelSource::kBackground;
      } else {
        throw ConfigError("classes[].label_source must be person or "
                          "background");
      }
      cls.tags = pool_from_json(cj.at("tags"), "classes[].tags");
      cls.shares_ambiguity =
          json_util::get_optional<bool>(cj, "shares_ambiguity", "classes[]")
              .value_or(false);
      spec.classes.push_back(std::move(cls));
    }
    if (j.contains("shared_ambiguity_pool")) {
      spec.shared_ambiguity_pool =
          pool_from_json(j.at("shared_ambiguity_pool"), "shared_ambiguity_pool");
    }
    if (j.contains("background_pools")) {
      for (const auto& item : j.at("background_pools").items()) {
        spec.background_pools[normalize_tag_text(item.key())] =
            pool_from_json(item.value(), "background_pools." + item.key());
      }
    }
    spec.validate();
    return spec;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kConfig) throw;
    throw ConfigError(e.what());
  }
}

GeneratorSpec load_generator_spec(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read generator spec '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return generator_spec_from_json(buf.str());
}

std::string serialize_generator_spec(const GeneratorSpec& spec) {
  ordered_json j;
  j["schema_version"] = 1;
  j["seed"] = spec.seed;
  j["images_per_class"] = spec.images_per_class;
  if (spec.subsets_per_class) j["subsets_per_class"] = *spec.subsets_per_class;
  j["culture_registry"] = spec.culture_registry;
  ordered_json classes = ordered_json::array();
  for (const auto& cls : spec.classes) {
    ordered_json cj;
    cj["name"] = cls.name;
    if (cls.parent) cj["parent"] = *cls.parent;
    ordered_json cultures = ordered_json::object();
    for (const auto& [culture, share] : cls.cultures) cultures[culture] = share;
    cj["cultures"] = std::move(cultures);
    cj["label_source"] =
        cls.label_source == CultureLabelSource::kPerson ? "person" : "background";
    cj["tags"] = pool_to_json(cls.tags);
    cj["shares_ambiguity"] = cls.shares_ambiguity;
    classes.push_back(std::move(cj));
  }
  j["classes"] = std::move(classes);
  j["shared_ambiguity_pool"] = pool_to_json(spec.shared_ambiguity_pool);
  ordered_json bg = ordered_json::object();
  for (const auto& [culture, pool] : spec.background_pools) {
    bg[culture] = pool_to_json(pool);
  }
  j["background_pools"] = std::move(bg);
  return j.dump(2) + "\n";
}

GeneratedDataset generate(const GeneratorSpec& spec) {
  spec.validate();
  GeneratedDataset out;
  auto& manifest = out.manifest;
  manifest.culture_registry = normalize_registry(spec.culture_registry);
  for (const auto& cls : spec.classes) {
    if (cls.parent) {
      manifest.class_tree[*cls.parent].push_back(cls.name);
    } else {
      manifest.class_tree.try_emplace(cls.name);
    }
  }

  const std::size_t n = spec.images_per_class;
  const int width = static_cast<int>(std::to_string(n - 1).size());
  for (const auto& cls : spec.classes) {
    const auto counts = culture_counts(cls, n);
    std::size_t i = 0;
    for (std::size_t k = 0; k < cls.cultures.size(); ++k) {
      const std::string& culture = cls.cultures[k].first;
      for (std::size_t m = 0; m < counts[k]; ++m, ++i) {
        std::string index = std::to_string(i);
        index.insert(0, static_cast<std::size_t>(width) - index.size(), '0');
        ImageRecord r;
        r.image_id = cls.name + "-" + index;
        r.path_or_uri = "fixtures/" + r.image_id + ".json";
        r.class_label = cls.parent.value_or(cls.name);
        if (cls.parent) r.subclass_label = cls.name;
        if (cls.label_source == CultureLabelSource::kPerson) {
          r.cultural_label = culture;
        }
        r.background_culture = culture;

        auto engine = rng::make_engine(spec.seed, cls.name, i);
        std::vector<RawTag> tags;
        draw(cls.tags, engine, tags);
        if (cls.shares_ambiguity) draw(spec.shared_ambiguity_pool, engine, tags);
        if (auto bg = spec.background_pools.find(culture);
            bg != spec.background_pools.end()) {
          draw(bg->second, engine, tags);
        }
        out.fixtures.emplace(r.image_id, std::move(tags));
        manifest.records.push_back(std::move(r));
      }
    }
  }
  manifest.validate();
  return out;
}

std::string serialize_fixture(const std::string& image_id,
                              const std::vector<RawTag>& tags) {
  ordered_json j;
  j["image_id"] = image_id;
  ordered_json list = ordered_json::array();
  for (const auto& t : tags) {
    ordered_json tj;
    tj["text"] = t.text;
    if (t.score) tj["score"] = *t.score;
    list.push_back(std::move(tj));
  }
  j["tags"] = std::move(list);
  return j.dump(2) + "\n";
}

TagIndex tag_index(const GeneratedDataset& dataset,
                   const std::string& provider) {
  TagIndex out;
  for (const auto& [image_id, tags] : dataset.fixtures) {
    const std::vector<TagResponse> responses{{provider, image_id, tags, ""}};
    out.emplace(image_id, tagset_from_responses(image_id, responses));
  }
  return out;
}

void write_dataset(const GeneratedDataset& dataset,
                   const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "fixtures", ec);
  if (ec) {
    throw ConfigError("cannot create output directory '" + dir.string() + "'");
  }
  write_file(dir / "manifest.json", serialize_manifest(dataset.manifest));
  for (const auto& [image_id, tags] : dataset.fixtures) {
    write_file(dir / "fixtures" / (image_id + ".json"),
               serialize_fixture(image_id, tags));
  }
}

}  // namespace cahar
