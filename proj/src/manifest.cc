#include "cahar/manifest.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "cahar/error.h"
#include "cahar/tag.h"
#include "json_util.h"

namespace cahar {

using nlohmann::ordered_json;

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::kCU:
      return "CU";
    case Regime::kCAT:
      return "CAT";
    case Regime::kCATT:
      return "CATT";
  }
  return "CU";
}

Regime regime_from_string(std::string_view name) {
  if (name == "CU" || name == "cu") return Regime::kCU;
  if (name == "CAT" || name == "cat") return Regime::kCAT;
  if (name == "CATT" || name == "catt") return Regime::kCATT;
  throw ConfigError("unknown regime '" + std::string(name) +
                    "' (expected CU, CAT or CATT)");
}

namespace {

bool in_registry(const std::vector<std::string>& registry,
                 const std::string& culture) {
  return std::find(registry.begin(), registry.end(), culture) !=
         registry.end();
}

void check_culture(const DatasetManifest& m, const ImageRecord& r,
                   const std::optional<std::string>& culture,
                   std::string_view field) {
  if (!culture) return;
  if (!in_registry(m.culture_registry, *culture)) {
    throw DataError("record '" + r.image_id + "': " + std::string(field) +
                    " '" + *culture + "' is not in culture_registry");
  }
}

}  // namespace

void DatasetManifest::validate() const {
  if (schema_version != kManifestSchemaVersion) {
    throw DataError("manifest schema_version " +
                    std::to_string(schema_version) + " is not supported");
  }
  std::set<std::string> seen_cultures;
  for (const auto& culture : culture_registry) {
    if (culture.empty() || normalize_tag_text(culture) != culture) {
      throw DataError("culture '" + culture + "' is not normalized");
    }
    if (!seen_cultures.insert(culture).second) {
      throw DataError("duplicate culture '" + culture + "' in registry");
    }
  }
  std::set<std::string> names;
  for (const auto& [cls, subs] : class_tree) {
    if (cls.empty()) throw DataError("class_tree has an empty class name");
    if (!names.insert(cls).second) {
      throw DataError("class name '" + cls + "' is used twice");
    }
  }
  for (const auto& [cls, subs] : class_tree) {
    for (const auto& sub : subs) {
      if (sub.empty()) {
        throw DataError("class '" + cls + "' has an empty subclass name");
      }
      if (!names.insert(sub).second) {
        throw DataError("subclass name '" + sub + "' under '" + cls +
                        "' collides with another class or subclass");
      }
    }
  }
  std::set<std::string> ids;
  for (const auto& r : records) {
    if (r.image_id.empty()) throw DataError("record with empty image_id");
    if (!ids.insert(r.image_id).second) {
      throw DataError("duplicate image_id '" + r.image_id + "'");
    }
    auto it = class_tree.find(r.class_label);
    if (it == class_tree.end()) {
      throw DataError("record '" + r.image_id + "': unknown class '" +
                      r.class_label + "'");
    }
    if (r.subclass_label &&
        std::find(it->second.begin(), it->second.end(), *r.subclass_label) ==
            it->second.end()) {
      throw DataError("record '" + r.image_id + "': subclass '" +
                      *r.subclass_label + "' is not registered under class '" +
                      r.class_label + "'");
    }
    check_culture(*this, r, r.cultural_label, "cultural_label");
    check_culture(*this, r, r.background_culture, "background_culture");
  }
}

const ImageRecord* DatasetManifest::find(std::string_view image_id) const {
  for (const auto& r : records) {
    if (r.image_id == image_id) return &r;
  }
  return nullptr;
}

std::filesystem::path DatasetManifest::resolve(const ImageRecord& r) const {
  std::filesystem::path p(r.path_or_uri);
  if (p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

std::map<std::string, std::size_t> DatasetManifest::class_counts() const {
  std::map<std::string, std::size_t> counts;
  for (const auto& [cls, _] : class_tree) counts[cls] = 0;
  for (const auto& r : records) ++counts[r.class_label];
  return counts;
}

std::optional<std::string> DatasetManifest::parent_of(
    std::string_view subclass) const {
  for (const auto& [cls, subs] : class_tree) {
    if (std::find(subs.begin(), subs.end(), subclass) != subs.end()) return cls;
  }
  return std::nullopt;
}

DatasetManifest load_manifest(std::string_view document,
                              std::filesystem::path base_dir) {
  const ordered_json j = json_util::parse(document, "manifest");
  json_util::require_keys(j, "manifest",
                          {"schema_version", "records", "class_tree",
                           "culture_registry"});
  DatasetManifest m;
  m.base_dir = std::move(base_dir);
  m.schema_version = json_util::get<int>(j, "schema_version", "manifest");
  if (m.schema_version != kManifestSchemaVersion) {
    throw DataError("manifest schema_version " +
                    std::to_string(m.schema_version) +
                    " does not match supported version " +
                    std::to_string(kManifestSchemaVersion));
  }
  for (const auto& culture : json_util::get<std::vector<std::string>>(
           j, "culture_registry", "manifest")) {
    m.culture_registry.push_back(normalize_tag_text(culture));
  }
  const auto& tree = j.at("class_tree");
  if (!tree.is_object()) throw DataError("manifest.class_tree must be an object");
  for (const auto& item : tree.items()) {
    if (!item.value().is_array()) {
      throw DataError("class_tree entry '" + item.key() +
                      "' must be an array of subclass names");
    }
    m.class_tree[item.key()] = item.value().get<std::vector<std::string>>();
  }
  const auto& records = j.at("records");
  if (!records.is_array()) throw DataError("manifest.records must be an array");
  std::size_t index = 0;
  for (const auto& rj : records) {
    const std::string where = "manifest.records[" + std::to_string(index++) + "]";
    json_util::require_keys(rj, where,
                            {"image_id", "path_or_uri", "class_label"},
                            {"subclass_label", "cultural_label",
                             "background_culture"});
    ImageRecord r;
    r.image_id = json_util::get<std::string>(rj, "image_id", where);
    r.path_or_uri = json_util::get<std::string>(rj, "path_or_uri", where);
    r.class_label = json_util::get<std::string>(rj, "class_label", where);
    r.subclass_label =
        json_util::get_optional<std::string>(rj, "subclass_label", where);
    auto culture = [&](std::string_view key) -> std::optional<std::string> {
      auto v = json_util::get_optional<std::string>(rj, key, where);
      if (!v) return std::nullopt;
      return normalize_tag_text(*v);
    };
    r.cultural_label = culture("cultural_label");
    r.background_culture = culture("background_culture");
    m.records.push_back(std::move(r));
  }
  m.validate();
  return m;
}

DatasetManifest load_manifest_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read manifest '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_manifest(buf.str(), path.parent_path());
}

std::string serialize_manifest(const DatasetManifest& manifest) {
  ordered_json j;
  j["schema_version"] = manifest.schema_version;
  j["culture_registry"] = manifest.culture_registry;
  ordered_json tree = ordered_json::object();
  for (const auto& [cls, subs] : manifest.class_tree) tree[cls] = subs;
  j["class_tree"] = std::move(tree);
  ordered_json records = ordered_json::array();
  for (const auto& r : manifest.records) {
    ordered_json rj;
    rj["image_id"] = r.image_id;
    rj["path_or_uri"] = r.path_or_uri;
    rj["class_label"] = r.class_label;
    if (r.subclass_label) rj["subclass_label"] = *r.subclass_label;
    if (r.cultural_label) rj["cultural_label"] = *r.cultural_label;
    if (r.background_culture) rj["background_culture"] = *r.background_culture;
    records.push_back(std::move(rj));
  }
  j["records"] = std::move(records);
  return j.dump(2) + "\n";
}

std::vector<ProjectedRecord> project_classes(const DatasetManifest& manifest,
                                             Regime regime) {
  std::vector<ProjectedRecord> out;
  out.reserve(manifest.records.size());
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    const auto& r = manifest.records[i];
    ProjectedRecord p;
    p.image_id = r.image_id;
    p.record_index = i;
    p.effective_class = (regime != Regime::kCU && r.subclass_label)
                            ? *r.subclass_label
                            : r.class_label;
    p.cultural_label = r.cultural_label ? r.cultural_label : r.background_culture;
    if (regime == Regime::kCATT && !p.cultural_label) {
      throw DataError("record '" + r.image_id +
                      "' has neither cultural_label nor background_culture, "
                      "which CATT requires");
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<std::string> projected_classes(
    const std::vector<ProjectedRecord>& projection) {
  std::set<std::string> classes;
  for (const auto& p : projection) classes.insert(p.effective_class);
  return {classes.begin(), classes.end()};
}

}  // namespace cahar
