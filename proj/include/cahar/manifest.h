#ifndef CAHAR_MANIFEST_H_
#define CAHAR_MANIFEST_H_

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cahar {

inline constexpr int kManifestSchemaVersion = 1;

// CU: subclasses folded into their parent. CAT: subclasses are classes of
// their own. CATT: as CAT, with a cultural label attached to every image.
enum class Regime { kCU, kCAT, kCATT };

std::string_view to_string(Regime regime);
Regime regime_from_string(std::string_view name);

struct ImageRecord {
  std::string image_id;
  std::string path_or_uri;
  std::string class_label;
  std::optional<std::string> subclass_label;
  std::optional<std::string> cultural_label;
  std::optional<std::string> background_culture;

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

struct DatasetManifest {
  int schema_version = kManifestSchemaVersion;
  std::vector<ImageRecord> records;
  std::map<std::string, std::vector<std::string>> class_tree;
  std::vector<std::string> culture_registry;
  // Directory relative locators resolve against. Not serialized.
  std::filesystem::path base_dir;

  // Throws DataError naming the offending record or class.
  void validate() const;

  const ImageRecord* find(std::string_view image_id) const;
  std::filesystem::path resolve(const ImageRecord& record) const;
  // Records per top-level class.
  std::map<std::string, std::size_t> class_counts() const;
  // Top-level class owning `subclass`, if any.
  std::optional<std::string> parent_of(std::string_view subclass) const;

  friend bool operator==(const DatasetManifest& a, const DatasetManifest& b) {
    return a.schema_version == b.schema_version && a.records == b.records &&
           a.class_tree == b.class_tree &&
           a.culture_registry == b.culture_registry;
  }
};

// Parses and validates a manifest document. Unknown fields are rejected.
DatasetManifest load_manifest(std::string_view document,
                              std::filesystem::path base_dir = {});
DatasetManifest load_manifest_file(const std::filesystem::path& path);
std::string serialize_manifest(const DatasetManifest& manifest);

struct ProjectedRecord {
  std::string image_id;
  std::string effective_class;
  // cultural_label, falling back to background_culture.
  std::optional<std::string> cultural_label;
  std::size_t record_index = 0;
};

// One entry per record, in manifest order. Throws DataError under CATT for
// a record with neither cultural_label nor background_culture.
std::vector<ProjectedRecord> project_classes(const DatasetManifest& manifest,
                                             Regime regime);

// Sorted distinct effective classes of a projection.
std::vector<std::string> projected_classes(
    const std::vector<ProjectedRecord>& projection);

}  // namespace cahar

#endif  // CAHAR_MANIFEST_H_
