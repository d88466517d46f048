#ifndef CAHAR_SYNTHETIC_H_
#define CAHAR_SYNTHETIC_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cahar/extract.h"
#include "cahar/manifest.h"
#include "cahar/providers.h"

namespace cahar {

struct PoolEntry {
  std::string tag;
  double probability = 0.0;
};

enum class CultureLabelSource {
  kPerson,      // cultural_label and background_culture both set
  kBackground,  // only background_culture set
};

struct SyntheticClass {
  std::string name;
  // Parent class; the generated records become subclasses of it.
  std::optional<std::string> parent;
  // Culture -> share of the class's images. Shares times images_per_class
  // must be whole numbers summing to images_per_class.
  std::vector<std::pair<std::string, double>> cultures;
  CultureLabelSource label_source = CultureLabelSource::kPerson;
  std::vector<PoolEntry> tags;
  bool shares_ambiguity = false;
};

struct GeneratorSpec {
  std::uint64_t seed = 0;
  std::size_t images_per_class = 12;
  // When set, images_per_class must split into this many equal subsets.
  std::optional<std::size_t> subsets_per_class;
  std::vector<std::string> culture_registry;
  std::vector<SyntheticClass> classes;
  std::vector<PoolEntry> shared_ambiguity_pool;
  std::map<std::string, std::vector<PoolEntry>> background_pools;

  // Throws ConfigError naming the offending field.
  void validate() const;
};

GeneratorSpec generator_spec_from_json(std::string_view document);
GeneratorSpec load_generator_spec(const std::filesystem::path& path);
std::string serialize_generator_spec(const GeneratorSpec& spec);

struct GeneratedDataset {
  DatasetManifest manifest;
  // image id -> sampled tags, in pool order
  std::map<std::string, std::vector<RawTag>> fixtures;
};

// Samples every pool entry independently per image. Image i of class c
// draws from its own engine seeded by (seed, c, i), so output depends on
// nothing but the spec.
GeneratedDataset generate(const GeneratorSpec& spec);

// Fixture document for one image ({"image_id": ..., "tags": [...]}).
std::string serialize_fixture(const std::string& image_id,
                              const std::vector<RawTag>& tags);

// Tag sets exactly as the fixture provider would produce from the written
// fixtures, keyed by image id.
TagIndex tag_index(const GeneratedDataset& dataset,
                   const std::string& provider = "fixture");

// Writes manifest.json and fixtures/<image_id>.json under `dir`.
void write_dataset(const GeneratedDataset& dataset,
                   const std::filesystem::path& dir);

}  // namespace cahar

#endif  // CAHAR_SYNTHETIC_H_
