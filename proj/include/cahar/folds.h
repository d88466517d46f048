#ifndef CAHAR_FOLDS_H_
#define CAHAR_FOLDS_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cahar/manifest.h"

namespace cahar {

struct SubsetPartition {
  std::string class_name;
  std::vector<std::vector<std::string>> subsets;  // image ids, each sorted
  std::uint64_t seed = 0;

  friend bool operator==(const SubsetPartition&,
                         const SubsetPartition&) = default;
};

struct PartitionOptions {
  std::size_t subsets_per_class = 3;
  std::uint64_t seed = 0;
  // When set, a larger class is first subsampled to this many images,
  // proportionally across its strata.
  std::optional<std::size_t> images_per_class;
  // Require every stratum (subclass x background culture) to split evenly
  // across subsets; otherwise they are spread as evenly as possible.
  bool strict_balance = false;
};

// Three subsets of four images per class, strata split evenly: a 12-image
// class with a 6+6 background mix gives 2+2 per subset.
PartitionOptions replica_protocol(std::uint64_t seed);

// Seeded partition of every projected class, in class-name order. Records
// are stratified by (subclass, background culture) and dealt round-robin
// from shuffled strata. Throws DataError when a class size is not divisible
// by the subset count, a class is smaller than images_per_class, or strict
// balance cannot be met.
std::vector<SubsetPartition> partition_subsets(const DatasetManifest& manifest,
                                               Regime regime,
                                               const PartitionOptions& options);

struct Fold {
  std::vector<std::size_t> test;                // subset index per class
  std::vector<std::vector<std::size_t>> train;  // remaining indices per class

  friend bool operator==(const Fold&, const Fold&) = default;
};

struct FoldPlan {
  std::vector<SubsetPartition> partitions;
  std::size_t subsets_per_class = 0;
  std::vector<Fold> folds;
};

// Cartesian product of one test subset per class, in lexicographic order
// (last class varies fastest). S^C folds for C classes of S subsets.
FoldPlan enumerate_folds(std::vector<SubsetPartition> partitions);

}  // namespace cahar

#endif  // CAHAR_FOLDS_H_
