#include "cahar/folds.h"

#include <algorithm>
#include <map>

#include "cahar/error.h"
#include "rng.h"

namespace cahar {

PartitionOptions replica_protocol(std::uint64_t seed) {
  PartitionOptions options;
  options.subsets_per_class = 3;
  options.seed = seed;
  options.images_per_class = 12;
  options.strict_balance = true;
  return options;
}

namespace {

using StratumKey = std::pair<std::string, std::string>;

std::vector<std::size_t> stratum_quotas(const std::vector<std::size_t>& sizes,
                                        std::size_t total, std::size_t target,
                                        bool strict, const std::string& cls) {
  std::vector<std::size_t> quotas(sizes.size());
  if (target == total) return sizes;
  std::vector<std::pair<std::size_t, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const std::size_t scaled = target * sizes[i];
    quotas[i] = scaled / total;
    assigned += quotas[i];
    if (scaled % total != 0) {
      if (strict) {
        throw DataError("background-balance constraint unsatisfiable for "
                        "class '" + cls + "': strata cannot be subsampled "
                        "proportionally to " + std::to_string(target) +
                        " images");
      }
      remainders.emplace_back(scaled % total, i);
    }
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < target; ++k, ++assigned) {
    ++quotas[remainders[k].second];
  }
  return quotas;
}

}  // namespace

std::vector<SubsetPartition> partition_subsets(const DatasetManifest& manifest,
                                               Regime regime,
                                               const PartitionOptions& options) {
  const std::size_t s = options.subsets_per_class;
  if (s == 0) throw ConfigError("subsets_per_class must be >= 1");
  const auto projection = project_classes(manifest, regime);

  std::map<std::string, std::map<StratumKey, std::vector<std::string>>> classes;
  for (const auto& p : projection) {
    const auto& r = manifest.records[p.record_index];
    StratumKey key{r.subclass_label.value_or(""),
                   r.background_culture.value_or("")};
    classes[p.effective_class][key].push_back(p.image_id);
  }

  std::vector<SubsetPartition> out;
  for (auto& [cls, strata] : classes) {
    auto engine = rng::make_engine(options.seed, cls);
    std::vector<std::vector<std::string>> members;
    std::vector<std::size_t> sizes;
    std::size_t total = 0;
    for (auto& [key, ids] : strata) {
      std::sort(ids.begin(), ids.end());
      rng::shuffle(ids, engine);
      sizes.push_back(ids.size());
      total += ids.size();
      members.push_back(ids);
    }
    const std::size_t target = options.images_per_class.value_or(total);
    if (target > total) {
      throw DataError("class '" + cls + "' has " + std::to_string(total) +
                      " images, fewer than the requested " +
                      std::to_string(target));
    }
    if (target == 0 || target % s != 0) {
      throw DataError("class '" + cls + "' size " + std::to_string(target) +
                      " is not divisible into " + std::to_string(s) +
                      " subsets");
    }
    const auto quotas =
        stratum_quotas(sizes, total, target, options.strict_balance, cls);

    SubsetPartition partition;
    partition.class_name = cls;
    partition.seed = options.seed;
    partition.subsets.resize(s);
    std::size_t k = 0;
    for (std::size_t i = 0; i < members.size(); ++i) {
      if (options.strict_balance && quotas[i] % s != 0) {
        throw DataError("background-balance constraint unsatisfiable for "
                        "class '" + cls + "': a stratum of " +
                        std::to_string(quotas[i]) + " images cannot be split "
                        "evenly into " + std::to_string(s) + " subsets");
      }
      for (std::size_t j = 0; j < quotas[i]; ++j, ++k) {
        partition.subsets[k % s].push_back(members[i][j]);
      }
    }
    for (auto& subset : partition.subsets) {
      std::sort(subset.begin(), subset.end());
    }
    out.push_back(std::move(partition));
  }
  return out;
}

FoldPlan enumerate_folds(std::vector<SubsetPartition> partitions) {
  if (partitions.empty()) throw ConfigError("no partitions to fold");
  const std::size_t s = partitions.front().subsets.size();
  for (const auto& p : partitions) {
    if (p.subsets.size() != s) {
      throw ConfigError("class '" + p.class_name + "' has " +
                        std::to_string(p.subsets.size()) +
                        " subsets, expected " + std::to_string(s));
    }
  }
  if (s == 0) throw ConfigError("partitions have no subsets");

  FoldPlan plan;
  plan.subsets_per_class = s;
  const std::size_t c = partitions.size();
  std::vector<std::size_t> odometer(c, 0);
  while (true) {
    Fold fold;
    fold.test = odometer;
    fold.train.resize(c);
    for (std::size_t k = 0; k < c; ++k) {
      for (std::size_t i = 0; i < s; ++i) {
        if (i != odometer[k]) fold.train[k].push_back(i);
      }
    }
    plan.folds.push_back(std::move(fold));
    std::size_t k = c;
    while (k > 0 && ++odometer[k - 1] == s) odometer[--k] = 0;
    if (k == 0) break;
  }
  plan.partitions = std::move(partitions);
  return plan;
}

}  // namespace cahar
