#ifndef CAHAR_EXPERIMENT_H_
#define CAHAR_EXPERIMENT_H_

#include <cstddef>
#include <string>
#include <vector>

#include "cahar/extract.h"
#include "cahar/folds.h"
#include "cahar/manifest.h"
#include "cahar/metrics.h"
#include "cahar/model.h"

namespace cahar {

// One test classification.
struct LogEntry {
  std::string image_id;
  std::size_t fold = 0;
  std::string actual;
  std::string predicted;  // empty when no class was admissible
  double confidence = 0.0;

  bool admissible() const { return !predicted.empty(); }
  bool correct() const { return predicted == actual; }

  friend bool operator==(const LogEntry&, const LogEntry&) = default;
};

struct ExperimentResult {
  Regime regime = Regime::kCU;
  ConfusionMatrix matrix;
  std::vector<LogEntry> log;  // fold order, then test-subset order
  std::size_t num_folds = 0;
  TrainingConfig training_config;  // as actually used
};

// Training configuration a regime runs with: injection on (with the
// manifest's culture registry unless one is given) for CATT, off otherwise.
TrainingConfig regime_training_config(const DatasetManifest& manifest,
                                      Regime regime, TrainingConfig base);

// Trains on each fold's training subsets and classifies its test subsets,
// accumulating a single confusion matrix over all folds. Under CATT the
// training examples carry their cultural labels and every test tag set is
// injected with the image's cultural tag. The plan's partitions must cover
// exactly the classes of the regime's projection.
ExperimentResult run_experiment(const DatasetManifest& manifest, Regime regime,
                                const TrainingConfig& training_config,
                                const FoldPlan& plan, const TagIndex& tags);

}  // namespace cahar

#endif  // CAHAR_EXPERIMENT_H_
