#ifndef CAHAR_METRICS_H_
#define CAHAR_METRICS_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cahar/manifest.h"

namespace cahar {

// Rows are predicted (output) classes, columns actual (target) classes.
// Test images for which no class was admissible are kept apart, per actual
// class; they count as errors but never land in a row.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::vector<std::string> classes);
  // Takes ownership of a row-major C x C count table.
  ConfusionMatrix(std::vector<std::string> classes,
                  std::vector<std::uint64_t> counts);

  const std::vector<std::string>& classes() const { return classes_; }
  std::size_t size() const { return classes_.size(); }
  std::optional<std::size_t> index_of(std::string_view name) const;

  std::uint64_t at(std::size_t predicted, std::size_t actual) const {
    return counts_[predicted * size() + actual];
  }
  std::uint64_t inadmissible(std::size_t actual) const {
    return inadmissible_[actual];
  }

  void add(std::size_t predicted, std::size_t actual, std::uint64_t n = 1);
  void add_inadmissible(std::size_t actual, std::uint64_t n = 1);
  // Element-wise sum; class lists must match.
  void merge(const ConfusionMatrix& other);

  std::uint64_t row_sum(std::size_t predicted) const;
  // Every test image of this actual class, inadmissible ones included.
  std::uint64_t actual_total(std::size_t actual) const;
  std::uint64_t trace() const;
  std::uint64_t total() const;

  friend bool operator==(const ConfusionMatrix&,
                         const ConfusionMatrix&) = default;

 private:
  std::vector<std::string> classes_;
  std::vector<std::uint64_t> counts_;
  std::vector<std::uint64_t> inadmissible_;
};

struct SuperclassScores {
  std::uint64_t true_positives = 0;
  std::uint64_t false_negatives = 0;
  std::uint64_t false_positives = 0;
  std::optional<double> recall;
  std::optional<double> precision;
};

// Scores the union of `members` as one class: TP sums the member block,
// FN the non-member rows of member columns (plus inadmissible member
// images), FP the member rows of non-member columns. 0/0 is reported as
// absent. Needs at least 3 classes and distinct, valid, proper-subset
// members.
SuperclassScores aggregate_superclass(const ConfusionMatrix& matrix,
                                      std::span<const std::size_t> members);

struct SuperclassMetrics {
  std::string name;
  std::vector<std::string> members;
  SuperclassScores scores;
};

struct MetricsReport {
  Regime regime = Regime::kCU;
  std::vector<std::string> classes;
  std::vector<std::optional<double>> recall;     // per class
  std::vector<std::optional<double>> precision;  // per class
  std::optional<double> overall_accuracy;
  // Unweighted means over the classes where the value is defined.
  std::optional<double> macro_recall;
  std::optional<double> macro_precision;
  std::vector<SuperclassMetrics> superclasses;
};

// Per-class recall/precision, accuracy, and one superclass block for every
// parent in `manifest` whose subclasses appear as matrix classes.
MetricsReport compute_metrics(const ConfusionMatrix& matrix, Regime regime,
                              const DatasetManifest* manifest = nullptr);

// Fixed-width table with a recall row and a precision column.
std::string render_matrix(const ConfusionMatrix& matrix);

}  // namespace cahar

#endif  // CAHAR_METRICS_H_
