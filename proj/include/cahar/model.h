#ifndef CAHAR_MODEL_H_
#define CAHAR_MODEL_H_

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cahar/tag.h"

namespace cahar {

enum class PriorMode { kUniform, kEmpirical };
enum class CulturalInjection { kOff, kOn };

std::string_view to_string(PriorMode mode);
PriorMode prior_mode_from_string(std::string_view name);
std::string_view to_string(CulturalInjection injection);
CulturalInjection cultural_injection_from_string(std::string_view name);

struct TrainingConfig {
  double smoothing_alpha = 1.0;
  PriorMode prior_mode = PriorMode::kUniform;
  CulturalInjection cultural_injection = CulturalInjection::kOff;
  std::vector<std::string> culture_registry;

  bool injects() const {
    return cultural_injection == CulturalInjection::kOn;
  }

  // Throws ConfigError on a negative or non-finite alpha, an empty registry
  // under injection, or duplicate registry entries.
  void validate() const;

  friend bool operator==(const TrainingConfig&, const TrainingConfig&) =
      default;
};

// Normalizes culture names and rejects duplicates.
std::vector<std::string> normalize_registry(
    const std::vector<std::string>& registry);

class Vocabulary {
 public:
  Vocabulary() = default;
  // Sorts and deduplicates.
  explicit Vocabulary(std::vector<Tag> tags);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<Tag>& entries() const { return entries_; }
  const Tag& operator[](std::size_t i) const { return entries_[i]; }
  std::optional<std::size_t> find(const Tag& tag) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.entries_ == b.entries_;
  }

 private:
  std::vector<Tag> entries_;
  std::map<Tag, std::size_t> index_;
};

// Bernoulli parameters of one class, aligned with the model vocabulary.
struct ClassConditional {
  std::vector<double> p_present;
  std::vector<bool> smoothing_applied;

  friend bool operator==(const ClassConditional&,
                         const ClassConditional&) = default;
};

class ActivityModel {
 public:
  // Validates every invariant and throws DataError on violation: classes
  // distinct, non-empty and sorted; priors in [0,1] summing to 1 within
  // 1e-12; one conditional per class sized to the vocabulary; every
  // probability in [0,1].
  ActivityModel(std::vector<std::string> classes, std::vector<double> priors,
                Vocabulary vocabulary,
                std::vector<ClassConditional> conditionals,
                TrainingConfig config);

  const std::vector<std::string>& classes() const { return classes_; }
  const std::vector<double>& priors() const { return priors_; }
  const Vocabulary& vocabulary() const { return vocabulary_; }
  const std::vector<ClassConditional>& conditionals() const {
    return conditionals_;
  }
  const TrainingConfig& config() const { return config_; }

  std::size_t num_classes() const { return classes_.size(); }
  std::optional<std::size_t> class_index(std::string_view name) const;

  // p_present(tag | class); nullopt when the tag is not in the vocabulary.
  std::optional<double> p_present(const Tag& tag,
                                  std::string_view class_name) const;

  friend bool operator==(const ActivityModel&, const ActivityModel&) = default;

 private:
  std::vector<std::string> classes_;
  std::vector<double> priors_;
  Vocabulary vocabulary_;
  std::vector<ClassConditional> conditionals_;
  TrainingConfig config_;
};

struct TrainingExample {
  TagSet tags;
  std::string class_label;
  std::optional<std::string> cultural_label;
};

struct Classification {
  std::string predicted_class;
  double confidence = 0.0;
  // Aligned with ActivityModel::classes().
  std::vector<double> posteriors;
  std::vector<double> log_scores;
};

// Deterministic union of every tag in the training sets, plus one cultural
// tag per registered culture when injection is on. Throws DataError on an
// empty input list.
Vocabulary build_vocabulary(std::span<const TagSet> training_tagsets,
                            const TrainingConfig& config);

// Fraction of `cultural_labels` equal to each registry entry, in registry
// order.
std::vector<double> cultural_tag_distribution(
    std::span<const std::string> cultural_labels,
    const std::vector<std::string>& registry);

// Fits priors and Bernoulli conditionals. Semantic tags use
// (count + alpha) / (N_c + 2 alpha); cultural tags take the unsmoothed
// per-class culture frequencies so that culture-specific classes hold
// exact 0/1 values. When `declared_classes` is non-empty every declared
// class must have at least one example and every example must use a
// declared class.
ActivityModel train_model(std::span<const TrainingExample> examples,
                          const TrainingConfig& config,
                          std::span<const std::string> declared_classes = {});

// Posteriors closer than this to the maximum count as tied.
inline constexpr double kPosteriorTieTolerance = 1e-12;

// Bernoulli Naive Bayes posterior in log space. Tags outside the vocabulary
// are ignored; ties go to the first class name. Throws EvaluationError("no admissible class") when every
// class has zero likelihood.
Classification classify(const TagSet& tagset, const ActivityModel& model);

}  // namespace cahar

#endif  // CAHAR_MODEL_H_
