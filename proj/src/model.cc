#include "cahar/model.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "cahar/error.h"

namespace cahar {

std::string_view to_string(PriorMode mode) {
  return mode == PriorMode::kEmpirical ? "empirical" : "uniform";
}

PriorMode prior_mode_from_string(std::string_view name) {
  if (name == "uniform") return PriorMode::kUniform;
  if (name == "empirical") return PriorMode::kEmpirical;
  throw ConfigError("unknown prior_mode '" + std::string(name) + "'");
}

std::string_view to_string(CulturalInjection injection) {
  return injection == CulturalInjection::kOn ? "on" : "off";
}

CulturalInjection cultural_injection_from_string(std::string_view name) {
  if (name == "on") return CulturalInjection::kOn;
  if (name == "off") return CulturalInjection::kOff;
  throw ConfigError("unknown cultural_injection '" + std::string(name) + "'");
}

void TrainingConfig::validate() const {
  if (!std::isfinite(smoothing_alpha) || smoothing_alpha < 0.0) {
    throw ConfigError("smoothing_alpha must be a finite value >= 0");
  }
  if (injects() && culture_registry.empty()) {
    throw ConfigError("culture_registry must be non-empty when "
                      "cultural_injection is on");
  }
  std::set<std::string> seen;
  for (const auto& culture : culture_registry) {
    if (culture.empty() || !seen.insert(culture).second) {
      throw ConfigError("culture_registry has an empty or duplicate entry '" +
                        culture + "'");
    }
  }
}

std::vector<std::string> normalize_registry(
    const std::vector<std::string>& registry) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  out.reserve(registry.size());
  for (const auto& culture : registry) {
    std::string name = normalize_tag_text(culture);
    if (!seen.insert(name).second) {
      throw ConfigError("duplicate culture '" + name + "' in registry");
    }
    out.push_back(std::move(name));
  }
  return out;
}

Vocabulary::Vocabulary(std::vector<Tag> tags) : entries_(std::move(tags)) {
  std::sort(entries_.begin(), entries_.end());
  entries_.erase(std::unique(entries_.begin(), entries_.end()),
                 entries_.end());
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    index_.emplace(entries_[i], i);
  }
}

std::optional<std::size_t> Vocabulary::find(const Tag& tag) const {
  auto it = index_.find(tag);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

ActivityModel::ActivityModel(std::vector<std::string> classes,
                             std::vector<double> priors, Vocabulary vocabulary,
                             std::vector<ClassConditional> conditionals,
                             TrainingConfig config)
    : classes_(std::move(classes)),
      priors_(std::move(priors)),
      vocabulary_(std::move(vocabulary)),
      conditionals_(std::move(conditionals)),
      config_(std::move(config)) {
  if (classes_.empty()) throw DataError("model has no classes");
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    if (classes_[i].empty()) throw DataError("model has an empty class name");
    if (i > 0 && !(classes_[i - 1] < classes_[i])) {
      throw DataError("model classes must be distinct and sorted; offending "
                      "class '" + classes_[i] + "'");
    }
  }
  if (priors_.size() != classes_.size()) {
    throw DataError("model has " + std::to_string(priors_.size()) +
                    " priors for " + std::to_string(classes_.size()) +
                    " classes");
  }
  double total = 0.0;
  for (double p : priors_) {
    if (!(p >= 0.0 && p <= 1.0)) throw DataError("prior outside [0,1]");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw DataError("priors do not sum to 1");
  }
  if (conditionals_.size() != classes_.size()) {
    throw DataError("model needs one conditional table per class");
  }
  for (std::size_t c = 0; c < conditionals_.size(); ++c) {
    const auto& cond = conditionals_[c];
    if (cond.p_present.size() != vocabulary_.size() ||
        cond.smoothing_applied.size() != vocabulary_.size()) {
      throw DataError("conditional table of class '" + classes_[c] +
                      "' does not match the vocabulary size");
    }
    for (double p : cond.p_present) {
      if (!(p >= 0.0 && p <= 1.0)) {
        throw DataError("conditional probability outside [0,1] in class '" +
                        classes_[c] + "'");
      }
    }
  }
}

std::optional<std::size_t> ActivityModel::class_index(
    std::string_view name) const {
  auto it = std::lower_bound(classes_.begin(), classes_.end(), name);
  if (it == classes_.end() || *it != name) return std::nullopt;
  return static_cast<std::size_t>(it - classes_.begin());
}

std::optional<double> ActivityModel::p_present(
    const Tag& tag, std::string_view class_name) const {
  auto c = class_index(class_name);
  auto t = vocabulary_.find(tag);
  if (!c || !t) return std::nullopt;
  return conditionals_[*c].p_present[*t];
}

Vocabulary build_vocabulary(std::span<const TagSet> training_tagsets,
                            const TrainingConfig& config) {
  if (training_tagsets.empty()) throw DataError("empty training set");
  std::vector<Tag> tags;
  for (const auto& tagset : training_tagsets) {
    for (const auto& [tag, _] : tagset.entries()) tags.push_back(tag);
  }
  if (config.injects()) {
    for (const auto& culture : config.culture_registry) {
      tags.push_back(Tag::cultural(culture));
    }
  }
  return Vocabulary(std::move(tags));
}

std::vector<double> cultural_tag_distribution(
    std::span<const std::string> cultural_labels,
    const std::vector<std::string>& registry) {
  if (cultural_labels.empty()) {
    throw DataError("cultural tag distribution needs at least one example");
  }
  std::vector<std::size_t> counts(registry.size(), 0);
  for (const auto& label : cultural_labels) {
    auto it = std::find(registry.begin(), registry.end(), label);
    if (it == registry.end()) {
      throw DataError("unknown cultural label '" + label + "'");
    }
    ++counts[static_cast<std::size_t>(it - registry.begin())];
  }
  std::vector<double> out(registry.size());
  const auto n = static_cast<double>(cultural_labels.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    out[i] = static_cast<double>(counts[i]) / n;
  }
  return out;
}

ActivityModel train_model(std::span<const TrainingExample> examples,
                          const TrainingConfig& config,
                          std::span<const std::string> declared_classes) {
  TrainingConfig cfg = config;
  cfg.culture_registry = normalize_registry(config.culture_registry);
  cfg.validate();
  if (examples.empty()) throw DataError("empty training set");

  std::vector<std::string> classes;
  if (declared_classes.empty()) {
    for (const auto& ex : examples) classes.push_back(ex.class_label);
  } else {
    classes.assign(declared_classes.begin(), declared_classes.end());
  }
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());

  const std::size_t num_classes = classes.size();
  std::vector<std::vector<const TrainingExample*>> by_class(num_classes);
  for (const auto& ex : examples) {
    if (ex.class_label.empty()) throw DataError("example with empty class");
    auto it = std::lower_bound(classes.begin(), classes.end(), ex.class_label);
    if (it == classes.end() || *it != ex.class_label) {
      throw DataError("example '" + ex.tags.image_id() +
                      "' uses undeclared class '" + ex.class_label + "'");
    }
    if (auto cultural = ex.tags.cultural_tag()) {
      throw DataError("training tag set of '" + ex.tags.image_id() +
                      "' carries cultural tag '" + cultural->text() +
                      "'; supply it as a cultural label instead");
    }
    if (cfg.injects() && !ex.cultural_label) {
      throw DataError("example '" + ex.tags.image_id() +
                      "' has no cultural label but cultural injection is on");
    }
    by_class[static_cast<std::size_t>(it - classes.begin())].push_back(&ex);
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (by_class[c].empty()) {
      throw DataError("class '" + classes[c] + "' has no training examples");
    }
  }

  std::vector<TagSet> tagsets;
  tagsets.reserve(examples.size());
  for (const auto& ex : examples) tagsets.push_back(ex.tags);
  Vocabulary vocabulary = build_vocabulary(tagsets, cfg);

  const double alpha = cfg.smoothing_alpha;
  std::vector<ClassConditional> conditionals(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    const auto& members = by_class[c];
    const auto n_c = static_cast<double>(members.size());
    std::vector<std::size_t> counts(vocabulary.size(), 0);
    for (const auto* ex : members) {
      for (const auto& [tag, _] : ex->tags.entries()) {
        ++counts[*vocabulary.find(tag)];
      }
    }
    auto& cond = conditionals[c];
    cond.p_present.assign(vocabulary.size(), 0.0);
    cond.smoothing_applied.assign(vocabulary.size(), false);
    for (std::size_t t = 0; t < vocabulary.size(); ++t) {
      if (vocabulary[t].is_cultural()) continue;
      cond.p_present[t] =
          (static_cast<double>(counts[t]) + alpha) / (n_c + 2.0 * alpha);
      cond.smoothing_applied[t] = alpha > 0.0;
    }
    if (cfg.injects()) {
      std::vector<std::string> labels;
      labels.reserve(members.size());
      for (const auto* ex : members) {
        labels.push_back(normalize_tag_text(*ex->cultural_label));
      }
      const auto dist = cultural_tag_distribution(labels, cfg.culture_registry);
      for (std::size_t g = 0; g < cfg.culture_registry.size(); ++g) {
        cond.p_present[*vocabulary.find(Tag::cultural(
            cfg.culture_registry[g]))] = dist[g];
      }
    }
  }

  std::vector<double> priors(num_classes);
  if (cfg.prior_mode == PriorMode::kUniform) {
    std::fill(priors.begin(), priors.end(),
              1.0 / static_cast<double>(num_classes));
  } else {
    const auto n = static_cast<double>(examples.size());
    for (std::size_t c = 0; c < num_classes; ++c) {
      priors[c] = static_cast<double>(by_class[c].size()) / n;
    }
  }

  return ActivityModel(std::move(classes), std::move(priors),
                       std::move(vocabulary), std::move(conditionals),
                       std::move(cfg));
}

Classification classify(const TagSet& tagset, const ActivityModel& model) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  const auto& vocab = model.vocabulary();
  std::vector<bool> present(vocab.size(), false);
  for (const auto& [tag, _] : tagset.entries()) {
    if (auto i = vocab.find(tag)) present[*i] = true;
  }

  const std::size_t num_classes = model.num_classes();
  Classification out;
  out.log_scores.assign(num_classes, kNegInf);
  for (std::size_t c = 0; c < num_classes; ++c) {
    const double prior = model.priors()[c];
    if (prior <= 0.0) continue;
    double score = std::log(prior);
    const auto& p = model.conditionals()[c].p_present;
    for (std::size_t t = 0; t < vocab.size() && score != kNegInf; ++t) {
      score += present[t] ? std::log(p[t]) : std::log1p(-p[t]);
    }
    out.log_scores[c] = score;
  }

  const double best =
      *std::max_element(out.log_scores.begin(), out.log_scores.end());
  if (best == kNegInf) {
    throw EvaluationError("no admissible class for '" + tagset.image_id() +
                          "'");
  }
  out.posteriors.assign(num_classes, 0.0);
  double total = 0.0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    out.posteriors[c] = std::exp(out.log_scores[c] - best);
    total += out.posteriors[c];
  }
  double top = 0.0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    out.posteriors[c] /= total;
    top = std::max(top, out.posteriors[c]);
  }
  // Classes are sorted, so the first one within rounding of the maximum is
  // the lexicographic winner of a tie.
  std::size_t argmax = 0;
  while (out.posteriors[argmax] < top - kPosteriorTieTolerance) ++argmax;
  out.predicted_class = model.classes()[argmax];
  out.confidence = out.posteriors[argmax];
  return out;
}

}  // namespace cahar
