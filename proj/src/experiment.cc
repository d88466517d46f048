#include "cahar/experiment.h"

#include <map>

#include "cahar/error.h"

namespace cahar {

TrainingConfig regime_training_config(const DatasetManifest& manifest,
                                      Regime regime, TrainingConfig base) {
  if (regime == Regime::kCATT) {
    base.cultural_injection = CulturalInjection::kOn;
    if (base.culture_registry.empty()) {
      base.culture_registry = manifest.culture_registry;
    }
  } else {
    base.cultural_injection = CulturalInjection::kOff;
  }
  base.culture_registry = normalize_registry(base.culture_registry);
  base.validate();
  return base;
}

ExperimentResult run_experiment(const DatasetManifest& manifest, Regime regime,
                                const TrainingConfig& training_config,
                                const FoldPlan& plan, const TagIndex& tags) {
  const auto projection = project_classes(manifest, regime);
  const auto classes = projected_classes(projection);
  if (plan.partitions.size() != classes.size()) {
    throw EvaluationError("fold plan covers " +
                          std::to_string(plan.partitions.size()) +
                          " classes but the " + std::string(to_string(regime)) +
                          " projection has " + std::to_string(classes.size()));
  }
  for (std::size_t c = 0; c < classes.size(); ++c) {
    if (plan.partitions[c].class_name != classes[c]) {
      throw EvaluationError("fold plan class '" +
                            plan.partitions[c].class_name +
                            "' does not match projected class '" + classes[c] +
                            "'");
    }
  }

  std::map<std::string, const ProjectedRecord*> by_id;
  for (const auto& p : projection) by_id.emplace(p.image_id, &p);
  auto lookup = [&](const std::string& image_id, const std::string& cls) {
    auto it = by_id.find(image_id);
    if (it == by_id.end() || it->second->effective_class != cls) {
      throw EvaluationError("fold plan image '" + image_id +
                            "' is not a record of class '" + cls + "'");
    }
    auto t = tags.find(image_id);
    if (t == tags.end()) {
      throw DataError("no tag set available for image '" + image_id + "'");
    }
    return std::pair{it->second, &t->second};
  };

  ExperimentResult result;
  result.regime = regime;
  result.training_config =
      regime_training_config(manifest, regime, training_config);
  result.matrix = ConfusionMatrix(classes);
  result.num_folds = plan.folds.size();
  const bool catt = regime == Regime::kCATT;

  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    const Fold& fold = plan.folds[f];
    std::vector<TrainingExample> examples;
    for (std::size_t c = 0; c < classes.size(); ++c) {
      for (std::size_t s : fold.train[c]) {
        for (const auto& id : plan.partitions[c].subsets.at(s)) {
          auto [record, tagset] = lookup(id, classes[c]);
          examples.push_back(
              {*tagset, classes[c],
               catt ? record->cultural_label : std::optional<std::string>{}});
        }
      }
    }
    const ActivityModel model =
        train_model(examples, result.training_config, classes);

    for (std::size_t c = 0; c < classes.size(); ++c) {
      for (const auto& id : plan.partitions[c].subsets.at(fold.test[c])) {
        auto [record, tagset] = lookup(id, classes[c]);
        LogEntry entry{id, f, classes[c], "", 0.0};
        try {
          const Classification out =
              catt ? classify(inject_cultural_tag(
                                  *tagset, *record->cultural_label,
                                  result.training_config.culture_registry),
                              model)
                   : classify(*tagset, model);
          entry.predicted = out.predicted_class;
          entry.confidence = out.confidence;
          result.matrix.add(*model.class_index(out.predicted_class), c);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::kEvaluation) throw;
          result.matrix.add_inadmissible(c);
        }
        result.log.push_back(std::move(entry));
      }
    }
  }
  return result;
}

}  // namespace cahar
