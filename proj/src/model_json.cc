#include "cahar/model_json.h"

#include "cahar/error.h"
#include "json_util.h"

namespace cahar {

using nlohmann::ordered_json;

ordered_json to_json(const TrainingConfig& config) {
  ordered_json j;
  j["smoothing_alpha"] = config.smoothing_alpha;
  j["prior_mode"] = to_string(config.prior_mode);
  j["cultural_injection"] = to_string(config.cultural_injection);
  j["culture_registry"] = config.culture_registry;
  return j;
}

TrainingConfig training_config_from_json(const ordered_json& j) {
  json_util::require_keys(j, "config",
                          {"smoothing_alpha", "prior_mode",
                           "cultural_injection", "culture_registry"});
  TrainingConfig config;
  config.smoothing_alpha =
      json_util::get<double>(j, "smoothing_alpha", "config");
  config.prior_mode = prior_mode_from_string(
      json_util::get<std::string>(j, "prior_mode", "config"));
  config.cultural_injection = cultural_injection_from_string(
      json_util::get<std::string>(j, "cultural_injection", "config"));
  config.culture_registry = json_util::get<std::vector<std::string>>(
      j, "culture_registry", "config");
  config.validate();
  return config;
}

ordered_json to_json(const ActivityModel& model) {
  ordered_json j;
  j["schema_version"] = kModelSchemaVersion;
  j["classes"] = model.classes();
  j["priors"] = model.priors();
  ordered_json vocab = ordered_json::array();
  for (const auto& tag : model.vocabulary().entries()) {
    vocab.push_back({{"kind", to_string(tag.kind())}, {"text", tag.text()}});
  }
  j["vocabulary"] = std::move(vocab);
  ordered_json conds = ordered_json::array();
  for (std::size_t c = 0; c < model.num_classes(); ++c) {
    const auto& cond = model.conditionals()[c];
    ordered_json entry;
    entry["class"] = model.classes()[c];
    entry["p_present"] = cond.p_present;
    ordered_json smoothed = ordered_json::array();
    for (bool b : cond.smoothing_applied) smoothed.push_back(b);
    entry["smoothing_applied"] = std::move(smoothed);
    conds.push_back(std::move(entry));
  }
  j["conditionals"] = std::move(conds);
  j["config"] = to_json(model.config());
  return j;
}

ActivityModel model_from_json(const ordered_json& j) {
  constexpr const char* kWhere = "model";
  json_util::require_keys(j, kWhere,
                          {"schema_version", "classes", "priors",
                           "vocabulary", "conditionals", "config"});
  const int version = json_util::get<int>(j, "schema_version", kWhere);
  if (version != kModelSchemaVersion) {
    throw DataError("model schema_version " + std::to_string(version) +
                    " is not supported (expected " +
                    std::to_string(kModelSchemaVersion) + ")");
  }
  auto classes = json_util::get<std::vector<std::string>>(j, "classes", kWhere);
  auto priors = json_util::get<std::vector<double>>(j, "priors", kWhere);

  std::vector<Tag> tags;
  const auto& vocab = j.at("vocabulary");
  if (!vocab.is_array()) throw DataError("model.vocabulary must be an array");
  for (const auto& entry : vocab) {
    json_util::require_keys(entry, "model.vocabulary[]", {"kind", "text"});
    const auto text = json_util::get<std::string>(entry, "text", "vocabulary");
    const Tag tag = Tag::make(
        tag_kind_from_string(
            json_util::get<std::string>(entry, "kind", "vocabulary")),
        text);
    if (tag.text() != text) {
      throw DataError("vocabulary entry '" + text + "' is not normalized");
    }
    tags.push_back(tag);
  }
  Vocabulary vocabulary(tags);
  if (vocabulary.entries() != tags) {
    throw DataError("model vocabulary must be sorted and duplicate-free");
  }

  const auto& conds = j.at("conditionals");
  if (!conds.is_array() || conds.size() != classes.size()) {
    throw DataError("model.conditionals must hold one entry per class");
  }
  std::vector<ClassConditional> conditionals;
  for (std::size_t c = 0; c < conds.size(); ++c) {
    const auto& entry = conds[c];
    json_util::require_keys(entry, "model.conditionals[]",
                            {"class", "p_present", "smoothing_applied"});
    if (json_util::get<std::string>(entry, "class", "conditionals") !=
        classes[c]) {
      throw DataError("model.conditionals order does not match classes");
    }
    ClassConditional cond;
    cond.p_present =
        json_util::get<std::vector<double>>(entry, "p_present", "conditionals");
    for (bool b : json_util::get<std::vector<bool>>(entry, "smoothing_applied",
                                                    "conditionals")) {
      cond.smoothing_applied.push_back(b);
    }
    conditionals.push_back(std::move(cond));
  }

  return ActivityModel(std::move(classes), std::move(priors),
                       std::move(vocabulary), std::move(conditionals),
                       training_config_from_json(j.at("config")));
}

std::string serialize_model(const ActivityModel& model) {
  return to_json(model).dump(2) + "\n";
}

ActivityModel deserialize_model(std::string_view document) {
  return model_from_json(json_util::parse(document, "model"));
}

}  // namespace cahar
