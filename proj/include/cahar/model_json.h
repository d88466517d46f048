#ifndef CAHAR_MODEL_JSON_H_
#define CAHAR_MODEL_JSON_H_

#include <string>
#include <string_view>

#include <json.hpp>

#include "cahar/model.h"

namespace cahar {

inline constexpr int kModelSchemaVersion = 1;

nlohmann::ordered_json to_json(const TrainingConfig& config);
TrainingConfig training_config_from_json(const nlohmann::ordered_json& j);

nlohmann::ordered_json to_json(const ActivityModel& model);
ActivityModel model_from_json(const nlohmann::ordered_json& j);

// Pretty-printed document with a trailing newline. Doubles are written in
// shortest round-trip form, so serialize(deserialize(s)) == s for any s
// produced here.
std::string serialize_model(const ActivityModel& model);
ActivityModel deserialize_model(std::string_view document);

}  // namespace cahar

#endif  // CAHAR_MODEL_JSON_H_
