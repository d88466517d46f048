#ifndef CAHAR_REPORT_H_
#define CAHAR_REPORT_H_

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "cahar/compare.h"
#include "cahar/experiment.h"
#include "cahar/folds.h"
#include "cahar/metrics.h"

namespace cahar {

struct RunContext {
  std::uint64_t seed = 0;
  std::string manifest_digest;
  PartitionOptions partition;
};

nlohmann::ordered_json to_json(const ConfusionMatrix& matrix);
nlohmann::ordered_json to_json(const MetricsReport& metrics);
nlohmann::ordered_json to_json(const ComparisonReport& comparison);

// Matrix, metrics, configuration echo and seed of one regime.
nlohmann::ordered_json regime_report(const ExperimentResult& result,
                                     const MetricsReport& metrics,
                                     const RunContext& context);

// image_id,fold,actual,predicted,confidence. An image with no admissible
// class has an empty predicted field and confidence 0.
std::string log_csv(const std::vector<LogEntry>& log);

// Shortest text that parses back to the same double.
std::string format_double(double value);

}  // namespace cahar

#endif  // CAHAR_REPORT_H_
