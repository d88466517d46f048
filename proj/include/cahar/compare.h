#ifndef CAHAR_COMPARE_H_
#define CAHAR_COMPARE_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cahar/experiment.h"
#include "cahar/metrics.h"

namespace cahar {

// Everything compare_regimes needs from one regime's run.
struct RegimeRun {
  MetricsReport report;
  std::vector<LogEntry> log;
  std::uint64_t seed = 0;
  std::string manifest_digest;
};

struct ScorePair {
  std::optional<double> recall;
  std::optional<double> precision;
};

struct CorrectionCell {
  std::string actual;
  std::string cat_predicted;  // empty: no admissible class under CAT
  std::size_t count = 0;
};

// CAT versus CATT over identical (image, fold) test events.
struct CultureDelta {
  std::size_t paired_events = 0;
  std::size_t corrected = 0;  // wrong under CAT, right under CATT
  std::size_t regressed = 0;  // right under CAT, wrong under CATT
  std::vector<CorrectionCell> corrections;
  // Wrong under both; inadmissible outcomes are excluded from the means.
  std::size_t both_wrong = 0;
  std::optional<double> mean_confidence_cat;
  std::optional<double> mean_confidence_catt;
  std::optional<double> mean_confidence_delta;  // CATT minus CAT
};

struct ComparisonReport {
  std::uint64_t seed = 0;
  std::vector<Regime> regimes;
  // class or superclass name -> regime name -> scores
  std::map<std::string, std::map<std::string, ScorePair>> side_by_side;
  std::map<std::string, std::optional<double>> overall_accuracy;
  std::optional<CultureDelta> culture_delta;  // when both CAT and CATT ran
};

// Throws EvaluationError on mismatched seeds or manifests, duplicate
// regimes, or CAT/CATT logs over different test events.
ComparisonReport compare_regimes(const std::vector<RegimeRun>& runs);

}  // namespace cahar

#endif  // CAHAR_COMPARE_H_
