#include "cahar/compare.h"

#include <set>
#include <utility>

#include "cahar/error.h"

namespace cahar {

namespace {

using EventKey = std::pair<std::string, std::size_t>;

std::map<EventKey, const LogEntry*> index_log(const std::vector<LogEntry>& log,
                                              std::string_view regime) {
  std::map<EventKey, const LogEntry*> out;
  for (const auto& e : log) {
    if (!out.emplace(EventKey{e.image_id, e.fold}, &e).second) {
      throw EvaluationError(std::string(regime) + " log has duplicate event (" +
                            e.image_id + ", fold " + std::to_string(e.fold) +
                            ")");
    }
  }
  return out;
}

CultureDelta culture_delta(const RegimeRun& cat, const RegimeRun& catt) {
  const auto a = index_log(cat.log, "CAT");
  const auto b = index_log(catt.log, "CATT");
  if (a.size() != b.size()) {
    throw EvaluationError("CAT and CATT logs cover different test events");
  }
  CultureDelta delta;
  std::map<std::pair<std::string, std::string>, std::size_t> cells;
  double sum_cat = 0.0;
  double sum_catt = 0.0;
  std::size_t n_conf = 0;
  for (const auto& [key, x] : a) {
    auto it = b.find(key);
    if (it == b.end() || it->second->actual != x->actual) {
      throw EvaluationError("CAT and CATT logs cover different test events; "
                            "first mismatch at '" + key.first + "'");
    }
    const LogEntry* y = it->second;
    ++delta.paired_events;
    if (!x->correct() && y->correct()) {
      ++delta.corrected;
      ++cells[{x->actual, x->predicted}];
    } else if (x->correct() && !y->correct()) {
      ++delta.regressed;
    } else if (!x->correct() && !y->correct()) {
      ++delta.both_wrong;
      if (x->admissible() && y->admissible()) {
        sum_cat += x->confidence;
        sum_catt += y->confidence;
        ++n_conf;
      }
    }
  }
  for (const auto& [cell, count] : cells) {
    delta.corrections.push_back({cell.first, cell.second, count});
  }
  if (n_conf > 0) {
    const auto n = static_cast<double>(n_conf);
    delta.mean_confidence_cat = sum_cat / n;
    delta.mean_confidence_catt = sum_catt / n;
    delta.mean_confidence_delta = (sum_catt - sum_cat) / n;
  }
  return delta;
}

}  // namespace

ComparisonReport compare_regimes(const std::vector<RegimeRun>& runs) {
  if (runs.empty()) throw EvaluationError("nothing to compare");
  ComparisonReport out;
  out.seed = runs.front().seed;
  std::set<Regime> seen;
  const RegimeRun* cat = nullptr;
  const RegimeRun* catt = nullptr;
  for (const auto& run : runs) {
    const std::string name(to_string(run.report.regime));
    if (run.seed != out.seed) {
      throw EvaluationError("regime " + name + " ran with seed " +
                            std::to_string(run.seed) + " but " +
                            std::string(to_string(runs.front().report.regime)) +
                            " ran with seed " + std::to_string(out.seed));
    }
    if (run.manifest_digest != runs.front().manifest_digest) {
      throw EvaluationError("regime " + name + " ran on a different manifest");
    }
    if (!seen.insert(run.report.regime).second) {
      throw EvaluationError("regime " + name + " given twice");
    }
    out.regimes.push_back(run.report.regime);
    if (run.report.regime == Regime::kCAT) cat = &run;
    if (run.report.regime == Regime::kCATT) catt = &run;

    const auto& r = run.report;
    for (std::size_t c = 0; c < r.classes.size(); ++c) {
      out.side_by_side[r.classes[c]][name] = {r.recall[c], r.precision[c]};
    }
    for (const auto& s : r.superclasses) {
      out.side_by_side[s.name][name] = {s.scores.recall, s.scores.precision};
    }
    out.overall_accuracy[name] = r.overall_accuracy;
  }
  if (cat != nullptr && catt != nullptr) {
    out.culture_delta = culture_delta(*cat, *catt);
  }
  return out;
}

}  // namespace cahar
