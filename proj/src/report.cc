#include "cahar/report.h"

#include <charconv>
#include <sstream>

#include "cahar/model_json.h"

namespace cahar {

using nlohmann::ordered_json;

namespace {

ordered_json opt(const std::optional<double>& v) {
  if (!v) return nullptr;
  return *v;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, end);
}

ordered_json to_json(const ConfusionMatrix& matrix) {
  ordered_json j;
  j["classes"] = matrix.classes();
  j["layout"] = "rows=predicted, columns=actual";
  ordered_json rows = ordered_json::array();
  for (std::size_t p = 0; p < matrix.size(); ++p) {
    ordered_json row = ordered_json::array();
    for (std::size_t a = 0; a < matrix.size(); ++a) row.push_back(matrix.at(p, a));
    rows.push_back(std::move(row));
  }
  j["counts"] = std::move(rows);
  ordered_json none = ordered_json::array();
  for (std::size_t a = 0; a < matrix.size(); ++a) {
    none.push_back(matrix.inadmissible(a));
  }
  j["no_admissible_class"] = std::move(none);
  j["total"] = matrix.total();
  return j;
}

ordered_json to_json(const MetricsReport& m) {
  ordered_json j;
  ordered_json per_class = ordered_json::array();
  for (std::size_t c = 0; c < m.classes.size(); ++c) {
    per_class.push_back({{"class", m.classes[c]},
                         {"recall", opt(m.recall[c])},
                         {"precision", opt(m.precision[c])}});
  }
  j["per_class"] = std::move(per_class);
  j["overall_accuracy"] = opt(m.overall_accuracy);
  j["macro_recall"] = opt(m.macro_recall);
  j["macro_precision"] = opt(m.macro_precision);
  ordered_json supers = ordered_json::array();
  for (const auto& s : m.superclasses) {
    ordered_json sj;
    sj["name"] = s.name;
    sj["members"] = s.members;
    sj["true_positives"] = s.scores.true_positives;
    sj["false_negatives"] = s.scores.false_negatives;
    sj["false_positives"] = s.scores.false_positives;
    sj["recall"] = opt(s.scores.recall);
    sj["precision"] = opt(s.scores.precision);
    supers.push_back(std::move(sj));
  }
  j["superclasses"] = std::move(supers);
  return j;
}

ordered_json regime_report(const ExperimentResult& result,
                           const MetricsReport& metrics,
                           const RunContext& context) {
  ordered_json j;
  j["schema_version"] = 1;
  j["regime"] = to_string(result.regime);
  j["seed"] = context.seed;
  j["manifest_digest"] = context.manifest_digest;
  ordered_json protocol;
  protocol["subsets_per_class"] = context.partition.subsets_per_class;
  protocol["images_per_class"] =
      context.partition.images_per_class
          ? ordered_json(*context.partition.images_per_class)
          : ordered_json(nullptr);
  protocol["strict_balance"] = context.partition.strict_balance;
  protocol["folds"] = result.num_folds;
  j["protocol"] = std::move(protocol);
  j["training"] = to_json(result.training_config);
  j["matrix"] = to_json(result.matrix);
  j["metrics"] = to_json(metrics);
  return j;
}

ordered_json to_json(const ComparisonReport& c) {
  ordered_json j;
  j["schema_version"] = 1;
  j["seed"] = c.seed;
  ordered_json regimes = ordered_json::array();
  for (auto r : c.regimes) regimes.push_back(to_string(r));
  j["regimes"] = std::move(regimes);
  ordered_json acc;
  for (const auto& [regime, v] : c.overall_accuracy) acc[regime] = opt(v);
  j["overall_accuracy"] = std::move(acc);
  ordered_json sbs;
  for (const auto& [name, by_regime] : c.side_by_side) {
    ordered_json entry;
    for (const auto& [regime, s] : by_regime) {
      entry[regime] = {{"recall", opt(s.recall)},
                       {"precision", opt(s.precision)}};
    }
    sbs[name] = std::move(entry);
  }
  j["side_by_side"] = std::move(sbs);
  if (c.culture_delta) {
    const auto& d = *c.culture_delta;
    ordered_json dj;
    dj["paired_events"] = d.paired_events;
    dj["corrected_by_catt"] = d.corrected;
    dj["regressed_by_catt"] = d.regressed;
    ordered_json cells = ordered_json::array();
    for (const auto& cell : d.corrections) {
      cells.push_back({{"actual", cell.actual},
                       {"cat_predicted", cell.cat_predicted.empty()
                                             ? ordered_json(nullptr)
                                             : ordered_json(cell.cat_predicted)},
                       {"count", cell.count}});
    }
    dj["corrections"] = std::move(cells);
    dj["misclassified_by_both"] = d.both_wrong;
    dj["mean_confidence_cat"] = opt(d.mean_confidence_cat);
    dj["mean_confidence_catt"] = opt(d.mean_confidence_catt);
    dj["mean_confidence_delta"] = opt(d.mean_confidence_delta);
    j["cat_vs_catt"] = std::move(dj);
  } else {
    j["cat_vs_catt"] = nullptr;
  }
  return j;
}

std::string log_csv(const std::vector<LogEntry>& log) {
  std::ostringstream os;
  os << "image_id,fold,actual,predicted,confidence\n";
  for (const auto& e : log) {
    os << csv_field(e.image_id) << ',' << e.fold << ',' << csv_field(e.actual)
       << ',' << csv_field(e.predicted) << ',' << format_double(e.confidence)
       << '\n';
  }
  return os.str();
}

}  // namespace cahar
