#include "cahar/metrics.h"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

#include "cahar/error.h"

namespace cahar {

namespace {

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

std::optional<double> mean_defined(const std::vector<std::optional<double>>& v) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& x : v) {
    if (x) {
      sum += *x;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> classes)
    : classes_(std::move(classes)),
      counts_(classes_.size() * classes_.size(), 0),
      inadmissible_(classes_.size(), 0) {}

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> classes,
                                 std::vector<std::uint64_t> counts)
    : classes_(std::move(classes)),
      counts_(std::move(counts)),
      inadmissible_(classes_.size(), 0) {
  if (counts_.size() != classes_.size() * classes_.size()) {
    throw EvaluationError("confusion matrix needs " +
                          std::to_string(classes_.size() * classes_.size()) +
                          " counts");
  }
}

std::optional<std::size_t> ConfusionMatrix::index_of(
    std::string_view name) const {
  auto it = std::find(classes_.begin(), classes_.end(), name);
  if (it == classes_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - classes_.begin());
}

void ConfusionMatrix::add(std::size_t predicted, std::size_t actual,
                          std::uint64_t n) {
  counts_.at(predicted * size() + actual) += n;
}

void ConfusionMatrix::add_inadmissible(std::size_t actual, std::uint64_t n) {
  inadmissible_.at(actual) += n;
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.classes_ != classes_) {
    throw EvaluationError("cannot merge confusion matrices over different "
                          "classes");
  }
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  for (std::size_t i = 0; i < inadmissible_.size(); ++i) {
    inadmissible_[i] += other.inadmissible_[i];
  }
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t predicted) const {
  std::uint64_t sum = 0;
  for (std::size_t a = 0; a < size(); ++a) sum += at(predicted, a);
  return sum;
}

std::uint64_t ConfusionMatrix::actual_total(std::size_t actual) const {
  std::uint64_t sum = inadmissible_[actual];
  for (std::size_t p = 0; p < size(); ++p) sum += at(p, actual);
  return sum;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < size(); ++i) sum += at(i, i);
  return sum;
}

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0}) +
         std::accumulate(inadmissible_.begin(), inadmissible_.end(),
                         std::uint64_t{0});
}

SuperclassScores aggregate_superclass(const ConfusionMatrix& matrix,
                                      std::span<const std::size_t> members) {
  const std::size_t c = matrix.size();
  if (c < 3) {
    throw EvaluationError("superclass aggregation needs at least 3 classes");
  }
  std::vector<bool> is_member(c, false);
  for (std::size_t m : members) {
    if (m >= c) throw EvaluationError("superclass member index out of range");
    if (is_member[m]) throw EvaluationError("duplicate superclass member");
    is_member[m] = true;
  }
  if (members.empty() || members.size() == c) {
    throw EvaluationError("superclass members must be a non-empty proper "
                          "subset of the classes");
  }
  SuperclassScores s;
  for (std::size_t i = 0; i < c; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      const auto v = matrix.at(i, j);
      if (is_member[i] && is_member[j]) s.true_positives += v;
      if (!is_member[i] && is_member[j]) s.false_negatives += v;
      if (is_member[i] && !is_member[j]) s.false_positives += v;
    }
  }
  for (std::size_t j = 0; j < c; ++j) {
    if (is_member[j]) s.false_negatives += matrix.inadmissible(j);
  }
  s.recall = ratio(s.true_positives, s.true_positives + s.false_negatives);
  s.precision = ratio(s.true_positives, s.true_positives + s.false_positives);
  return s;
}

MetricsReport compute_metrics(const ConfusionMatrix& matrix, Regime regime,
                              const DatasetManifest* manifest) {
  MetricsReport report;
  report.regime = regime;
  report.classes = matrix.classes();
  for (std::size_t c = 0; c < matrix.size(); ++c) {
    report.recall.push_back(ratio(matrix.at(c, c), matrix.actual_total(c)));
    report.precision.push_back(ratio(matrix.at(c, c), matrix.row_sum(c)));
  }
  report.overall_accuracy = ratio(matrix.trace(), matrix.total());
  report.macro_recall = mean_defined(report.recall);
  report.macro_precision = mean_defined(report.precision);

  if (manifest != nullptr && matrix.size() >= 3) {
    for (const auto& [parent, subs] : manifest->class_tree) {
      std::vector<std::size_t> members;
      std::vector<std::string> names;
      for (const auto& sub : subs) {
        if (auto i = matrix.index_of(sub)) {
          members.push_back(*i);
          names.push_back(sub);
        }
      }
      if (members.size() < 2 || members.size() == matrix.size()) continue;
      report.superclasses.push_back(
          {parent, names, aggregate_superclass(matrix, members)});
    }
  }
  return report;
}

std::string render_matrix(const ConfusionMatrix& matrix) {
  std::size_t width = 9;
  for (const auto& c : matrix.classes()) width = std::max(width, c.size() + 2);
  auto cell = [&](const std::string& s) {
    std::string out(width > s.size() ? width - s.size() : 0, ' ');
    return out + s;
  };
  auto pct = [](std::optional<double> v) {
    if (!v) return std::string("n/a");
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%.1f%%", 100.0 * *v);
    return std::string(buf);
  };

  const auto m = compute_metrics(matrix, Regime::kCU);
  std::ostringstream os;
  os << cell("pred\\act");
  for (const auto& c : matrix.classes()) os << cell(c);
  os << cell("precision") << "\n";
  for (std::size_t p = 0; p < matrix.size(); ++p) {
    os << cell(matrix.classes()[p]);
    for (std::size_t a = 0; a < matrix.size(); ++a) {
      os << cell(std::to_string(matrix.at(p, a)));
    }
    os << cell(pct(m.precision[p])) << "\n";
  }
  bool any_inadmissible = false;
  for (std::size_t a = 0; a < matrix.size(); ++a) {
    any_inadmissible = any_inadmissible || matrix.inadmissible(a) > 0;
  }
  if (any_inadmissible) {
    os << cell("<none>");
    for (std::size_t a = 0; a < matrix.size(); ++a) {
      os << cell(std::to_string(matrix.inadmissible(a)));
    }
    os << "\n";
  }
  os << cell("recall");
  for (std::size_t a = 0; a < matrix.size(); ++a) os << cell(pct(m.recall[a]));
  os << cell(pct(m.overall_accuracy)) << "\n";
  return os.str();
}

}  // namespace cahar
