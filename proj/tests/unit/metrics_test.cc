#include <doctest.h>

#include <random>

#include "cahar/error.h"
#include "cahar/metrics.h"
#include "test_support.h"

using namespace cahar;

namespace {

const std::vector<std::string> kThree{"sleeping-bed", "sleeping-futon", "lying-on-floor"};

// Collapses members into one class and everything else into another, then
// scores the merged class from the 2x2 table.
std::pair<std::optional<double>, std::optional<double>> merged_scores(
    const ConfusionMatrix& m, const std::set<std::size_t>& members) {
  std::uint64_t t[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t p = 0; p < m.size(); ++p) {
    for (std::size_t a = 0; a < m.size(); ++a) {
      t[members.count(p) ? 0 : 1][members.count(a) ? 0 : 1] += m.at(p, a);
    }
  }
  const std::uint64_t col = t[0][0] + t[1][0];
  const std::uint64_t row = t[0][0] + t[0][1];
  std::optional<double> recall, precision;
  if (col) recall = double(t[0][0]) / double(col);
  if (row) precision = double(t[0][0]) / double(row);
  return {recall, precision};
}

}  // namespace

TEST_CASE("superclass aggregation on the worked matrix") {
  const ConfusionMatrix m(kThree, {10, 2, 0, 1, 9, 1, 1, 1, 11});
  const std::size_t members[] = {0, 1};
  const SuperclassScores s = aggregate_superclass(m, members);
  CHECK(s.true_positives == 22);
  CHECK(s.false_negatives == 2);
  CHECK(s.false_positives == 1);
  CHECK(*s.recall == 22.0 / 24.0);
  CHECK(*s.precision == 22.0 / 23.0);
}

TEST_CASE("diagonal matrices score perfectly") {
  const ConfusionMatrix m(kThree, {5, 0, 0, 0, 7, 0, 0, 0, 3});
  const std::size_t members[] = {0, 1};
  const SuperclassScores s = aggregate_superclass(m, members);
  CHECK(*s.recall == 1.0);
  CHECK(*s.precision == 1.0);
  const MetricsReport r = compute_metrics(m, Regime::kCAT);
  CHECK(*r.overall_accuracy == 1.0);
  for (const auto& v : r.recall) CHECK(*v == 1.0);
}

TEST_CASE("empty member columns leave recall absent") {
  const ConfusionMatrix m(kThree, {0, 0, 0, 0, 0, 0, 0, 0, 4});
  const std::size_t members[] = {0, 1};
  const SuperclassScores s = aggregate_superclass(m, members);
  CHECK_FALSE(s.recall.has_value());
  CHECK_FALSE(s.precision.has_value());
  const MetricsReport r = compute_metrics(m, Regime::kCAT);
  CHECK_FALSE(r.recall[0].has_value());
  CHECK_FALSE(r.precision[0].has_value());
  CHECK(*r.recall[2] == 1.0);
  CHECK(*r.macro_recall == 1.0);
}

TEST_CASE("aggregation matches the physically merged matrix") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> cell(0, 12);
  std::uniform_int_distribution<std::size_t> size(3, 6);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = size(rng);
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n; ++i) names.push_back("c" + std::to_string(i));
    std::vector<std::uint64_t> counts(n * n);
    for (auto& c : counts) c = cell(rng) < 3 ? 0 : cell(rng);
    const ConfusionMatrix m(names, counts);

    std::set<std::size_t> members;
    std::bernoulli_distribution pick(0.5);
    while (members.empty() || members.size() == n) {
      members.clear();
      for (std::size_t i = 0; i < n; ++i) {
        if (pick(rng)) members.insert(i);
      }
    }
    const std::vector<std::size_t> mv(members.begin(), members.end());
    const SuperclassScores s = aggregate_superclass(m, mv);
    const auto [recall, precision] = merged_scores(m, members);
    CHECK(s.recall == recall);
    CHECK(s.precision == precision);
  }
}

TEST_CASE("aggregation preconditions") {
  const ConfusionMatrix two({"a", "b"}, {1, 0, 0, 1});
  const std::size_t first[] = {0};
  CHECK_THROWS_AS(aggregate_superclass(two, first), Error);
  const ConfusionMatrix m(kThree, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  const std::size_t dup[] = {0, 0};
  const std::size_t out_of_range[] = {0, 7};
  const std::size_t all[] = {0, 1, 2};
  CHECK_THROWS_AS(aggregate_superclass(m, dup), Error);
  CHECK_THROWS_AS(aggregate_superclass(m, out_of_range), Error);
  CHECK_THROWS_AS(aggregate_superclass(m, all), Error);
  CHECK_THROWS_AS(aggregate_superclass(m, {}), Error);
}

TEST_CASE("per-class metrics follow rows = predicted, columns = actual") {
  // Column 0 (actual bed): 10 right, 1 called futon, 1 called floor.
  const ConfusionMatrix m(kThree, {10, 2, 0, 1, 9, 1, 1, 1, 11});
  const MetricsReport r = compute_metrics(m, Regime::kCAT);
  CHECK(*r.recall[0] == 10.0 / 12.0);
  CHECK(*r.precision[0] == 10.0 / 12.0);
  CHECK(*r.recall[1] == 9.0 / 12.0);
  CHECK(*r.precision[1] == 9.0 / 11.0);
  CHECK(*r.recall[2] == 11.0 / 12.0);
  CHECK(*r.precision[2] == 11.0 / 13.0);
  CHECK(*r.overall_accuracy == 30.0 / 36.0);
  CHECK(m.trace() == 30);
  CHECK(m.total() == 36);
}

TEST_CASE("superclass blocks come from the manifest class tree") {
  const ConfusionMatrix m(kThree, {10, 2, 0, 1, 9, 1, 1, 1, 11});
  const DatasetManifest manifest = cahar::testing::study_manifest();
  const MetricsReport r = compute_metrics(m, Regime::kCAT, &manifest);
  REQUIRE(r.superclasses.size() == 1);
  CHECK(r.superclasses[0].name == "sleeping");
  CHECK(*r.superclasses[0].scores.recall == 22.0 / 24.0);
  CHECK(compute_metrics(ConfusionMatrix({"lying-on-floor", "sleeping"}, {3, 1, 0, 4}),
                        Regime::kCU, &manifest)
            .superclasses.empty());
}

TEST_CASE("inadmissible images count as errors of their actual class") {
  ConfusionMatrix m(kThree);
  m.add(0, 0, 3);
  m.add_inadmissible(0);
  CHECK(m.total() == 4);
  CHECK(m.actual_total(0) == 4);
  const MetricsReport r = compute_metrics(m, Regime::kCATT);
  CHECK(*r.recall[0] == 0.75);
  CHECK(*r.precision[0] == 1.0);
  CHECK(*r.overall_accuracy == 0.75);
  const std::size_t members[] = {0, 1};
  CHECK(aggregate_superclass(m, members).false_negatives == 1);
}

TEST_CASE("merging accumulates counts") {
  ConfusionMatrix a(kThree), b(kThree);
  a.add(0, 1, 2);
  b.add(0, 1, 3);
  b.add_inadmissible(2);
  a.merge(b);
  CHECK(a.at(0, 1) == 5);
  CHECK(a.inadmissible(2) == 1);
  CHECK_THROWS_AS(a.merge(ConfusionMatrix({"x", "y", "z"})), Error);
}

TEST_CASE("rendered table shows classes, recall and precision") {
  const ConfusionMatrix m(kThree, {10, 2, 0, 1, 9, 1, 1, 1, 11});
  const std::string table = render_matrix(m);
  CHECK(table.find("sleeping-futon") != std::string::npos);
  CHECK(table.find("recall") != std::string::npos);
  CHECK(table.find("precision") != std::string::npos);
}
