// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cahar/cli.h"
#include "cahar/compare.h"
#include "cahar/error.h"
#include "cahar/experiment.h"
#include "cahar/folds.h"
#include "cahar/metrics.h"
#include "cahar/model.h"
#include "cahar/providers.h"
#include "cahar/synthetic.h"
#include "test_support.h"

using namespace cahar;
namespace fs = std::filesystem;

namespace {

const fs::path kDataDir = CAHAR_DATA_DIR;

// A criterion returns an empty string on success, otherwise the reason.
struct Criterion {
  std::string name;
  double budget_seconds;
  std::function<std::string()> check;
};

std::string fmt(const char* pattern, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c);
  return buf;
}

// --- 1: fold combinatorics ------------------------------------------------

std::string fold_combinatorics() {
  const DatasetManifest manifest = testing::study_manifest();
  for (Regime regime : {Regime::kCU, Regime::kCAT, Regime::kCATT}) {
    const FoldPlan plan = enumerate_folds(
        partition_subsets(manifest, regime, replica_protocol(42)));
    const std::size_t classes = plan.partitions.size();
    const std::size_t expected_folds = regime == Regime::kCU ? 9 : 27;
    const std::size_t expected_test = regime == Regime::kCU ? 3 : 9;
    if (plan.folds.size() != expected_folds) {
      return std::string(to_string(regime)) + ": " +
             std::to_string(plan.folds.size()) + " folds";
    }
    for (std::size_t c = 0; c < classes; ++c) {
      for (std::size_t s = 0; s < 3; ++s) {
        std::size_t test = 0;
        std::size_t train = 0;
        for (const Fold& f : plan.folds) {
          test += f.test[c] == s;
          for (std::size_t t : f.train[c]) train += t == s;
        }
        if (test != expected_test || train != 2 * expected_test) {
          return std::string(to_string(regime)) + ": subset " +
                 std::to_string(s) + " of " + plan.partitions[c].class_name +
                 " tested " + std::to_string(test) + "x, trained " +
                 std::to_string(train) + "x";
        }
      }
    }
  }
  return {};
}

// --- 2: oracle equivalence ------------------------------------------------

std::string oracle_equivalence() {
  std::mt19937_64 rng(2024);
  const double alphas[] = {0.5, 1.0, 2.0};
  std::size_t trials = 0;
  for (int round = 0; round < 400; ++round) {
    for (double alpha : alphas) {
      const auto c = testing::random_case(rng, 4, 12, alpha);
      const auto expected = testing::brute_force_posteriors(c.model, c.probe);
      const Classification got = classify(c.probe, c.model);
      if (expected.size() != got.posteriors.size()) return "posterior size mismatch";
      for (std::size_t k = 0; k < expected.size(); ++k) {
        if (std::abs(expected[k] - got.posteriors[k]) > 1e-12) {
          return fmt("trial %.0f: posterior differs by %.3g", double(trials),
                     std::abs(expected[k] - got.posteriors[k]));
        }
      }
      if (c.model.classes()[testing::argmax(expected)] != got.predicted_class) {
        return fmt("trial %.0f: argmax differs", double(trials));
      }
      ++trials;
    }
  }
  if (trials < 1000) return "too few trials";
  return {};
}

// --- 3: superclass aggregation ----------------------------------------------

std::string superclass_fixture() {
  const ConfusionMatrix m({"sleeping-bed", "sleeping-futon", "lying-on-floor"},
                          {10, 2, 0, 1, 9, 1, 1, 1, 11});
  const std::size_t sleeping[] = {0, 1};
  const SuperclassScores s = aggregate_superclass(m, sleeping);
  if (s.recall != 22.0 / 24.0) return "recall is not 22/24";
  if (s.precision != 22.0 / 23.0) return "precision is not 22/23";

  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> cell(0, 15);
  std::uniform_int_distribution<std::size_t> size(3, 6);
  std::bernoulli_distribution pick(0.5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = size(rng);
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n; ++i) names.push_back("c" + std::to_string(i));
    std::vector<std::uint64_t> counts(n * n);
    for (auto& c : counts) c = static_cast<std::uint64_t>(cell(rng));
    const ConfusionMatrix r(names, counts);
    std::set<std::size_t> members;
    while (members.empty() || members.size() == n) {
      members.clear();
      for (std::size_t i = 0; i < n; ++i) {
        if (pick(rng)) members.insert(i);
      }
    }
    // Physically merge to a 2x2 table: index 0 is the superclass.
    std::uint64_t t[2][2] = {{0, 0}, {0, 0}};
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t a = 0; a < n; ++a) {
        t[members.count(p) ? 0 : 1][members.count(a) ? 0 : 1] += r.at(p, a);
      }
    }
    const ConfusionMatrix merged({"super", "rest"},
                                 {t[0][0], t[0][1], t[1][0], t[1][1]});
    const MetricsReport mr = compute_metrics(merged, Regime::kCU);
    const std::vector<std::size_t> mv(members.begin(), members.end());
    const SuperclassScores got = aggregate_superclass(r, mv);
    if (got.recall != mr.recall[0] || got.precision != mr.precision[0]) {
      return fmt("trial %.0f disagrees with the merged matrix", trial);
    }
  }
  return {};
}

// --- 4: cultural veto -------------------------------------------------------

std::string cultural_veto() {
  const std::vector<std::string> registry{"european", "japanese"};
  TrainingConfig config;
  config.cultural_injection = CulturalInjection::kOn;
  config.culture_registry = registry;
  const char* vocabulary[] = {"bed", "futon", "floor", "person", "pillow",
                              "blanket", "lying", "indoor", "carpet"};

  std::mt19937_64 rng(4);
  std::bernoulli_distribution coin(0.5);
  auto random_tags = [&](const std::string& id) {
    TagSet s(id);
    for (const char* t : vocabulary) {
      if (coin(rng)) s.add(Tag::semantic(t), "acceptance");
    }
    return s;
  };
  // Many CATT models with the study's cultural layout: beds european, futons
  // japanese, floors split evenly. Semantic evidence is random.
  for (int model_no = 0; model_no < 60; ++model_no) {
    std::vector<TrainingExample> examples;
    for (int i = 0; i < 8; ++i) {
      const std::string n = std::to_string(i);
      examples.push_back({random_tags("bed" + n), "sleeping-bed", "european"});
      examples.push_back({random_tags("futon" + n), "sleeping-futon", "japanese"});
      examples.push_back({random_tags("floor" + n), "lying-on-floor",
                          i % 2 == 0 ? "european" : "japanese"});
    }
    const ActivityModel model = train_model(examples, config);
    for (int probe = 0; probe < 50; ++probe) {
      const TagSet t = random_tags("probe");
      const Classification jp =
          classify(inject_cultural_tag(t, "japanese", registry), model);
      const Classification eu =
          classify(inject_cultural_tag(t, "european", registry), model);
      if (jp.predicted_class == "sleeping-bed" ||
          jp.posteriors[*model.class_index("sleeping-bed")] != 0.0) {
        return "japanese image admitted as sleeping-bed";
      }
      if (eu.predicted_class == "sleeping-futon" ||
          eu.posteriors[*model.class_index("sleeping-futon")] != 0.0) {
        return "european image admitted as sleeping-futon";
      }
    }
  }
  return {};
}

// --- 5-6: regime ordering and confidence delta --------------------------

struct SeedSweep {
  double accuracy[3] = {0, 0, 0};  // CU, CAT, CATT
  double conf_cat = 0;
  double conf_catt = 0;
  std::size_t conf_seeds = 0;
  std::size_t seeds = 0;
};

SeedSweep sweep_replica(const GeneratorSpec& base, std::uint64_t first,
                        std::uint64_t count) {
  SeedSweep out;
  for (std::uint64_t seed = first; seed < first + count; ++seed) {
    GeneratorSpec spec = base;
    spec.seed = seed;
    const GeneratedDataset ds = generate(spec);
    const TagIndex tags = tag_index(ds);
    std::vector<RegimeRun> runs;
    int k = 0;
    for (Regime r : {Regime::kCU, Regime::kCAT, Regime::kCATT}) {
      const FoldPlan plan = enumerate_folds(
          partition_subsets(ds.manifest, r, replica_protocol(seed)));
      ExperimentResult res =
          run_experiment(ds.manifest, r, TrainingConfig{}, plan, tags);
      MetricsReport m = compute_metrics(res.matrix, r, &ds.manifest);
      out.accuracy[k++] += m.overall_accuracy.value_or(0.0);
      runs.push_back({std::move(m), std::move(res.log), seed, "acceptance"});
    }
    const ComparisonReport c = compare_regimes(runs);
    if (c.culture_delta && c.culture_delta->mean_confidence_cat) {
      out.conf_cat += *c.culture_delta->mean_confidence_cat;
      out.conf_catt += *c.culture_delta->mean_confidence_catt;
      ++out.conf_seeds;
    }
    ++out.seeds;
  }
  for (double& a : out.accuracy) a /= static_cast<double>(out.seeds);
  if (out.conf_seeds) {
    out.conf_cat /= static_cast<double>(out.conf_seeds);
    out.conf_catt /= static_cast<double>(out.conf_seeds);
  }
  return out;
}

const SeedSweep& replica_sweep() {
  static const SeedSweep sweep =
      sweep_replica(load_generator_spec(kDataDir / "replica_spec.json"), 1, 25);
  return sweep;
}

std::string regime_ordering() {
  const SeedSweep& s = replica_sweep();
  const double cu = s.accuracy[0], cat = s.accuracy[1], catt = s.accuracy[2];
  std::cout << "  mean accuracy over 25 seeds: "
            << fmt("CU %.4f  CAT %.4f  CATT %.4f", cu, cat, catt) << "\n";
  if (!(catt >= cat && cat >= cu)) return "ordering CATT >= CAT >= CU violated";
  if (catt - cat < 0.05) return fmt("CATT - CAT = %.4f < 0.05", catt - cat);
  return {};
}

std::string confidence_delta() {
  const SeedSweep& s = replica_sweep();
  std::cout << "  both-wrong mean confidence: "
            << fmt("CAT %.4f  CATT %.4f  (%.0f seeds)", s.conf_cat, s.conf_catt,
                   double(s.conf_seeds))
            << "\n";
  if (s.conf_seeds == 0) return "no seed had images misclassified by both";
  if (!(s.conf_catt < s.conf_cat)) return "CATT is not less confident";
  return {};
}

// --- 7: target band -------------------------------------------------------

std::string target_band() {
  const GeneratorSpec spec = load_generator_spec(kDataDir / "target_band_spec.json");
  const GeneratedDataset ds = generate(spec);
  const TagIndex tags = tag_index(ds);
  const FoldPlan plan = enumerate_folds(
      partition_subsets(ds.manifest, Regime::kCATT, replica_protocol(spec.seed)));
  const ExperimentResult res =
      run_experiment(ds.manifest, Regime::kCATT, TrainingConfig{}, plan, tags);
  const MetricsReport m = compute_metrics(res.matrix, Regime::kCATT, &ds.manifest);
  const double p = m.macro_precision.value_or(0.0);
  const double r = m.macro_recall.value_or(0.0);
  std::cout << "  CATT overall precision " << fmt("%.4f", p) << ", recall "
            << fmt("%.4f", r) << " (seed " << spec.seed << ")\n";
  if (p < 0.84) return fmt("precision %.4f < 0.84", p);
  if (r < 0.91) return fmt("recall %.4f < 0.91", r);
  return {};
}

// --- 8: determinism ---------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string end_to_end_determinism() {
  const fs::path dir = testing::scratch_dir("acceptance");
  std::ostringstream out, err;
  auto run = [&](std::vector<std::string> args) {
    const int code = run_cli(args, out, err);
    if (code != 0) {
      throw std::runtime_error("cahar exited " + std::to_string(code) + ": " +
                               err.str());
    }
  };
  run({"--out-dir", (dir / "data").string(), "synth", "--spec",
       (kDataDir / "replica_spec.json").string()});
  const std::string manifest = (dir / "data" / "manifest.json").string();
  for (const char* run_dir : {"run1", "run2"}) {
    run({"--out-dir", (dir / run_dir).string(), "--seed", "42", "evaluate",
         "--manifest", manifest, "--regime", "CU", "--regime", "CAT",
         "--regime", "CATT"});
  }
  std::string verdict;
  for (const char* file : {"report_CU.json", "report_CAT.json",
                           "report_CATT.json", "comparison.json"}) {
    const std::string a = slurp(dir / "run1" / file);
    const std::string b = slurp(dir / "run2" / file);
    if (a.empty()) {
      verdict = std::string(file) + " missing";
      break;
    }
    if (a != b) {
      verdict = std::string(file) + " differs between runs";
      break;
    }
  }
  fs::remove_all(dir);
  return verdict;
}

// --- 9: offline -------------------------------------------------------------

std::string offline() {
  const std::uint64_t n = network_request_count();
  if (n != 0) return std::to_string(n) + " network requests";
  return {};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"1 fold combinatorics", 1, fold_combinatorics},
      {"2 oracle equivalence", 10, oracle_equivalence},
      {"3 superclass aggregation", 1, superclass_fixture},
      {"4 cultural veto", 1, cultural_veto},
      {"5 regime ordering", 60, regime_ordering},
      {"6 confidence delta", 60, confidence_delta},
      {"7 target band", 30, target_band},
      {"8 end-to-end determinism", 30, end_to_end_determinism},
      {"9 offline completeness", 1, offline},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    std::string reason;
    try {
      reason = c.check();
    } catch (const std::exception& e) {
      reason = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (reason.empty() && secs > c.budget_seconds) {
      reason = fmt("took %.2f s, budget %.0f s", secs, c.budget_seconds);
    }
    const bool ok = reason.empty();
    failures += !ok;
    std::cout << (ok ? "PASS " : "FAIL ") << c.name << fmt(" (%.3f s)", secs)
              << (ok ? "" : ": " + reason) << std::endl;
  }
  std::cout << (failures ? "FAILED " : "ALL PASSED ") << failures << " of "
            << criteria.size() << " criteria failed\n";
  return failures ? 1 : 0;
}
