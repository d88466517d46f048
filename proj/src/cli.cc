#include "cahar/cli.h"

#include <fstream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "cahar/compare.h"
#include "cahar/experiment.h"
#include "cahar/extract.h"
#include "cahar/manifest.h"
#include "cahar/metrics.h"
#include "cahar/model_json.h"
#include "cahar/report.h"
#include "cahar/response_cache.h"
#include "cahar/synthetic.h"
#include "json_util.h"

namespace cahar {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
      return kExitConfig;
    case ErrorKind::kData:
      return kExitData;
    case ErrorKind::kProvider:
      return kExitProvider;
    case ErrorKind::kEvaluation:
      return kExitEvaluation;
  }
  return kExitUnexpected;
}

namespace {

constexpr const char* kVersion = "0.1.0";

ProviderDescriptor default_fixture_provider() {
  ProviderDescriptor d;
  d.name = "fixture";
  d.kind = ProviderKind::kFixture;
  return d;
}

fs::path resolve(const fs::path& base, const fs::path& p) {
  if (p.is_absolute() || base.empty()) return p;
  return base / p;
}

std::string read_file(const fs::path& path, ErrorKind kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(kind, "cannot read '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
}

// Options shared by every subcommand.
struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

struct Session {
  CliConfig config;
  std::uint64_t seed = kDefaultSeed;
  fs::path out_dir;
  ordered_json metadata;

  void record_input(const std::string& role, const fs::path& path) {
    metadata["inputs"].push_back(
        {{"role", role},
         {"path", path.generic_string()},
         {"sha256", sha256_hex(read_file(path, ErrorKind::kData))}});
  }
};

ordered_json config_echo(const Session& s) {
  ordered_json j;
  ordered_json providers = ordered_json::array();
  for (const auto& p : s.config.providers) providers.push_back(to_json(p));
  j["providers"] = std::move(providers);
  j["cache_dir"] = s.config.cache_dir ? ordered_json(s.config.cache_dir->generic_string())
                                      : ordered_json(nullptr);
  j["out_dir"] = s.out_dir.generic_string();
  j["training"] = {{"smoothing_alpha", s.config.training.smoothing_alpha},
                   {"prior_mode", to_string(s.config.training.prior_mode)}};
  j["evaluation"] = {
      {"subsets_per_class", s.config.evaluation.subsets_per_class},
      {"images_per_class", s.config.evaluation.images_per_class
                               ? ordered_json(*s.config.evaluation.images_per_class)
                               : ordered_json(nullptr)},
      {"strict_balance", s.config.evaluation.strict_balance}};
  return j;
}

Session open_session(const GlobalOptions& g, const std::string& command,
                     const std::vector<std::string>& args) {
  Session s;
  if (!g.config_path.empty()) {
    s.config = load_cli_config(g.config_path);
  }
  if (s.config.providers.empty()) {
    s.config.providers.push_back(default_fixture_provider());
  }
  s.seed = g.seed ? *g.seed : s.config.seed.value_or(kDefaultSeed);
  s.config.evaluation.seed = s.seed;
  if (!g.out_dir.empty()) {
    s.out_dir = g.out_dir;
  } else {
    s.out_dir = s.config.out_dir.value_or("cahar-out");
  }
  std::error_code ec;
  fs::create_directories(s.out_dir, ec);
  if (ec) {
    throw ConfigError("cannot create out-dir '" + s.out_dir.string() + "'");
  }
  s.metadata["tool"] = "cahar";
  s.metadata["version"] = kVersion;
  s.metadata["command"] = command;
  s.metadata["arguments"] = args;
  s.metadata["seed"] = s.seed;
  s.metadata["config"] = config_echo(s);
  s.metadata["inputs"] = ordered_json::array();
  if (!g.config_path.empty()) s.record_input("config", g.config_path);
  return s;
}

void finish_session(const Session& s) {
  write_file(s.out_dir / ("run_metadata_" +
                          s.metadata["command"].get<std::string>() + ".json"),
             s.metadata.dump(2) + "\n");
}

std::vector<std::unique_ptr<TagProvider>> build_providers(
    const Session& s, const std::vector<std::string>& selection) {
  std::vector<std::unique_ptr<TagProvider>> out;
  for (const auto& d : s.config.providers) {
    if (!selection.empty() &&
        std::find(selection.begin(), selection.end(), d.name) == selection.end()) {
      continue;
    }
    out.push_back(make_provider(d));
  }
  for (const auto& name : selection) {
    bool known = false;
    for (const auto& d : s.config.providers) known = known || d.name == name;
    if (!known) throw ConfigError("unknown provider '" + name + "'");
  }
  if (out.empty()) throw ConfigError("no providers selected");
  return out;
}

struct ProviderStats {
  std::size_t hits = 0;
  std::size_t fetched = 0;
  std::size_t failed = 0;
};

struct Extraction {
  TagIndex tags;
  std::map<std::string, ProviderStats> stats;
  std::vector<std::string> warnings;
};

Extraction extract_manifest(const DatasetManifest& manifest, const Session& s,
                            const std::vector<std::string>& selection) {
  const auto providers = build_providers(s, selection);
  std::vector<const TagProvider*> raw;
  for (const auto& p : providers) raw.push_back(p.get());
  const fs::path cache_dir = s.config.cache_dir.value_or(s.out_dir / "cache");
  const ResponseCache cache(cache_dir);

  Extraction out;
  for (const auto& p : providers) out.stats[p->name()];
  for (const auto& r : manifest.records) {
    const ImageRef ref{r.image_id, manifest.resolve(r)};
    ExtractResult result = extract_tags(ref, raw, &cache);
    for (const auto& o : result.outcomes) {
      auto& st = out.stats[o.provider];
      switch (o.status) {
        case FetchStatus::kCacheHit:
          ++st.hits;
          break;
        case FetchStatus::kFetched:
          ++st.fetched;
          break;
        case FetchStatus::kFailed:
          ++st.failed;
          out.warnings.push_back(o.message);
          break;
      }
    }
    out.tags.emplace(r.image_id, std::move(result.tags));
  }
  return out;
}

TagIndex load_tags(const DatasetManifest& manifest, Session& s,
                   const std::string& tags_path, std::ostream& err) {
  if (!tags_path.empty()) {
    s.record_input("tags", tags_path);
    return parse_tag_index(read_file(tags_path, ErrorKind::kData));
  }
  Extraction ex = extract_manifest(manifest, s, {});
  for (const auto& w : ex.warnings) err << "warning: " << w << "\n";
  return std::move(ex.tags);
}

std::string manifest_digest(const DatasetManifest& m) {
  return sha256_hex(serialize_manifest(m));
}

// --- subcommands ----------------------------------------------------------

struct ExtractArgs {
  std::string manifest;
  std::vector<std::string> providers;
  std::string cache_dir;
};

int cmd_extract(Session& s, const ExtractArgs& a, std::ostream& out,
                std::ostream& err) {
  if (!a.cache_dir.empty()) s.config.cache_dir = a.cache_dir;
  s.record_input("manifest", a.manifest);
  const auto manifest = load_manifest_file(a.manifest);
  const std::uint64_t before = network_request_count();
  Extraction ex = extract_manifest(manifest, s, a.providers);
  const std::uint64_t requests = network_request_count() - before;

  write_file(s.out_dir / "tagsets.json", serialize_tag_index(ex.tags));
  ordered_json summary;
  summary["tag_sets"] = ex.tags.size();
  summary["network_requests"] = requests;
  ordered_json per = ordered_json::object();
  std::size_t hits = 0;
  for (const auto& [name, st] : ex.stats) {
    per[name] = {{"cache_hits", st.hits},
                 {"fetched", st.fetched},
                 {"failed", st.failed}};
    hits += st.hits;
  }
  summary["providers"] = std::move(per);
  write_file(s.out_dir / "extract_summary.json", summary.dump(2) + "\n");

  for (const auto& w : ex.warnings) err << "warning: " << w << "\n";
  out << ex.tags.size() << " tag sets, " << hits << " cache hits, " << requests
      << " network requests\n";
  for (const auto& [name, st] : ex.stats) {
    out << "  " << name << ": " << st.hits << " hit, " << st.fetched
        << " miss, " << st.failed << " fail\n";
  }
  s.metadata["outputs"] = {"tagsets.json", "extract_summary.json"};
  return kExitOk;
}

struct TrainArgs {
  std::string manifest;
  std::string regime;
  std::string tags;
  std::string model_out;
};

int cmd_train(Session& s, const TrainArgs& a, std::ostream& out,
              std::ostream& err) {
  const Regime regime = regime_from_string(a.regime);
  s.record_input("manifest", a.manifest);
  const auto manifest = load_manifest_file(a.manifest);
  const TagIndex tags = load_tags(manifest, s, a.tags, err);
  const TrainingConfig config =
      regime_training_config(manifest, regime, s.config.training);

  std::vector<TrainingExample> examples;
  for (const auto& p : project_classes(manifest, regime)) {
    auto it = tags.find(p.image_id);
    if (it == tags.end()) {
      throw DataError("no tag set available for image '" + p.image_id + "'");
    }
    examples.push_back({it->second, p.effective_class,
                        regime == Regime::kCATT ? p.cultural_label
                                                : std::optional<std::string>{}});
  }
  const ActivityModel model = train_model(examples, config);
  const fs::path path = a.model_out.empty()
                            ? s.out_dir / ("model_" + std::string(to_string(regime)) + ".json")
                            : fs::path(a.model_out);
  write_file(path, serialize_model(model));
  out << "trained " << to_string(regime) << " model: " << model.num_classes()
      << " classes, " << model.vocabulary().size() << " vocabulary entries -> "
      << path.string() << "\n";
  s.metadata["outputs"] = {path.generic_string()};
  return kExitOk;
}

struct ClassifyArgs {
  std::string model;
  std::string tags_fixture;
  std::string image;
  std::string profile;
};

int cmd_classify(Session& s, const ClassifyArgs& a, std::ostream& out,
                 std::ostream& err) {
  if (a.tags_fixture.empty() == a.image.empty()) {
    throw ConfigError("give exactly one of --tags-fixture or --image");
  }
  s.record_input("model", a.model);
  const ActivityModel model =
      deserialize_model(read_file(a.model, ErrorKind::kData));
  const bool injects = model.config().injects();
  if (!a.profile.empty() && !injects) {
    throw ConfigError("model was not trained with cultural injection");
  }
  if (a.profile.empty() && injects) {
    throw ConfigError("cultural profile required");
  }

  TagSet tags;
  if (!a.tags_fixture.empty()) {
    s.record_input("tags_fixture", a.tags_fixture);
    const auto raw = parse_fixture(read_file(a.tags_fixture, ErrorKind::kData),
                                   "fixture");
    const std::string id = fs::path(a.tags_fixture).stem().string();
    tags = tagset_from_responses(id, std::vector<TagResponse>{
                                         {"fixture", id, raw, ""}});
  } else {
    s.record_input("image", a.image);
    const auto providers = build_providers(s, {});
    std::vector<const TagProvider*> raw;
    for (const auto& p : providers) raw.push_back(p.get());
    const ResponseCache cache(s.config.cache_dir.value_or(s.out_dir / "cache"));
    const ImageRef ref{fs::path(a.image).stem().string(), a.image};
    ExtractResult result = extract_tags(ref, raw, &cache);
    for (const auto& o : result.outcomes) {
      if (o.status == FetchStatus::kFailed) err << "warning: " << o.message << "\n";
    }
    tags = std::move(result.tags);
  }
  if (!a.profile.empty()) {
    tags = inject_cultural_tag(tags, a.profile, model.config().culture_registry);
  }

  const Classification c = classify(tags, model);
  ordered_json j;
  j["image_id"] = tags.image_id();
  j["predicted_class"] = c.predicted_class;
  j["confidence"] = c.confidence;
  ordered_json post = ordered_json::object();
  for (std::size_t i = 0; i < model.num_classes(); ++i) {
    post[model.classes()[i]] = c.posteriors[i];
  }
  j["posteriors"] = std::move(post);
  out << j.dump(2) << "\n";
  return kExitOk;
}

struct EvaluateArgs {
  std::string manifest;
  std::vector<std::string> regimes;
  std::string tags;
  std::vector<std::string> regime_seeds;
};

int cmd_evaluate(Session& s, const EvaluateArgs& a, std::ostream& out,
                 std::ostream& err) {
  std::vector<Regime> regimes;
  if (a.regimes.empty()) {
    regimes = {Regime::kCU, Regime::kCAT, Regime::kCATT};
  } else {
    for (const auto& r : a.regimes) regimes.push_back(regime_from_string(r));
  }
  std::map<Regime, std::uint64_t> seeds;
  for (auto r : regimes) seeds[r] = s.seed;
  for (const auto& spec : a.regime_seeds) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("--regime-seed expects REGIME=SEED, got '" + spec + "'");
    }
    const Regime r = regime_from_string(spec.substr(0, eq));
    try {
      seeds[r] = std::stoull(spec.substr(eq + 1));
    } catch (const std::exception&) {
      throw ConfigError("--regime-seed: invalid seed in '" + spec + "'");
    }
  }

  s.record_input("manifest", a.manifest);
  const auto manifest = load_manifest_file(a.manifest);
  const TagIndex tags = load_tags(manifest, s, a.tags, err);
  const std::string digest = manifest_digest(manifest);

  std::vector<RegimeRun> runs;
  ordered_json outputs = ordered_json::array();
  for (auto regime : regimes) {
    PartitionOptions options = s.config.evaluation;
    options.seed = seeds[regime];
    const FoldPlan plan =
        enumerate_folds(partition_subsets(manifest, regime, options));
    const ExperimentResult result =
        run_experiment(manifest, regime, s.config.training, plan, tags);
    const MetricsReport metrics =
        compute_metrics(result.matrix, regime, &manifest);
    const RunContext context{options.seed, digest, options};

    const std::string name(to_string(regime));
    write_file(s.out_dir / ("report_" + name + ".json"),
               regime_report(result, metrics, context).dump(2) + "\n");
    write_file(s.out_dir / ("log_" + name + ".csv"), log_csv(result.log));
    const std::string table = render_matrix(result.matrix);
    write_file(s.out_dir / ("matrix_" + name + ".txt"), table);
    outputs.push_back("report_" + name + ".json");
    outputs.push_back("log_" + name + ".csv");
    outputs.push_back("matrix_" + name + ".txt");

    out << name << ": " << result.num_folds << " folds, "
        << result.matrix.total() << " test classifications\n"
        << table << "\n";
    runs.push_back({metrics, result.log, options.seed, digest});
  }

  if (runs.size() >= 2) {
    const ComparisonReport comparison = compare_regimes(runs);
    write_file(s.out_dir / "comparison.json", to_json(comparison).dump(2) + "\n");
    outputs.push_back("comparison.json");
    if (comparison.culture_delta) {
      const auto& d = *comparison.culture_delta;
      out << "CATT corrects " << d.corrected << " and regresses " << d.regressed
          << " of " << d.paired_events << " CAT classifications\n";
    }
  }
  s.metadata["outputs"] = std::move(outputs);
  return kExitOk;
}

struct SynthArgs {
  std::string spec;
};

int cmd_synth(Session& s, const SynthArgs& a, const GlobalOptions& g,
              std::ostream& out) {
  GeneratorSpec spec = load_generator_spec(a.spec);
  s.record_input("spec", a.spec);
  if (g.seed) spec.seed = *g.seed;
  s.metadata["seed"] = spec.seed;
  const GeneratedDataset dataset = generate(spec);
  write_dataset(dataset, s.out_dir);
  out << "generated " << dataset.manifest.records.size() << " images in "
      << dataset.manifest.class_tree.size() << " top-level classes -> "
      << (s.out_dir / "manifest.json").string() << "\n";
  s.metadata["outputs"] = {"manifest.json", "fixtures/"};
  return kExitOk;
}

}  // namespace

CliConfig parse_cli_config(std::string_view document, const fs::path& base_dir) {
  try {
    const auto j = json_util::parse(document, "config");
    json_util::require_keys(j, "config", {},
                            {"providers", "paths", "training", "evaluation",
                             "seed"});
    CliConfig c;
    if (j.contains("providers")) {
      if (!j["providers"].is_array()) {
        throw ConfigError("config.providers must be an array");
      }
      for (const auto& pj : j["providers"]) {
        ProviderDescriptor d = provider_descriptor_from_json(pj);
        if (d.fixture_dir) d.fixture_dir = resolve(base_dir, *d.fixture_dir);
        for (const auto& other : c.providers) {
          if (other.name == d.name) {
            throw ConfigError("config.providers: duplicate name '" + d.name + "'");
          }
        }
        c.providers.push_back(std::move(d));
      }
    }
    if (j.contains("paths")) {
      const auto& p = j["paths"];
      json_util::require_keys(p, "config.paths", {}, {"cache_dir", "out_dir"});
      if (auto v = json_util::get_optional<std::string>(p, "cache_dir", "config.paths")) {
        c.cache_dir = resolve(base_dir, *v);
      }
      if (auto v = json_util::get_optional<std::string>(p, "out_dir", "config.paths")) {
        c.out_dir = resolve(base_dir, *v);
      }
    }
    if (j.contains("training")) {
      const auto& t = j["training"];
      json_util::require_keys(t, "config.training", {},
                              {"smoothing_alpha", "prior_mode"});
      if (auto v = json_util::get_optional<double>(t, "smoothing_alpha",
                                                   "config.training")) {
        c.training.smoothing_alpha = *v;
      }
      if (auto v = json_util::get_optional<std::string>(t, "prior_mode",
                                                        "config.training")) {
        c.training.prior_mode = prior_mode_from_string(*v);
      }
      c.training.validate();
    }
    if (j.contains("evaluation")) {
      const auto& e = j["evaluation"];
      json_util::require_keys(e, "config.evaluation", {},
                              {"subsets_per_class", "images_per_class",
                               "strict_balance"});
      if (auto v = json_util::get_optional<std::size_t>(e, "subsets_per_class",
                                                        "config.evaluation")) {
        if (*v == 0) throw ConfigError("config.evaluation.subsets_per_class must be >= 1");
        c.evaluation.subsets_per_class = *v;
      }
      if (e.contains("images_per_class")) {
        c.evaluation.images_per_class = json_util::get_optional<std::size_t>(
            e, "images_per_class", "config.evaluation");
      }
      if (auto v = json_util::get_optional<bool>(e, "strict_balance",
                                                 "config.evaluation")) {
        c.evaluation.strict_balance = *v;
      }
    }
    c.seed = json_util::get_optional<std::uint64_t>(j, "seed", "config");
    return c;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kConfig) throw;
    throw ConfigError(e.what());
  }
}

CliConfig load_cli_config(const fs::path& path) {
  return parse_cli_config(read_file(path, ErrorKind::kConfig),
                          path.parent_path());
}

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Culture-aware activity classification over image tags"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--config", g.config_path, "JSON configuration file");
  app.add_option("--seed", g.seed, "Random seed (partitioning, synthesis)");
  app.add_option("--out-dir", g.out_dir, "Directory for output files");
  app.set_version_flag("--version", kVersion);

  ExtractArgs ea;
  auto* extract = app.add_subcommand("extract", "Tag every manifest image");
  extract->add_option("--manifest", ea.manifest)->required();
  extract->add_option("--provider", ea.providers, "Restrict to these providers");
  extract->add_option("--cache-dir", ea.cache_dir);

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train a model on a manifest");
  train->add_option("--manifest", ta.manifest)->required();
  train->add_option("--regime", ta.regime, "CU, CAT or CATT")->required();
  train->add_option("--tags", ta.tags, "Tag index written by extract");
  train->add_option("--model-out", ta.model_out);

  ClassifyArgs ca;
  auto* cls = app.add_subcommand("classify", "Classify one image");
  cls->add_option("--model", ca.model)->required();
  cls->add_option("--tags-fixture", ca.tags_fixture);
  cls->add_option("--image", ca.image);
  cls->add_option("--profile", ca.profile, "Cultural profile of the person");

  EvaluateArgs va;
  auto* evaluate = app.add_subcommand("evaluate", "Cross-validate regimes");
  evaluate->add_option("--manifest", va.manifest)->required();
  evaluate->add_option("--regime", va.regimes, "CU, CAT, CATT (default: all)");
  evaluate->add_option("--tags", va.tags, "Tag index written by extract");
  evaluate->add_option("--regime-seed", va.regime_seeds,
                       "Per-regime seed override, REGIME=SEED");

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth->add_option("--spec", sa.spec)->required();

  std::vector<std::string> argv_storage{"cahar"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    auto* sub = app.get_subcommands().front();
    Session s = open_session(g, sub->get_name(), args);
    int code = kExitOk;
    if (sub == extract) code = cmd_extract(s, ea, out, err);
    if (sub == train) code = cmd_train(s, ta, out, err);
    if (sub == cls) code = cmd_classify(s, ca, out, err);
    if (sub == evaluate) code = cmd_evaluate(s, va, out, err);
    if (sub == synth) code = cmd_synth(s, sa, g, out);
    finish_session(s);
    return code;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUnexpected;
  }
}

}  // namespace cahar
