#include "spoofkit/commands.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "spoofkit/error.hpp"
#include "spoofkit/io.hpp"
#include "spoofkit/model.hpp"
#include "spoofkit/train.hpp"

namespace spoofkit {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

std::string hash_json(const json& j) { return hex64(fnv1a64(j.dump())); }

// Collects the files a command writes, fingerprints its inputs and emits the
// provenance record. Wall-clock times go to the timestamps sidecar only.
class Artifacts {
 public:
  Artifacts(fs::path dir, std::string command, std::string sidecar_prefix = {})
      : dir_(std::move(dir)), command_(std::move(command)), prefix_(std::move(sidecar_prefix)) {
    fs::create_directories(dir_);
    stamp("start " + command_);
  }

  void input(const std::string& role, const fs::path& path) {
    inputs_[role] = {{"file", path.filename().string()}, {"fnv1a64", hex64(fnv1a64(read_file(path)))}};
  }
  void input_hash(const std::string& role, const std::string& hash) { inputs_[role] = {{"fnv1a64", hash}}; }

  void write(const std::string& name, std::string_view contents) {
    write_file(dir_ / name, contents);
    outputs_.push_back(name);
  }
  void record(const std::string& name) { outputs_.push_back(name); }

  void stamp(const std::string& event) const {
    std::ofstream log(dir_ / (prefix_ + "timestamps.log"), std::ios::app);
    log << utc_now() << ' ' << event << '\n';
  }

  void finish(const std::string& config_hash, std::uint64_t seed, const ordered_json& extra = {}) {
    ordered_json p;
    p["command"] = command_;
    p["config_hash"] = config_hash;
    p["seed"] = seed;
    p["toolkit_version"] = kToolkitVersion;
    p["inputs"] = inputs_;
    p["outputs"] = outputs_;
    if (!extra.is_null())
      for (const auto& [key, value] : extra.items()) p[key] = value;
    write_file(dir_ / (prefix_ + "provenance.json"), p.dump(2) + "\n");
    stamp("finish " + command_);
  }

  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::string command_;
  std::string prefix_;
  ordered_json inputs_ = ordered_json::object();
  std::vector<std::string> outputs_;
};

ordered_json provenance_block(const std::string& config_hash, std::uint64_t seed) {
  return {{"config_hash", config_hash}, {"seed", seed}, {"toolkit_version", kToolkitVersion}};
}

ordered_json optional_json(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(); }

ordered_json scoring_json(const ScoringConfig& s) {
  return {{"mode", to_string(s.mode)},
          {"aggregation", to_string(s.aggregation)},
          {"win_s", s.windows.win_s},
          {"step_s", s.windows.step_s}};
}

ScoringConfig scoring_from_meta(const json& meta) {
  ScoringConfig s;
  if (!meta.contains("scoring")) return s;
  const auto& j = meta["scoring"];
  s.mode = parse_scoring_mode(j.value("mode", "windowed"));
  s.aggregation = parse_aggregation(j.value("aggregation", "mean"));
  s.windows.win_s = j.value("win_s", s.windows.win_s);
  s.windows.step_s = j.value("step_s", s.windows.step_s);
  return s;
}

ProviderConfig resolved_provider(const ExperimentConfig& config) {
  ProviderConfig pc = config.provider;
  if (!pc.store.empty()) pc.store = resolve_path(config, pc.store.string());
  return pc;
}

Manifest filter_subset(const Manifest& m, Subset subset) {
  Manifest out{m.name, {}, m.base_dir};
  for (const auto& e : m.entries)
    if (e.subset == subset) out.entries.push_back(e);
  return out;
}

struct TrainingManifests {
  Manifest train;
  Manifest val;
  std::vector<std::pair<std::string, fs::path>> files;
};

TrainingManifests training_manifests(const ExperimentConfig& config) {
  TrainingManifests out;
  bool have_train = false, have_val = false;
  if (!config.manifests.all.empty()) {
    const auto path = resolve_path(config, config.manifests.all);
    auto split = split_by_subset(load_manifest(path));
    out.train = std::move(split.train);
    out.val = std::move(split.val);
    out.files.emplace_back("manifest_all", path);
    have_train = have_val = true;
  }
  if (!config.manifests.train.empty()) {
    const auto path = resolve_path(config, config.manifests.train);
    out.train = load_manifest(path);
    out.files.emplace_back("manifest_train", path);
    have_train = true;
  }
  if (!config.manifests.val.empty()) {
    const auto path = resolve_path(config, config.manifests.val);
    out.val = load_manifest(path);
    out.files.emplace_back("manifest_val", path);
    have_val = true;
  }
  if (!have_train || !have_val)
    throw ValidationError("config must name train and val manifests (manifests.train/val or manifests.all)");
  return out;
}

std::string epoch_file(int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "epoch_%04d.ckpt", epoch);
  return buf;
}

ordered_json summary_json(std::span<const ScoreRecord> scores, double threshold) {
  const auto report = summarize(scores, threshold);
  return {{"eer", report.eer ? ordered_json(report.eer->eer) : ordered_json()},
          {"auc", optional_json(report.auc)},
          {"accuracy", report.at_threshold.accuracy},
          {"f1", report.at_threshold.f1}};
}

}  // namespace

Manifest cmd_sample(const SampleArgs& args, std::ostream& log) {
  const Manifest input = load_manifest(args.manifest);
  Manifest out = args.fake_fraction ? sample_proportioned(input, args.n, *args.fake_fraction, args.seed)
                                    : sample_fixed(input, args.n, args.seed);
  const auto target = fs::absolute(args.out);
  Artifacts artifacts(target.parent_path(), "sample", target.filename().string() + ".");
  artifacts.input("manifest", args.manifest);
  save_manifest(out, target);
  artifacts.record(target.filename().string());

  json settings = {{"command", "sample"}, {"n", args.n}, {"seed", args.seed}};
  settings["fake_fraction"] = args.fake_fraction ? json(*args.fake_fraction) : json();
  artifacts.finish(hash_json(settings), args.seed);
  log << "sampled " << out.size() << " of " << input.size() << " entries (" << out.count(Label::fake)
      << " fake, " << out.count(Label::real) << " real)\n";
  return out;
}

TrainResult cmd_train(const TrainArgs& args, std::ostream& log) {
  ExperimentConfig config = load_config(args.config);
  if (args.seed) config.seed = *args.seed;
  if (args.epochs) config.optimizer.epochs = *args.epochs;
  fs::path run_dir;
  if (args.out) run_dir = *args.out;
  else if (!config.output_dir.empty()) run_dir = resolve_path(config, config.output_dir);
  else throw ValidationError("no output directory: pass --out or set output_dir in the config");

  const std::string hash = config_hash(config);
  const auto manifests = training_manifests(config);
  const auto provider_config = resolved_provider(config);
  const auto provider = embedding_provider_load(provider_config);
  if (manifests.train.empty()) throw ValidationError("training manifest is empty");

  Eigen::Index dim = 0;
  if (auto d = provider->dim()) dim = *d;
  else dim = provider->embed_entry(manifests.train, manifests.train.entries.front()).dims();

  TrainConfig train_config;
  train_config.loss = config.loss;
  train_config.optimizer = config.optimizer;
  train_config.augmentation = build_policy(config);
  train_config.crop_s = config.crop_s;
  train_config.seed = config.seed;
  if (!config.teacher.empty()) train_config.teacher = load_checkpoint(resolve_path(config, config.teacher));

  ModelState state = init_state(config.seed, dim, config.model.adapter, config.model.leaky_slope);
  state.meta = {{"config_hash", hash},
                {"toolkit_version", kToolkitVersion},
                {"name", config.name},
                {"provider", to_json(provider_config)},
                {"scoring", scoring_json(config.scoring)}};

  Artifacts artifacts(run_dir, "train");
  for (const auto& [role, path] : manifests.files) artifacts.input(role, path);
  if (!config.teacher.empty()) artifacts.input("teacher", resolve_path(config, config.teacher));
  artifacts.write("config.json", to_json(config, false).dump(2) + "\n");

  const auto log_path = run_dir / "run_log.jsonl";
  std::ofstream run_log(log_path, std::ios::trunc);
  if (!run_log) throw ValidationError("cannot write " + log_path.string());
  run_log << ordered_json{{"kind", "run"},
                         {"name", config.name},
                         {"config_hash", hash},
                         {"seed", config.seed},
                         {"toolkit_version", kToolkitVersion},
                         {"n_train", manifests.train.size()},
                         {"n_val", manifests.val.size()},
                         {"input_dim", dim}}
                 .dump()
          << '\n';
  artifacts.record("run_log.jsonl");

  TrainResult result;
  result.run_dir = run_dir;
  result.config_hash = hash;
  const int epochs = config.optimizer.epochs;
  auto on_epoch = [&](const EpochRecord& r, const CheckpointRecord* checkpoint) {
    ordered_json line{{"kind", "epoch"},
                      {"epoch", r.epoch},
                      {"train_loss", optional_json(r.train_loss)},
                      {"val_loss", r.val_loss},
                      {"lr_backbone", r.lr_backbone},
                      {"lr_head", r.lr_head},
                      {"step", r.step}};
    if (checkpoint) {
      ModelState saved = checkpoint->state;
      saved.meta["val_loss"] = checkpoint->val_loss;
      const auto name = "checkpoints/" + epoch_file(checkpoint->epoch);
      save_checkpoint(run_dir / name, saved);
      artifacts.record(name);
      line["checkpoint"] = name;
    }
    run_log << line.dump() << '\n' << std::flush;
    artifacts.stamp("epoch " + std::to_string(r.epoch));
    result.val_losses.push_back(r.val_loss);
    log << "epoch " << r.epoch << "/" << epochs << " val_loss " << format_g(r.val_loss, 6);
    if (r.train_loss) log << " train_loss " << format_g(*r.train_loss, 6);
    log << '\n';
  };

  try {
    train(manifests.train, manifests.val, *provider, std::move(state), train_config, on_epoch);
  } catch (const NumericError& e) {
    run_log << ordered_json{{"kind", "error"}, {"message", e.what()}}.dump() << '\n';
    artifacts.stamp(std::string("failed: ") + e.what());
    throw;
  }
  artifacts.finish(hash, config.seed);
  return result;
}

std::vector<CheckpointRecord> load_run_checkpoints(const fs::path& run_dir) {
  const auto dir = run_dir / "checkpoints";
  if (!fs::is_directory(dir)) throw ValidationError("no checkpoints directory in " + run_dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().extension() == ".ckpt") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<CheckpointRecord> out;
  for (const auto& f : files) {
    CheckpointRecord r;
    r.state = load_checkpoint(f);
    if (!r.state.meta.contains("val_loss") || !r.state.meta.contains("epoch"))
      throw ValidationError(f.string() + ": checkpoint lacks epoch/val_loss metadata");
    r.epoch = r.state.meta["epoch"].get<int>();
    r.val_loss = r.state.meta["val_loss"].get<double>();
    out.push_back(std::move(r));
  }
  if (out.empty()) throw ValidationError("no checkpoints found in " + dir.string());
  return out;
}

EvalReport cmd_eval(const EvalArgs& args, std::ostream& log) {
  if (args.checkpoint.has_value() == args.run.has_value())
    throw ValidationError("pass exactly one of --checkpoint or --run");
  if (args.swa && !args.run) throw ValidationError("--swa needs --run");

  ModelState state;
  ordered_json selection;
  std::vector<std::pair<std::string, fs::path>> model_files;
  if (args.checkpoint) {
    if (!fs::exists(*args.checkpoint)) throw ValidationError("checkpoint not found: " + args.checkpoint->string());
    state = load_checkpoint(*args.checkpoint);
    selection = {{"strategy", "checkpoint"}};
    model_files.emplace_back("checkpoint", *args.checkpoint);
  } else {
    const auto checkpoints = load_run_checkpoints(*args.run);
    const auto strategy = args.swa ? SelectionStrategy::swa(*args.swa) : SelectionStrategy::best_val();
    state = select_checkpoint(checkpoints, strategy);
    const auto best = best_checkpoint_index(checkpoints);
    selection = {{"strategy", args.swa ? "swa" : "best_val"},
                 {"k", args.swa ? *args.swa : 1},
                 {"best_epoch", checkpoints[best].epoch}};
    for (const auto& c : checkpoints) model_files.emplace_back(epoch_file(c.epoch), *args.run / "checkpoints" / epoch_file(c.epoch));
  }
  if (args.save_checkpoint) save_checkpoint(*args.save_checkpoint, state);

  std::optional<ExperimentConfig> config;
  if (args.config) config = load_config(*args.config);

  ProviderConfig provider_config;
  ScoringConfig scoring;
  if (config) {
    provider_config = resolved_provider(*config);
    scoring = config->scoring;
  } else {
    if (!state.meta.contains("provider"))
      throw ValidationError("checkpoint has no provider metadata; pass --config");
    provider_config = provider_config_from_json(state.meta["provider"]);
    scoring = scoring_from_meta(state.meta);
  }
  if (args.mode) scoring.mode = *args.mode;
  if (args.aggregation) scoring.aggregation = *args.aggregation;
  if (args.workers) scoring.workers = *args.workers;
  if (scoring.workers < 1) throw ValidationError("--workers must be >= 1");

  fs::path manifest_path;
  std::optional<std::string> subset = args.subset;
  if (args.manifest) {
    manifest_path = *args.manifest;
  } else if (config && !config->manifests.test.empty()) {
    manifest_path = resolve_path(*config, config->manifests.test);
  } else if (config && !config->manifests.all.empty()) {
    manifest_path = resolve_path(*config, config->manifests.all);
    if (!subset) subset = "test";
  } else {
    throw ValidationError("no evaluation manifest: pass --manifest or a config with a test manifest");
  }
  Manifest manifest = load_manifest(manifest_path);
  if (subset) manifest = filter_subset(manifest, parse_subset(*subset));

  Artifacts artifacts(args.out, "eval");
  artifacts.input("manifest", manifest_path);
  for (const auto& [role, path] : model_files) artifacts.input(role, path);
  if (args.config) artifacts.input("config", *args.config);

  const auto provider = embedding_provider_load(provider_config);
  const auto output = evaluate_manifest(state, *provider, manifest, scoring.mode, scoring.aggregation,
                                        scoring.workers, scoring.windows);

  const std::string model_hash = state.meta.value("config_hash", std::string());
  auto report = to_json(output.report);
  report["scoring"] = scoring_json(scoring);
  report["provenance"] = provenance_block(model_hash, state.seed);
  artifacts.write("scores.csv", serialize_scores(output.scores));
  artifacts.write("report.json", report.dump(2) + "\n");

  json settings = {{"command", "eval"},
                   {"model_config_hash", model_hash},
                   {"selection", json::parse(selection.dump())},
                   {"subset", subset ? json(*subset) : json()},
                   {"scoring", json::parse(scoring_json(scoring).dump())}};
  artifacts.finish(hash_json(settings), state.seed, {{"selection", selection}});

  for (const auto& f : output.report.failures) log << "failed to score " << f.id << ": " << f.message << '\n';
  if (output.report.n_scored == 0) throw ValidationError("no manifest entry could be scored");
  log << "scored " << output.report.n_scored << " utterances";
  if (output.report.eer) log << "  EER " << format_g(100.0 * output.report.eer->eer, 4) << "%";
  if (output.report.auc) log << "  AUC " << format_g(*output.report.auc, 6);
  log << "  acc@" << output.report.threshold << " " << format_g(output.report.at_threshold.accuracy, 6) << '\n';
  return output.report;
}

PlattModel cmd_calibrate(const CalibrateArgs& args, std::ostream& log) {
  const ScoreSet scores = load_scores(args.scores);
  Artifacts artifacts(args.out, "calibrate");
  artifacts.input("scores", args.scores);

  PlattModel model;
  std::string fitted_on;
  std::size_t n_records = 0;
  ordered_json fit_info;
  if (args.model) {
    if (args.calibration_scores) throw ValidationError("pass either --cal or --model, not both");
    artifacts.input("model", *args.model);
    const auto j = json::parse(read_file(*args.model));
    model = platt_model_from_json(j);
    fitted_on = j.value("fitted_on", std::string());
    n_records = j.value("n_records", std::size_t{0});
  } else {
    if (!args.calibration_scores) throw ValidationError("pass --cal with the calibration score set");
    artifacts.input("calibration_scores", *args.calibration_scores);
    const ScoreSet cal = load_scores(*args.calibration_scores);
    PlattFitOptions options;
    options.prior_smoothing = args.prior_smoothing;
    const auto fit = platt_fit(cal, options);
    model = fit.model;
    fitted_on = args.calibration_scores->filename().string();
    n_records = cal.size();
    fit_info = {{"iterations", fit.iterations},
                {"gradient_norm", fit.gradient_norm},
                {"nll", fit.nll},
                {"bound_hit", fit.bound_hit},
                {"orientation_warning", fit.orientation_warning}};
    if (fit.bound_hit)
      log << "warning: a Platt coefficient reached the bound |a| = " << kPlattCoefficientBound
          << " (calibration set is likely separable)\n";
    if (fit.orientation_warning)
      log << "warning: fitted slope a1 >= 0; higher raw scores do not indicate fake on the calibration set\n";
  }

  const ScoreSet calibrated = calibrate_scores(model, scores);
  json settings = {{"command", "calibrate"},
                   {"prior_smoothing", args.prior_smoothing},
                   {"threshold", args.threshold},
                   {"a0", model.a0},
                   {"a1", model.a1}};
  const auto hash = hash_json(settings);

  auto model_json = to_json(model, fitted_on, n_records);
  model_json["provenance"] = provenance_block(hash, args.seed);
  artifacts.write("calibration.json", model_json.dump(2) + "\n");
  artifacts.write("calibrated_scores.csv", serialize_scores(calibrated));

  ordered_json report;
  report["threshold"] = args.threshold;
  report["before"] = summary_json(scores, args.threshold);
  report["after"] = summary_json(calibrated, args.threshold);
  report["fit"] = fit_info;
  report["provenance"] = provenance_block(hash, args.seed);
  artifacts.write("calibration_report.json", report.dump(2) + "\n");
  artifacts.finish(hash, args.seed);

  log << "a0 " << format_g(model.a0, 9) << "  a1 " << format_g(model.a1, 9) << "  accuracy@"
      << args.threshold << " " << format_g(report["before"]["accuracy"].get<double>(), 6) << " -> "
      << format_g(report["after"]["accuracy"].get<double>(), 6) << '\n';
  return model;
}

void cmd_analyze(const AnalyzeArgs& args, std::ostream& log) {
  const ScoreSet scores = load_scores(args.scores);
  std::vector<std::string> bins = args.bins;
  if (bins.empty() && args.categories.empty()) bins.push_back("duration_s");
  if (args.edges && bins.size() != 1) throw ValidationError("--edges applies to exactly one --bins field");

  json settings = {{"command", "analyze"},
                   {"bins", bins},
                   {"edges", args.edges ? json(*args.edges) : json()},
                   {"categories", args.categories},
                   {"threshold", args.threshold},
                   {"delta", args.delta}};
  const auto hash = hash_json(settings);
  Artifacts artifacts(args.out, "analyze");
  artifacts.input("scores", args.scores);

  for (const auto& field_name : bins) {
    const auto field = parse_bin_field(field_name);
    BinSpec spec = field == BinField::duration_s ? default_duration_bins() : default_sisdr_bins();
    if (args.edges) spec.edges = *args.edges;
    const auto report = binned_eer(scores, spec);
    const std::string stem = "bins_" + std::string(to_string(field));
    auto j = to_json(report);
    j["provenance"] = provenance_block(hash, args.seed);
    artifacts.write(stem + ".csv", bin_report_csv(report));
    artifacts.write(stem + ".json", j.dump(2) + "\n");
    log << stem << ":";
    for (const auto& row : report.rows)
      log << " [" << format_g(row.low, 4) << "," << format_g(row.high, 4) << ")="
          << (row.eer ? format_g(100.0 * *row.eer, 3) + "%" : std::string("-"));
    log << '\n';
  }
  for (const auto& field : args.categories) {
    const auto report = category_report(scores, field, args.threshold, args.delta);
    auto j = to_json(report);
    j["provenance"] = provenance_block(hash, args.seed);
    artifacts.write("category_" + field + ".csv", category_report_csv(report));
    artifacts.write("category_" + field + ".json", j.dump(2) + "\n");
    std::size_t flagged = 0;
    for (const auto& row : report.rows) flagged += row.flagged;
    log << "category_" << field << ": " << report.rows.size() << " values, " << flagged << " flagged\n";
  }
  artifacts.finish(hash, args.seed);
}

Manifest cmd_synth(const SynthArgs& args, std::ostream& log) {
  if (args.kind != "audio" && args.kind != "embedding")
    throw ValidationError("--kind must be 'audio' or 'embedding'");
  validate(args.spec);
  Artifacts artifacts(args.out, "synth");
  const Manifest m = args.kind == "audio" ? generate_corpus(args.spec, args.out)
                                          : generate_embedding_store(args.spec, args.out);
  artifacts.record("manifest.jsonl");
  artifacts.record("synth_spec.json");
  json settings = json::parse(to_json(args.spec).dump());
  settings["kind"] = args.kind;
  artifacts.finish(hash_json(settings), args.spec.seed);
  log << "wrote " << m.size() << " " << args.kind << " entries to " << args.out.string() << '\n';
  return m;
}

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Training and evaluation toolkit for audio anti-spoofing countermeasures"};
  app.name("spoofkit");
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolkitVersion));

  // sample
  SampleArgs sample;
  double fake_fraction = 0.0;
  auto* sample_cmd = app.add_subcommand("sample", "Draw a seeded subsample of a manifest");
  sample_cmd->set_config("--config", "", "TOML/INI file with option defaults");
  sample_cmd->add_option("--manifest", sample.manifest, "Input manifest (JSONL)")->required()->check(CLI::ExistingFile);
  sample_cmd->add_option("--n", sample.n, "Number of entries to draw")->required();
  sample_cmd->add_option("--fake-fraction", fake_fraction, "Exact fake share of the sample, in [0, 1]");
  sample_cmd->add_option("--seed", sample.seed, "Sampling seed");
  sample_cmd->add_option("--out", sample.out, "Output manifest path")->required();

  // train
  TrainArgs train_args;
  std::uint64_t train_seed = 0;
  std::string train_out;
  int train_epochs = 0;
  auto* train_cmd = app.add_subcommand("train", "Train a classifier head from an experiment config");
  train_cmd->add_option("--config", train_args.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  auto* train_seed_opt = train_cmd->add_option("--seed", train_seed, "Override the config seed");
  auto* train_out_opt = train_cmd->add_option("--out", train_out, "Run directory (overrides output_dir)");
  auto* train_epochs_opt = train_cmd->add_option("--epochs", train_epochs, "Override optimizer.epochs");

  // eval
  EvalArgs eval_args;
  std::string eval_checkpoint, eval_run, eval_config, eval_manifest, eval_subset, eval_mode, eval_agg, eval_save;
  int eval_swa = 0, eval_workers = 0;
  bool eval_windowed = false, eval_best = false;
  auto* eval_cmd = app.add_subcommand("eval", "Score a manifest and report EER, AUC, accuracy and F1");
  auto* ckpt_opt = eval_cmd->add_option("--checkpoint", eval_checkpoint, "Checkpoint file");
  auto* run_opt = eval_cmd->add_option("--run", eval_run, "Run directory to select a checkpoint from");
  auto* best_opt = eval_cmd->add_flag("--best", eval_best, "Use the lowest validation-loss checkpoint of --run");
  auto* swa_opt = eval_cmd->add_option("--swa", eval_swa, "Average k checkpoints of --run around the best one");
  ckpt_opt->excludes(run_opt);
  swa_opt->excludes(best_opt);
  auto* eval_config_opt = eval_cmd->add_option("--config", eval_config, "Experiment config for provider and test manifest");
  auto* eval_manifest_opt = eval_cmd->add_option("--manifest", eval_manifest, "Manifest to score");
  auto* subset_opt = eval_cmd->add_option("--subset", eval_subset, "Only score entries of this subset (train/val/test)");
  auto* mode_opt = eval_cmd->add_option("--mode", eval_mode, "whole or windowed");
  eval_cmd->add_flag("--windowed", eval_windowed, "Shorthand for --mode windowed");
  auto* agg_opt = eval_cmd->add_option("--agg", eval_agg, "Window aggregation: mean or max");
  auto* workers_opt = eval_cmd->add_option("--workers", eval_workers, "Parallel scoring threads");
  auto* save_opt = eval_cmd->add_option("--save-checkpoint", eval_save, "Write the selected model to this path");
  eval_cmd->add_option("--seed", eval_args.seed, "Recorded seed");
  eval_cmd->add_option("--out", eval_args.out, "Output directory")->required();

  // calibrate
  CalibrateArgs cal_args;
  std::string cal_set, cal_model;
  auto* cal_cmd = app.add_subcommand("calibrate", "Fit and apply Platt calibration");
  cal_cmd->set_config("--config", "", "TOML/INI file with option defaults");
  cal_cmd->add_option("--scores", cal_args.scores, "Score CSV to calibrate")->required()->check(CLI::ExistingFile);
  auto* cal_set_opt = cal_cmd->add_option("--cal", cal_set, "Score CSV to fit the calibration on");
  auto* cal_model_opt = cal_cmd->add_option("--model", cal_model, "Existing calibration JSON to apply");
  cal_set_opt->excludes(cal_model_opt);
  cal_cmd->add_flag("--prior-smoothing", cal_args.prior_smoothing, "Use smoothed Platt targets");
  cal_cmd->add_option("--threshold", cal_args.threshold, "Decision threshold for the accuracy summary");
  cal_cmd->add_option("--seed", cal_args.seed, "Recorded seed");
  cal_cmd->add_option("--out", cal_args.out, "Output directory")->required();

  // analyze
  AnalyzeArgs an_args;
  std::vector<double> edges;
  auto* an_cmd = app.add_subcommand("analyze", "Binned EER and per-category accuracy reports");
  an_cmd->set_config("--config", "", "TOML/INI file with option defaults");
  an_cmd->add_option("--scores", an_args.scores, "Score CSV")->required()->check(CLI::ExistingFile);
  an_cmd->add_option("--bins", an_args.bins, "Bin field: duration_s or quality_sisdr_db (repeatable)");
  auto* edges_opt = an_cmd->add_option("--edges", edges, "Bin edges, comma separated; 'inf' allowed last")->delimiter(',');
  an_cmd->add_option("--category", an_args.categories, "Category field: attack, label or a metadata column (repeatable)");
  an_cmd->add_option("--threshold", an_args.threshold, "Decision threshold");
  an_cmd->add_option("--delta", an_args.delta, "Flag categories whose accuracy deviates more than this");
  an_cmd->add_option("--seed", an_args.seed, "Recorded seed");
  an_cmd->add_option("--out", an_args.out, "Output directory")->required();

  // synth
  SynthArgs synth_args;
  std::string synth_config;
  std::size_t synth_n = 0;
  double synth_sep = 0.0;
  std::uint64_t synth_seed = 0;
  std::vector<double> synth_duration;
  bool synth_dep_noise = false;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic labelled corpus");
  synth_cmd->add_option("--kind", synth_args.kind, "audio or embedding");
  synth_cmd->add_option("--config", synth_config, "Synthesis spec (JSON)")->check(CLI::ExistingFile);
  auto* n_opt = synth_cmd->add_option("--n-per-class", synth_n, "Utterances per class");
  auto* sep_opt = synth_cmd->add_option("--separation", synth_sep, "Class separation, 0 for identical classes");
  auto* sseed_opt = synth_cmd->add_option("--seed", synth_seed, "Generator seed");
  auto* dur_opt = synth_cmd->add_option("--duration", synth_duration, "Duration range low,high in seconds")->delimiter(',')->expected(2);
  auto* dep_opt = synth_cmd->add_flag("--duration-noise", synth_dep_noise, "Make the noise level depend on duration");
  synth_cmd->add_option("--out", synth_args.out, "Output directory")->required();

  std::vector<const char*> argv{"spoofkit"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitValidation;
  }

  try {
    if (sample_cmd->parsed()) {
      if (sample_cmd->count("--fake-fraction")) sample.fake_fraction = fake_fraction;
      cmd_sample(sample, out);
    } else if (train_cmd->parsed()) {
      if (train_seed_opt->count()) train_args.seed = train_seed;
      if (train_out_opt->count()) train_args.out = train_out;
      if (train_epochs_opt->count()) train_args.epochs = train_epochs;
      cmd_train(train_args, out);
    } else if (eval_cmd->parsed()) {
      if (ckpt_opt->count()) eval_args.checkpoint = eval_checkpoint;
      if (run_opt->count()) eval_args.run = eval_run;
      if (swa_opt->count()) eval_args.swa = eval_swa;
      if (eval_config_opt->count()) eval_args.config = eval_config;
      if (eval_manifest_opt->count()) eval_args.manifest = eval_manifest;
      if (subset_opt->count()) eval_args.subset = eval_subset;
      if (mode_opt->count()) eval_args.mode = parse_scoring_mode(eval_mode);
      if (eval_windowed) {
        if (eval_args.mode == ScoringMode::whole) throw ValidationError("--windowed conflicts with --mode whole");
        eval_args.mode = ScoringMode::windowed;
      }
      if (agg_opt->count()) eval_args.aggregation = parse_aggregation(eval_agg);
      if (workers_opt->count()) eval_args.workers = eval_workers;
      if (save_opt->count()) eval_args.save_checkpoint = eval_save;
      if (eval_best && !eval_args.run) throw ValidationError("--best needs --run");
      cmd_eval(eval_args, out);
    } else if (cal_cmd->parsed()) {
      if (cal_set_opt->count()) cal_args.calibration_scores = cal_set;
      if (cal_model_opt->count()) cal_args.model = cal_model;
      cmd_calibrate(cal_args, out);
    } else if (an_cmd->parsed()) {
      if (edges_opt->count()) an_args.edges = edges;
      cmd_analyze(an_args, out);
    } else if (synth_cmd->parsed()) {
      if (!synth_config.empty()) synth_args.spec = synth_spec_from_json(json::parse(read_file(synth_config)));
      if (n_opt->count()) synth_args.spec.n_per_class = synth_n;
      if (sep_opt->count()) synth_args.spec.separation = synth_sep;
      if (sseed_opt->count()) synth_args.spec.seed = synth_seed;
      if (dur_opt->count()) synth_args.spec.duration_s = {synth_duration.at(0), synth_duration.at(1)};
      if (dep_opt->count()) synth_args.spec.duration_dependent_noise = synth_dep_noise;
      cmd_synth(synth_args, out);
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace spoofkit
