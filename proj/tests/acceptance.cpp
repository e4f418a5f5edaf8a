// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
//   spoofkit_acceptance [--workdir DIR] [--only NAME ...] [--list]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "checks.hpp"
#include "spoofkit/commands.hpp"
#include "spoofkit/eval.hpp"
#include "spoofkit/io.hpp"

namespace fs = std::filesystem;
using checks::Verdict;
using nlohmann::json;

namespace {

const fs::path kSourceDir = SPOOFKIT_SOURCE_DIR;

// End-to-end thresholds.
constexpr double kToyMaxEer = 0.02;
constexpr double kToyMaxSeconds = 600.0;
constexpr double kGradientMaxSeconds = 60.0;

std::string fmt(double v, int digits = 4) { return spoofkit::format_g(v, digits); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Runs one CLI invocation in-process; throws with the captured stderr on a
// nonzero exit.
void run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = spoofkit::cli_main(args, out, err);
  if (code != 0) {
    std::string line;
    for (const auto& a : args) line += a + " ";
    throw std::runtime_error("'" + line + "' exited " + std::to_string(code) + ": " + err.str());
  }
}

json read_json(const fs::path& path) { return json::parse(spoofkit::read_file(path)); }

// Copies a shipped config, pointing its manifest at `manifest` and dropping output_dir.
fs::path localize_config(const std::string& name, const fs::path& manifest, const fs::path& dir) {
  json j = read_json(kSourceDir / "configs" / name);
  j["manifests"] = {{"all", fs::absolute(manifest).string()}};
  j.erase("output_dir");
  const auto path = dir / name;
  spoofkit::write_file(path, j.dump(2) + "\n");
  return path;
}

std::vector<double> trained_val_losses(const fs::path& run_dir) {
  std::vector<double> out;
  std::istringstream lines(spoofkit::read_file(run_dir / "run_log.jsonl"));
  for (std::string line; std::getline(lines, line);) {
    const auto j = json::parse(line);
    if (j["kind"] == "epoch" && j["epoch"].get<int>() > 0) out.push_back(j["val_loss"].get<double>());
  }
  return out;
}

Verdict gradient_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto losses = checks::loss_gradients();
  const auto model = checks::model_gradients();
  const double elapsed = seconds_since(t0);
  return {losses.pass && model.pass && elapsed < kGradientMaxSeconds,
          "losses: " + losses.detail + "; backward: " + model.detail + "; " + fmt(elapsed, 3) + "s"};
}

Verdict calibration() {
  const auto inv = checks::calibration_invariance();
  const auto acc = checks::calibration_accuracy();
  return {inv.pass && acc.pass, inv.detail + "; " + acc.detail};
}

Verdict swa(const fs::path& work) { return checks::swa_correctness(work / "swa"); }

Verdict dsp() {
  const auto bp = checks::dsp_bandpass();
  const auto rs = checks::dsp_resample();
  const auto aw = checks::dsp_awgn();
  return {bp.pass && rs.pass && aw.pass, "bandpass " + bp.detail + "; resample " + rs.detail + "; awgn " + aw.detail};
}

Verdict toy_end_to_end(const fs::path& work) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto dir = work / "toy";
  fs::remove_all(dir);
  fs::create_directories(dir);
  run_cli({"synth", "--kind", "audio", "--config", (kSourceDir / "configs" / "toy_synth.json").string(), "--out",
           (dir / "corpus").string()});
  const auto manifest = dir / "corpus" / "manifest.jsonl";

  struct Outcome {
    double eer = 1.0;
    double best_val = 0.0;
    double final_val = 0.0;
  };
  std::map<std::string, Outcome> outcome;
  for (const std::string name : {"toy_ce", "toy_focal_hinge"}) {
    const auto config = localize_config(name + ".json", manifest, dir);
    const auto run = dir / ("run_" + name);
    run_cli({"train", "--config", config.string(), "--out", run.string()});
    const auto eval_dir = dir / ("eval_" + name);
    run_cli({"eval", "--run", run.string(), "--best", "--config", config.string(), "--windowed", "--out",
             eval_dir.string()});
    const auto report = read_json(eval_dir / "report.json");
    const auto losses = trained_val_losses(run);
    Outcome o;
    o.eer = report["eer"].is_number() ? report["eer"].get<double>() : 1.0;
    o.best_val = *std::min_element(losses.begin(), losses.end());
    o.final_val = losses.back();
    outcome[name] = o;
  }
  const double elapsed = seconds_since(t0);
  const auto& ce = outcome["toy_ce"];
  const auto& fh = outcome["toy_focal_hinge"];
  const bool pass = ce.eer <= kToyMaxEer && fh.eer <= kToyMaxEer && fh.best_val <= ce.best_val &&
                    fh.final_val <= ce.final_val && elapsed < kToyMaxSeconds;
  return {pass, "EER ce " + fmt(100 * ce.eer) + "% focal+hinge " + fmt(100 * fh.eer) + "%; val loss best ce " +
                    fmt(ce.best_val) + " vs " + fmt(fh.best_val) + ", final ce " + fmt(ce.final_val) + " vs " +
                    fmt(fh.final_val) + "; " + fmt(elapsed, 3) + "s"};
}

Verdict reliability_trend(const fs::path& work) {
  const auto dir = work / "reliability";
  fs::remove_all(dir);
  fs::create_directories(dir);
  run_cli({"synth", "--kind", "embedding", "--config", (kSourceDir / "configs" / "reliability_synth.json").string(),
           "--out", (dir / "corpus").string()});
  const auto config = localize_config("reliability.json", dir / "corpus" / "manifest.jsonl", dir);
  run_cli({"train", "--config", config.string(), "--out", (dir / "run").string()});
  run_cli({"eval", "--run", (dir / "run").string(), "--best", "--config", config.string(), "--out",
           (dir / "eval").string()});
  const std::string edges = "0.5,1,2,4,8,16";
  run_cli({"analyze", "--scores", (dir / "eval" / "scores.csv").string(), "--bins", "duration_s", "--edges", edges,
           "--out", (dir / "analysis").string()});

  const auto bins = read_json(dir / "analysis" / "bins_duration_s.json")["bins"];
  std::vector<double> eers;
  bool all_scored = true;
  for (const auto& b : bins) {
    if (b["eer"].is_number()) eers.push_back(b["eer"].get<double>());
    else all_scored = false;
  }
  bool monotone = eers.size() >= 2 && eers.front() > eers.back();
  for (std::size_t i = 1; i < eers.size(); ++i) monotone = monotone && eers[i] <= eers[i - 1];

  // Remove the fakes of the longest bin: that bin must then be reported as
  // single-class with no EER while the others keep theirs.
  auto scores = spoofkit::load_scores(dir / "eval" / "scores.csv");
  std::erase_if(scores, [](const spoofkit::ScoreRecord& r) {
    return r.label == spoofkit::Label::fake && r.duration_s >= 8.0;
  });
  spoofkit::save_scores(dir / "one_class_scores.csv", scores);
  run_cli({"analyze", "--scores", (dir / "one_class_scores.csv").string(), "--bins", "duration_s", "--edges",
           edges + ",inf", "--out", (dir / "analysis_one_class").string()});
  const auto flagged = read_json(dir / "analysis_one_class" / "bins_duration_s.json")["bins"];
  bool flag_ok = flagged.size() == 6;
  for (std::size_t i = 0; flag_ok && i < flagged.size(); ++i) {
    const auto& b = flagged[i];
    if (i == 4) flag_ok = b["eer"].is_null() && b["note"] == "single-class bin" && b["n_fake"] == 0 && b["n_real"] > 0;
    else if (i == 5) flag_ok = b["eer"].is_null() && b["note"] == "empty bin";
    else flag_ok = b["eer"].is_number() && b["note"] == "";
  }

  std::string trend;
  for (double e : eers) trend += (trend.empty() ? "" : ", ") + fmt(100 * e, 3) + "%";
  return {all_scored && monotone && flag_ok,
          "EER by duration bin " + trend + "; single-class and empty bins " + (flag_ok ? "flagged" : "NOT flagged")};
}

void run_pipeline(const fs::path& corpus_manifest, const fs::path& dir) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  json config = {{"name", "determinism"},
                 {"seed", 12},
                 {"manifests", {{"all", "sample.jsonl"}}},
                 {"provider", {{"kind", "spectral"}}},
                 {"augmentation", {{"awgn_probability", 0.5}, {"resample_roundtrip", true}}},
                 {"loss", {{"weights", {{"cross_entropy", 1.0}, {"smooth_hinged_center", 0.1}}}}},
                 {"optimizer", {{"epochs", 3}, {"batch_size", 16}}}};
  spoofkit::write_file(dir / "config.json", config.dump(2) + "\n");
  const auto d = [&](const char* name) { return (dir / name).string(); };
  run_cli({"sample", "--manifest", corpus_manifest.string(), "--n", "100", "--fake-fraction", "0.5", "--seed", "3",
           "--out", d("sample.jsonl")});
  run_cli({"train", "--config", d("config.json"), "--out", d("run")});
  run_cli({"eval", "--run", d("run"), "--swa", "3", "--config", d("config.json"), "--subset", "test", "--workers", "2",
           "--out", d("eval_test")});
  run_cli({"eval", "--run", d("run"), "--swa", "3", "--config", d("config.json"), "--subset", "val", "--out",
           d("eval_val")});
  run_cli({"calibrate", "--scores", d("eval_test/scores.csv"), "--cal", d("eval_val/scores.csv"), "--out", d("cal")});
  run_cli({"analyze", "--scores", d("cal/calibrated_scores.csv"), "--bins", "duration_s", "--category", "attack",
           "--out", d("analysis")});
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto name = entry.path().filename().string();
    if (name.ends_with("timestamps.log")) continue;
    files[fs::relative(entry.path(), dir).generic_string()] = spoofkit::read_file(entry.path());
  }
  return files;
}

Verdict determinism(const fs::path& work) {
  const auto dir = work / "determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  run_cli({"synth", "--kind", "audio", "--n-per-class", "60", "--separation", "2", "--seed", "5", "--duration",
           "2,4", "--out", (dir / "corpus").string()});
  // Both runs execute at the same path so recorded paths match too.
  const auto live = dir / "pipeline";
  std::vector<std::map<std::string, std::string>> runs;
  for (int i = 0; i < 2; ++i) {
    run_pipeline(dir / "corpus" / "manifest.jsonl", live);
    runs.push_back(snapshot(live));
    fs::rename(live, dir / ("run" + std::to_string(i + 1)));
  }
  std::vector<std::string> differing;
  for (const auto& [name, bytes] : runs[0]) {
    auto it = runs[1].find(name);
    if (it == runs[1].end() || it->second != bytes) differing.push_back(name);
  }
  for (const auto& [name, bytes] : runs[1])
    if (!runs[0].contains(name)) differing.push_back(name);
  std::string detail = std::to_string(runs[0].size()) + " artifacts compared, " + std::to_string(differing.size()) +
                       " differ";
  for (std::size_t i = 0; i < std::min<std::size_t>(differing.size(), 5); ++i) detail += " " + differing[i];
  return {differing.empty() && runs[0].size() > 10, detail};
}

struct Criterion {
  std::string name;
  std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("spoofkit acceptance suite");
  std::string workdir = (fs::temp_directory_path() / "spoofkit_acceptance").string();
  std::vector<std::string> only;
  bool list = false;
  app.add_option("--workdir", workdir, "Scratch directory");
  app.add_option("--only", only, "Run only these criteria");
  app.add_flag("--list", list, "List criteria and exit");
  CLI11_PARSE(app, argc, argv);

  const fs::path work = fs::absolute(workdir);
  fs::create_directories(work);

  const std::vector<Criterion> criteria{
      {"gradient_correctness", gradient_correctness},
      {"focal_identity", [] { return checks::focal_identity(); }},
      {"hinge_noncompetition", [] { return checks::hinge_noncompetition(); }},
      {"eer_oracle_equivalence", [] { return checks::eer_oracle(); }},
      {"calibration_invariance", calibration},
      {"swa_correctness", [&] { return swa(work); }},
      {"dsp_spectral_contracts", dsp},
      {"end_to_end_toy", [&] { return toy_end_to_end(work); }},
      {"reliability_trend", [&] { return reliability_trend(work); }},
      {"determinism", [&] { return determinism(work); }},
  };

  if (list) {
    for (const auto& c : criteria) std::cout << c.name << '\n';
    return 0;
  }

  int failed = 0, ran = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.name) == only.end()) continue;
    ++ran;
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    if (!v.pass) ++failed;
    std::cout << (v.pass ? "PASS " : "FAIL ") << c.name << ": " << v.detail << std::endl;
  }
  std::cout << (ran - failed) << "/" << ran << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
