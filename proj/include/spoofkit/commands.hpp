#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "spoofkit/analysis.hpp"
#include "spoofkit/calibrate.hpp"
#include "spoofkit/config.hpp"
#include "spoofkit/eval.hpp"
#include "spoofkit/synth.hpp"
#include "spoofkit/train.hpp"

namespace spoofkit {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitRuntime = 3;

struct SampleArgs {
  std::filesystem::path manifest;
  std::size_t n = 0;
  std::optional<double> fake_fraction;
  std::uint64_t seed = 0;
  std::filesystem::path out;  // output manifest file
};

struct TrainArgs {
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<int> epochs;
};

struct EvalArgs {
  std::optional<std::filesystem::path> checkpoint;
  std::optional<std::filesystem::path> run;  // run directory for --best / --swa
  std::optional<int> swa;
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> manifest;
  std::optional<std::string> subset;
  std::optional<ScoringMode> mode;
  std::optional<Aggregation> aggregation;
  std::optional<int> workers;
  std::optional<std::filesystem::path> save_checkpoint;
  std::uint64_t seed = 0;
  std::filesystem::path out;
};

struct CalibrateArgs {
  std::filesystem::path scores;
  std::optional<std::filesystem::path> calibration_scores;
  std::optional<std::filesystem::path> model;  // apply an existing model instead of fitting
  bool prior_smoothing = false;
  double threshold = 0.5;
  std::uint64_t seed = 0;
  std::filesystem::path out;
};

struct AnalyzeArgs {
  std::filesystem::path scores;
  std::vector<std::string> bins;  // bin fields; duration_s when nothing is requested
  std::optional<std::vector<double>> edges;
  std::vector<std::string> categories;
  double threshold = 0.5;
  double delta = 0.1;
  std::uint64_t seed = 0;
  std::filesystem::path out;
};

struct SynthArgs {
  std::string kind = "audio";  // audio | embedding
  SynthSpec spec;
  std::filesystem::path out;
};

struct TrainResult {
  std::filesystem::path run_dir;
  std::vector<double> val_losses;  // index 0 is the untrained model
  std::string config_hash;
};

Manifest cmd_sample(const SampleArgs& args, std::ostream& log);
TrainResult cmd_train(const TrainArgs& args, std::ostream& log);
EvalReport cmd_eval(const EvalArgs& args, std::ostream& log);
PlattModel cmd_calibrate(const CalibrateArgs& args, std::ostream& log);
void cmd_analyze(const AnalyzeArgs& args, std::ostream& log);
Manifest cmd_synth(const SynthArgs& args, std::ostream& log);

// Checkpoints of a run directory in epoch order, with validation losses from
// their metadata.
std::vector<CheckpointRecord> load_run_checkpoints(const std::filesystem::path& run_dir);

// Parses argv (without the program name) and runs one subcommand. Returns the
// process exit code; errors are reported on `err`.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace spoofkit
