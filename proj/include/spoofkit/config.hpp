#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "spoofkit/eval.hpp"
#include "spoofkit/losses.hpp"
#include "spoofkit/optim.hpp"
#include "spoofkit/provider.hpp"

#ifndef SPOOFKIT_VERSION
#define SPOOFKIT_VERSION "0.0.0"
#endif

namespace spoofkit {

inline constexpr std::string_view kToolkitVersion = SPOOFKIT_VERSION;

// Manifest paths as written in the config. When only `all` is given the
// train/val/test manifests come from its subset tags.
struct ManifestPaths {
  std::string all;
  std::string train;
  std::string val;
  std::string test;
};

struct AugmentationConfig {
  double awgn_probability = 0.0;
  Interval awgn_snr_db{5.0, 30.0};
  double rir_probability = 0.0;
  std::vector<std::string> rir_files;
  bool resample_roundtrip = false;
  Interval power_range{1e-5, 1.2};
};

struct ModelConfig {
  bool adapter = false;
  double leaky_slope = 0.01;
};

struct ScoringConfig {
  ScoringMode mode = ScoringMode::windowed;
  Aggregation aggregation = Aggregation::mean;
  WindowConfig windows;
  int workers = 1;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t seed = 0;
  ManifestPaths manifests;
  ProviderConfig provider;
  ModelConfig model;
  AugmentationConfig augmentation;
  LossConfig loss;
  OptimizerConfig optimizer;
  double crop_s = 3.5;
  std::string teacher;  // checkpoint path, empty for none
  ScoringConfig scoring;
  std::string output_dir;
  // Directory that relative paths in the config are resolved against.
  std::filesystem::path base_dir;
};

// Strict parse: unknown keys are rejected so typos do not silently fall back
// to defaults.
ExperimentConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

// Complete config with every default spelled out. output_dir is omitted when
// `with_output_dir` is false.
nlohmann::ordered_json to_json(const ExperimentConfig& config, bool with_output_dir = true);

// FNV-1a of the canonical (sorted-key, compact) config JSON without output_dir.
std::string config_hash(const ExperimentConfig& config);

std::filesystem::path resolve_path(const ExperimentConfig& config, const std::string& path);

nlohmann::json to_json(const LossConfig& config);
LossConfig loss_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const OptimizerConfig& config);
OptimizerConfig optimizer_config_from_json(const nlohmann::json& j);

AugmentationPolicy build_policy(const ExperimentConfig& config);

}  // namespace spoofkit
