#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "spoofkit/manifest.hpp"
#include "spoofkit/model.hpp"
#include "spoofkit/provider.hpp"

namespace spoofkit {

struct ScoreRecord {
  std::string id;
  double score = 0.0;  // p(fake)
  Label label = Label::real;
  double duration_s = 0.0;
  std::optional<double> quality_sisdr_db;
  std::optional<std::string> attack;
  // Extra categorical columns (e.g. codec_tag) carried through the score CSV.
  std::map<std::string, std::string> metadata;

  friend bool operator==(const ScoreRecord&, const ScoreRecord&) = default;
};

using ScoreSet = std::vector<ScoreRecord>;

enum class ScoringMode { whole, windowed };
enum class Aggregation { mean, max };

ScoringMode parse_scoring_mode(std::string_view text);
Aggregation parse_aggregation(std::string_view text);
std::string_view to_string(ScoringMode mode);
std::string_view to_string(Aggregation agg);

struct WindowConfig {
  double win_s = 3.5;
  double step_s = 0.5;
};

double aggregate_scores(std::span<const double> window_scores, Aggregation agg);

// Per-window p(fake) for audio providers (one entry for whole mode or for
// providers that do not consume audio).
std::vector<double> window_scores(const ModelState& state, const EmbeddingProvider& provider,
                                  const Manifest& manifest, const ManifestEntry& entry,
                                  ScoringMode mode, const WindowConfig& windows = {});

double score_utterance(const ModelState& state, const EmbeddingProvider& provider,
                       const Manifest& manifest, const ManifestEntry& entry, ScoringMode mode,
                       Aggregation agg, const WindowConfig& windows = {});

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
};

// Threshold sweep over every distinct score (score >= t means fake) plus a
// threshold just above the maximum; the equal-error point is the linear
// interpolation between the two operating points where FRR crosses FAR.
EerResult compute_eer(std::span<const ScoreRecord> scores);

// Mann-Whitney statistic: P(score_fake > score_real) with ties counted 1/2.
double compute_auc(std::span<const ScoreRecord> scores);

struct Confusion {
  std::size_t true_positive = 0;   // fake predicted fake
  std::size_t false_positive = 0;  // real predicted fake
  std::size_t true_negative = 0;
  std::size_t false_negative = 0;
};

struct ThresholdMetrics {
  double accuracy = 0.0;
  double f1 = 0.0;  // fake class; 0 when precision or recall is undefined
  double precision = 0.0;
  double recall = 0.0;
  Confusion confusion;
};

ThresholdMetrics thresholded_metrics(std::span<const ScoreRecord> scores, double threshold = 0.5);

struct AttackBreakdown {
  std::size_t n_fake = 0;
  std::optional<double> eer;
};

struct EvalFailure {
  std::string id;
  std::string message;
};

struct EvalReport {
  std::size_t n_scored = 0;
  std::vector<EvalFailure> failures;
  std::optional<EerResult> eer;
  std::optional<double> auc;
  double threshold = 0.5;
  ThresholdMetrics at_threshold;
  // EER of all reals against the fakes of each attack tag.
  std::map<std::string, AttackBreakdown> per_attack;
};

EvalReport summarize(std::span<const ScoreRecord> scores, double threshold = 0.5);

struct EvalOutput {
  ScoreSet scores;
  EvalReport report;
};

// Scores every entry in manifest order. Entries that fail to load are
// excluded and listed in report.failures. `workers` > 1 fans out across
// utterances; the result is identical for any worker count.
EvalOutput evaluate_manifest(const ModelState& state, const EmbeddingProvider& provider,
                             const Manifest& manifest, ScoringMode mode, Aggregation agg,
                             int workers = 1, const WindowConfig& windows = {});

nlohmann::ordered_json to_json(const EvalReport& report);

// Score CSV: header id,score,label,duration_s,quality_sisdr_db,attack plus any
// metadata columns; numbers use 9 significant digits.
std::string serialize_scores(std::span<const ScoreRecord> scores);
ScoreSet parse_scores(std::string_view text);
void save_scores(const std::filesystem::path& path, std::span<const ScoreRecord> scores);
ScoreSet load_scores(const std::filesystem::path& path);

}  // namespace spoofkit
