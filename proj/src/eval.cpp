#include "spoofkit/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <thread>
#include <variant>

#include "spoofkit/error.hpp"
#include "spoofkit/io.hpp"

namespace spoofkit {
namespace {

constexpr const char* kScoreColumns[] = {"id", "score", "label", "duration_s", "quality_sisdr_db", "attack"};

void require_both_classes(std::span<const ScoreRecord> scores, const char* metric) {
  bool real = false, fake = false;
  for (const auto& r : scores) (r.label == Label::fake ? fake : real) = true;
  if (!real || !fake)
    throw ValidationError(std::string(metric) + " requires at least one record of each class");
}

std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\n\r") == std::string::npos) return value;
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        current += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        current += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current += c;
    }
  }
  if (quoted) throw ValidationError("score CSV line " + std::to_string(line_no) + ": unterminated quote");
  fields.push_back(std::move(current));
  return fields;
}

double parse_number(const std::string& text, std::size_t line_no, const char* column) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("score CSV line " + std::to_string(line_no) + ": bad " + column + " '" + text + "'");
  }
}

}  // namespace

ScoringMode parse_scoring_mode(std::string_view text) {
  if (text == "whole") return ScoringMode::whole;
  if (text == "windowed") return ScoringMode::windowed;
  throw ValidationError("unknown scoring mode '" + std::string(text) + "'");
}

Aggregation parse_aggregation(std::string_view text) {
  if (text == "mean") return Aggregation::mean;
  if (text == "max") return Aggregation::max;
  throw ValidationError("unknown aggregation '" + std::string(text) + "'");
}

std::string_view to_string(ScoringMode mode) { return mode == ScoringMode::whole ? "whole" : "windowed"; }
std::string_view to_string(Aggregation agg) { return agg == Aggregation::mean ? "mean" : "max"; }

double aggregate_scores(std::span<const double> window_scores, Aggregation agg) {
  if (window_scores.empty()) throw ValidationError("no window scores to aggregate");
  if (agg == Aggregation::max) return *std::max_element(window_scores.begin(), window_scores.end());
  double sum = 0.0;
  for (double s : window_scores) sum += s;
  // Clamp so rounding cannot push the mean outside the window range.
  const auto [lo, hi] = std::minmax_element(window_scores.begin(), window_scores.end());
  return std::clamp(sum / static_cast<double>(window_scores.size()), *lo, *hi);
}

std::vector<double> window_scores(const ModelState& state, const EmbeddingProvider& provider,
                                  const Manifest& manifest, const ManifestEntry& entry,
                                  ScoringMode mode, const WindowConfig& windows) {
  auto score_sequence = [&](const EmbeddingSequence& seq) {
    if (seq.dims() != state.input_dim())
      throw ValidationError("embedding for id '" + entry.id + "' has dimension " +
                            std::to_string(seq.dims()) + ", model expects " +
                            std::to_string(state.input_dim()));
    return forward(state, seq).p_fake();
  };
  if (!provider.consumes_audio()) return {score_sequence(provider.embed_entry(manifest, entry))};

  const auto audio = load_entry_audio(manifest, entry);
  if (mode == ScoringMode::whole) return {score_sequence(provider.embed_audio(prepare_eval_segment(audio)))};
  std::vector<double> out;
  for (const auto& segment : window_segments(audio, windows.win_s, windows.step_s))
    out.push_back(score_sequence(provider.embed_audio(prepare_eval_segment(segment))));
  return out;
}

double score_utterance(const ModelState& state, const EmbeddingProvider& provider,
                       const Manifest& manifest, const ManifestEntry& entry, ScoringMode mode,
                       Aggregation agg, const WindowConfig& windows) {
  const auto scores = window_scores(state, provider, manifest, entry, mode, windows);
  return aggregate_scores(scores, agg);
}

EerResult compute_eer(std::span<const ScoreRecord> scores) {
  require_both_classes(scores, "EER");
  std::vector<std::pair<double, Label>> sorted;
  sorted.reserve(scores.size());
  std::size_t n_real = 0, n_fake = 0;
  for (const auto& r : scores) {
    if (!std::isfinite(r.score)) throw ValidationError("score for '" + r.id + "' is not finite");
    sorted.emplace_back(r.score, r.label);
    ++(r.label == Label::fake ? n_fake : n_real);
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  // Operating point at threshold t: FAR = reals with s >= t, FRR = fakes with s < t.
  std::size_t reals_below = 0, fakes_below = 0;
  double prev_t = sorted.front().first;
  double prev_far = 1.0, prev_frr = 0.0;
  std::size_t i = 0;
  while (true) {
    const double group = sorted[i].first;
    while (i < sorted.size() && sorted[i].first == group) {
      ++(sorted[i].second == Label::fake ? fakes_below : reals_below);
      ++i;
    }
    const double t = i < sorted.size() ? sorted[i].first
                                       : std::nextafter(group, std::numeric_limits<double>::infinity());
    const double far = static_cast<double>(n_real - reals_below) / static_cast<double>(n_real);
    const double frr = static_cast<double>(fakes_below) / static_cast<double>(n_fake);
    if (frr >= far) {
      const double d_prev = prev_far - prev_frr;
      const double d_cur = far - frr;
      const double alpha = d_prev / (d_prev - d_cur);
      return {prev_far + alpha * (far - prev_far), prev_t + alpha * (t - prev_t)};
    }
    prev_t = t;
    prev_far = far;
    prev_frr = frr;
  }
}

double compute_auc(std::span<const ScoreRecord> scores) {
  require_both_classes(scores, "AUC");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a].score < scores[b].score; });
  double fake_rank_sum = 0.0;
  std::size_t n_fake = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]].score == scores[order[i]].score) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k)
      if (scores[order[k]].label == Label::fake) {
        fake_rank_sum += avg_rank;
        ++n_fake;
      }
    i = j;
  }
  const auto nf = static_cast<double>(n_fake);
  const auto nr = static_cast<double>(scores.size() - n_fake);
  return (fake_rank_sum - nf * (nf + 1.0) / 2.0) / (nf * nr);
}

ThresholdMetrics thresholded_metrics(std::span<const ScoreRecord> scores, double threshold) {
  if (scores.empty()) throw ValidationError("thresholded metrics need at least one record");
  ThresholdMetrics m;
  auto& c = m.confusion;
  for (const auto& r : scores) {
    const bool predicted_fake = r.score >= threshold;
    if (r.label == Label::fake) ++(predicted_fake ? c.true_positive : c.false_negative);
    else ++(predicted_fake ? c.false_positive : c.true_negative);
  }
  m.accuracy = static_cast<double>(c.true_positive + c.true_negative) / static_cast<double>(scores.size());
  const auto tp = static_cast<double>(c.true_positive);
  if (c.true_positive + c.false_positive > 0) m.precision = tp / static_cast<double>(c.true_positive + c.false_positive);
  if (c.true_positive + c.false_negative > 0) m.recall = tp / static_cast<double>(c.true_positive + c.false_negative);
  if (m.precision + m.recall > 0.0) m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

EvalReport summarize(std::span<const ScoreRecord> scores, double threshold) {
  EvalReport report;
  report.n_scored = scores.size();
  report.threshold = threshold;
  if (scores.empty()) return report;
  report.at_threshold = thresholded_metrics(scores, threshold);
  const bool has_real = std::any_of(scores.begin(), scores.end(), [](const auto& r) { return r.label == Label::real; });
  const bool has_fake = std::any_of(scores.begin(), scores.end(), [](const auto& r) { return r.label == Label::fake; });
  if (has_real && has_fake) {
    report.eer = compute_eer(scores);
    report.auc = compute_auc(scores);
  }

  std::set<std::string> attacks;
  for (const auto& r : scores)
    if (r.label == Label::fake && r.attack) attacks.insert(*r.attack);
  for (const auto& attack : attacks) {
    ScoreSet subset;
    AttackBreakdown row;
    for (const auto& r : scores) {
      if (r.label == Label::real) subset.push_back(r);
      else if (r.attack == attack) {
        subset.push_back(r);
        ++row.n_fake;
      }
    }
    if (has_real) row.eer = compute_eer(subset).eer;
    report.per_attack[attack] = row;
  }
  return report;
}

EvalOutput evaluate_manifest(const ModelState& state, const EmbeddingProvider& provider,
                             const Manifest& manifest, ScoringMode mode, Aggregation agg, int workers,
                             const WindowConfig& windows) {
  using Outcome = std::variant<std::monostate, ScoreRecord, EvalFailure>;
  std::vector<Outcome> outcomes(manifest.size());
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    for (std::size_t i = next++; i < manifest.size(); i = next++) {
      const auto& entry = manifest.entries[i];
      try {
        ScoreRecord r;
        r.id = entry.id;
        r.label = entry.label;
        r.duration_s = entry.duration_s;
        r.quality_sisdr_db = entry.quality_sisdr_db;
        r.attack = entry.attack;
        if (entry.codec_tag) r.metadata["codec_tag"] = *entry.codec_tag;
        r.score = score_utterance(state, provider, manifest, entry, mode, agg, windows);
        outcomes[i] = std::move(r);
      } catch (const ValidationError& e) {
        outcomes[i] = EvalFailure{entry.id, e.what()};
      }
    }
  };

  const auto n_threads = static_cast<std::size_t>(std::max(1, workers));
  if (n_threads == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(work);
  }

  EvalOutput out;
  std::vector<EvalFailure> failures;
  for (auto& o : outcomes) {
    if (auto* r = std::get_if<ScoreRecord>(&o)) out.scores.push_back(std::move(*r));
    else if (auto* f = std::get_if<EvalFailure>(&o)) failures.push_back(std::move(*f));
  }
  out.report = summarize(out.scores);
  out.report.failures = std::move(failures);
  return out;
}

nlohmann::ordered_json to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["n_scored"] = report.n_scored;
  j["n_failed"] = report.failures.size();
  j["failures"] = nlohmann::ordered_json::array();
  for (const auto& f : report.failures) j["failures"].push_back({{"id", f.id}, {"error", f.message}});
  j["eer"] = report.eer ? nlohmann::ordered_json(report.eer->eer) : nlohmann::ordered_json();
  j["eer_threshold"] = report.eer ? nlohmann::ordered_json(report.eer->threshold) : nlohmann::ordered_json();
  j["auc"] = report.auc ? nlohmann::ordered_json(*report.auc) : nlohmann::ordered_json();
  j["threshold"] = report.threshold;
  j["accuracy"] = report.at_threshold.accuracy;
  j["f1"] = report.at_threshold.f1;
  j["precision"] = report.at_threshold.precision;
  j["recall"] = report.at_threshold.recall;
  const auto& c = report.at_threshold.confusion;
  j["confusion"] = {{"true_positive", c.true_positive},
                    {"false_positive", c.false_positive},
                    {"true_negative", c.true_negative},
                    {"false_negative", c.false_negative}};
  j["per_attack"] = nlohmann::ordered_json::object();
  for (const auto& [attack, row] : report.per_attack)
    j["per_attack"][attack] = {{"n_fake", row.n_fake},
                               {"eer", row.eer ? nlohmann::ordered_json(*row.eer) : nlohmann::ordered_json()}};
  return j;
}

std::string serialize_scores(std::span<const ScoreRecord> scores) {
  std::set<std::string> extra;
  for (const auto& r : scores)
    for (const auto& [key, value] : r.metadata) extra.insert(key);

  std::string out;
  for (std::size_t i = 0; i < std::size(kScoreColumns); ++i) out += (i ? "," : "") + std::string(kScoreColumns[i]);
  for (const auto& key : extra) out += "," + csv_field(key);
  out += '\n';
  for (const auto& r : scores) {
    out += csv_field(r.id);
    out += ',' + format_g(r.score, 9);
    out += ',' + std::string(to_string(r.label));
    out += ',' + format_g(r.duration_s, 9);
    out += ',' + (r.quality_sisdr_db ? format_g(*r.quality_sisdr_db, 9) : std::string());
    out += ',' + (r.attack ? csv_field(*r.attack) : std::string());
    for (const auto& key : extra) {
      auto it = r.metadata.find(key);
      out += ',' + (it == r.metadata.end() ? std::string() : csv_field(it->second));
    }
    out += '\n';
  }
  return out;
}

ScoreSet parse_scores(std::string_view text) {
  ScoreSet scores;
  std::vector<std::string> header;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    auto fields = split_csv_line(line, line_no);
    if (header.empty()) {
      if (fields.size() < std::size(kScoreColumns) ||
          !std::equal(std::begin(kScoreColumns), std::end(kScoreColumns), fields.begin()))
        throw ValidationError("score CSV header must start with id,score,label,duration_s,quality_sisdr_db,attack");
      header = std::move(fields);
      continue;
    }
    if (fields.size() != header.size())
      throw ValidationError("score CSV line " + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
    ScoreRecord r;
    r.id = fields[0];
    r.score = parse_number(fields[1], line_no, "score");
    if (!(r.score >= 0.0 && r.score <= 1.0))
      throw ValidationError("score CSV line " + std::to_string(line_no) + ": score outside [0, 1]");
    r.label = parse_label(fields[2]);
    r.duration_s = parse_number(fields[3], line_no, "duration_s");
    if (!fields[4].empty()) r.quality_sisdr_db = parse_number(fields[4], line_no, "quality_sisdr_db");
    if (!fields[5].empty()) r.attack = fields[5];
    for (std::size_t k = std::size(kScoreColumns); k < header.size(); ++k)
      if (!fields[k].empty()) r.metadata[header[k]] = fields[k];
    scores.push_back(std::move(r));
  }
  if (header.empty()) throw ValidationError("score CSV is empty");
  return scores;
}

void save_scores(const std::filesystem::path& path, std::span<const ScoreRecord> scores) {
  write_file(path, serialize_scores(scores));
}

ScoreSet load_scores(const std::filesystem::path& path) {
  try {
    return parse_scores(read_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

}  // namespace spoofkit
