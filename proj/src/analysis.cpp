#include "spoofkit/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "spoofkit/error.hpp"
#include "spoofkit/io.hpp"

namespace spoofkit {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::optional<double> field_value(const ScoreRecord& r, BinField field) {
  if (field == BinField::duration_s) return r.duration_s;
  return r.quality_sisdr_db;
}

std::optional<std::string> category_value(const ScoreRecord& r, const std::string& field) {
  if (field == "attack") return r.attack;
  if (field == "label") return std::string(to_string(r.label));
  if (auto it = r.metadata.find(field); it != r.metadata.end()) return it->second;
  return std::nullopt;
}

std::string format_edge(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return format_g(v, 9);
}

nlohmann::ordered_json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json();
}

}  // namespace

BinField parse_bin_field(std::string_view text) {
  if (text == "duration_s" || text == "duration") return BinField::duration_s;
  if (text == "quality_sisdr_db" || text == "sisdr" || text == "quality") return BinField::quality_sisdr_db;
  throw ValidationError("unknown bin field '" + std::string(text) + "'");
}

std::string_view to_string(BinField field) {
  return field == BinField::duration_s ? "duration_s" : "quality_sisdr_db";
}

void validate(const BinSpec& spec) {
  if (spec.edges.size() < 2) throw ValidationError("bin spec needs at least 2 edges");
  for (std::size_t i = 0; i < spec.edges.size(); ++i) {
    const double e = spec.edges[i];
    if (std::isnan(e) || (std::isinf(e) && !(i + 1 == spec.edges.size() && e > 0) && !(i == 0 && e < 0)))
      throw ValidationError("bin edges must be finite apart from -inf first or +inf last");
    if (i > 0 && !(spec.edges[i - 1] < e)) throw ValidationError("bin edges must be strictly increasing");
  }
}

BinSpec default_duration_bins() { return {BinField::duration_s, {0.0, 2.0, 4.0, 8.0, 16.0, kInf}}; }

BinSpec default_sisdr_bins() {
  BinSpec spec{BinField::quality_sisdr_db, {}};
  for (int db = -5; db <= 40; db += 5) spec.edges.push_back(db);
  return spec;
}

BinReport binned_eer(std::span<const ScoreRecord> scores, const BinSpec& spec) {
  validate(spec);
  BinReport report;
  report.field = spec.field;
  const std::size_t n_bins = spec.edges.size() - 1;
  std::vector<ScoreSet> members(n_bins);
  for (const auto& r : scores) {
    const auto v = field_value(r, spec.field);
    if (!v) {
      ++report.missing;
      continue;
    }
    if (!(*v >= spec.edges.front() && *v < spec.edges.back())) {
      ++report.out_of_range;
      continue;
    }
    const auto bin = static_cast<std::size_t>(
        std::upper_bound(spec.edges.begin(), spec.edges.end(), *v) - spec.edges.begin() - 1);
    members[bin].push_back(r);
  }

  std::size_t max_count = 0;
  for (const auto& m : members) max_count = std::max(max_count, m.size());
  for (std::size_t b = 0; b < n_bins; ++b) {
    BinRow row;
    row.low = spec.edges[b];
    row.high = spec.edges[b + 1];
    row.count = members[b].size();
    for (const auto& r : members[b]) ++(r.label == Label::fake ? row.n_fake : row.n_real);
    if (row.n_real > 0 && row.n_fake > 0) row.eer = compute_eer(members[b]).eer;
    else if (row.count > 0) row.note = "single-class bin";
    else row.note = "empty bin";
    row.marker_size = max_count > 0 ? static_cast<double>(row.count) / static_cast<double>(max_count) : 0.0;
    report.rows.push_back(std::move(row));
  }
  return report;
}

CategoryReport category_report(std::span<const ScoreRecord> scores, const std::string& category_field,
                               double threshold, double delta) {
  if (!(delta >= 0.0)) throw ValidationError("category delta must be >= 0");
  CategoryReport report;
  report.field = category_field;
  report.threshold = threshold;
  report.delta = delta;

  std::map<std::string, std::pair<std::size_t, std::size_t>> tallies;  // correct, total
  std::size_t correct = 0, annotated = 0;
  for (const auto& r : scores) {
    const auto value = category_value(r, category_field);
    if (!value) {
      ++report.missing;
      continue;
    }
    const bool ok = (r.score >= threshold) == (r.label == Label::fake);
    auto& t = tallies[*value];
    t.first += ok;
    ++t.second;
    correct += ok;
    ++annotated;
  }
  if (annotated == 0) throw ValidationError("no record carries category field '" + category_field + "'");
  report.global_accuracy = static_cast<double>(correct) / static_cast<double>(annotated);
  for (const auto& [category, t] : tallies) {
    CategoryRow row;
    row.category = category;
    row.count = t.second;
    row.accuracy = static_cast<double>(t.first) / static_cast<double>(t.second);
    row.deviation = row.accuracy - report.global_accuracy;
    row.flagged = std::abs(row.deviation) > delta;
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string bin_report_csv(const BinReport& report) {
  std::string out = "bin_low,bin_high,count,eer,marker_size,note\n";
  for (const auto& row : report.rows) {
    out += format_edge(row.low) + ',' + format_edge(row.high) + ',' + std::to_string(row.count) + ',' +
           (row.eer ? format_g(*row.eer, 9) : std::string()) + ',' + format_g(row.marker_size, 9) + ',' +
           row.note + '\n';
  }
  return out;
}

std::string category_report_csv(const CategoryReport& report) {
  std::string out = "category,count,accuracy,deviation,flagged\n";
  for (const auto& row : report.rows) {
    std::string name = row.category;
    if (name.find_first_of(",\"\n") != std::string::npos) {
      std::string quoted = "\"";
      for (char c : name) quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
      name = quoted + "\"";
    }
    out += name + ',' + std::to_string(row.count) + ',' + format_g(row.accuracy, 9) + ',' +
           format_g(row.deviation, 9) + ',' + (row.flagged ? "1" : "0") + '\n';
  }
  return out;
}

nlohmann::ordered_json to_json(const BinReport& report) {
  nlohmann::ordered_json j;
  j["field"] = to_string(report.field);
  j["missing"] = report.missing;
  j["out_of_range"] = report.out_of_range;
  j["bins"] = nlohmann::ordered_json::array();
  for (const auto& row : report.rows) {
    j["bins"].push_back({{"low", format_edge(row.low)},
                         {"high", format_edge(row.high)},
                         {"count", row.count},
                         {"n_real", row.n_real},
                         {"n_fake", row.n_fake},
                         {"eer", optional_number(row.eer)},
                         {"marker_size", row.marker_size},
                         {"note", row.note}});
  }
  return j;
}

nlohmann::ordered_json to_json(const CategoryReport& report) {
  nlohmann::ordered_json j;
  j["field"] = report.field;
  j["threshold"] = report.threshold;
  j["delta"] = report.delta;
  j["global_accuracy"] = report.global_accuracy;
  j["missing"] = report.missing;
  j["categories"] = nlohmann::ordered_json::array();
  for (const auto& row : report.rows)
    j["categories"].push_back({{"category", row.category},
                               {"count", row.count},
                               {"accuracy", row.accuracy},
                               {"deviation", row.deviation},
                               {"flagged", row.flagged}});
  return j;
}

}  // namespace spoofkit
