#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "spoofkit/eval.hpp"

namespace spoofkit {

enum class BinField { duration_s, quality_sisdr_db };

BinField parse_bin_field(std::string_view text);
std::string_view to_string(BinField field);

// Bins are [edges[i], edges[i+1]). The last edge may be +inf.
struct BinSpec {
  BinField field = BinField::duration_s;
  std::vector<double> edges;
};

void validate(const BinSpec& spec);

// 0-2, 2-4, 4-8, 8-16, 16+ seconds.
BinSpec default_duration_bins();
// 5 dB steps from -5 to 40 dB.
BinSpec default_sisdr_bins();

struct BinRow {
  double low = 0.0;
  double high = 0.0;
  std::size_t count = 0;
  std::size_t n_real = 0;
  std::size_t n_fake = 0;
  std::optional<double> eer;  // only when both classes occupy the bin
  double marker_size = 0.0;   // count relative to the fullest bin
  std::string note;
};

struct BinReport {
  BinField field = BinField::duration_s;
  std::vector<BinRow> rows;
  std::size_t missing = 0;       // records without the binned field
  std::size_t out_of_range = 0;  // records outside [edges.front(), edges.back())
};

BinReport binned_eer(std::span<const ScoreRecord> scores, const BinSpec& spec);

struct CategoryRow {
  std::string category;
  std::size_t count = 0;
  double accuracy = 0.0;
  double deviation = 0.0;  // accuracy - global accuracy
  bool flagged = false;
};

struct CategoryReport {
  std::string field;
  double threshold = 0.5;
  double delta = 0.1;
  double global_accuracy = 0.0;
  std::size_t missing = 0;
  std::vector<CategoryRow> rows;  // sorted by category value
};

// `category_field` is "attack", "label" or any metadata column. Records that
// lack the field are counted in `missing`; rows deviating from the global
// accuracy by more than delta are flagged.
CategoryReport category_report(std::span<const ScoreRecord> scores, const std::string& category_field,
                               double threshold = 0.5, double delta = 0.1);

// bin_low,bin_high,count,eer,marker_size (+ note). Empty eer means no EER.
std::string bin_report_csv(const BinReport& report);
// category,count,accuracy,deviation,flagged
std::string category_report_csv(const CategoryReport& report);

nlohmann::ordered_json to_json(const BinReport& report);
nlohmann::ordered_json to_json(const CategoryReport& report);

}  // namespace spoofkit
