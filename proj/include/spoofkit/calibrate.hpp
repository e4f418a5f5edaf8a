#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "spoofkit/eval.hpp"

namespace spoofkit {

// Calibrated p(fake) = 1 / (1 + exp(a0 + a1 * p)). Order preserving iff a1 < 0.
struct PlattModel {
  double a0 = 0.0;
  double a1 = 0.0;

  friend bool operator==(const PlattModel&, const PlattModel&) = default;
};

inline constexpr double kPlattCoefficientBound = 50.0;

struct PlattFitOptions {
  // Replace 0/1 targets with (N+ + 1)/(N+ + 2) and 1/(N- + 2).
  bool prior_smoothing = false;
  int max_iterations = 200;
  double gradient_tolerance = 1e-8;
};

struct PlattFit {
  PlattModel model;
  int iterations = 0;
  double gradient_norm = 0.0;
  double nll = 0.0;
  // A coefficient reached the magnitude bound (typically separable data).
  bool bound_hit = false;
  // a1 >= 0: higher raw scores do not indicate fake on this set.
  bool orientation_warning = false;
};

double platt_apply(const PlattModel& model, double p);

// Minimizes the mean negative log-likelihood with damped Newton steps inside
// the box |a0|, |a1| <= kPlattCoefficientBound. Throws NumericError when the
// projected gradient norm is still above tolerance after max_iterations.
PlattFit platt_fit(std::span<const ScoreRecord> calibration, const PlattFitOptions& options = {});

// Refuses models with a1 >= 0, which would reverse the score order.
ScoreSet calibrate_scores(const PlattModel& model, std::span<const ScoreRecord> scores);

nlohmann::ordered_json to_json(const PlattModel& model, const std::string& fitted_on, std::size_t n_records);
PlattModel platt_model_from_json(const nlohmann::json& j);
void save_platt_model(const std::filesystem::path& path, const PlattModel& model,
                      const std::string& fitted_on, std::size_t n_records);
PlattModel load_platt_model(const std::filesystem::path& path);

}  // namespace spoofkit
