#include "spoofkit/calibrate.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "spoofkit/error.hpp"
#include "spoofkit/io.hpp"
#include "spoofkit/losses.hpp"

namespace spoofkit {
namespace {

using Vec2 = std::array<double, 2>;

struct Objective {
  double nll = 0.0;
  Vec2 grad{};
  std::array<double, 3> hess{};  // h00, h01, h11
};

class PlattObjective {
 public:
  PlattObjective(std::span<const ScoreRecord> records, const PlattFitOptions& options) {
    std::size_t n_fake = 0;
    for (const auto& r : records) {
      if (!(r.score >= 0.0 && r.score <= 1.0)) throw ValidationError("score for '" + r.id + "' outside [0, 1]");
      n_fake += r.label == Label::fake;
    }
    const std::size_t n_real = records.size() - n_fake;
    if (n_fake == 0 || n_real == 0) throw ValidationError("Platt fitting requires both classes");
    double hi = 1.0, lo = 0.0;
    if (options.prior_smoothing) {
      hi = (static_cast<double>(n_fake) + 1.0) / (static_cast<double>(n_fake) + 2.0);
      lo = 1.0 / (static_cast<double>(n_real) + 2.0);
    }
    for (const auto& r : records) {
      scores_.push_back(r.score);
      targets_.push_back(r.label == Label::fake ? hi : lo);
    }
    prior_fake_ = static_cast<double>(n_fake) / static_cast<double>(records.size());
  }

  double prior_fake() const { return prior_fake_; }

  double nll(const Vec2& a) const {
    double total = 0.0;
    for (std::size_t i = 0; i < scores_.size(); ++i) {
      const double z = a[0] + a[1] * scores_[i];
      total += targets_[i] * softplus(z) + (1.0 - targets_[i]) * softplus(-z);
    }
    return total / static_cast<double>(scores_.size());
  }

  Objective evaluate(const Vec2& a) const {
    Objective o;
    for (std::size_t i = 0; i < scores_.size(); ++i) {
      const double p = scores_[i];
      const double t = targets_[i];
      const double z = a[0] + a[1] * p;
      const double calibrated = sigmoid(-z);
      o.nll += t * softplus(z) + (1.0 - t) * softplus(-z);
      const double dz = t - calibrated;
      const double w = calibrated * (1.0 - calibrated);
      o.grad[0] += dz;
      o.grad[1] += dz * p;
      o.hess[0] += w;
      o.hess[1] += w * p;
      o.hess[2] += w * p * p;
    }
    const double inv_n = 1.0 / static_cast<double>(scores_.size());
    o.nll *= inv_n;
    for (auto& g : o.grad) g *= inv_n;
    for (auto& h : o.hess) h *= inv_n;
    return o;
  }

 private:
  std::vector<double> scores_;
  std::vector<double> targets_;
  double prior_fake_ = 0.5;
};

bool at_bound(double v) { return std::abs(v) >= kPlattCoefficientBound; }

// Coordinates pinned at the bound with the descent direction pointing outward.
std::array<bool, 2> pinned(const Vec2& a, const Vec2& grad) {
  std::array<bool, 2> out{};
  for (int k = 0; k < 2; ++k)
    out[k] = (a[k] >= kPlattCoefficientBound && grad[k] < 0.0) ||
             (a[k] <= -kPlattCoefficientBound && grad[k] > 0.0);
  return out;
}

double projected_norm(const Vec2& a, const Vec2& grad) {
  const auto fixed = pinned(a, grad);
  double sq = 0.0;
  for (int k = 0; k < 2; ++k)
    if (!fixed[k]) sq += grad[k] * grad[k];
  return std::sqrt(sq);
}

Vec2 project(Vec2 a) {
  for (auto& v : a) v = std::clamp(v, -kPlattCoefficientBound, kPlattCoefficientBound);
  return a;
}

Vec2 newton_direction(const Objective& o, const std::array<bool, 2>& fixed) {
  Vec2 d{};
  const double h00 = o.hess[0], h01 = o.hess[1], h11 = o.hess[2];
  if (!fixed[0] && !fixed[1]) {
    const double det = h00 * h11 - h01 * h01;
    if (det > 1e-14 * (h00 * h11 + 1e-300)) {
      d[0] = -(h11 * o.grad[0] - h01 * o.grad[1]) / det;
      d[1] = -(h00 * o.grad[1] - h01 * o.grad[0]) / det;
    }
  } else if (!fixed[0] && h00 > 0.0) {
    d[0] = -o.grad[0] / h00;
  } else if (!fixed[1] && h11 > 0.0) {
    d[1] = -o.grad[1] / h11;
  }
  // Fall back to steepest descent when the Newton step is unusable.
  if (d[0] * o.grad[0] + d[1] * o.grad[1] >= 0.0 || !std::isfinite(d[0]) || !std::isfinite(d[1])) {
    for (int k = 0; k < 2; ++k) d[k] = fixed[k] ? 0.0 : -o.grad[k];
  }
  return d;
}

}  // namespace

double platt_apply(const PlattModel& model, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("Platt input must lie in [0, 1]");
  return 1.0 / (1.0 + std::exp(model.a0 + model.a1 * p));
}

PlattFit platt_fit(std::span<const ScoreRecord> calibration, const PlattFitOptions& options) {
  if (options.max_iterations < 1) throw ValidationError("max_iterations must be >= 1");
  PlattObjective objective(calibration, options);

  // Start at the class prior with a flat slope.
  const double prior = objective.prior_fake();
  Vec2 a = project({std::log((1.0 - prior) / prior), 0.0});
  Objective current = objective.evaluate(a);

  PlattFit fit;
  for (fit.iterations = 0; fit.iterations < options.max_iterations; ++fit.iterations) {
    fit.gradient_norm = projected_norm(a, current.grad);
    if (fit.gradient_norm < options.gradient_tolerance) break;

    const auto d = newton_direction(current, pinned(a, current.grad));
    double step = 1.0;
    bool accepted = false;
    for (int halvings = 0; halvings < 60; ++halvings, step *= 0.5) {
      const Vec2 trial = project({a[0] + step * d[0], a[1] + step * d[1]});
      const double slope = current.grad[0] * (trial[0] - a[0]) + current.grad[1] * (trial[1] - a[1]);
      const double value = objective.nll(trial);
      if (value <= current.nll + 1e-4 * slope) {
        a = trial;
        current = objective.evaluate(a);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  fit.gradient_norm = projected_norm(a, current.grad);
  if (!(fit.gradient_norm < options.gradient_tolerance))
    throw NumericError("Platt fit did not converge after " + std::to_string(fit.iterations) +
                       " iterations; final gradient norm " + format_g(fit.gradient_norm, 6));

  fit.model = {a[0], a[1]};
  fit.nll = current.nll;
  fit.bound_hit = at_bound(a[0]) || at_bound(a[1]);
  fit.orientation_warning = !(a[1] < 0.0);
  return fit;
}

ScoreSet calibrate_scores(const PlattModel& model, std::span<const ScoreRecord> scores) {
  if (!std::isfinite(model.a0) || !std::isfinite(model.a1))
    throw ValidationError("Platt coefficients must be finite");
  if (!(model.a1 < 0.0))
    throw ValidationError("Platt model has a1 >= 0 and would reverse the score order; refusing to apply it");
  ScoreSet out(scores.begin(), scores.end());
  for (auto& r : out) r.score = platt_apply(model, r.score);
  return out;
}

nlohmann::ordered_json to_json(const PlattModel& model, const std::string& fitted_on, std::size_t n_records) {
  return {{"a0", model.a0}, {"a1", model.a1}, {"fitted_on", fitted_on}, {"n_records", n_records}};
}

PlattModel platt_model_from_json(const nlohmann::json& j) {
  try {
    PlattModel m{j.at("a0").get<double>(), j.at("a1").get<double>()};
    if (!std::isfinite(m.a0) || !std::isfinite(m.a1)) throw ValidationError("Platt coefficients must be finite");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("invalid calibration model: ") + e.what());
  }
}

void save_platt_model(const std::filesystem::path& path, const PlattModel& model,
                      const std::string& fitted_on, std::size_t n_records) {
  write_file(path, to_json(model, fitted_on, n_records).dump(2) + "\n");
}

PlattModel load_platt_model(const std::filesystem::path& path) {
  try {
    return platt_model_from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

}  // namespace spoofkit
