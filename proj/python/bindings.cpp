#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "spoofkit/analysis.hpp"
#include "spoofkit/calibrate.hpp"
#include "spoofkit/config.hpp"
#include "spoofkit/dsp.hpp"
#include "spoofkit/error.hpp"
#include "spoofkit/eval.hpp"
#include "spoofkit/losses.hpp"
#include "spoofkit/manifest.hpp"
#include "spoofkit/rng.hpp"

namespace py = pybind11;
using namespace spoofkit;

namespace {

Label to_label(int y) {
  if (y != 0 && y != 1) throw ValidationError("labels must be 0 (real) or 1 (fake)");
  return static_cast<Label>(y);
}

std::vector<Label> to_labels(const std::vector<int>& ys) {
  std::vector<Label> out;
  out.reserve(ys.size());
  for (int y : ys) out.push_back(to_label(y));
  return out;
}

ScoreSet to_scores(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw ValidationError("scores and labels differ in length");
  ScoreSet out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i].id = std::to_string(i);
    out[i].score = scores[i];
    out[i].label = to_label(labels[i]);
  }
  return out;
}

Reduction to_reduction(const std::string& text) {
  if (text == "sum") return Reduction::sum;
  if (text == "mean") return Reduction::mean;
  throw ValidationError("reduction must be 'sum' or 'mean'");
}

AudioBuffer to_audio(std::vector<double> samples) {
  AudioBuffer a;
  a.samples = std::move(samples);
  return a;
}

py::tuple logit_result(const LogitLoss& r) { return py::make_tuple(r.loss, Eigen::Vector2d(r.grad)); }

py::tuple center_result(const CenterLossResult& r) {
  return py::make_tuple(r.loss, r.grad_embeddings, r.grad_centers);
}

}  // namespace

PYBIND11_MODULE(_spoofkit, m) {
  m.doc() = "Losses, metrics, calibration and signal utilities of the spoofkit toolkit.";
  m.attr("__version__") = std::string(kToolkitVersion);

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  // Losses. Labels are 0 for real and 1 for fake.
  m.def("cross_entropy", [](const Eigen::Vector2d& logits, int y) { return logit_result(cross_entropy(logits, to_label(y))); },
        py::arg("logits"), py::arg("label"), "Returns (loss, d loss / d logits).");
  m.def("focal_loss",
        [](const Eigen::Vector2d& logits, int y, double gamma) {
          return logit_result(focal_loss(logits, to_label(y), gamma));
        },
        py::arg("logits"), py::arg("label"), py::arg("gamma") = 2.0);
  m.def("distillation_loss",
        [](const Eigen::Vector2d& logits, const Eigen::Vector2d& teacher, double temperature) {
          return logit_result(distillation_loss(logits, teacher, temperature));
        },
        py::arg("logits"), py::arg("teacher_probs"), py::arg("temperature") = 2.0);
  m.def("center_loss",
        [](const Eigen::MatrixXd& x, const std::vector<int>& y, const Eigen::MatrixXd& centers,
           const std::string& reduction) {
          const auto labels = to_labels(y);
          return center_result(center_loss(x, labels, centers, to_reduction(reduction)));
        },
        py::arg("embeddings"), py::arg("labels"), py::arg("centers"), py::arg("reduction") = "sum",
        "Returns (loss, grad_embeddings, grad_centers).");
  m.def("hinged_center_loss",
        [](const Eigen::MatrixXd& x, const std::vector<int>& y, const Eigen::MatrixXd& centers, double margin,
           const std::string& reduction) {
          const auto labels = to_labels(y);
          return center_result(hinged_center_loss(x, labels, centers, margin, to_reduction(reduction)));
        },
        py::arg("embeddings"), py::arg("labels"), py::arg("centers"), py::arg("margin") = 1.0,
        py::arg("reduction") = "sum");
  m.def("smooth_hinged_center_loss",
        [](const Eigen::MatrixXd& x, const std::vector<int>& y, const Eigen::MatrixXd& centers, double beta,
           double margin, bool inverse_beta, const std::string& reduction) {
          const auto labels = to_labels(y);
          return center_result(
              smooth_hinged_center_loss(x, labels, centers, beta, margin, inverse_beta, to_reduction(reduction)));
        },
        py::arg("embeddings"), py::arg("labels"), py::arg("centers"), py::arg("beta") = 20.0,
        py::arg("margin") = 1.0, py::arg("inverse_beta") = false, py::arg("reduction") = "sum");
  m.def("oc_softmax_loss",
        [](const Eigen::MatrixXd& x, const std::vector<int>& y, const Eigen::VectorXd& direction, double alpha,
           double margin_real, double margin_fake) {
          const auto labels = to_labels(y);
          const auto r = oc_softmax_loss(x, labels, direction, alpha, margin_real, margin_fake);
          return py::make_tuple(r.loss, r.grad_embeddings, r.grad_direction);
        },
        py::arg("embeddings"), py::arg("labels"), py::arg("direction"), py::arg("alpha") = 20.0,
        py::arg("margin_real") = 0.9, py::arg("margin_fake") = 0.2);

  // Metrics. Scores are p(fake).
  m.def("eer",
        [](const std::vector<double>& s, const std::vector<int>& y) {
          const auto r = compute_eer(to_scores(s, y));
          return py::make_tuple(r.eer, r.threshold);
        },
        py::arg("scores"), py::arg("labels"), "Returns (eer, threshold).");
  m.def("auc", [](const std::vector<double>& s, const std::vector<int>& y) { return compute_auc(to_scores(s, y)); },
        py::arg("scores"), py::arg("labels"));
  m.def("metrics",
        [](const std::vector<double>& s, const std::vector<int>& y, double threshold) {
          const auto r = thresholded_metrics(to_scores(s, y), threshold);
          py::dict d;
          d["accuracy"] = r.accuracy;
          d["f1"] = r.f1;
          d["precision"] = r.precision;
          d["recall"] = r.recall;
          d["tp"] = r.confusion.true_positive;
          d["fp"] = r.confusion.false_positive;
          d["tn"] = r.confusion.true_negative;
          d["fn"] = r.confusion.false_negative;
          return d;
        },
        py::arg("scores"), py::arg("labels"), py::arg("threshold") = 0.5);
  m.def("binned_eer",
        [](const std::vector<double>& s, const std::vector<int>& y, const std::vector<double>& durations,
           const std::vector<double>& edges) {
          auto set = to_scores(s, y);
          if (durations.size() != set.size()) throw ValidationError("durations and scores differ in length");
          for (std::size_t i = 0; i < set.size(); ++i) set[i].duration_s = durations[i];
          const auto report = binned_eer(set, BinSpec{BinField::duration_s, edges});
          py::list rows;
          for (const auto& r : report.rows) {
            py::dict d;
            d["low"] = r.low;
            d["high"] = r.high;
            d["count"] = r.count;
            d["eer"] = r.eer;
            d["note"] = r.note;
            rows.append(d);
          }
          return rows;
        },
        py::arg("scores"), py::arg("labels"), py::arg("durations"), py::arg("edges"));

  // Calibration.
  m.def("platt_fit",
        [](const std::vector<double>& s, const std::vector<int>& y, bool prior_smoothing) {
          PlattFitOptions options;
          options.prior_smoothing = prior_smoothing;
          const auto fit = platt_fit(to_scores(s, y), options);
          py::dict d;
          d["a0"] = fit.model.a0;
          d["a1"] = fit.model.a1;
          d["iterations"] = fit.iterations;
          d["nll"] = fit.nll;
          d["bound_hit"] = fit.bound_hit;
          d["orientation_warning"] = fit.orientation_warning;
          return d;
        },
        py::arg("scores"), py::arg("labels"), py::arg("prior_smoothing") = false);
  m.def("platt_apply", [](double a0, double a1, double p) { return platt_apply(PlattModel{a0, a1}, p); },
        py::arg("a0"), py::arg("a1"), py::arg("p"));

  // Signal processing on 16 kHz mono sample arrays.
  m.def("standardize", [](std::vector<double> x) { return standardize(to_audio(std::move(x))).audio.samples; },
        py::arg("samples"));
  m.def("bandpass",
        [](std::vector<double> x, double low, double high) { return bandpass(to_audio(std::move(x)), low, high).samples; },
        py::arg("samples"), py::arg("low_hz") = 300.0, py::arg("high_hz") = 3400.0);
  m.def("resample_roundtrip", [](std::vector<double> x) { return resample_roundtrip(to_audio(std::move(x))).samples; },
        py::arg("samples"));
  m.def("add_awgn",
        [](std::vector<double> x, double snr_db, std::uint64_t seed) {
          Rng rng(seed);
          return add_awgn(to_audio(std::move(x)), snr_db, rng).samples;
        },
        py::arg("samples"), py::arg("snr_db"), py::arg("seed") = 0);

  // Manifests.
  m.def("sample_manifest",
        [](const std::filesystem::path& path, std::size_t n, std::uint64_t seed, std::optional<double> fake_fraction) {
          const auto manifest = load_manifest(path);
          const auto sampled =
              fake_fraction ? sample_proportioned(manifest, n, *fake_fraction, seed) : sample_fixed(manifest, n, seed);
          std::vector<std::string> ids;
          for (const auto& e : sampled.entries) ids.push_back(e.id);
          return ids;
        },
        py::arg("path"), py::arg("n"), py::arg("seed") = 0, py::arg("fake_fraction") = py::none(),
        "Ids of a seeded subsample, in manifest order.");
}
