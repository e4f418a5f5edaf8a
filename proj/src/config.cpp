#include "spoofkit/config.hpp"

#include <set>

#include "spoofkit/audio.hpp"
#include "spoofkit/error.hpp"
#include "spoofkit/io.hpp"

namespace spoofkit {
namespace {

using nlohmann::json;

// Reads optional keys from one JSON object and rejects any key it was not asked about.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ValidationError("config: '" + path_ + "' must be an object");
  }
  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : j_.items())
      if (!seen_.contains(key)) throw ValidationError("config: unknown key '" + where(key) + "'");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ValidationError("config: bad value for '" + where(key) + "'");
    }
  }

  void interval(const char* key, Interval& out) {
    std::vector<double> v;
    get(key, v);
    if (!j_.contains(key)) return;
    if (v.size() != 2) throw ValidationError("config: '" + where(key) + "' must be [low, high]");
    out = {v[0], v[1]};
  }

  // Marks the key as known; nullptr when absent.
  const json* find(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

const char* to_string(Reduction r) { return r == Reduction::sum ? "sum" : "mean"; }

Reduction parse_reduction(const std::string& text) {
  if (text == "sum") return Reduction::sum;
  if (text == "mean") return Reduction::mean;
  throw ValidationError("config: center_reduction must be 'sum' or 'mean'");
}

void read_group(Section& parent, const char* key, GroupConfig& group) {
  const json* j = parent.find(key);
  if (!j) return;
  Section s(*j, parent.where(key));
  s.get("lr", group.lr);
  s.get("weight_decay", group.weight_decay);
}

}  // namespace

json to_json(const LossConfig& c) {
  return {{"weights",
           {{"cross_entropy", c.weights.cross_entropy},
            {"focal", c.weights.focal},
            {"center", c.weights.center},
            {"hinged_center", c.weights.hinged_center},
            {"smooth_hinged_center", c.weights.smooth_hinged_center},
            {"oc_softmax", c.weights.oc_softmax}}},
          {"gamma", c.gamma},
          {"beta", c.beta},
          {"hinge_margin", c.hinge_margin},
          {"oc_alpha", c.oc_alpha},
          {"oc_margin_real", c.oc_margin_real},
          {"oc_margin_fake", c.oc_margin_fake},
          {"distill_weight", c.distill_weight},
          {"distill_temperature", c.distill_temperature},
          {"center_reduction", to_string(c.center_reduction)},
          {"smooth_hinge_inverse_beta", c.smooth_hinge_inverse_beta}};
}

LossConfig loss_config_from_json(const json& j) {
  LossConfig c;
  Section s(j, "loss");
  if (const json* wj = s.find("weights")) {
    Section w(*wj, "loss.weights");
    w.get("cross_entropy", c.weights.cross_entropy);
    w.get("focal", c.weights.focal);
    w.get("center", c.weights.center);
    w.get("hinged_center", c.weights.hinged_center);
    w.get("smooth_hinged_center", c.weights.smooth_hinged_center);
    w.get("oc_softmax", c.weights.oc_softmax);
  }
  s.get("gamma", c.gamma);
  s.get("beta", c.beta);
  s.get("hinge_margin", c.hinge_margin);
  s.get("oc_alpha", c.oc_alpha);
  s.get("oc_margin_real", c.oc_margin_real);
  s.get("oc_margin_fake", c.oc_margin_fake);
  s.get("distill_weight", c.distill_weight);
  s.get("distill_temperature", c.distill_temperature);
  std::string reduction = to_string(c.center_reduction);
  s.get("center_reduction", reduction);
  c.center_reduction = parse_reduction(reduction);
  s.get("smooth_hinge_inverse_beta", c.smooth_hinge_inverse_beta);
  validate(c);
  return c;
}

json to_json(const OptimizerConfig& c) {
  return {{"backbone", {{"lr", c.backbone.lr}, {"weight_decay", c.backbone.weight_decay}}},
          {"head", {{"lr", c.head.lr}, {"weight_decay", c.head.weight_decay}}},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"eps", c.eps},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"schedule",
           {{"pct_up", c.schedule.pct_up},
            {"div_initial", c.schedule.div_initial},
            {"div_final", c.schedule.div_final}}}};
}

OptimizerConfig optimizer_config_from_json(const json& j) {
  OptimizerConfig c;
  Section s(j, "optimizer");
  read_group(s, "backbone", c.backbone);
  read_group(s, "head", c.head);
  s.get("beta1", c.beta1);
  s.get("beta2", c.beta2);
  s.get("eps", c.eps);
  s.get("epochs", c.epochs);
  s.get("batch_size", c.batch_size);
  if (const json* sj = s.find("schedule")) {
    Section sch(*sj, "optimizer.schedule");
    sch.get("pct_up", c.schedule.pct_up);
    sch.get("div_initial", c.schedule.div_initial);
    sch.get("div_final", c.schedule.div_final);
  }
  validate(c);
  return c;
}

ExperimentConfig config_from_json(const json& j, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  c.base_dir = base_dir;
  Section top(j, "");
  top.get("name", c.name);
  top.get("seed", c.seed);
  top.get("output_dir", c.output_dir);
  top.get("crop_s", c.crop_s);
  top.get("teacher", c.teacher);
  if (!(c.crop_s > 0.0)) throw ValidationError("config: crop_s must be > 0");

  if (const json* mj = top.find("manifests")) {
    Section m(*mj, "manifests");
    m.get("all", c.manifests.all);
    m.get("train", c.manifests.train);
    m.get("val", c.manifests.val);
    m.get("test", c.manifests.test);
  }

  if (const json* pj = top.find("provider")) {
    Section p(*pj, "provider");
    std::string kind = c.provider.kind, store;
    p.get("kind", kind);
    p.get("n_bands", c.provider.n_bands);
    p.get("store", store);
    p.get("dim", c.provider.dim);
    c.provider.kind = kind;
    c.provider.store = store;
    if (kind != "spectral" && kind != "file") throw ValidationError("config: unknown provider kind '" + kind + "'");
    if (c.provider.n_bands < 1) throw ValidationError("config: provider.n_bands must be >= 1");
  }

  if (const json* mj = top.find("model")) {
    Section m(*mj, "model");
    m.get("adapter", c.model.adapter);
    m.get("leaky_slope", c.model.leaky_slope);
  }

  if (const json* aj = top.find("augmentation")) {
    Section a(*aj, "augmentation");
    a.get("awgn_probability", c.augmentation.awgn_probability);
    a.interval("awgn_snr_db", c.augmentation.awgn_snr_db);
    a.get("rir_probability", c.augmentation.rir_probability);
    a.get("rir_files", c.augmentation.rir_files);
    a.get("resample_roundtrip", c.augmentation.resample_roundtrip);
    a.interval("power_range", c.augmentation.power_range);
  }

  if (const json* lj = top.find("loss")) c.loss = loss_config_from_json(*lj);
  if (const json* oj = top.find("optimizer")) c.optimizer = optimizer_config_from_json(*oj);

  if (const json* sj = top.find("scoring")) {
    Section s(*sj, "scoring");
    std::string mode(to_string(c.scoring.mode)), agg(to_string(c.scoring.aggregation));
    s.get("mode", mode);
    s.get("aggregation", agg);
    s.get("win_s", c.scoring.windows.win_s);
    s.get("step_s", c.scoring.windows.step_s);
    s.get("workers", c.scoring.workers);
    c.scoring.mode = parse_scoring_mode(mode);
    c.scoring.aggregation = parse_aggregation(agg);
    if (!(c.scoring.windows.win_s > 0.0 && c.scoring.windows.step_s > 0.0))
      throw ValidationError("config: scoring windows must be > 0");
    if (c.scoring.workers < 1) throw ValidationError("config: scoring.workers must be >= 1");
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return config_from_json(j, std::filesystem::absolute(path).parent_path());
}

nlohmann::ordered_json to_json(const ExperimentConfig& c, bool with_output_dir) {
  nlohmann::ordered_json j;
  j["name"] = c.name;
  j["seed"] = c.seed;
  j["manifests"] = {{"all", c.manifests.all}, {"train", c.manifests.train}, {"val", c.manifests.val},
                    {"test", c.manifests.test}};
  j["provider"] = {{"kind", c.provider.kind},
                   {"n_bands", c.provider.n_bands},
                   {"store", c.provider.store.generic_string()},
                   {"dim", c.provider.dim}};
  j["model"] = {{"adapter", c.model.adapter}, {"leaky_slope", c.model.leaky_slope}};
  const auto& a = c.augmentation;
  j["augmentation"] = {{"awgn_probability", a.awgn_probability},
                       {"awgn_snr_db", {a.awgn_snr_db.low, a.awgn_snr_db.high}},
                       {"rir_probability", a.rir_probability},
                       {"rir_files", a.rir_files},
                       {"resample_roundtrip", a.resample_roundtrip},
                       {"power_range", {a.power_range.low, a.power_range.high}}};
  j["loss"] = to_json(c.loss);
  j["optimizer"] = to_json(c.optimizer);
  j["crop_s"] = c.crop_s;
  j["teacher"] = c.teacher;
  j["scoring"] = {{"mode", to_string(c.scoring.mode)},
                  {"aggregation", to_string(c.scoring.aggregation)},
                  {"win_s", c.scoring.windows.win_s},
                  {"step_s", c.scoring.windows.step_s},
                  {"workers", c.scoring.workers}};
  if (with_output_dir) j["output_dir"] = c.output_dir;
  return j;
}

std::string config_hash(const ExperimentConfig& config) {
  // Round-trip through the sorted-key json type so the hash ignores key order.
  const json canonical = json::parse(to_json(config, false).dump());
  return hex64(fnv1a64(canonical.dump()));
}

std::filesystem::path resolve_path(const ExperimentConfig& config, const std::string& path) {
  std::filesystem::path p(path);
  if (p.empty() || p.is_absolute() || config.base_dir.empty()) return p;
  return (config.base_dir / p).lexically_normal();
}

AugmentationPolicy build_policy(const ExperimentConfig& config) {
  AugmentationPolicy policy;
  const auto& a = config.augmentation;
  policy.awgn_probability = a.awgn_probability;
  policy.awgn_snr_db = a.awgn_snr_db;
  policy.rir_probability = a.rir_probability;
  for (const auto& f : a.rir_files) policy.rir_bank.push_back(read_wav(resolve_path(config, f)));
  policy.resample_roundtrip = a.resample_roundtrip;
  policy.power_range = a.power_range;
  validate(policy);
  return policy;
}

}  // namespace spoofkit
