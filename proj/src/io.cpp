#include "modalbound/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "modalbound/random.hpp"

namespace modalbound {
namespace {

json vector_json(const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json matrix_json(const MatrixXd& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) rows.push_back(vector_json(m.row(r).transpose()));
  return rows;
}

VectorXd vector_from(const json& j, const std::string& what) {
  if (!j.is_array()) throw LayoutError(what + " must be an array");
  VectorXd v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw LayoutError(what + " must hold numbers");
    v(static_cast<Index>(i)) = j[i].get<double>();
  }
  return v;
}

MatrixXd matrix_from(const json& j, Index cols, const std::string& what) {
  if (!j.is_array()) throw LayoutError(what + " must be an array of rows");
  MatrixXd m(static_cast<Index>(j.size()), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    const VectorXd row = vector_from(j[r], what);
    if (row.size() != cols) throw LayoutError(what + " has a row of the wrong length");
    m.row(static_cast<Index>(r)) = row.transpose();
  }
  return m;
}

const json& field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw LayoutError(where + " lacks field '" + key + "'");
  return j.at(key);
}

}  // namespace

ConfigReader::ConfigReader(const json& node, std::string path)
    : node_(node), path_(std::move(path)) {
  if (!node_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
}

std::string ConfigReader::path_of(const std::string& key) const {
  return path_.empty() ? key : path_ + "." + key;
}

bool ConfigReader::has(const std::string& key) const {
  return node_.contains(key) && !node_.at(key).is_null();
}

const json& ConfigReader::at(const std::string& key) const {
  if (!has(key)) throw ConfigError(path_of(key), "missing");
  return node_.at(key);
}

ConfigReader ConfigReader::child(const std::string& key) const {
  static const json empty = json::object();
  return has(key) ? ConfigReader(at(key), path_of(key)) : ConfigReader(empty, path_of(key));
}

double ConfigReader::number(const std::string& key) const {
  const json& j = at(key);
  if (!j.is_number()) throw ConfigError(path_of(key), "expected a number");
  return j.get<double>();
}

double ConfigReader::number(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

std::int64_t ConfigReader::integer(const std::string& key) const {
  const json& j = at(key);
  if (!j.is_number_integer()) throw ConfigError(path_of(key), "expected an integer");
  return j.get<std::int64_t>();
}

std::int64_t ConfigReader::integer(const std::string& key, std::int64_t fallback) const {
  return has(key) ? integer(key) : fallback;
}

std::uint64_t ConfigReader::seed(const std::string& key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  const json& j = at(key);
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0))
    throw ConfigError(path_of(key), "expected a non-negative integer");
  return j.get<std::uint64_t>();
}

std::string ConfigReader::string(const std::string& key, const std::string& fallback) const {
  if (!has(key)) return fallback;
  const json& j = at(key);
  if (!j.is_string()) throw ConfigError(path_of(key), "expected a string");
  return j.get<std::string>();
}

bool ConfigReader::boolean(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const json& j = at(key);
  if (!j.is_boolean()) throw ConfigError(path_of(key), "expected true or false");
  return j.get<bool>();
}

std::vector<double> ConfigReader::numbers(const std::string& key) const {
  const json& j = at(key);
  if (!j.is_array()) throw ConfigError(path_of(key), "expected an array of numbers");
  std::vector<double> out;
  for (const auto& e : j) {
    if (!e.is_number()) throw ConfigError(path_of(key), "expected an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

std::vector<int> ConfigReader::integers(const std::string& key) const {
  const json& j = at(key);
  if (!j.is_array()) throw ConfigError(path_of(key), "expected an array of integers");
  std::vector<int> out;
  for (const auto& e : j) {
    if (!e.is_number_integer()) throw ConfigError(path_of(key), "expected an array of integers");
    out.push_back(e.get<int>());
  }
  return out;
}

json to_json(const ModalityLayout& layout) { return {{"dims", layout.dims()}}; }

ModalityLayout layout_from_json(const json& j) {
  const json& dims = field(j, "dims", "layout");
  if (!dims.is_array()) throw LayoutError("layout.dims must be an array");
  std::vector<int> d;
  for (const auto& e : dims) {
    if (!e.is_number_integer()) throw LayoutError("layout.dims must hold integers");
    d.push_back(e.get<int>());
  }
  return ModalityLayout(std::move(d));
}

json to_json(const GroundTruth& gt) {
  json mixing = json::array();
  for (const auto& w : gt.mixing_matrices) mixing.push_back(matrix_json(w));
  return {{"latent_dim", gt.latent_dim},
          {"noise_sigma", gt.noise_sigma},
          {"bayes_threshold", gt.bayes_threshold},
          {"latent_metric", vector_json(gt.latent_metric)},
          {"mixing_matrices", mixing},
          {"class_centers", matrix_json(gt.class_centers)}};
}

GroundTruth ground_truth_from_json(const json& j, const ModalityLayout& layout) {
  GroundTruth gt;
  const json& ld = field(j, "latent_dim", "ground_truth");
  if (!ld.is_number_integer()) throw LayoutError("ground_truth.latent_dim must be an integer");
  gt.latent_dim = ld.get<int>();
  gt.noise_sigma = field(j, "noise_sigma", "ground_truth").get<double>();
  gt.bayes_threshold = field(j, "bayes_threshold", "ground_truth").get<double>();
  gt.latent_metric = vector_from(field(j, "latent_metric", "ground_truth"), "latent_metric");
  for (const auto& w : field(j, "mixing_matrices", "ground_truth"))
    gt.mixing_matrices.push_back(matrix_from(w, gt.latent_dim, "mixing matrix"));
  gt.class_centers = matrix_from(field(j, "class_centers", "ground_truth"), gt.latent_dim, "class_centers");
  gt.validate(layout);
  return gt;
}

json to_json(const Dataset& data) {
  json samples = json::array();
  for (Index i = 0; i < data.size(); ++i) {
    const auto& x = data.samples[static_cast<std::size_t>(i)];
    json features = json::array();
    for (const auto& f : x.features) features.push_back(vector_json(f));
    json s = {{"features", features}, {"present", x.present}, {"label", x.label}};
    if (data.latents) s["latent"] = vector_json(data.latents->row(i).transpose());
    samples.push_back(std::move(s));
  }
  json out = {{"layout", to_json(data.layout)},
              {"seed", data.seed},
              {"num_classes", data.num_classes}};
  if (data.ground_truth) out["ground_truth"] = to_json(*data.ground_truth);
  out["samples"] = std::move(samples);
  return out;
}

Dataset dataset_from_json(const json& j) {
  try {
    Dataset data;
    data.layout = layout_from_json(field(j, "layout", "dataset"));
    data.seed = field(j, "seed", "dataset").get<std::uint64_t>();
    data.num_classes = j.value("num_classes", 2);
    if (j.contains("ground_truth") && !j.at("ground_truth").is_null())
      data.ground_truth = ground_truth_from_json(j.at("ground_truth"), data.layout);
    const json& samples = field(j, "samples", "dataset");
    bool all_latent = !samples.empty();
    for (const auto& s : samples) all_latent = all_latent && s.contains("latent");
    if (all_latent && data.ground_truth)
      data.latents = MatrixXd(static_cast<Index>(samples.size()), data.ground_truth->latent_dim);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const json& s = samples[i];
      MultimodalSample x;
      for (const auto& f : field(s, "features", "sample")) x.features.push_back(vector_from(f, "features"));
      for (const auto& p : field(s, "present", "sample")) x.present.push_back(p.get<bool>());
      x.label = field(s, "label", "sample").get<int>();
      if (data.latents) {
        const VectorXd z = vector_from(s.at("latent"), "latent");
        if (z.size() != data.latents->cols()) throw LayoutError("latent has wrong length");
        data.latents->row(static_cast<Index>(i)) = z.transpose();
      }
      data.samples.push_back(std::move(x));
    }
    data.validate();
    return data;
  } catch (const json::exception& e) {
    throw LayoutError(std::string("malformed dataset: ") + e.what());
  }
}

json to_json(const DiagonalMetricModel& model) {
  return {{"lambdas", vector_json(model.lambdas)}, {"bias", model.bias},
          {"mask", model.mask.members()},          {"eigen_cap", model.caps.eigen_cap},
          {"dist_cap", model.caps.dist_cap},       {"feature_cap", model.caps.feature_cap}};
}

DiagonalMetricModel model_from_json(const json& j) {
  try {
    DiagonalMetricModel m;
    m.lambdas = vector_from(field(j, "lambdas", "model"), "lambdas");
    m.bias = field(j, "bias", "model").get<double>();
    m.mask = ModalitySet(field(j, "mask", "model").get<std::vector<int>>());
    m.caps.eigen_cap = field(j, "eigen_cap", "model").get<double>();
    m.caps.dist_cap = field(j, "dist_cap", "model").get<double>();
    m.caps.feature_cap = field(j, "feature_cap", "model").get<double>();
    return m;
  } catch (const json::exception& e) {
    throw LayoutError(std::string("malformed model: ") + e.what());
  }
}

std::string to_string(RiskMode mode) { return mode == RiskMode::ustat ? "ustat" : "block"; }

std::string to_string(SupMethod method) {
  return method == SupMethod::grid ? "grid" : "sign-weighted-opt";
}

json to_json(const ComplexityEstimate& est) {
  return {{"value", est.value},
          {"n_blocks", est.n_blocks},
          {"mc_trials", est.mc_trials},
          {"stderr", est.stderr_mc},
          {"sup_method", to_string(est.sup_method)}};
}

json to_json(const BoundReport& report) {
  json terms = json::object();
  for (const auto& [name, value] : report.terms) terms[name] = value;
  return {{"theorem", to_string(report.theorem)},
          {"lhs", report.lhs ? json(*report.lhs) : json(nullptr)},
          {"rhs", report.rhs ? json(*report.rhs) : json(nullptr)},
          {"relation", report.relation == Relation::le ? "<=" : ">="},
          {"terms", terms},
          {"holds", report.holds ? json(*report.holds) : json(nullptr)},
          {"validity_flags", report.validity_flags}};
}

LossSpec LossSettings::make(const MetricCaps& caps, Index total_dim) const {
  LossSpec spec = LossSpec::certified(caps, total_dim, margin, clip.value_or(margin + caps.dist_cap));
  spec.validate();
  return spec;
}

LossSettings loss_settings_from_json(const ConfigReader& r) {
  LossSettings s;
  s.margin = r.number("margin", 1.0);
  if (r.has("clip")) s.clip = r.number("clip");
  if (!(s.margin >= 0.0)) throw ConfigError(r.path_of("margin"), "must be >= 0");
  if (s.clip && !(*s.clip >= s.margin && *s.clip > 0.0))
    throw ConfigError(r.path_of("clip"), "must be > 0 and >= margin");
  return s;
}

MetricCaps caps_from_json(const ConfigReader& r, std::optional<double>* feature_cap) {
  MetricCaps caps;
  caps.eigen_cap = r.number("eigen_cap", 1.0);
  caps.dist_cap = r.number("dist_cap", 64.0);
  if (!(caps.eigen_cap > 0.0)) throw ConfigError(r.path_of("eigen_cap"), "must be > 0");
  if (!(caps.dist_cap > 0.0)) throw ConfigError(r.path_of("dist_cap"), "must be > 0");
  if (r.has("feature_cap")) {
    const double b = r.number("feature_cap");
    if (!(b > 0.0)) throw ConfigError(r.path_of("feature_cap"), "must be > 0");
    caps.feature_cap = b;
    if (feature_cap) *feature_cap = b;
  }
  return caps;
}

TrainConfig train_config_from_json(const ConfigReader& r) {
  TrainConfig cfg;
  cfg.max_iters = static_cast<int>(r.integer("max_iters", cfg.max_iters));
  const std::string schedule = r.string("schedule", "inverse-sqrt");
  if (schedule == "constant")
    cfg.schedule = StepSchedule::constant;
  else if (schedule == "inverse-sqrt")
    cfg.schedule = StepSchedule::inverse_sqrt;
  else
    throw ConfigError(r.path_of("schedule"), "expected 'constant' or 'inverse-sqrt'");
  cfg.step = r.number("step", cfg.step);
  cfg.tol = r.number("tol", cfg.tol);
  const std::string mode = r.string("risk_mode", "ustat");
  if (mode == "ustat")
    cfg.risk_mode = RiskMode::ustat;
  else if (mode == "block")
    cfg.risk_mode = RiskMode::block;
  else
    throw ConfigError(r.path_of("risk_mode"), "expected 'ustat' or 'block'");
  cfg.seed = r.seed("seed", cfg.seed);
  if (cfg.max_iters < 1) throw ConfigError(r.path_of("max_iters"), "must be >= 1");
  if (!(cfg.step > 0.0)) throw ConfigError(r.path_of("step"), "must be > 0");
  if (!(cfg.tol >= 0.0)) throw ConfigError(r.path_of("tol"), "must be >= 0");
  return cfg;
}

GeneratorParams generator_params_from_json(const ConfigReader& r) {
  GeneratorParams p;
  p.latent_dim = static_cast<int>(r.integer("latent_dim", p.latent_dim));
  p.noise_sigma = r.number("noise_sigma", p.noise_sigma);
  p.num_classes = static_cast<int>(r.integer("num_classes", p.num_classes));
  p.center_scale = r.number("center_scale", p.center_scale);
  const std::string mixing = r.string("mixing", "random");
  if (mixing == "random")
    p.mixing = Mixing::random;
  else if (mixing == "identity")
    p.mixing = Mixing::identity;
  else
    throw ConfigError(r.path_of("mixing"), "expected 'random' or 'identity'");
  p.mixing_scale = r.number("mixing_scale", p.mixing_scale);
  p.mixing_seed = r.seed("mixing_seed", p.mixing_seed);
  if (r.has("latent_metric")) {
    const auto v = r.numbers("latent_metric");
    p.latent_metric = Eigen::Map<const VectorXd>(v.data(), static_cast<Index>(v.size()));
  }
  p.bayes_threshold = r.number("bayes_threshold", p.bayes_threshold);
  if (p.latent_dim < 1) throw ConfigError(r.path_of("latent_dim"), "must be >= 1");
  if (!(p.noise_sigma >= 0.0)) throw ConfigError(r.path_of("noise_sigma"), "must be >= 0");
  if (p.num_classes < 1) throw ConfigError(r.path_of("num_classes"), "must be >= 1");
  return p;
}

ExperimentConfig experiment_from_json(const json& root) {
  const ConfigReader r(root, "");
  ExperimentConfig cfg;
  if (!r.has("layout")) throw ConfigError("layout", "missing");
  try {
    cfg.generator.layout = layout_from_json(root.at("layout"));
  } catch (const LayoutError& e) {
    throw ConfigError("layout", e.what());
  }
  cfg.loss = loss_settings_from_json(r.child("loss"));
  cfg.caps = caps_from_json(r.child("metric"), &cfg.feature_cap);
  cfg.train = train_config_from_json(r.child("train"));

  const ModalityLayout& layout = cfg.generator.layout;
  try {
    if (r.has("ground_truth")) {
      cfg.generator.ground_truth = ground_truth_from_json(root.at("ground_truth"), layout);
    } else {
      const ConfigReader g = r.child("generator");
      const GeneratorParams params = generator_params_from_json(g);
      GroundTruth gt = make_ground_truth(layout, params);
      if (!g.has("bayes_threshold")) {
        const ConfigReader c = g.child("calibrate");
        const Index reference_n = c.integer("reference_n", 4000);
        if (reference_n < 2) throw ConfigError(c.path_of("reference_n"), "must be >= 2");
        const bool fit_metric = c.boolean("fit_metric", !g.has("latent_metric"));
        const LossSpec spec = cfg.loss.make(cfg.caps, gt.latent_dim);
        gt = calibrate_ground_truth(gt, layout, spec, cfg.caps, reference_n,
                                    substream_key(params.mixing_seed, {0x63616cULL}), fit_metric);
      }
      cfg.generator.ground_truth = std::move(gt);
    }
  } catch (const LayoutError& e) {
    throw ConfigError(r.has("ground_truth") ? "ground_truth" : "generator", e.what());
  }
  return cfg;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path, std::string("not valid JSON: ") + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("write to '" + path + "' failed");
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string training_log_csv(const TrainResult& result) {
  std::ostringstream out;
  out << "iter,risk,step_size\n";
  for (const auto& e : result.log)
    out << e.iter << ',' << format_double(e.risk) << ',' << format_double(e.step_size) << '\n';
  return out.str();
}

}  // namespace modalbound
