#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "modalbound/bounds.hpp"

namespace modalbound {

using json = nlohmann::json;

// Typed access to a JSON config object. Failures raise ConfigError naming the
// dotted path of the offending field.
class ConfigReader {
 public:
  ConfigReader(const json& node, std::string path);

  bool has(const std::string& key) const;
  ConfigReader child(const std::string& key) const;
  const json& raw() const { return node_; }
  std::string path_of(const std::string& key) const;

  double number(const std::string& key) const;
  double number(const std::string& key, double fallback) const;
  std::int64_t integer(const std::string& key) const;
  std::int64_t integer(const std::string& key, std::int64_t fallback) const;
  std::uint64_t seed(const std::string& key, std::uint64_t fallback) const;
  std::string string(const std::string& key, const std::string& fallback) const;
  bool boolean(const std::string& key, bool fallback) const;
  std::vector<double> numbers(const std::string& key) const;
  std::vector<int> integers(const std::string& key) const;

 private:
  const json& at(const std::string& key) const;
  const json& node_;
  std::string path_;
};

json to_json(const ModalityLayout& layout);
ModalityLayout layout_from_json(const json& j);

json to_json(const GroundTruth& gt);
GroundTruth ground_truth_from_json(const json& j, const ModalityLayout& layout);

json to_json(const Dataset& data);
Dataset dataset_from_json(const json& j);

json to_json(const DiagonalMetricModel& model);
DiagonalMetricModel model_from_json(const json& j);

json to_json(const ComplexityEstimate& est);
json to_json(const BoundReport& report);

std::string to_string(RiskMode mode);
std::string to_string(SupMethod method);

// Loss settings as configured; Lipschitz constants follow from the caps.
struct LossSettings {
  double margin = 1.0;
  std::optional<double> clip;  // defaults to margin + dist_cap

  LossSpec make(const MetricCaps& caps, Index total_dim) const;
};

struct CalibrationSettings {
  Index reference_n = 4000;
  bool fit_metric = true;
};

// Everything needed to draw data and train: shared by generate, train and sweep.
struct ExperimentConfig {
  GeneratorConfig generator;
  LossSettings loss;
  MetricCaps caps;
  std::optional<double> feature_cap;  // computed from data when absent
  TrainConfig train;
};

LossSettings loss_settings_from_json(const ConfigReader& r);
MetricCaps caps_from_json(const ConfigReader& r, std::optional<double>* feature_cap);
TrainConfig train_config_from_json(const ConfigReader& r);
GeneratorParams generator_params_from_json(const ConfigReader& r);

// Reads "layout" plus either an explicit "ground_truth" or a "generator"
// block. A generator block without "bayes_threshold" is calibrated.
ExperimentConfig experiment_from_json(const json& root);

json read_json_file(const std::string& path);  // IoError on failure
void write_text_file(const std::string& path, const std::string& text);

class IoError : public Error {
 public:
  using Error::Error;
};

// "%.17g"; "nan" for undefined values.
std::string format_double(double v);
std::string training_log_csv(const TrainResult& result);

}  // namespace modalbound
