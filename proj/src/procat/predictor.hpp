#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

namespace procat {

enum class Optimizer { Adam, RmsProp, Sgd };

struct LayerSpec {
  std::size_t units = 1;
  double dropout = 0.0;  // applied to this layer's output during training
};

// Which part of the input row a branch reads.
struct InputSlice {
  enum class Source { Range, Tss, Aux, All };
  Source source = Source::All;
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct BranchSpec {
  InputSlice slice;
  std::vector<LayerSpec> layers;  // may be empty: raw slice feeds the trunk
};

struct MlpConfig {
  std::vector<BranchSpec> branches;
  std::vector<LayerSpec> trunk;
  std::size_t classes = 2;
  Optimizer optimizer = Optimizer::Adam;
  double learning_rate = 1e-3;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;
  bool standardize = true;
  // Values the preset author could not source and filled with defaults.
  std::vector<std::string> assumed;

  // Rewrites Tss/Aux/All slices into explicit ranges.
  MlpConfig resolved(std::size_t tss_width, std::size_t aux_width) const;
  // Throws Errc::DimensionMismatch or Errc::InvalidArgument.
  void validate(std::size_t input_width) const;
};

MlpConfig mlp_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MlpConfig& config);

struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t weight_offset = 0;  // out x in, row-major
  std::size_t bias_offset = 0;
  double dropout = 0.0;
  bool relu = true;
};

class MlpModel {
 public:
  MlpModel() = default;
  // Seeded uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
  MlpModel(const MlpConfig& resolved_config, std::size_t input_width);

  const MlpConfig& config() const noexcept { return config_; }
  std::size_t input_width() const noexcept { return input_width_; }
  std::size_t classes() const noexcept { return config_.classes; }
  std::vector<double>& parameters() noexcept { return params_; }
  const std::vector<double>& parameters() const noexcept { return params_; }

  // Softmax probabilities for one standardized row.
  std::vector<double> forward(const double* row) const;
  // Loss of one standardized row; accumulates dLoss/dparams into grad when
  // non-null. Dropout is sampled from rng when given.
  double loss_and_gradient(const double* row, int target, std::vector<double>* grad, std::mt19937_64* rng) const;
  // Smallest |pre-activation| over hidden ReLU units for one row.
  double min_abs_preactivation(const double* row) const;

  void set_standardization(std::vector<double> mean, std::vector<double> scale);
  std::vector<double> standardize(const double* row) const;
  bool has_standardization() const noexcept { return !mean_.empty(); }

  std::vector<double> train_loss_history;
  std::vector<double> validation_loss_history;
  std::size_t best_epoch = 0;  // 0 = initialization

 private:
  struct Cache;
  void run(const double* row, Cache& cache, std::mt19937_64* rng) const;

  MlpConfig config_;
  std::size_t input_width_ = 0;
  std::vector<std::vector<DenseLayer>> branches_;
  std::vector<DenseLayer> trunk_;
  DenseLayer output_;
  std::vector<double> params_;
  std::vector<double> mean_;
  std::vector<double> scale_;

  friend nlohmann::json to_json(const MlpModel& model);
  friend MlpModel mlp_model_from_json(const nlohmann::json& j);
};

struct Dataset {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // row-major
  std::vector<int> targets;

  const double* row(std::size_t r) const { return values.data() + r * cols; }
};

// Cross-entropy training; returns the epoch snapshot with the best validation
// loss (training loss when validation is empty). Throws
// Errc::DimensionMismatch, Errc::NonFiniteLoss (index = epoch).
MlpModel train(const Dataset& train_set, const MlpConfig& config, const Dataset& validation = {});

// Row-major rows x classes.
std::vector<double> predict_proba(const MlpModel& model, const Dataset& data);
double mean_loss(const MlpModel& model, const Dataset& data);

struct GradientCheckOptions {
  double step = 1e-5;
  bool dropout_enabled = false;  // negative control
};

struct GradientCheckResult {
  double max_relative_error = 0.0;
  double min_abs_preactivation = 0.0;
  std::size_t parameters = 0;
};

// Analytic gradient of the mean loss versus central differences for every
// parameter of a freshly initialized model.
GradientCheckResult gradient_check(const MlpConfig& config, const Dataset& data, const GradientCheckOptions& options = {});

nlohmann::json to_json(const MlpModel& model);
MlpModel mlp_model_from_json(const nlohmann::json& j);

}  // namespace procat
