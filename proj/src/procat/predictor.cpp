#include "procat/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "procat/error.hpp"

namespace procat {

namespace {

const char* optimizer_name(Optimizer o) {
  switch (o) {
    case Optimizer::Adam: return "adam";
    case Optimizer::RmsProp: return "rmsprop";
    case Optimizer::Sgd: return "sgd";
  }
  return "?";
}

Optimizer parse_optimizer(const std::string& s) {
  if (s == "adam") return Optimizer::Adam;
  if (s == "rmsprop") return Optimizer::RmsProp;
  if (s == "sgd") return Optimizer::Sgd;
  throw Error(Errc::InvalidArgument, "unknown optimizer '" + s + "'");
}

std::vector<LayerSpec> layers_from_json(const nlohmann::json& j) {
  std::vector<LayerSpec> out;
  for (const auto& l : j) {
    if (l.is_number()) {
      out.push_back({l.get<std::size_t>(), 0.0});
    } else {
      out.push_back({l.at("units").get<std::size_t>(), l.value("dropout", 0.0)});
    }
  }
  return out;
}

nlohmann::json layers_to_json(const std::vector<LayerSpec>& layers) {
  auto out = nlohmann::json::array();
  for (const auto& l : layers) out.push_back({{"units", l.units}, {"dropout", l.dropout}});
  return out;
}

}  // namespace

MlpConfig MlpConfig::resolved(std::size_t tss_width, std::size_t aux_width) const {
  MlpConfig out = *this;
  if (out.branches.empty()) out.branches.push_back(BranchSpec{});
  for (auto& b : out.branches) {
    switch (b.slice.source) {
      case InputSlice::Source::Tss: b.slice = {InputSlice::Source::Range, 0, tss_width}; break;
      case InputSlice::Source::Aux: b.slice = {InputSlice::Source::Range, tss_width, tss_width + aux_width}; break;
      case InputSlice::Source::All: b.slice = {InputSlice::Source::Range, 0, tss_width + aux_width}; break;
      case InputSlice::Source::Range: break;
    }
  }
  // Branches fed by an empty slice (e.g. no aux table) are dropped.
  out.branches.erase(std::remove_if(out.branches.begin(), out.branches.end(),
                                    [](const BranchSpec& b) { return b.slice.end == b.slice.begin; }),
                     out.branches.end());
  return out;
}

void MlpConfig::validate(std::size_t input_width) const {
  if (classes < 2) throw Error(Errc::InvalidArgument, "need at least two classes");
  if (epochs > 0 && batch_size == 0) throw Error(Errc::InvalidArgument, "batch_size must be positive");
  if (!(learning_rate > 0.0)) throw Error(Errc::InvalidArgument, "learning_rate must be positive");
  auto check_layers = [](const std::vector<LayerSpec>& layers) {
    for (const auto& l : layers) {
      if (l.units < 1) throw Error(Errc::InvalidArgument, "layer widths must be >= 1");
      if (!(l.dropout >= 0.0 && l.dropout < 1.0)) throw Error(Errc::InvalidArgument, "dropout must lie in [0,1)");
    }
  };
  check_layers(trunk);
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  for (const auto& b : branches) {
    check_layers(b.layers);
    if (b.slice.source != InputSlice::Source::Range) throw Error(Errc::InvalidArgument, "config is not resolved");
    if (b.slice.end <= b.slice.begin) throw Error(Errc::InvalidArgument, "empty branch slice");
    ranges.emplace_back(b.slice.begin, b.slice.end);
  }
  std::sort(ranges.begin(), ranges.end());
  std::size_t cursor = 0;
  for (const auto& [b, e] : ranges) {
    if (b != cursor) throw Error(Errc::DimensionMismatch, "branch slices must partition the input");
    cursor = e;
  }
  if (cursor != input_width) {
    throw Error(Errc::DimensionMismatch, "branch slices cover " + std::to_string(cursor) + " of " +
                                             std::to_string(input_width) + " input columns");
  }
}

MlpConfig mlp_config_from_json(const nlohmann::json& j) {
  try {
    MlpConfig c;
    if (j.contains("branches")) {
      for (const auto& bj : j.at("branches")) {
        BranchSpec b;
        const auto& s = bj.contains("input") ? bj.at("input") : nlohmann::json("all");
        if (s.is_string()) {
          const auto name = s.get<std::string>();
          if (name == "tss") {
            b.slice.source = InputSlice::Source::Tss;
          } else if (name == "aux") {
            b.slice.source = InputSlice::Source::Aux;
          } else if (name == "all") {
            b.slice.source = InputSlice::Source::All;
          } else {
            throw Error(Errc::InvalidArgument, "branch input must be tss|aux|all|[begin,end]");
          }
        } else {
          b.slice = {InputSlice::Source::Range, s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>()};
        }
        if (bj.contains("layers")) b.layers = layers_from_json(bj.at("layers"));
        c.branches.push_back(std::move(b));
      }
    }
    if (j.contains("trunk")) c.trunk = layers_from_json(j.at("trunk"));
    c.classes = j.value("classes", c.classes);
    c.optimizer = parse_optimizer(j.value("optimizer", std::string("adam")));
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.seed = j.value("seed", c.seed);
    c.standardize = j.value("standardize", c.standardize);
    if (j.contains("assumed")) c.assumed = j.at("assumed").get<std::vector<std::string>>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidArgument, std::string("bad model config: ") + e.what());
  }
}

nlohmann::json to_json(const MlpConfig& c) {
  nlohmann::json j;
  auto branches = nlohmann::json::array();
  for (const auto& b : c.branches) {
    nlohmann::json bj;
    switch (b.slice.source) {
      case InputSlice::Source::Tss: bj["input"] = "tss"; break;
      case InputSlice::Source::Aux: bj["input"] = "aux"; break;
      case InputSlice::Source::All: bj["input"] = "all"; break;
      case InputSlice::Source::Range: bj["input"] = {b.slice.begin, b.slice.end}; break;
    }
    bj["layers"] = layers_to_json(b.layers);
    branches.push_back(bj);
  }
  j["branches"] = branches;
  j["trunk"] = layers_to_json(c.trunk);
  j["classes"] = c.classes;
  j["optimizer"] = optimizer_name(c.optimizer);
  j["learning_rate"] = c.learning_rate;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["seed"] = c.seed;
  j["standardize"] = c.standardize;
  if (!c.assumed.empty()) j["assumed"] = c.assumed;
  return j;
}

MlpModel::MlpModel(const MlpConfig& resolved_config, std::size_t input_width)
    : config_(resolved_config), input_width_(input_width) {
  config_.validate(input_width);
  std::size_t offset = 0;
  auto make = [&](std::size_t in, std::size_t out, double dropout, bool relu) {
    DenseLayer l{in, out, offset, offset + in * out, dropout, relu};
    offset += in * out + out;
    return l;
  };
  std::size_t concat_width = 0;
  for (const auto& b : config_.branches) {
    std::vector<DenseLayer> layers;
    std::size_t width = b.slice.end - b.slice.begin;
    for (const auto& spec : b.layers) {
      layers.push_back(make(width, spec.units, spec.dropout, true));
      width = spec.units;
    }
    concat_width += width;
    branches_.push_back(std::move(layers));
  }
  std::size_t width = concat_width;
  for (const auto& spec : config_.trunk) {
    trunk_.push_back(make(width, spec.units, spec.dropout, true));
    width = spec.units;
  }
  output_ = make(width, config_.classes, 0.0, false);
  params_.assign(offset, 0.0);

  std::mt19937_64 rng(config_.seed);
  auto init = [&](const DenseLayer& l) {
    const double limit = 1.0 / std::sqrt(static_cast<double>(l.in));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (std::size_t i = 0; i < l.in * l.out; ++i) params_[l.weight_offset + i] = u(rng);
  };
  for (const auto& br : branches_) {
    for (const auto& l : br) init(l);
  }
  for (const auto& l : trunk_) init(l);
  init(output_);
}

struct MlpModel::Cache {
  struct Layer {
    std::vector<double> input;
    std::vector<double> z;
    std::vector<double> mask;  // empty = no dropout
  };
  std::vector<std::vector<Layer>> branches;
  std::vector<std::size_t> branch_width;
  std::vector<Layer> trunk;
  Layer output;
  std::vector<double> probs;
};

namespace {

void dense_forward(const std::vector<double>& params, const DenseLayer& l, const std::vector<double>& x,
                   std::vector<double>& z) {
  z.assign(l.out, 0.0);
  const double* w = params.data() + l.weight_offset;
  const double* b = params.data() + l.bias_offset;
  for (std::size_t o = 0; o < l.out; ++o) {
    double s = b[o];
    const double* wr = w + o * l.in;
    for (std::size_t i = 0; i < l.in; ++i) s += wr[i] * x[i];
    z[o] = s;
  }
}

// ReLU then optional dropout; returns activations.
std::vector<double> activate(const DenseLayer& l, const std::vector<double>& z, std::vector<double>& mask,
                             std::mt19937_64* rng) {
  std::vector<double> a(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) a[i] = z[i] > 0.0 ? z[i] : 0.0;
  mask.clear();
  if (rng && l.dropout > 0.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double keep = 1.0 / (1.0 - l.dropout);
    mask.resize(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
      mask[i] = u(*rng) < l.dropout ? 0.0 : keep;
      a[i] *= mask[i];
    }
  }
  return a;
}

// Given dLoss/d(activation), accumulates parameter gradients and returns
// dLoss/d(input).
std::vector<double> dense_backward(const std::vector<double>& params, const DenseLayer& l, const std::vector<double>& x,
                                   const std::vector<double>& z, const std::vector<double>& mask,
                                   std::vector<double> d_out, std::vector<double>* grad) {
  if (l.relu) {
    for (std::size_t i = 0; i < d_out.size(); ++i) {
      if (!mask.empty()) d_out[i] *= mask[i];
      if (z[i] <= 0.0) d_out[i] = 0.0;
    }
  }
  std::vector<double> d_in(l.in, 0.0);
  const double* w = params.data() + l.weight_offset;
  for (std::size_t o = 0; o < l.out; ++o) {
    const double g = d_out[o];
    if (g == 0.0) continue;
    const double* wr = w + o * l.in;
    if (grad) {
      double* gw = grad->data() + l.weight_offset + o * l.in;
      for (std::size_t i = 0; i < l.in; ++i) gw[i] += g * x[i];
      (*grad)[l.bias_offset + o] += g;
    }
    for (std::size_t i = 0; i < l.in; ++i) d_in[i] += g * wr[i];
  }
  return d_in;
}

}  // namespace

void MlpModel::run(const double* row, Cache& cache, std::mt19937_64* rng) const {
  cache.branches.assign(branches_.size(), {});
  cache.branch_width.assign(branches_.size(), 0);
  std::vector<double> concat;
  for (std::size_t b = 0; b < branches_.size(); ++b) {
    const auto& slice = config_.branches[b].slice;
    std::vector<double> x(row + slice.begin, row + slice.end);
    for (const auto& l : branches_[b]) {
      Cache::Layer layer;
      layer.input = std::move(x);
      dense_forward(params_, l, layer.input, layer.z);
      x = activate(l, layer.z, layer.mask, rng);
      cache.branches[b].push_back(std::move(layer));
    }
    cache.branch_width[b] = x.size();
    concat.insert(concat.end(), x.begin(), x.end());
  }
  std::vector<double> x = std::move(concat);
  cache.trunk.clear();
  for (const auto& l : trunk_) {
    Cache::Layer layer;
    layer.input = std::move(x);
    dense_forward(params_, l, layer.input, layer.z);
    x = activate(l, layer.z, layer.mask, rng);
    cache.trunk.push_back(std::move(layer));
  }
  cache.output.input = std::move(x);
  dense_forward(params_, output_, cache.output.input, cache.output.z);
  const auto& z = cache.output.z;
  const double zmax = *std::max_element(z.begin(), z.end());
  cache.probs.resize(z.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    cache.probs[i] = std::exp(z[i] - zmax);
    sum += cache.probs[i];
  }
  for (double& p : cache.probs) p /= sum;
}

std::vector<double> MlpModel::forward(const double* row) const {
  Cache cache;
  run(row, cache, nullptr);
  return cache.probs;
}

double MlpModel::loss_and_gradient(const double* row, int target, std::vector<double>* grad, std::mt19937_64* rng) const {
  Cache cache;
  run(row, cache, rng);
  const auto& z = cache.output.z;
  const double zmax = *std::max_element(z.begin(), z.end());
  double lse = 0.0;
  for (double v : z) lse += std::exp(v - zmax);
  const double loss = zmax + std::log(lse) - z[static_cast<std::size_t>(target)];
  if (!grad) return loss;

  std::vector<double> d = cache.probs;
  d[static_cast<std::size_t>(target)] -= 1.0;
  d = dense_backward(params_, output_, cache.output.input, cache.output.z, cache.output.mask, std::move(d), grad);
  for (std::size_t k = trunk_.size(); k-- > 0;) {
    const auto& c = cache.trunk[k];
    d = dense_backward(params_, trunk_[k], c.input, c.z, c.mask, std::move(d), grad);
  }
  std::size_t offset = 0;
  for (std::size_t b = 0; b < branches_.size(); ++b) {
    std::vector<double> db(d.begin() + static_cast<std::ptrdiff_t>(offset),
                           d.begin() + static_cast<std::ptrdiff_t>(offset + cache.branch_width[b]));
    offset += cache.branch_width[b];
    for (std::size_t k = branches_[b].size(); k-- > 0;) {
      const auto& c = cache.branches[b][k];
      db = dense_backward(params_, branches_[b][k], c.input, c.z, c.mask, std::move(db), grad);
    }
  }
  return loss;
}

double MlpModel::min_abs_preactivation(const double* row) const {
  Cache cache;
  run(row, cache, nullptr);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& br : cache.branches) {
    for (const auto& l : br) {
      for (double v : l.z) best = std::min(best, std::fabs(v));
    }
  }
  for (const auto& l : cache.trunk) {
    for (double v : l.z) best = std::min(best, std::fabs(v));
  }
  return best;
}

void MlpModel::set_standardization(std::vector<double> mean, std::vector<double> scale) {
  if (mean.size() != input_width_ || scale.size() != input_width_) {
    throw Error(Errc::DimensionMismatch, "standardization width mismatch");
  }
  mean_ = std::move(mean);
  scale_ = std::move(scale);
}

std::vector<double> MlpModel::standardize(const double* row) const {
  std::vector<double> x(row, row + input_width_);
  if (mean_.empty()) return x;
  for (std::size_t i = 0; i < input_width_; ++i) x[i] = (x[i] - mean_[i]) / scale_[i];
  return x;
}

namespace {

void check_dataset(const Dataset& d, std::size_t width, std::size_t classes, const char* what) {
  if (d.rows == 0) return;
  if (d.cols != width) {
    throw Error(Errc::DimensionMismatch, std::string(what) + " has " + std::to_string(d.cols) + " columns, model expects " +
                                             std::to_string(width));
  }
  if (d.values.size() != d.rows * d.cols || d.targets.size() != d.rows) {
    throw Error(Errc::DimensionMismatch, std::string(what) + " storage does not match its shape");
  }
  for (int t : d.targets) {
    if (t < 0 || static_cast<std::size_t>(t) >= classes) throw Error(Errc::InvalidArgument, "target out of range");
  }
}

Dataset standardized(const MlpModel& model, const Dataset& d) {
  Dataset out = d;
  for (std::size_t r = 0; r < d.rows; ++r) {
    const auto x = model.standardize(d.row(r));
    std::copy(x.begin(), x.end(), out.values.begin() + static_cast<std::ptrdiff_t>(r * d.cols));
  }
  return out;
}

double mean_loss_standardized(const MlpModel& model, const Dataset& d) {
  double sum = 0.0;
  for (std::size_t r = 0; r < d.rows; ++r) sum += model.loss_and_gradient(d.row(r), d.targets[r], nullptr, nullptr);
  return d.rows ? sum / static_cast<double>(d.rows) : 0.0;
}

}  // namespace

double mean_loss(const MlpModel& model, const Dataset& data) {
  check_dataset(data, model.input_width(), model.classes(), "dataset");
  return mean_loss_standardized(model, standardized(model, data));
}

MlpModel train(const Dataset& train_set, const MlpConfig& config, const Dataset& validation) {
  if (train_set.rows == 0) throw Error(Errc::InvalidArgument, "empty training set");
  MlpModel model(config, train_set.cols);
  check_dataset(train_set, train_set.cols, config.classes, "training set");
  check_dataset(validation, train_set.cols, config.classes, "validation set");

  if (config.standardize) {
    const std::size_t w = train_set.cols;
    std::vector<double> mean(w, 0.0), scale(w, 0.0);
    for (std::size_t r = 0; r < train_set.rows; ++r) {
      for (std::size_t c = 0; c < w; ++c) mean[c] += train_set.row(r)[c];
    }
    for (double& m : mean) m /= static_cast<double>(train_set.rows);
    for (std::size_t r = 0; r < train_set.rows; ++r) {
      for (std::size_t c = 0; c < w; ++c) {
        const double d = train_set.row(r)[c] - mean[c];
        scale[c] += d * d;
      }
    }
    for (double& s : scale) {
      s = std::sqrt(s / static_cast<double>(train_set.rows));
      if (!(s > 1e-12)) s = 1.0;
    }
    model.set_standardization(std::move(mean), std::move(scale));
  }
  const Dataset train_std = standardized(model, train_set);
  const Dataset val_std = standardized(model, validation);
  const Dataset& selector = validation.rows ? val_std : train_std;

  std::vector<double>& params = model.parameters();
  std::vector<double> best = params;
  double best_loss = mean_loss_standardized(model, selector);
  model.best_epoch = 0;

  std::mt19937_64 rng(config.seed ^ 0x5DEECE66DULL);
  std::vector<double> grad(params.size()), m1(params.size(), 0.0), m2(params.size(), 0.0);
  std::vector<std::size_t> order(train_std.rows);
  std::iota(order.begin(), order.end(), 0);
  const double beta1 = 0.9, beta2 = 0.999, rho = 0.9, eps = 1e-8;
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    if (config.batch_size < train_std.rows) std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t r = order[k];
        model.loss_and_gradient(train_std.row(r), train_std.targets[r], &grad, &rng);
      }
      const double inv = 1.0 / static_cast<double>(stop - start);
      ++step;
      const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grad[i] * inv;
        switch (config.optimizer) {
          case Optimizer::Adam:
            m1[i] = beta1 * m1[i] + (1.0 - beta1) * g;
            m2[i] = beta2 * m2[i] + (1.0 - beta2) * g * g;
            params[i] -= config.learning_rate * (m1[i] / c1) / (std::sqrt(m2[i] / c2) + eps);
            break;
          case Optimizer::RmsProp:
            m2[i] = rho * m2[i] + (1.0 - rho) * g * g;
            params[i] -= config.learning_rate * g / (std::sqrt(m2[i]) + eps);
            break;
          case Optimizer::Sgd:
            params[i] -= config.learning_rate * g;
            break;
        }
      }
    }
    const double train_loss = mean_loss_standardized(model, train_std);
    const double sel_loss = validation.rows ? mean_loss_standardized(model, val_std) : train_loss;
    if (!std::isfinite(train_loss) || !std::isfinite(sel_loss)) {
      throw Error(Errc::NonFiniteLoss, "loss diverged at epoch " + std::to_string(epoch), epoch);
    }
    model.train_loss_history.push_back(train_loss);
    if (validation.rows) model.validation_loss_history.push_back(sel_loss);
    if (sel_loss < best_loss) {
      best_loss = sel_loss;
      best = params;
      model.best_epoch = epoch;
    }
  }
  params = best;
  return model;
}

std::vector<double> predict_proba(const MlpModel& model, const Dataset& data) {
  if (data.rows && data.cols != model.input_width()) {
    throw Error(Errc::DimensionMismatch, "dataset has " + std::to_string(data.cols) + " columns, model expects " +
                                             std::to_string(model.input_width()));
  }
  std::vector<double> out;
  out.reserve(data.rows * model.classes());
  for (std::size_t r = 0; r < data.rows; ++r) {
    const auto x = model.standardize(data.row(r));
    const auto p = model.forward(x.data());
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

GradientCheckResult gradient_check(const MlpConfig& config, const Dataset& data, const GradientCheckOptions& options) {
  MlpModel model(config, data.cols);
  check_dataset(data, data.cols, config.classes, "dataset");
  std::mt19937_64 rng(config.seed + 17);
  std::mt19937_64* dropout_rng = options.dropout_enabled ? &rng : nullptr;
  auto loss = [&]() {
    double s = 0.0;
    for (std::size_t r = 0; r < data.rows; ++r) s += model.loss_and_gradient(data.row(r), data.targets[r], nullptr, dropout_rng);
    return s / static_cast<double>(data.rows);
  };
  auto& params = model.parameters();
  std::vector<double> analytic(params.size(), 0.0);
  for (std::size_t r = 0; r < data.rows; ++r) model.loss_and_gradient(data.row(r), data.targets[r], &analytic, dropout_rng);
  for (double& g : analytic) g /= static_cast<double>(data.rows);

  GradientCheckResult result;
  result.parameters = params.size();
  result.min_abs_preactivation = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < data.rows; ++r) {
    result.min_abs_preactivation = std::min(result.min_abs_preactivation, model.min_abs_preactivation(data.row(r)));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + options.step;
    const double up = loss();
    params[i] = saved - options.step;
    const double down = loss();
    params[i] = saved;
    const double numeric = (up - down) / (2.0 * options.step);
    const double denom = std::max({std::fabs(analytic[i]), std::fabs(numeric), 1e-8});
    result.max_relative_error = std::max(result.max_relative_error, std::fabs(analytic[i] - numeric) / denom);
  }
  return result;
}

nlohmann::json to_json(const MlpModel& model) {
  nlohmann::json j;
  j["config"] = to_json(model.config_);
  j["input_width"] = model.input_width_;
  if (!model.mean_.empty()) j["standardization"] = {{"mean", model.mean_}, {"scale", model.scale_}};
  auto layers = nlohmann::json::array();
  auto dump = [&](const std::string& name, const DenseLayer& l) {
    const auto w0 = model.params_.begin() + static_cast<std::ptrdiff_t>(l.weight_offset);
    const auto b0 = model.params_.begin() + static_cast<std::ptrdiff_t>(l.bias_offset);
    layers.push_back({{"name", name},
                      {"in", l.in},
                      {"out", l.out},
                      {"weights", std::vector<double>(w0, w0 + static_cast<std::ptrdiff_t>(l.in * l.out))},
                      {"bias", std::vector<double>(b0, b0 + static_cast<std::ptrdiff_t>(l.out))}});
  };
  for (std::size_t b = 0; b < model.branches_.size(); ++b) {
    for (std::size_t k = 0; k < model.branches_[b].size(); ++k) {
      dump("branch" + std::to_string(b) + "." + std::to_string(k), model.branches_[b][k]);
    }
  }
  for (std::size_t k = 0; k < model.trunk_.size(); ++k) dump("trunk." + std::to_string(k), model.trunk_[k]);
  dump("output", model.output_);
  j["layers"] = layers;
  j["history"] = {{"train_loss", model.train_loss_history}, {"validation_loss", model.validation_loss_history}};
  j["best_epoch"] = model.best_epoch;
  return j;
}

MlpModel mlp_model_from_json(const nlohmann::json& j) {
  try {
    MlpModel model(mlp_config_from_json(j.at("config")), j.at("input_width").get<std::size_t>());
    std::vector<const DenseLayer*> order;
    for (const auto& br : model.branches_) {
      for (const auto& l : br) order.push_back(&l);
    }
    for (const auto& l : model.trunk_) order.push_back(&l);
    order.push_back(&model.output_);
    const auto& layers = j.at("layers");
    if (layers.size() != order.size()) throw Error(Errc::DimensionMismatch, "layer count does not match config");
    for (std::size_t k = 0; k < order.size(); ++k) {
      const DenseLayer& l = *order[k];
      const auto w = layers[k].at("weights").get<std::vector<double>>();
      const auto b = layers[k].at("bias").get<std::vector<double>>();
      if (w.size() != l.in * l.out || b.size() != l.out) throw Error(Errc::DimensionMismatch, "layer shape mismatch");
      std::copy(w.begin(), w.end(), model.params_.begin() + static_cast<std::ptrdiff_t>(l.weight_offset));
      std::copy(b.begin(), b.end(), model.params_.begin() + static_cast<std::ptrdiff_t>(l.bias_offset));
    }
    if (j.contains("standardization")) {
      model.set_standardization(j.at("standardization").at("mean").get<std::vector<double>>(),
                                j.at("standardization").at("scale").get<std::vector<double>>());
    }
    if (j.contains("history")) {
      model.train_loss_history = j.at("history").value("train_loss", std::vector<double>{});
      model.validation_loss_history = j.at("history").value("validation_loss", std::vector<double>{});
    }
    model.best_epoch = j.value("best_epoch", std::size_t{0});
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidArgument, std::string("bad model json: ") + e.what());
  }
}

}  // namespace procat
