#pragma once

// Softmax classifier (linear, or an MLP with ReLU hidden layers) trained by
// mini-batch SGD with momentum and a per-epoch cosine-annealed learning rate.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "regroup/dataset.hpp"
#include "regroup/error.hpp"
#include "regroup/losses.hpp"
#include "regroup/numeric.hpp"
#include "regroup/random.hpp"

namespace regroup {

struct MlpSpec {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden_dims;  // empty: linear softmax model
  std::size_t output_dim = 2;
  std::uint64_t init_seed = 0;

  void validate() const {
    if (input_dim < 1) throw ArgumentError("input_dim must be >= 1");
    if (output_dim < 2) throw ArgumentError("output_dim must be >= 2");
    for (const std::size_t h : hidden_dims) {
      if (h < 1) throw ArgumentError("hidden layer widths must be >= 1");
    }
  }

  friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

struct TrainConfig {
  double lr_max = 0.01;
  double lr_min = 0.0;
  int epochs = 300;
  int batch_size = 256;
  double momentum = 0.9;
  double weight_decay = 0.0;
  std::uint64_t shuffle_seed = 0;

  // Laptop-scale recipe used by the benchmark harness by default.
  static TrainConfig desk() {
    TrainConfig cfg;
    cfg.epochs = 100;
    cfg.batch_size = 64;
    return cfg;
  }

  void validate() const {
    if (!(lr_max >= lr_min && lr_min >= 0.0)) {
      throw ArgumentError("learning rates must satisfy lr_max >= lr_min >= 0");
    }
    if (epochs < 1) throw ArgumentError("epochs must be >= 1");
    if (batch_size < 1) throw ArgumentError("batch_size must be >= 1");
    if (!(momentum >= 0.0 && momentum < 1.0)) {
      throw ArgumentError("momentum must lie in [0, 1)");
    }
    if (!(weight_decay >= 0.0)) throw ArgumentError("weight_decay must be >= 0");
  }
};

// lr_min + (lr_max - lr_min) * (1 + cos(pi * epoch / total)) / 2.
inline double cosine_lr(int epoch, int total, double lr_max, double lr_min) {
  if (total < 1) throw ArgumentError("cosine schedule needs total >= 1");
  if (epoch < 0 || epoch > total) {
    throw ArgumentError("epoch " + std::to_string(epoch) + " outside 0.." +
                        std::to_string(total));
  }
  return lr_min + 0.5 * (lr_max - lr_min) *
                      (1.0 + std::cos(std::numbers::pi * epoch / total));
}

// Fully connected layer, weights stored out x in row-major.
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

class TrainedModel {
 public:
  TrainedModel(MlpSpec spec, std::vector<DenseLayer> layers)
      : spec_(std::move(spec)), layers_(std::move(layers)) {
    spec_.validate();
    std::size_t width = spec_.input_dim;
    std::vector<std::size_t> outs(spec_.hidden_dims);
    outs.push_back(spec_.output_dim);
    if (layers_.size() != outs.size()) {
      throw ArgumentError("layer count does not match the network spec");
    }
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const DenseLayer& layer = layers_[l];
      if (layer.in != width || layer.out != outs[l] ||
          layer.weights.size() != layer.in * layer.out ||
          layer.bias.size() != layer.out) {
        throw ArgumentError("layer " + std::to_string(l) +
                            " has inconsistent shape");
      }
      width = layer.out;
    }
    if (!parameters_finite()) throw ArgumentError("non-finite model parameter");
  }

  // Uniform in +-sqrt(6 / (fan_in + fan_out)) per layer, zero biases.
  static TrainedModel initialize(const MlpSpec& spec) {
    spec.validate();
    Rng rng(spec.init_seed);
    std::vector<DenseLayer> layers;
    std::size_t width = spec.input_dim;
    std::vector<std::size_t> outs(spec.hidden_dims);
    outs.push_back(spec.output_dim);
    for (const std::size_t out : outs) {
      DenseLayer layer{width, out, std::vector<double>(width * out),
                       std::vector<double>(out, 0.0)};
      const double bound =
          std::sqrt(6.0 / static_cast<double>(width + out));
      for (double& w : layer.weights) w = bound * (2.0 * rng.uniform() - 1.0);
      layers.push_back(std::move(layer));
      width = out;
    }
    return TrainedModel(spec, std::move(layers));
  }

  const MlpSpec& spec() const { return spec_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
    return n;
  }

  // Layer by layer: weights then bias.
  std::vector<double> parameters() const {
    std::vector<double> out;
    out.reserve(parameter_count());
    for (const auto& l : layers_) {
      out.insert(out.end(), l.weights.begin(), l.weights.end());
      out.insert(out.end(), l.bias.begin(), l.bias.end());
    }
    return out;
  }

  void set_parameters(std::span<const double> flat) {
    if (flat.size() != parameter_count()) {
      throw ArgumentError("parameter vector has the wrong length");
    }
    std::size_t k = 0;
    for (auto& l : layers_) {
      for (double& w : l.weights) w = flat[k++];
      for (double& b : l.bias) b = flat[k++];
    }
  }

  bool parameters_finite() const {
    for (const auto& l : layers_) {
      for (const double w : l.weights) if (!std::isfinite(w)) return false;
      for (const double b : l.bias) if (!std::isfinite(b)) return false;
    }
    return true;
  }

  // Forward pass for one input row. activations[0] is the input, the last
  // entry the logits; hidden entries are post-ReLU.
  void forward(std::span<const double> x,
               std::vector<std::vector<double>>& activations) const {
    activations.resize(layers_.size() + 1);
    activations[0].assign(x.begin(), x.end());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const DenseLayer& layer = layers_[l];
      const std::vector<double>& input = activations[l];
      std::vector<double>& output = activations[l + 1];
      output.assign(layer.bias.begin(), layer.bias.end());
      for (std::size_t o = 0; o < layer.out; ++o) {
        const double* w = layer.weights.data() + o * layer.in;
        double sum = output[o];
        for (std::size_t i = 0; i < layer.in; ++i) sum += w[i] * input[i];
        output[o] = sum;
      }
      if (l + 1 < layers_.size()) {
        for (double& v : output) v = std::max(v, 0.0);
      }
    }
  }

  std::vector<double> logits(std::span<const double> x) const {
    std::vector<std::vector<double>> acts;
    forward(x, acts);
    return acts.back();
  }

  friend bool operator==(const TrainedModel&, const TrainedModel&) = default;

 private:
  MlpSpec spec_;
  std::vector<DenseLayer> layers_;
};

struct EpochRecord {
  double loss = 0.0;
  double accuracy = 0.0;
  double learning_rate = 0.0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

using TrainHistory = std::vector<EpochRecord>;

// Mean loss over the selected rows and its gradient with respect to the
// flattened parameters (same layout as TrainedModel::parameters()).
inline double batch_loss_and_gradient(const TrainedModel& model,
                                      const FeatureMatrix& x,
                                      std::span<const ClassId> labels,
                                      std::span<const std::size_t> rows,
                                      const LossSpec& loss,
                                      std::vector<double>& gradient) {
  const auto& layers = model.layers();
  gradient.assign(model.parameter_count(), 0.0);
  std::vector<std::size_t> offsets;
  {
    std::size_t k = 0;
    for (const auto& l : layers) {
      offsets.push_back(k);
      k += l.weights.size() + l.bias.size();
    }
  }
  std::vector<std::vector<double>> acts;
  std::vector<double> delta, prev_delta;
  double total = 0.0;
  for (const std::size_t r : rows) {
    model.forward(x.row(r), acts);
    delta.assign(acts.back().size(), 0.0);
    total += loss_and_gradient(acts.back(), labels[r], loss, delta);
    for (std::size_t l = layers.size(); l-- > 0;) {
      const DenseLayer& layer = layers[l];
      const std::vector<double>& input = acts[l];
      double* gw = gradient.data() + offsets[l];
      double* gb = gw + layer.weights.size();
      for (std::size_t o = 0; o < layer.out; ++o) {
        gb[o] += delta[o];
        double* row = gw + o * layer.in;
        for (std::size_t i = 0; i < layer.in; ++i) row[i] += delta[o] * input[i];
      }
      if (l == 0) break;
      prev_delta.assign(layer.in, 0.0);
      for (std::size_t o = 0; o < layer.out; ++o) {
        const double* w = layer.weights.data() + o * layer.in;
        for (std::size_t i = 0; i < layer.in; ++i) prev_delta[i] += w[i] * delta[o];
      }
      // ReLU derivative, zero at the kink.
      for (std::size_t i = 0; i < layer.in; ++i) {
        if (input[i] <= 0.0) prev_delta[i] = 0.0;
      }
      std::swap(delta, prev_delta);
    }
  }
  const double scale = 1.0 / static_cast<double>(rows.size());
  for (double& g : gradient) g *= scale;
  return total * scale;
}

inline ScoreMatrix predict_proba(const TrainedModel& model,
                                 const FeatureMatrix& x) {
  if (x.cols() != model.spec().input_dim) {
    throw ArgumentError("model expects " +
                        std::to_string(model.spec().input_dim) +
                        " features, got " + std::to_string(x.cols()));
  }
  ScoreMatrix out(x.rows(), model.spec().output_dim);
  std::vector<std::vector<double>> acts;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    model.forward(x.row(i), acts);
    const std::vector<double> p = softmax(acts.back());
    std::copy(p.begin(), p.end(), out.row(i).begin());
  }
  return out;
}

// Hard decision: highest probability, lowest class id on ties.
inline std::vector<ClassId> argmax_rows(const ScoreMatrix& scores) {
  std::vector<ClassId> out(scores.rows);
  for (std::size_t i = 0; i < scores.rows; ++i) {
    const auto r = scores.row(i);
    out[i] = static_cast<ClassId>(std::max_element(r.begin(), r.end()) -
                                  r.begin());
  }
  return out;
}

struct TrainResult {
  TrainedModel model;
  TrainHistory history;
};

// Each epoch: reshuffle, set the cosine learning rate, run SGD over all
// mini-batches (last partial batch kept), then record full-pass training
// loss and accuracy under the epoch's final parameters.
inline TrainResult train(const Dataset& data, const MlpSpec& spec,
                         const LossSpec& loss, const TrainConfig& cfg) {
  spec.validate();
  cfg.validate();
  loss.validate();
  if (data.dim() != spec.input_dim) {
    throw ArgumentError("dataset has " + std::to_string(data.dim()) +
                        " features, network expects " +
                        std::to_string(spec.input_dim));
  }
  if (static_cast<std::size_t>(data.num_classes()) != spec.output_dim) {
    throw ArgumentError("dataset has " + std::to_string(data.num_classes()) +
                        " classes, network has " +
                        std::to_string(spec.output_dim) + " outputs");
  }
  if (!loss.class_counts.empty() && loss.class_counts != data.class_counts()) {
    throw ArgumentError("loss class counts do not match the training data");
  }

  TrainedModel model = TrainedModel::initialize(spec);
  std::vector<double> params = model.parameters();
  std::vector<double> velocity(params.size(), 0.0);
  std::vector<double> grad;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(cfg.shuffle_seed);
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
  std::vector<std::size_t> all(order);

  // Inputs were validated above, so a loss-level rejection here means the
  // parameters blew up (finite weights can still overflow the logits).
  auto guarded = [](int epoch, int batch_index, auto&& body) {
    try {
      return body();
    } catch (const ArgumentError& e) {
      throw DivergenceError(epoch, batch_index, e.what());
    }
  };

  TrainHistory history;
  history.reserve(cfg.epochs);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    const double lr = cosine_lr(epoch, cfg.epochs, cfg.lr_max, cfg.lr_min);
    int batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t stop = std::min(order.size(), start + batch);
      const std::span<const std::size_t> rows(order.data() + start,
                                              stop - start);
      const double value = guarded(epoch, batch_index, [&] {
        return batch_loss_and_gradient(model, data.features(), data.labels(),
                                       rows, loss, grad);
      });
      if (!std::isfinite(value)) {
        throw DivergenceError(epoch, batch_index, "non-finite batch loss");
      }
      for (std::size_t k = 0; k < params.size(); ++k) {
        const double g = grad[k] + cfg.weight_decay * params[k];
        velocity[k] = cfg.momentum * velocity[k] + g;
        params[k] -= lr * velocity[k];
        if (!std::isfinite(params[k])) {
          throw DivergenceError(epoch, batch_index, "non-finite parameter");
        }
      }
      model.set_parameters(params);
      ++batch_index;
    }

    const double epoch_loss = guarded(epoch, batch_index, [&] {
      return batch_loss_and_gradient(model, data.features(), data.labels(), all,
                                     loss, grad);
    });
    if (!std::isfinite(epoch_loss)) {
      throw DivergenceError(epoch, batch_index, "non-finite training loss");
    }
    const std::vector<ClassId> pred =
        argmax_rows(predict_proba(model, data.features()));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      correct += pred[i] == data.labels()[i];
    }
    history.push_back({epoch_loss,
                       static_cast<double>(correct) /
                           static_cast<double>(data.size()),
                       lr});
  }
  return {std::move(model), std::move(history)};
}

// ---------------------------------------------------------------------------
// Text serialization. Every number is written with 17 significant digits,
// which round-trips doubles exactly:
//
//   regroup-mlp 1
//   input_dim <D>
//   hidden_dims <count> <w1> ... <wh>
//   output_dim <C>
//   init_seed <seed>
//   layer <in> <out>
//   <out lines of in weights>
//   <one line of out biases>
//   ... (one layer block per layer)

inline void write_model(std::ostream& out, const TrainedModel& model) {
  const MlpSpec& spec = model.spec();
  out << "regroup-mlp 1\n";
  out << "input_dim " << spec.input_dim << '\n';
  out << "hidden_dims " << spec.hidden_dims.size();
  for (const std::size_t h : spec.hidden_dims) out << ' ' << h;
  out << "\noutput_dim " << spec.output_dim << '\n';
  out << "init_seed " << spec.init_seed << '\n';
  for (const DenseLayer& layer : model.layers()) {
    out << "layer " << layer.in << ' ' << layer.out << '\n';
    for (std::size_t o = 0; o < layer.out; ++o) {
      for (std::size_t i = 0; i < layer.in; ++i) {
        if (i) out << ' ';
        out << detail::format_double(layer.weights[o * layer.in + i]);
      }
      out << '\n';
    }
    for (std::size_t o = 0; o < layer.out; ++o) {
      if (o) out << ' ';
      out << detail::format_double(layer.bias[o]);
    }
    out << '\n';
  }
}

inline TrainedModel read_model(std::istream& in) {
  auto fail = [](const std::string& what) -> DataError {
    return DataError("malformed model file: " + what);
  };
  auto expect_key = [&](const std::string& key) {
    std::string word;
    if (!(in >> word) || word != key) throw fail("expected '" + key + "'");
  };
  auto read_double = [&]() {
    std::string token;
    if (!(in >> token)) throw fail("truncated parameter list");
    const auto v = detail::parse_double(token);
    if (!v) throw fail("bad number '" + token + "'");
    return *v;
  };
  expect_key("regroup-mlp");
  int version = 0;
  if (!(in >> version) || version != 1) throw fail("unsupported version");
  MlpSpec spec;
  std::size_t hidden_count = 0;
  expect_key("input_dim");
  in >> spec.input_dim;
  expect_key("hidden_dims");
  in >> hidden_count;
  spec.hidden_dims.resize(hidden_count);
  for (std::size_t& h : spec.hidden_dims) in >> h;
  expect_key("output_dim");
  in >> spec.output_dim;
  expect_key("init_seed");
  in >> spec.init_seed;
  if (!in) throw fail("bad header");
  std::vector<DenseLayer> layers(hidden_count + 1);
  for (DenseLayer& layer : layers) {
    expect_key("layer");
    if (!(in >> layer.in >> layer.out)) throw fail("bad layer header");
    layer.weights.resize(layer.in * layer.out);
    layer.bias.resize(layer.out);
    for (double& w : layer.weights) w = read_double();
    for (double& b : layer.bias) b = read_double();
  }
  return TrainedModel(std::move(spec), std::move(layers));
}

inline void save_model(const TrainedModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write model file '" + path + "'");
  write_model(out, model);
}

inline TrainedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file '" + path + "'");
  return read_model(in);
}

}  // namespace regroup
