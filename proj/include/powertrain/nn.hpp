#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

// Feed-forward regression network with dense layers, inverted dropout, Adam
// and best-validation checkpointing. Samples are stored as matrix columns.
namespace powertrain::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Rng = std::mt19937_64;

enum class Activation { relu, linear };
enum class LossKind { mse, mape };
enum class ScalingKind { zscore, minmax };

std::string to_string(Activation a);
std::string to_string(LossKind k);
LossKind parse_loss_kind(const std::string& s);

template <typename T>
struct BasicDenseLayer {
  Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> weights;  // out x in
  Eigen::Matrix<T, Eigen::Dynamic, 1> bias;                  // out

  Eigen::Index in() const { return weights.cols(); }
  Eigen::Index out() const { return weights.rows(); }
};

struct NetworkShape {
  int inputs = 4;
  std::vector<int> widths{256, 128, 64, 1};
  std::vector<Activation> activations{Activation::relu, Activation::relu, Activation::relu, Activation::linear};
  double dropout_p = 0.2;
  // Zero-based layer indices whose outputs are dropped out in training mode.
  std::vector<std::size_t> dropout_after{0, 1};
};

template <typename T>
struct BasicNetwork {
  std::vector<BasicDenseLayer<T>> layers;
  std::vector<Activation> activations;
  double dropout_p = 0.0;
  std::vector<std::size_t> dropout_after;

  Eigen::Index input_width() const { return layers.empty() ? 0 : layers.front().in(); }
  std::vector<int> widths() const;
  bool dropout_applies(std::size_t layer) const;

  // Throws DimensionError on inconsistent shapes or non-finite entries.
  void validate() const;

  template <typename U>
  BasicNetwork<U> cast() const {
    BasicNetwork<U> out;
    for (const auto& layer : layers) {
      out.layers.push_back({layer.weights.template cast<U>(), layer.bias.template cast<U>()});
    }
    out.activations = activations;
    out.dropout_p = dropout_p;
    out.dropout_after = dropout_after;
    return out;
  }
};

// Double precision is the storage, inference and gradient-check type;
// training runs in float.
using DenseLayer = BasicDenseLayer<double>;
using Network = BasicNetwork<double>;

// Uniform in +-sqrt(6 / (fan_in + fan_out)), zero bias.
void glorot_init(DenseLayer& layer, Rng& rng);
Network make_network(const NetworkShape& shape, std::uint64_t seed);

// Per-feature affine scaling. zscore stores (mean, std); minmax stores
// (min, max - min) in the same slots.
struct Standardizer {
  ScalingKind kind = ScalingKind::zscore;
  std::vector<double> means;
  std::vector<double> stds;

  // rows: one feature vector per column. Zero-spread features get scale 1.
  static Standardizer fit(const Matrix& rows, ScalingKind kind = ScalingKind::zscore);
  static Standardizer fit(std::span<const double> values, ScalingKind kind = ScalingKind::zscore);

  std::size_t width() const { return means.size(); }
  Matrix apply(const Matrix& rows) const;
  Matrix invert(const Matrix& rows) const;
  double apply(double value, std::size_t feature = 0) const { return (value - means[feature]) / stds[feature]; }
  double invert(double value, std::size_t feature = 0) const { return value * stds[feature] + means[feature]; }
};

// Activations kept by forward() for backward().
template <typename T>
struct BasicForwardCache {
  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  std::vector<Mat> inputs;  // input of each layer (after dropout of the previous one)
  std::vector<Mat> preactivations;
  std::vector<Mat> masks;   // scaled keep masks; empty when dropout is inactive
  Mat output;               // 1 x batch
};
using ForwardCache = BasicForwardCache<double>;

// Batched forward pass over the columns of x. Train mode applies inverted
// dropout drawn from rng.
template <typename T>
const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>& forward(
    const BasicNetwork<T>& net, const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>& x, bool train_mode,
    Rng* rng, BasicForwardCache<T>& cache);
// Inference only.
template <typename T>
Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> forward(const BasicNetwork<T>& net,
                                                         const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>& x);
double forward(const Network& net, std::span<const double> x);

double loss(double pred, double actual, LossKind kind);
// d loss / d pred.
double loss_gradient(double pred, double actual, LossKind kind);

template <typename T>
struct BasicGradients {
  std::vector<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>> weights;
  std::vector<Eigen::Matrix<T, Eigen::Dynamic, 1>> bias;
};
using Gradients = BasicGradients<double>;

// Backpropagate dloss (1 x batch, gradient of the total objective w.r.t.
// each output) through the cached pass.
template <typename T>
void backward(const BasicNetwork<T>& net, const BasicForwardCache<T>& cache,
              const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>& dloss, BasicGradients<T>& grads);
Gradients backward(const Network& net, const ForwardCache& cache, const Matrix& dloss);

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename T>
struct BasicAdamState {
  std::vector<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>> m_weights, v_weights;
  std::vector<Eigen::Matrix<T, Eigen::Dynamic, 1>> m_bias, v_bias;
  long step = 0;

  static BasicAdamState for_network(const BasicNetwork<T>& net);
};
using AdamState = BasicAdamState<double>;

// One bias-corrected Adam update of a parameter array; step is the 1-based
// update count.
template <typename T>
void adam_update(T* theta, const T* g, T* m, T* v, Eigen::Index n, long step, const AdamConfig& cfg) {
  const T b1 = static_cast<T>(cfg.beta1);
  const T b2 = static_cast<T>(cfg.beta2);
  const T c1 = static_cast<T>(1.0 / (1.0 - std::pow(cfg.beta1, static_cast<double>(step))));
  const T c2 = static_cast<T>(1.0 / (1.0 - std::pow(cfg.beta2, static_cast<double>(step))));
  const T lr = static_cast<T>(cfg.learning_rate);
  const T eps = static_cast<T>(cfg.epsilon);
  using Arr = Eigen::Array<T, Eigen::Dynamic, 1>;
  Eigen::Map<Arr> th(theta, n), mm(m, n), vv(v, n);
  Eigen::Map<const Arr> gg(g, n);
  mm = b1 * mm + (T(1) - b1) * gg;
  vv = b2 * vv + (T(1) - b2) * gg.square();
  th -= lr * (mm * c1) / ((vv * c2).sqrt() + eps);
}

// Updates layers [first_trainable, end).
template <typename T>
void adam_step(BasicNetwork<T>& net, BasicAdamState<T>& state, const BasicGradients<T>& grads,
               const AdamConfig& cfg, std::size_t first_trainable = 0);

struct TrainConfig {
  double learning_rate = 0.001;
  int epochs = 100;
  int minibatch_rows = 32;
  double dropout_p = 0.2;
  LossKind loss = LossKind::mse;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double validation_fraction = 0.1;
  // Layers below this index stay frozen (fine-tuning ablation).
  std::size_t first_trainable_layer = 0;
  // Used by callers that fit the input standardizer.
  ScalingKind input_scaling = ScalingKind::zscore;

  void validate() const;
  AdamConfig adam() const { return {learning_rate, beta1, beta2, epsilon}; }
};

// Maps network outputs back to natural target units; MAPE is evaluated there.
struct TargetScale {
  double mean = 0.0;
  double std = 1.0;
};

struct EpochLog {
  int epoch = 0;  // 0 is the untrained starting point
  double train_loss = 0.0;
  double validation_loss = 0.0;
};

struct Checkpoint {
  Network weights;
  double validation_loss = 0.0;
  int epoch = 0;
};

struct TrainResult {
  Network network;  // checkpoint weights
  Checkpoint checkpoint;
  std::vector<EpochLog> log;
};

// x: standardized inputs (features x rows); y: standardized targets.
TrainResult train(const Matrix& x, const Vector& y, const TrainConfig& config, const TargetScale& scale = {},
                  const NetworkShape& shape = {});

// Same loop starting from given weights (dropout_p taken from config).
TrainResult fit(Network start, const Matrix& x, const Vector& y, const TrainConfig& config,
                const TargetScale& scale = {});

// Mean loss of inference-mode predictions.
double evaluate_loss(const Network& net, const Matrix& x, const Vector& y, LossKind kind,
                     const TargetScale& scale = {});

void to_json(nlohmann::json& j, const Network& net);
void from_json(const nlohmann::json& j, Network& net);
void to_json(nlohmann::json& j, const Standardizer& s);
void from_json(const nlohmann::json& j, Standardizer& s);

}  // namespace powertrain::nn
