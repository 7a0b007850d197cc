#include "powertrain/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

#if defined(__SSE__)
#include <pmmintrin.h>
#include <xmmintrin.h>
#endif

#include "powertrain/error.hpp"
#include "powertrain/log.hpp"
#include "powertrain/random.hpp"

namespace powertrain::nn {

namespace {

constexpr Eigen::Index kEvalChunk = 4096;

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

template <typename T>
void gather_columns(const Mat<T>& src, const Vec<T>& ysrc, std::span<const std::size_t> idx, Mat<T>& dst,
                    Vec<T>& ydst) {
  dst.resize(src.rows(), static_cast<Eigen::Index>(idx.size()));
  ydst.resize(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto col = static_cast<Eigen::Index>(idx[i]);
    dst.col(static_cast<Eigen::Index>(i)) = src.col(col);
    ydst(static_cast<Eigen::Index>(i)) = ysrc(col);
  }
}

// Keep mask with entries 0 or 1/keep, from 16-bit uniform draws (four per
// generator call).
template <typename T>
void draw_dropout_mask(Mat<T>& mask, Eigen::Index rows, Eigen::Index cols, double p, Rng& rng) {
  thread_local std::vector<std::uint16_t> draws_buf;
  mask.resize(rows, cols);
  const Eigen::Index n = mask.size();
  draws_buf.resize(static_cast<std::size_t>((n + 3) / 4 * 4));
  for (std::size_t i = 0; i < draws_buf.size(); i += 4) {
    const std::uint64_t word = rng();
    std::memcpy(&draws_buf[i], &word, sizeof word);
  }
  const auto threshold = static_cast<std::uint16_t>(std::min(65535.0, std::ceil(p * 65536.0)));
  const double keep = (65536.0 - threshold) / 65536.0;
  const T scale = static_cast<T>(1.0 / keep);
  const Eigen::Map<const Eigen::Array<std::uint16_t, Eigen::Dynamic, 1>> draws(
      draws_buf.data(), n);
  mask.reshaped().array() = (draws >= threshold).template cast<T>() * scale;
}

// Tiny squared gradients fall into the subnormal range in float and stall
// the Adam update. Flush them to zero for the duration of a training run.
class FlushDenormals {
 public:
  FlushDenormals() {
#if defined(__SSE__)
    saved_ = _mm_getcsr();
    _MM_SET_FLUSH_ZERO_MODE(_MM_FLUSH_ZERO_ON);
    _MM_SET_DENORMALS_ZERO_MODE(_MM_DENORMALS_ZERO_ON);
#endif
  }
  ~FlushDenormals() {
#if defined(__SSE__)
    _mm_setcsr(saved_);
#endif
  }
  FlushDenormals(const FlushDenormals&) = delete;
  FlushDenormals& operator=(const FlushDenormals&) = delete;

 private:
  unsigned int saved_ = 0;
};

template <typename T>
bool all_finite(const BasicNetwork<T>& net) {
  for (const auto& layer : net.layers) {
    if (!layer.weights.allFinite() || !layer.bias.allFinite()) return false;
  }
  return true;
}

}  // namespace

std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "linear"; }

std::string to_string(LossKind k) { return k == LossKind::mse ? "mse" : "mape"; }

LossKind parse_loss_kind(const std::string& s) {
  if (s == "mse" || s == "MSE") return LossKind::mse;
  if (s == "mape" || s == "MAPE") return LossKind::mape;
  throw DataError("unknown loss kind '" + s + "' (expected mse or mape)");
}

template <typename T>
std::vector<int> BasicNetwork<T>::widths() const {
  std::vector<int> out;
  for (const auto& layer : layers) out.push_back(static_cast<int>(layer.out()));
  return out;
}

template <typename T>
bool BasicNetwork<T>::dropout_applies(std::size_t layer) const {
  return dropout_p > 0.0 && std::find(dropout_after.begin(), dropout_after.end(), layer) != dropout_after.end();
}

template <typename T>
void BasicNetwork<T>::validate() const {
  if (layers.empty()) throw DimensionError("network has no layers");
  if (activations.size() != layers.size()) {
    throw DimensionError("activation count " + std::to_string(activations.size()) + " != layer count " +
                         std::to_string(layers.size()));
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].bias.size() != layers[l].out()) {
      throw DimensionError("layer " + std::to_string(l) + ": bias size does not match output width");
    }
    if (l > 0 && layers[l].in() != layers[l - 1].out()) {
      throw DimensionError("layer " + std::to_string(l) + ": input width " + std::to_string(layers[l].in()) +
                           " != previous output width " + std::to_string(layers[l - 1].out()));
    }
  }
  if (layers.back().out() != 1) throw DimensionError("final layer must have width 1");
  if (!all_finite(*this)) throw DimensionError("network contains non-finite weights");
  if (dropout_p < 0.0 || dropout_p >= 1.0) throw DimensionError("dropout probability must be in [0, 1)");
}

void glorot_init(DenseLayer& layer, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(layer.in() + layer.out()));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
    for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = dist(rng);
  }
  layer.bias.setZero();
}

Network make_network(const NetworkShape& shape, std::uint64_t seed) {
  if (shape.widths.size() != shape.activations.size()) {
    throw DimensionError("network shape: widths and activations differ in length");
  }
  Rng rng(seed);
  Network net;
  int in = shape.inputs;
  for (int width : shape.widths) {
    DenseLayer layer{Matrix(width, in), Vector(width)};
    glorot_init(layer, rng);
    net.layers.push_back(std::move(layer));
    in = width;
  }
  net.activations = shape.activations;
  net.dropout_p = shape.dropout_p;
  net.dropout_after = shape.dropout_after;
  net.validate();
  return net;
}

Standardizer Standardizer::fit(const Matrix& rows, ScalingKind kind) {
  if (rows.cols() == 0 || rows.rows() == 0) throw DataError("cannot fit a standardizer on zero rows");
  Standardizer s;
  s.kind = kind;
  for (Eigen::Index f = 0; f < rows.rows(); ++f) {
    const auto feature = rows.row(f);
    double center = 0.0;
    double spread = 0.0;
    if (kind == ScalingKind::zscore) {
      center = feature.mean();
      spread = std::sqrt((feature.array() - center).square().mean());
    } else {
      center = feature.minCoeff();
      spread = feature.maxCoeff() - center;
    }
    if (!(spread > 0.0) || !std::isfinite(spread)) {
      warn("standardizer: feature " + std::to_string(f) + " has zero spread, using scale 1");
      spread = 1.0;
    }
    s.means.push_back(center);
    s.stds.push_back(spread);
  }
  return s;
}

Standardizer Standardizer::fit(std::span<const double> values, ScalingKind kind) {
  Matrix rows(1, static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) rows(0, static_cast<Eigen::Index>(i)) = values[i];
  return fit(rows, kind);
}

Matrix Standardizer::apply(const Matrix& rows) const {
  if (static_cast<std::size_t>(rows.rows()) != width()) {
    throw DimensionError("standardizer expects " + std::to_string(width()) + " features, got " +
                         std::to_string(rows.rows()));
  }
  Matrix out(rows.rows(), rows.cols());
  for (Eigen::Index f = 0; f < rows.rows(); ++f) {
    const auto i = static_cast<std::size_t>(f);
    out.row(f) = (rows.row(f).array() - means[i]) / stds[i];
  }
  return out;
}

Matrix Standardizer::invert(const Matrix& rows) const {
  if (static_cast<std::size_t>(rows.rows()) != width()) {
    throw DimensionError("standardizer expects " + std::to_string(width()) + " features, got " +
                         std::to_string(rows.rows()));
  }
  Matrix out(rows.rows(), rows.cols());
  for (Eigen::Index f = 0; f < rows.rows(); ++f) {
    const auto i = static_cast<std::size_t>(f);
    out.row(f) = rows.row(f).array() * stds[i] + means[i];
  }
  return out;
}

template <typename T>
const Mat<T>& forward(const BasicNetwork<T>& net, const Mat<T>& x, bool train_mode, Rng* rng,
                      BasicForwardCache<T>& cache) {
  if (x.rows() != net.input_width()) {
    throw DimensionError("input has " + std::to_string(x.rows()) + " features, network expects " +
                         std::to_string(net.input_width()));
  }
  const std::size_t n_layers = net.layers.size();
  cache.inputs.resize(n_layers);
  cache.preactivations.resize(n_layers);
  cache.masks.resize(n_layers);
  cache.inputs[0] = x;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const auto& layer = net.layers[l];
    Mat<T>& z = cache.preactivations[l];
    z.noalias() = layer.weights * cache.inputs[l];
    z.colwise() += layer.bias;
    Mat<T>& a = l + 1 < n_layers ? cache.inputs[l + 1] : cache.output;
    const bool drop = train_mode && net.dropout_applies(l);
    if (drop) {
      if (rng == nullptr) throw Error("train-mode forward needs a random generator for dropout");
      draw_dropout_mask(cache.masks[l], z.rows(), z.cols(), net.dropout_p, *rng);
    } else {
      cache.masks[l].resize(0, 0);
    }
    if (net.activations[l] == Activation::relu) {
      if (drop) {
        a = z.cwiseMax(T(0)).cwiseProduct(cache.masks[l]);
      } else {
        a = z.cwiseMax(T(0));
      }
    } else {
      a = drop ? Mat<T>(z.cwiseProduct(cache.masks[l])) : z;
    }
  }
  return cache.output;
}

template <typename T>
Mat<T> forward(const BasicNetwork<T>& net, const Mat<T>& x) {
  if (x.rows() != net.input_width()) {
    throw DimensionError("input has " + std::to_string(x.rows()) + " features, network expects " +
                         std::to_string(net.input_width()));
  }
  Mat<T> a = x;
  Mat<T> z;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    z.noalias() = net.layers[l].weights * a;
    z.colwise() += net.layers[l].bias;
    if (net.activations[l] == Activation::relu) {
      a = z.cwiseMax(T(0));
    } else {
      a = z;
    }
  }
  return a;
}

double forward(const Network& net, std::span<const double> x) {
  Matrix col(static_cast<Eigen::Index>(x.size()), 1);
  for (std::size_t i = 0; i < x.size(); ++i) col(static_cast<Eigen::Index>(i), 0) = x[i];
  return forward<double>(net, col)(0, 0);
}

double loss(double pred, double actual, LossKind kind) {
  if (kind == LossKind::mse) {
    const double d = pred - actual;
    return d * d;
  }
  if (actual == 0.0) throw DataError("MAPE is undefined for an actual value of 0");
  return std::abs(pred - actual) / std::abs(actual);
}

double loss_gradient(double pred, double actual, LossKind kind) {
  if (kind == LossKind::mse) return 2.0 * (pred - actual);
  if (actual == 0.0) throw DataError("MAPE is undefined for an actual value of 0");
  const double d = pred - actual;
  const double sign = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
  return sign / std::abs(actual);
}

template <typename T>
void backward(const BasicNetwork<T>& net, const BasicForwardCache<T>& cache, const Mat<T>& dloss,
              BasicGradients<T>& grads) {
  const std::size_t n_layers = net.layers.size();
  if (cache.inputs.size() != n_layers || cache.preactivations.size() != n_layers ||
      cache.output.cols() != dloss.cols() || dloss.rows() != 1) {
    throw DimensionError("backward: cache does not match this network or loss gradient");
  }
  for (std::size_t l = 0; l < n_layers; ++l) {
    if (cache.inputs[l].rows() != net.layers[l].in() || cache.preactivations[l].rows() != net.layers[l].out()) {
      throw DimensionError("backward: stale cache for layer " + std::to_string(l));
    }
  }
  grads.weights.resize(n_layers);
  grads.bias.resize(n_layers);

  thread_local Mat<T> delta;  // gradient w.r.t. the current layer's output
  thread_local Mat<T> upstream;
  delta = dloss;
  for (std::size_t l = n_layers; l-- > 0;) {
    if (cache.masks[l].size() != 0) delta.array() *= cache.masks[l].array();
    if (net.activations[l] == Activation::relu) {
      delta.array() *= (cache.preactivations[l].array() > T(0)).template cast<T>();
    }
    grads.weights[l].noalias() = delta * cache.inputs[l].transpose();
    grads.bias[l] = delta.rowwise().sum();
    if (l > 0) {
      upstream.noalias() = net.layers[l].weights.transpose() * delta;
      delta.swap(upstream);
    }
  }
}

Gradients backward(const Network& net, const ForwardCache& cache, const Matrix& dloss) {
  Gradients g;
  backward(net, cache, dloss, g);
  return g;
}

template <typename T>
BasicAdamState<T> BasicAdamState<T>::for_network(const BasicNetwork<T>& net) {
  BasicAdamState<T> s;
  for (const auto& layer : net.layers) {
    s.m_weights.push_back(Mat<T>::Zero(layer.out(), layer.in()));
    s.v_weights.push_back(Mat<T>::Zero(layer.out(), layer.in()));
    s.m_bias.push_back(Vec<T>::Zero(layer.out()));
    s.v_bias.push_back(Vec<T>::Zero(layer.out()));
  }
  return s;
}

template <typename T>
void adam_step(BasicNetwork<T>& net, BasicAdamState<T>& state, const BasicGradients<T>& grads, const AdamConfig& cfg,
               std::size_t first_trainable) {
  if (state.m_weights.size() != net.layers.size() || grads.weights.size() != net.layers.size()) {
    throw DimensionError("adam_step: optimizer state does not match network");
  }
  ++state.step;
  for (std::size_t l = first_trainable; l < net.layers.size(); ++l) {
    auto& layer = net.layers[l];
    adam_update(layer.weights.data(), grads.weights[l].data(), state.m_weights[l].data(), state.v_weights[l].data(),
                layer.weights.size(), state.step, cfg);
    adam_update(layer.bias.data(), grads.bias[l].data(), state.m_bias[l].data(), state.v_bias[l].data(),
                layer.bias.size(), state.step, cfg);
  }
}

template struct BasicNetwork<double>;
template struct BasicNetwork<float>;
template struct BasicAdamState<double>;
template struct BasicAdamState<float>;
template const Mat<double>& forward(const BasicNetwork<double>&, const Mat<double>&, bool, Rng*,
                                    BasicForwardCache<double>&);
template const Mat<float>& forward(const BasicNetwork<float>&, const Mat<float>&, bool, Rng*,
                                   BasicForwardCache<float>&);
template Mat<double> forward(const BasicNetwork<double>&, const Mat<double>&);
template Mat<float> forward(const BasicNetwork<float>&, const Mat<float>&);
template void backward(const BasicNetwork<double>&, const BasicForwardCache<double>&, const Mat<double>&,
                       BasicGradients<double>&);
template void backward(const BasicNetwork<float>&, const BasicForwardCache<float>&, const Mat<float>&,
                       BasicGradients<float>&);
template void adam_step(BasicNetwork<double>&, BasicAdamState<double>&, const BasicGradients<double>&,
                        const AdamConfig&, std::size_t);
template void adam_step(BasicNetwork<float>&, BasicAdamState<float>&, const BasicGradients<float>&,
                        const AdamConfig&, std::size_t);

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw DataError("learning_rate must be positive");
  if (epochs < 0) throw DataError("epochs must be non-negative");
  if (minibatch_rows < 1) throw DataError("minibatch_rows must be positive");
  if (dropout_p < 0.0 || dropout_p >= 1.0) throw DataError("dropout_p must be in [0, 1)");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw DataError("validation_fraction must be in (0, 1)");
  }
  if (!(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0 && epsilon > 0.0)) {
    throw DataError("Adam betas must be in (0, 1) and epsilon positive");
  }
}

namespace {

template <typename T>
double evaluate_loss_impl(const BasicNetwork<T>& net, const Mat<T>& x, const Vec<T>& y, LossKind kind,
                          const TargetScale& scale) {
  if (x.cols() != y.size()) throw DimensionError("evaluate_loss: row count mismatch");
  if (x.cols() == 0) return 0.0;
  double total = 0.0;
  for (Eigen::Index start = 0; start < x.cols(); start += kEvalChunk) {
    const Eigen::Index n = std::min(kEvalChunk, x.cols() - start);
    const Mat<T> pred = forward(net, Mat<T>(x.middleCols(start, n)));
    for (Eigen::Index i = 0; i < n; ++i) {
      const double p = static_cast<double>(pred(0, i));
      const double a = static_cast<double>(y(start + i));
      if (kind == LossKind::mse) {
        total += loss(p, a, kind);
      } else {
        total += loss(p * scale.std + scale.mean, a * scale.std + scale.mean, kind);
      }
    }
  }
  return total / static_cast<double>(x.cols());
}

}  // namespace

double evaluate_loss(const Network& net, const Matrix& x, const Vector& y, LossKind kind, const TargetScale& scale) {
  return evaluate_loss_impl(net, x, y, kind, scale);
}

TrainResult train(const Matrix& x, const Vector& y, const TrainConfig& config, const TargetScale& scale,
                  const NetworkShape& shape) {
  NetworkShape s = shape;
  s.inputs = static_cast<int>(x.rows());
  s.dropout_p = config.dropout_p;
  return fit(make_network(s, mix_seed(config.seed, 1)), x, y, config, scale);
}

TrainResult fit(Network start, const Matrix& x, const Vector& y, const TrainConfig& config,
                const TargetScale& scale) {
  using F = float;
  config.validate();
  if (x.cols() != y.size()) throw DimensionError("train: feature rows and targets differ in count");
  if (x.cols() < 2) throw DataError("train: need at least 2 rows");
  if (x.rows() != start.input_width()) {
    throw DimensionError("train: rows have " + std::to_string(x.rows()) + " features, network expects " +
                         std::to_string(start.input_width()));
  }
  if (config.first_trainable_layer >= start.layers.size()) {
    throw DataError("train: first_trainable_layer leaves no trainable layer");
  }

  start.dropout_p = config.dropout_p;
  start.validate();
  const FlushDenormals ftz;
  BasicNetwork<F> net = start.cast<F>();

  // Deterministic train/validation split over rows.
  const auto n_rows = static_cast<std::size_t>(x.cols());
  std::vector<std::size_t> order(n_rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng split_rng(mix_seed(config.seed, 2));
  std::shuffle(order.begin(), order.end(), split_rng);
  std::size_t n_val = static_cast<std::size_t>(std::llround(config.validation_fraction * static_cast<double>(n_rows)));
  n_val = std::clamp<std::size_t>(n_val, 1, n_rows - 1);
  const Mat<F> xf = x.cast<F>();
  const Vec<F> yf = y.cast<F>();
  Mat<F> x_val, x_train;
  Vec<F> y_val, y_train;
  gather_columns(xf, yf, std::span(order).first(n_val), x_val, y_val);
  gather_columns(xf, yf, std::span(order).subspan(n_val), x_train, y_train);
  const std::size_t n_train = n_rows - n_val;

  TrainResult result;
  const double initial_val = evaluate_loss_impl(net, x_val, y_val, config.loss, scale);
  const double initial_train = evaluate_loss_impl(net, x_train, y_train, config.loss, scale);
  result.log.push_back({0, initial_train, initial_val});
  BasicNetwork<F> best = net;
  result.checkpoint.validation_loss = initial_val;
  result.checkpoint.epoch = 0;

  Rng rng(mix_seed(config.seed, 3));
  auto adam = BasicAdamState<F>::for_network(net);
  const AdamConfig adam_cfg = config.adam();
  BasicForwardCache<F> cache;
  BasicGradients<F> grads;
  Mat<F> xb, dloss;
  Vec<F> yb;
  std::vector<std::size_t> batch_order(n_train);
  std::iota(batch_order.begin(), batch_order.end(), std::size_t{0});
  const auto batch_rows = static_cast<std::size_t>(config.minibatch_rows);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(batch_order.begin(), batch_order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start_row = 0; start_row < n_train; start_row += batch_rows) {
      const std::size_t b = std::min(batch_rows, n_train - start_row);
      gather_columns(x_train, y_train, std::span(batch_order).subspan(start_row, b), xb, yb);
      const Mat<F>& pred = forward(net, xb, true, &rng, cache);
      dloss.resize(1, static_cast<Eigen::Index>(b));
      const double inv_b = 1.0 / static_cast<double>(b);
      for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(b); ++i) {
        const double p = static_cast<double>(pred(0, i));
        const double a = static_cast<double>(yb(i));
        if (config.loss == LossKind::mse) {
          epoch_loss += loss(p, a, LossKind::mse);
          dloss(0, i) = static_cast<F>(loss_gradient(p, a, LossKind::mse) * inv_b);
        } else {
          const double pn = p * scale.std + scale.mean;
          const double an = a * scale.std + scale.mean;
          epoch_loss += loss(pn, an, LossKind::mape);
          dloss(0, i) = static_cast<F>(loss_gradient(pn, an, LossKind::mape) * scale.std * inv_b);
        }
      }
      backward(net, cache, dloss, grads);
      adam_step(net, adam, grads, adam_cfg, config.first_trainable_layer);
    }
    const double train_loss = epoch_loss / static_cast<double>(n_train);
    if (!std::isfinite(train_loss) || !all_finite(net)) {
      throw DivergenceError(epoch, "non-finite training loss");
    }
    const double val_loss = evaluate_loss_impl(net, x_val, y_val, config.loss, scale);
    if (!std::isfinite(val_loss)) throw DivergenceError(epoch, "non-finite validation loss");
    result.log.push_back({epoch, train_loss, val_loss});
    if (val_loss < result.checkpoint.validation_loss) {
      best = net;
      result.checkpoint.validation_loss = val_loss;
      result.checkpoint.epoch = epoch;
    }
  }
  // Untouched weights are returned exactly rather than through float.
  if (result.checkpoint.epoch == 0) {
    result.checkpoint.weights = start;
  } else {
    result.checkpoint.weights = best.cast<double>();
    for (std::size_t l = 0; l < config.first_trainable_layer; ++l) {
      result.checkpoint.weights.layers[l] = start.layers[l];
    }
  }
  result.network = result.checkpoint.weights;
  return result;
}

void to_json(nlohmann::json& j, const Network& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : net.layers) {
    std::vector<double> weights;
    weights.reserve(static_cast<std::size_t>(layer.weights.size()));
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) weights.push_back(layer.weights(r, c));
    }
    std::vector<double> bias(layer.bias.data(), layer.bias.data() + layer.bias.size());
    layers.push_back({{"out", layer.out()}, {"in", layer.in()}, {"weights_row_major", weights}, {"bias", bias}});
  }
  std::vector<std::string> activations;
  for (auto a : net.activations) activations.push_back(to_string(a));
  j = nlohmann::json{{"layers", layers},
                     {"activations", activations},
                     {"dropout", {{"p", net.dropout_p}, {"after_layers", net.dropout_after}}}};
}

void from_json(const nlohmann::json& j, Network& net) {
  net = Network{};
  for (const auto& jl : j.at("layers")) {
    const auto out = jl.at("out").get<Eigen::Index>();
    const auto in = jl.at("in").get<Eigen::Index>();
    const auto weights = jl.at("weights_row_major").get<std::vector<double>>();
    const auto bias = jl.at("bias").get<std::vector<double>>();
    if (out <= 0 || in <= 0 || weights.size() != static_cast<std::size_t>(out * in) ||
        bias.size() != static_cast<std::size_t>(out)) {
      throw DimensionError("layer record has inconsistent dimensions");
    }
    DenseLayer layer{Matrix(out, in), Vector(out)};
    for (Eigen::Index r = 0; r < out; ++r) {
      for (Eigen::Index c = 0; c < in; ++c) layer.weights(r, c) = weights[static_cast<std::size_t>(r * in + c)];
    }
    for (Eigen::Index r = 0; r < out; ++r) layer.bias(r) = bias[static_cast<std::size_t>(r)];
    net.layers.push_back(std::move(layer));
  }
  for (const auto& ja : j.at("activations")) {
    const auto name = ja.get<std::string>();
    if (name == "relu") {
      net.activations.push_back(Activation::relu);
    } else if (name == "linear") {
      net.activations.push_back(Activation::linear);
    } else {
      throw DataError("unknown activation '" + name + "'");
    }
  }
  j.at("dropout").at("p").get_to(net.dropout_p);
  j.at("dropout").at("after_layers").get_to(net.dropout_after);
  net.validate();
}

void to_json(nlohmann::json& j, const Standardizer& s) {
  j = nlohmann::json{{"kind", s.kind == ScalingKind::zscore ? "zscore" : "minmax"}, {"means", s.means}, {"stds", s.stds}};
}

void from_json(const nlohmann::json& j, Standardizer& s) {
  const auto kind = j.value("kind", std::string("zscore"));
  if (kind != "zscore" && kind != "minmax") throw DataError("unknown scaling kind '" + kind + "'");
  s.kind = kind == "zscore" ? ScalingKind::zscore : ScalingKind::minmax;
  j.at("means").get_to(s.means);
  j.at("stds").get_to(s.stds);
  if (s.means.size() != s.stds.size()) throw DimensionError("standardizer means/stds differ in length");
  for (double sd : s.stds) {
    if (!(sd > 0.0)) throw DataError("standardizer scale must be positive");
  }
}

}  // namespace powertrain::nn
