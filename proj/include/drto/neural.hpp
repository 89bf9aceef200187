#pragma once

#include "drto/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace drto {

// Sigmoid outputs are clipped this far away from {0, 1} so the cross-entropy
// loss stays finite.
inline constexpr double kOutputClip = 1e-7;

struct AdamConfig {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Dense policy network: ReLU hidden layers, clipped sigmoid output. Weights
// are stored row-major per layer (row = output neuron); biases start at zero
// and weights at N(0, init_std^2).
//
// The scalar type is a template parameter: the online agents run
// single-precision networks (the usual deep-learning inference precision, and
// half the memory traffic on the latency-critical forward pass), while the
// double instantiation backs the gradient-verification oracles.
template <typename Scalar = double>
class MlpT {
 public:
  MlpT(std::vector<std::size_t> dims, Rng& rng, double init_std = 0.1)
      : MlpT(std::move(dims)) {
    for (std::size_t l = 0; l < layer_count(); ++l)
      for (Scalar& w : weights_[l]) w = static_cast<Scalar>(rng.normal(0.0, init_std));
  }

  /// Shape-only constructor (zero parameters); used by deserialization and
  /// tests that set weights explicitly.
  explicit MlpT(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
    if (dims_.size() < 2) throw std::invalid_argument("Mlp: need input and output layers");
    for (std::size_t d : dims_)
      if (d == 0) throw std::invalid_argument("Mlp: zero-width layer");
    weights_.resize(layer_count());
    biases_.resize(layer_count());
    for (std::size_t l = 0; l < layer_count(); ++l) {
      weights_[l].assign(dims_[l + 1] * dims_[l], Scalar(0));
      biases_[l].assign(dims_[l + 1], Scalar(0));
    }
  }

  std::size_t layer_count() const { return dims_.size() - 1; }
  std::size_t input_dim() const { return dims_.front(); }
  std::size_t output_dim() const { return dims_.back(); }
  const std::vector<std::size_t>& dims() const { return dims_; }

  std::vector<std::vector<Scalar>>& weights() { return weights_; }
  std::vector<std::vector<Scalar>>& biases() { return biases_; }
  const std::vector<std::vector<Scalar>>& weights() const { return weights_; }
  const std::vector<std::vector<Scalar>>& biases() const { return biases_; }

  /// Relaxed location for one input vector; entries lie in (0, 1).
  std::vector<double> forward(const std::vector<double>& input) const {
    check_input(input);
    std::vector<Scalar> a(input.begin(), input.end()), z;
    run_layers(a, z);
    return std::vector<double>(a.begin(), a.end());
  }

  static Scalar clipped_sigmoid(Scalar z) {
    const Scalar s = Scalar(1) / (Scalar(1) + std::exp(-z));
    return std::min(std::max(s, Scalar(kOutputClip)), Scalar(1.0 - kOutputClip));
  }

  // The per-frame decision latency rides on this kernel. Row blocks share the
  // input loads and amortize the reduction tails; the simd pragmas let the
  // compiler vectorize (a no-op without -fopenmp-simd).
  void affine_raw(std::size_t layer, const Scalar* __restrict x, Scalar* __restrict out) const {
    const std::size_t rows = dims_[layer + 1];
    const std::size_t cols = dims_[layer];
    const Scalar* __restrict w = weights_[layer].data();
    const Scalar* __restrict b = biases_[layer].data();
    std::size_t r = 0;
    for (; r + 4 <= rows; r += 4) {
      const Scalar* w0 = w + r * cols;
      const Scalar* w1 = w0 + cols;
      const Scalar* w2 = w1 + cols;
      const Scalar* w3 = w2 + cols;
      Scalar a0 = 0, a1 = 0, a2 = 0, a3 = 0;
#pragma omp simd reduction(+ : a0, a1, a2, a3)
      for (std::size_t c = 0; c < cols; ++c) {
        a0 += w0[c] * x[c];
        a1 += w1[c] * x[c];
        a2 += w2[c] * x[c];
        a3 += w3[c] * x[c];
      }
      out[r] = a0 + b[r];
      out[r + 1] = a1 + b[r + 1];
      out[r + 2] = a2 + b[r + 2];
      out[r + 3] = a3 + b[r + 3];
    }
    for (; r < rows; ++r) {
      const Scalar* wr = w + r * cols;
      Scalar acc = 0;
#pragma omp simd reduction(+ : acc)
      for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
      out[r] = acc + b[r];
    }
  }

  void affine(std::size_t layer, const std::vector<Scalar>& in, std::vector<Scalar>& out) const {
    out.resize(dims_[layer + 1]);
    affine_raw(layer, in.data(), out.data());
  }

  std::size_t max_dim() const {
    std::size_t m = 0;
    for (std::size_t d : dims_) m = std::max(m, d);
    return m;
  }

  /// Applies all layers in place: `a` enters as the input and leaves as the
  /// clipped output; `z` is scratch. Both buffers are grown once and then
  /// reused, so steady-state calls allocate nothing.
  void run_layers(std::vector<Scalar>& a, std::vector<Scalar>& z) const {
    const std::size_t cap = max_dim();
    a.resize(cap);
    z.resize(cap);
    Scalar* x = a.data();
    Scalar* y = z.data();
    for (std::size_t l = 0; l < layer_count(); ++l) {
      affine_raw(l, x, y);
      const std::size_t rows = dims_[l + 1];
      if (l + 1 < layer_count()) {
        for (std::size_t r = 0; r < rows; ++r) y[r] = y[r] > Scalar(0) ? y[r] : Scalar(0);
      } else {
        for (std::size_t r = 0; r < rows; ++r) y[r] = clipped_sigmoid(y[r]);
      }
      std::swap(x, y);
    }
    if (x != a.data()) std::copy(x, x + dims_.back(), a.data());
    a.resize(dims_.back());
  }

  void check_input(const std::vector<double>& input) const {
    if (input.size() != input_dim())
      throw std::invalid_argument("Mlp::forward: input has " + std::to_string(input.size()) +
                                  " entries, expected " + std::to_string(input_dim()));
    for (double v : input)
      if (!std::isfinite(v)) throw std::invalid_argument("Mlp::forward: non-finite input");
  }

 private:
  std::vector<std::size_t> dims_;
  std::vector<std::vector<Scalar>> weights_;
  std::vector<std::vector<Scalar>> biases_;
};

using Mlp = MlpT<double>;
using PolicyNet = MlpT<float>;

struct TrainSample {
  std::vector<double> input;
  std::vector<double> label;  // binary entries
};

template <typename Scalar = double>
struct GradientsT {
  std::vector<std::vector<Scalar>> weights;
  std::vector<std::vector<Scalar>> biases;
};

using Gradients = GradientsT<double>;

/// Binary cross-entropy averaged over both the batch and the output entries.
template <typename Scalar>
double batch_loss(const MlpT<Scalar>& net, std::span<const TrainSample> batch) {
  if (batch.empty()) throw std::invalid_argument("batch_loss: empty batch");
  double sum = 0.0;
  for (const TrainSample& s : batch) {
    const std::vector<double> y = net.forward(s.input);
    if (s.label.size() != y.size())
      throw std::invalid_argument("batch_loss: label/output size mismatch");
    for (std::size_t i = 0; i < y.size(); ++i)
      sum -= s.label[i] * std::log(y[i]) + (1.0 - s.label[i]) * std::log(1.0 - y[i]);
  }
  return sum / (static_cast<double>(batch.size()) * static_cast<double>(net.output_dim()));
}

// Analytic gradients of batch_loss at the current parameters, plus the loss
// itself. The whole batch moves through each layer together (activations are
// [sample][unit] matrices, sample-tiled so weight rows are reused across the
// tile rather than re-streamed per sample). The output delta uses the clipped
// activation, which equals the exact derivative whenever the clip is inactive.
template <typename Scalar>
std::pair<double, GradientsT<Scalar>> backprop(const MlpT<Scalar>& net,
                                               std::span<const TrainSample> batch) {
  if (batch.empty()) throw std::invalid_argument("backprop: empty batch");
  const std::size_t bsz = batch.size();
  const std::size_t layers = net.layer_count();
  const std::vector<std::size_t>& dims = net.dims();
  constexpr std::size_t kTile = 16;

  for (const TrainSample& s : batch) {
    if (s.input.size() != net.input_dim())
      throw std::invalid_argument("backprop: input size mismatch");
    if (s.label.size() != net.output_dim())
      throw std::invalid_argument("backprop: label size mismatch");
  }

  std::vector<std::vector<Scalar>> acts(layers + 1);
  acts[0].resize(bsz * dims[0]);
  for (std::size_t b = 0; b < bsz; ++b)
    for (std::size_t i = 0; i < dims[0]; ++i)
      acts[0][b * dims[0] + i] = static_cast<Scalar>(batch[b].input[i]);

  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t rows = dims[l + 1];
    const std::size_t cols = dims[l];
    const Scalar* w = net.weights()[l].data();
    const Scalar* bias = net.biases()[l].data();
    acts[l + 1].resize(bsz * rows);
    Scalar* out = acts[l + 1].data();
    const Scalar* in = acts[l].data();
    for (std::size_t b0 = 0; b0 < bsz; b0 += kTile) {
      const std::size_t b1 = std::min(b0 + kTile, bsz);
      for (std::size_t r = 0; r < rows; ++r) {
        const Scalar* wr = w + r * cols;
        for (std::size_t b = b0; b < b1; ++b) {
          const Scalar* x = in + b * cols;
          Scalar acc = 0;
#pragma omp simd reduction(+ : acc)
          for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
          out[b * rows + r] = acc + bias[r];
        }
      }
    }
    if (l + 1 < layers) {
      for (Scalar& v : acts[l + 1]) v = v > Scalar(0) ? v : Scalar(0);
    } else {
      for (Scalar& v : acts[l + 1]) v = MlpT<Scalar>::clipped_sigmoid(v);
    }
  }

  const double scale =
      1.0 / (static_cast<double>(bsz) * static_cast<double>(net.output_dim()));
  double loss_sum = 0.0;
  const std::size_t out_dim = net.output_dim();
  std::vector<Scalar> delta(bsz * out_dim);
  for (std::size_t b = 0; b < bsz; ++b) {
    for (std::size_t i = 0; i < out_dim; ++i) {
      const double yi = static_cast<double>(acts[layers][b * out_dim + i]);
      const double label = batch[b].label[i];
      loss_sum -= label * std::log(yi) + (1.0 - label) * std::log(1.0 - yi);
      delta[b * out_dim + i] = static_cast<Scalar>((yi - label) * scale);
    }
  }

  GradientsT<Scalar> g;
  g.weights.resize(layers);
  g.biases.resize(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    g.weights[l].assign(net.weights()[l].size(), Scalar(0));
    g.biases[l].assign(net.biases()[l].size(), Scalar(0));
  }

  std::vector<Scalar> next_delta;
  for (std::size_t l = layers; l-- > 0;) {
    const std::size_t rows = dims[l + 1];
    const std::size_t cols = dims[l];
    Scalar* gw = g.weights[l].data();
    const Scalar* a = acts[l].data();
    for (std::size_t b0 = 0; b0 < bsz; b0 += kTile) {
      const std::size_t b1 = std::min(b0 + kTile, bsz);
      for (std::size_t r = 0; r < rows; ++r) {
        Scalar* gwr = gw + r * cols;
        for (std::size_t b = b0; b < b1; ++b) {
          const Scalar dv = delta[b * rows + r];
          const Scalar* ab = a + b * cols;
#pragma omp simd
          for (std::size_t c = 0; c < cols; ++c) gwr[c] += dv * ab[c];
        }
      }
    }
    for (std::size_t b = 0; b < bsz; ++b)
      for (std::size_t r = 0; r < rows; ++r) g.biases[l][r] += delta[b * rows + r];

    if (l == 0) break;
    next_delta.assign(bsz * cols, Scalar(0));
    const Scalar* w = net.weights()[l].data();
    for (std::size_t b0 = 0; b0 < bsz; b0 += kTile) {
      const std::size_t b1 = std::min(b0 + kTile, bsz);
      for (std::size_t r = 0; r < rows; ++r) {
        const Scalar* wr = w + r * cols;
        for (std::size_t b = b0; b < b1; ++b) {
          const Scalar dv = delta[b * rows + r];
          Scalar* nd = next_delta.data() + b * cols;
#pragma omp simd
          for (std::size_t c = 0; c < cols; ++c) nd[c] += dv * wr[c];
        }
      }
    }
    // ReLU gate of layer l's activation.
    for (std::size_t i = 0; i < bsz * cols; ++i)
      if (a[i] <= Scalar(0)) next_delta[i] = Scalar(0);
    delta.swap(next_delta);
  }
  return {loss_sum * scale, std::move(g)};
}

template <typename Scalar = double>
struct AdamStateT {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<std::vector<Scalar>> m_w, v_w, m_b, v_b;

  static AdamStateT for_net(const MlpT<Scalar>& net, AdamConfig cfg = {}) {
    AdamStateT s;
    s.config = cfg;
    const std::size_t layers = net.layer_count();
    s.m_w.resize(layers);
    s.v_w.resize(layers);
    s.m_b.resize(layers);
    s.v_b.resize(layers);
    for (std::size_t l = 0; l < layers; ++l) {
      s.m_w[l].assign(net.weights()[l].size(), Scalar(0));
      s.v_w[l].assign(net.weights()[l].size(), Scalar(0));
      s.m_b[l].assign(net.biases()[l].size(), Scalar(0));
      s.v_b[l].assign(net.biases()[l].size(), Scalar(0));
    }
    return s;
  }
};

using AdamState = AdamStateT<double>;

namespace detail {

template <typename Scalar>
void adam_apply(std::vector<Scalar>& param, std::vector<Scalar>& m, std::vector<Scalar>& v,
                const std::vector<Scalar>& grad, const AdamConfig& c, double bc1, double bc2) {
  const Scalar b1 = static_cast<Scalar>(c.beta1);
  const Scalar b2 = static_cast<Scalar>(c.beta2);
  const Scalar lr = static_cast<Scalar>(c.learning_rate);
  const Scalar eps = static_cast<Scalar>(c.epsilon);
  const Scalar ibc1 = static_cast<Scalar>(1.0 / bc1);
  const Scalar ibc2 = static_cast<Scalar>(1.0 / bc2);
  for (std::size_t i = 0; i < param.size(); ++i) {
    m[i] = b1 * m[i] + (Scalar(1) - b1) * grad[i];
    v[i] = b2 * v[i] + (Scalar(1) - b2) * grad[i] * grad[i];
    const Scalar mhat = m[i] * ibc1;
    const Scalar vhat = v[i] * ibc2;
    param[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

}  // namespace detail

template <typename Scalar>
void adam_update(MlpT<Scalar>& net, AdamStateT<Scalar>& opt, const GradientsT<Scalar>& g) {
  opt.step += 1;
  const double bc1 = 1.0 - std::pow(opt.config.beta1, static_cast<double>(opt.step));
  const double bc2 = 1.0 - std::pow(opt.config.beta2, static_cast<double>(opt.step));
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    detail::adam_apply(net.weights()[l], opt.m_w[l], opt.v_w[l], g.weights[l], opt.config, bc1, bc2);
    detail::adam_apply(net.biases()[l], opt.m_b[l], opt.v_b[l], g.biases[l], opt.config, bc1, bc2);
  }
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    for (Scalar w : net.weights()[l])
      if (!std::isfinite(static_cast<double>(w)))
        throw std::runtime_error("adam_update: non-finite weight after step " +
                                 std::to_string(opt.step));
    for (Scalar b : net.biases()[l])
      if (!std::isfinite(static_cast<double>(b)))
        throw std::runtime_error("adam_update: non-finite bias after step " +
                                 std::to_string(opt.step));
  }
}

/// One optimization step on the batch; returns the loss measured before the
/// update.
template <typename Scalar>
double train_batch(MlpT<Scalar>& net, AdamStateT<Scalar>& opt, std::span<const TrainSample> batch) {
  auto [loss, grads] = backprop(net, batch);
  if (!std::isfinite(loss)) {
    std::ostringstream msg;
    msg << "train_batch: non-finite loss at optimizer step " << opt.step + 1 << " (batch of "
        << batch.size() << ", input dim " << net.input_dim() << ")";
    throw std::runtime_error(msg.str());
  }
  adam_update(net, opt, grads);
  return loss;
}

// Bounded FIFO of training pairs. Once full, each push overwrites the oldest
// entry.
class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t capacity = 1024) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("ReplayMemory: capacity must be positive");
  }

  void push(std::vector<double> state, std::vector<double> label) {
    TrainSample s{std::move(state), std::move(label)};
    if (entries_.size() < capacity_) {
      entries_.push_back(std::move(s));
    } else {
      entries_[cursor_] = std::move(s);
      cursor_ = (cursor_ + 1) % capacity_;
    }
  }

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return entries_.empty(); }
  const TrainSample& at(std::size_t i) const { return entries_.at(i); }

  /// Uniform batch: without replacement once enough entries exist, with
  /// replacement while the memory is still smaller than the batch.
  std::vector<TrainSample> sample(std::size_t batch_size, Rng& rng) const {
    std::vector<TrainSample> out;
    sample_into(out, batch_size, rng);
    return out;
  }

  /// sample() into a reused buffer: steady-state callers keep one batch
  /// vector whose element capacity absorbs the copies.
  void sample_into(std::vector<TrainSample>& out, std::size_t batch_size, Rng& rng) const {
    if (entries_.empty()) throw std::runtime_error("ReplayMemory: sample from empty memory");
    if (batch_size == 0) throw std::invalid_argument("ReplayMemory: batch_size must be positive");
    out.resize(batch_size);
    if (entries_.size() >= batch_size) {
      scratch_idx_.resize(entries_.size());
      for (std::size_t i = 0; i < scratch_idx_.size(); ++i) scratch_idx_[i] = i;
      for (std::size_t i = 0; i < batch_size; ++i) {
        const std::size_t j = i + rng.index(scratch_idx_.size() - i);
        std::swap(scratch_idx_[i], scratch_idx_[j]);
        out[i] = entries_[scratch_idx_[i]];
      }
    } else {
      for (std::size_t i = 0; i < batch_size; ++i) out[i] = entries_[rng.index(entries_.size())];
    }
  }

 private:
  std::size_t capacity_;
  std::size_t cursor_ = 0;
  std::vector<TrainSample> entries_;
  mutable std::vector<std::size_t> scratch_idx_;
};

}  // namespace drto
