#ifndef ADVRL_NUMKIT_HPP
#define ADVRL_NUMKIT_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace advrl {

using Vector = std::vector<double>;

inline void check_finite(const Vector& v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw std::invalid_argument(std::string(what) + ": non-finite value");
    }
  }
}

/// Row-major dense matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  Vector data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

// ---------------------------------------------------------------------------
// Deterministic PRNG: splitmix64 seeding for a xoshiro256++ stream.
// Identical seed gives an identical stream; split(child) derives a
// disjoint stream from (seed, child).
// ---------------------------------------------------------------------------
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed) {
    std::uint64_t x = seed;
    for (auto& w : state_) w = splitmix64(x);
  }

  std::uint64_t seed() const { return seed_; }

  Rng split(std::uint64_t child) const {
    std::uint64_t x = seed_ ^ (0x9E3779B97F4A7C15ULL * (child + 1));
    return Rng(splitmix64(x));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  int uniform_int(int n) {
    return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n));
  }

  /// Standard normal via Box-Muller (one draw per call, no caching).
  double normal() {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

 private:
  static std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  static std::uint64_t rotl(std::uint64_t v, int k) {
    return (v << k) | (v >> (64 - k));
  }

  std::uint64_t seed_;
  std::array<std::uint64_t, 4> state_{};
};

// ---------------------------------------------------------------------------
// Dense feedforward network with ReLU hidden layers and analytic gradients.
// ---------------------------------------------------------------------------
enum class Activation { Linear, Tanh, ScaledTanh };

inline const char* activation_name(Activation a) {
  switch (a) {
    case Activation::Linear: return "linear";
    case Activation::Tanh: return "tanh";
    case Activation::ScaledTanh: return "scaled-tanh";
  }
  return "linear";
}

inline Activation activation_from_name(const std::string& name) {
  if (name == "linear") return Activation::Linear;
  if (name == "tanh") return Activation::Tanh;
  if (name == "scaled-tanh") return Activation::ScaledTanh;
  throw std::invalid_argument("unknown activation: " + name);
}

struct Mlp {
  std::vector<int> layer_sizes;
  std::vector<Matrix> weights;  // weights[i] is layer_sizes[i+1] x layer_sizes[i]
  std::vector<Vector> biases;
  Activation output_activation = Activation::Linear;
  double output_scale = 1.0;  // epsilon for scaled-tanh

  std::size_t layer_count() const { return weights.size(); }
  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }
};

/// Zero-initialized network of the given shape.
inline Mlp make_mlp(std::vector<int> layer_sizes,
                    Activation output_activation = Activation::Linear,
                    double output_scale = 1.0) {
  if (layer_sizes.size() < 2) throw std::invalid_argument("Mlp needs >= 2 layers");
  for (int n : layer_sizes) {
    if (n <= 0) throw std::invalid_argument("Mlp layer sizes must be positive");
  }
  Mlp net;
  net.layer_sizes = std::move(layer_sizes);
  net.output_activation = output_activation;
  net.output_scale = output_scale;
  for (std::size_t i = 0; i + 1 < net.layer_sizes.size(); ++i) {
    net.weights.emplace_back(net.layer_sizes[i + 1], net.layer_sizes[i]);
    net.biases.emplace_back(net.layer_sizes[i + 1], 0.0);
  }
  return net;
}

/// Uniform [-1/sqrt(fan_in), 1/sqrt(fan_in)] weight init.
inline Mlp make_mlp(std::vector<int> layer_sizes, Activation output_activation,
                    double output_scale, Rng& rng) {
  Mlp net = make_mlp(std::move(layer_sizes), output_activation, output_scale);
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    double bound = 1.0 / std::sqrt(static_cast<double>(net.layer_sizes[l]));
    for (double& w : net.weights[l].data) w = rng.uniform(-bound, bound);
    for (double& b : net.biases[l]) b = rng.uniform(-bound, bound);
  }
  return net;
}

inline std::size_t param_count(const Mlp& net) {
  std::size_t n = 0;
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    n += net.weights[l].data.size() + net.biases[l].size();
  }
  return n;
}

/// Flat parameter vector, per layer: weights row-major then bias.
inline Vector flatten_params(const Mlp& net) {
  Vector out;
  out.reserve(param_count(net));
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    out.insert(out.end(), net.weights[l].data.begin(), net.weights[l].data.end());
    out.insert(out.end(), net.biases[l].begin(), net.biases[l].end());
  }
  return out;
}

inline void set_params(Mlp& net, const Vector& params) {
  if (params.size() != param_count(net)) {
    throw std::invalid_argument("set_params: length mismatch");
  }
  std::size_t pos = 0;
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    for (double& w : net.weights[l].data) w = params[pos++];
    for (double& b : net.biases[l]) b = params[pos++];
  }
}

namespace detail {

inline void apply_output_activation(const Mlp& net, Vector& z) {
  switch (net.output_activation) {
    case Activation::Linear:
      break;
    case Activation::Tanh:
      for (double& v : z) v = std::tanh(v);
      break;
    case Activation::ScaledTanh:
      for (double& v : z) v = net.output_scale * std::tanh(v);
      break;
  }
}

struct ForwardTrace {
  std::vector<Vector> pre;   // pre-activations per layer
  std::vector<Vector> post;  // post-activations per layer (post[0] = input)
};

inline ForwardTrace forward_trace(const Mlp& net, const Vector& x) {
  if (static_cast<int>(x.size()) != net.input_dim()) {
    throw std::invalid_argument("forward: input size mismatch");
  }
  ForwardTrace t;
  t.post.push_back(x);
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const Matrix& w = net.weights[l];
    const Vector& in = t.post.back();
    Vector z = net.biases[l];
    for (std::size_t r = 0; r < w.rows; ++r) {
      const double* wr = &w.data[r * w.cols];
      double acc = z[r];
      for (std::size_t c = 0; c < w.cols; ++c) acc += wr[c] * in[c];
      z[r] = acc;
    }
    t.pre.push_back(z);
    if (l + 1 < net.layer_count()) {
      for (double& v : z) v = v > 0.0 ? v : 0.0;  // ReLU
    } else {
      apply_output_activation(net, z);
    }
    t.post.push_back(std::move(z));
  }
  return t;
}

}  // namespace detail

inline Vector forward(const Mlp& net, const Vector& x) {
  return detail::forward_trace(net, x).post.back();
}

struct Backprop {
  Vector dx;       // dL/dx
  Vector dparams;  // flat dL/dparams, same layout as flatten_params
};

/// Exact reverse-mode gradients of the forward map.
inline Backprop backward(const Mlp& net, const Vector& x, const Vector& dl_dy) {
  if (static_cast<int>(dl_dy.size()) != net.output_dim()) {
    throw std::invalid_argument("backward: cotangent size mismatch");
  }
  detail::ForwardTrace t = detail::forward_trace(net, x);
  const std::size_t layers = net.layer_count();

  Backprop out;
  out.dparams.assign(param_count(net), 0.0);

  // Gradient through the output activation.
  Vector gz = dl_dy;
  const Vector& y = t.post.back();
  switch (net.output_activation) {
    case Activation::Linear:
      break;
    case Activation::Tanh:
      for (std::size_t i = 0; i < gz.size(); ++i) gz[i] *= 1.0 - y[i] * y[i];
      break;
    case Activation::ScaledTanh: {
      double e = net.output_scale;
      for (std::size_t i = 0; i < gz.size(); ++i) gz[i] *= e - y[i] * y[i] / e;
      break;
    }
  }

  // Layer offsets into the flat parameter vector.
  std::vector<std::size_t> offset(layers);
  std::size_t pos = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    offset[l] = pos;
    pos += net.weights[l].data.size() + net.biases[l].size();
  }

  for (std::size_t li = layers; li-- > 0;) {
    const Matrix& w = net.weights[li];
    const Vector& in = t.post[li];
    double* dw = &out.dparams[offset[li]];
    double* db = dw + w.data.size();
    Vector ga(w.cols, 0.0);
    for (std::size_t r = 0; r < w.rows; ++r) {
      const double g = gz[r];
      db[r] = g;
      double* dwr = dw + r * w.cols;
      const double* wr = &w.data[r * w.cols];
      for (std::size_t c = 0; c < w.cols; ++c) {
        dwr[c] = g * in[c];
        ga[c] += g * wr[c];
      }
    }
    if (li > 0) {
      const Vector& pre = t.pre[li - 1];
      gz.assign(w.cols, 0.0);
      for (std::size_t c = 0; c < w.cols; ++c) {
        gz[c] = pre[c] > 0.0 ? ga[c] : 0.0;
      }
    } else {
      out.dx = std::move(ga);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Small numeric helpers shared across modules.
// ---------------------------------------------------------------------------

/// Temperature softmax, computed with max-subtraction.
inline Vector softmax_temp(const Vector& q, double tau) {
  if (tau <= 0.0) throw std::invalid_argument("softmax_temp: tau must be > 0");
  check_finite(q, "softmax_temp");
  double hi = q[0];
  for (double v : q) hi = std::max(hi, v);
  Vector out(q.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    out[i] = std::exp((q[i] - hi) / tau);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

/// KL divergence sum p_i ln(p_i / q_i); p_i = 0 terms contribute 0.
inline double kl_div(const Vector& p, const Vector& q_dist) {
  if (p.size() != q_dist.size()) throw std::invalid_argument("kl_div: length mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q_dist[i] <= 0.0) {
      throw std::domain_error("kl_div: infinite divergence (q has zero mass where p > 0)");
    }
    kl += p[i] * std::log(p[i] / q_dist[i]);
  }
  return kl;
}

inline Vector sgd_step(const Vector& params, const Vector& grads, double lr) {
  if (params.size() != grads.size()) throw std::invalid_argument("sgd_step: length mismatch");
  Vector out(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) out[i] = params[i] - lr * grads[i];
  return out;
}

inline void sgd_step_inplace(Vector& params, const Vector& grads, double lr) {
  if (params.size() != grads.size()) throw std::invalid_argument("sgd_step: length mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grads[i];
}

// ---------------------------------------------------------------------------
// Mlp serialization: JSON text, reals printed with 17 significant digits.
// ---------------------------------------------------------------------------
namespace detail {

inline std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_real_array(std::ostream& os, const Vector& v) {
  os << '[';
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << ',';
    os << format_real(v[i]);
  }
  os << ']';
}

}  // namespace detail

inline void save_mlp(std::ostream& os, const Mlp& net) {
  os << "{\"format_version\":1,\"layer_sizes\":[";
  for (std::size_t i = 0; i < net.layer_sizes.size(); ++i) {
    if (i) os << ',';
    os << net.layer_sizes[i];
  }
  os << "],\"hidden_activation\":\"relu\",\"output_activation\":\""
     << activation_name(net.output_activation) << "\",\"output_scale\":"
     << detail::format_real(net.output_scale) << ",\"weights\":[";
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    if (l) os << ',';
    detail::write_real_array(os, net.weights[l].data);
  }
  os << "],\"biases\":[";
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    if (l) os << ',';
    detail::write_real_array(os, net.biases[l]);
  }
  os << "]}";
}

inline std::string save_mlp(const Mlp& net) {
  std::ostringstream os;
  save_mlp(os, net);
  return os.str();
}

}  // namespace advrl

#endif  // ADVRL_NUMKIT_HPP
