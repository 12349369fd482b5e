#ifndef ADVRL_GRADEST_HPP
#define ADVRL_GRADEST_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "advrl/numkit.hpp"

namespace advrl {

/// Black-box scalar function with an exact query counter.
class LossOracle {
 public:
  explicit LossOracle(std::function<double(const Vector&)> f) : f_(std::move(f)) {}

  double operator()(const Vector& x) {
    ++count_;
    double v = f_(x);
    if (!std::isfinite(v)) throw std::runtime_error("LossOracle: non-finite value");
    return v;
  }

  long query_count() const { return count_; }
  void reset_count() { count_ = 0; }

 private:
  std::function<double(const Vector&)> f_;
  long count_ = 0;
};

/// Estimated gradient: zero at unsampled dimensions, two queries per
/// sampled dimension.
struct GradientEstimate {
  Vector values;
  std::vector<bool> sampled_mask;
  long query_count = 0;

  std::size_t sampled_count() const {
    return static_cast<std::size_t>(
        std::count(sampled_mask.begin(), sampled_mask.end(), true));
  }
};

enum class Topology { Flat1d, Grid2d };

struct SfdConfig {
  int k = 16;             // seed dimensions
  int n = 20;             // expansion iterations
  double theta = 0.01;    // gradient threshold
  double delta = 1e-3;    // FD step
  Topology topology = Topology::Flat1d;
  int grid_height = 0;
  int grid_width = 0;
  // When set, the effective threshold is theta times the largest
  // seed-estimate magnitude of the current call.
  bool relative_theta = false;

  void validate(std::size_t d) const {
    if (k < 1) throw std::invalid_argument("SfdConfig: k must be >= 1");
    if (n < 0) throw std::invalid_argument("SfdConfig: n must be >= 0");
    if (theta <= 0.0) throw std::invalid_argument("SfdConfig: theta must be > 0");
    if (delta <= 0.0) throw std::invalid_argument("SfdConfig: delta must be > 0");
    if (topology == Topology::Grid2d &&
        static_cast<std::size_t>(grid_height) * static_cast<std::size_t>(grid_width) != d) {
      throw std::invalid_argument("SfdConfig: grid height*width must equal d");
    }
  }
};

namespace detail {

inline void append_neighbors(const SfdConfig& cfg, std::size_t d, std::size_t i,
                             std::vector<std::size_t>& out) {
  if (cfg.topology == Topology::Flat1d) {
    if (i > 0) out.push_back(i - 1);
    if (i + 1 < d) out.push_back(i + 1);
  } else {
    const std::size_t w = static_cast<std::size_t>(cfg.grid_width);
    const std::size_t r = i / w;
    const std::size_t c = i % w;
    if (r > 0) out.push_back(i - w);
    if (r + 1 < static_cast<std::size_t>(cfg.grid_height)) out.push_back(i + w);
    if (c > 0) out.push_back(i - 1);
    if (c + 1 < w) out.push_back(i + 1);
  }
}

inline double estimate_dim(LossOracle& f, Vector& probe, std::size_t i, double delta) {
  const double orig = probe[i];
  probe[i] = orig + delta;
  const double plus = f(probe);
  probe[i] = orig - delta;
  const double minus = f(probe);
  probe[i] = orig;
  return (plus - minus) / (2.0 * delta);
}

}  // namespace detail

/// Central finite differences over every dimension; 2d queries.
inline GradientEstimate fd_full(LossOracle& f, const Vector& s, double delta) {
  if (delta <= 0.0) throw std::invalid_argument("fd_full: delta must be > 0");
  const std::size_t d = s.size();
  GradientEstimate est;
  est.values.assign(d, 0.0);
  est.sampled_mask.assign(d, true);
  Vector probe = s;
  for (std::size_t i = 0; i < d; ++i) {
    est.values[i] = detail::estimate_dim(f, probe, i, delta);
  }
  est.query_count = 2 * static_cast<long>(d);
  return est;
}

/// Adaptive-sampling finite differences with an explicit seed set:
/// estimate the seeds, then repeatedly expand to unestimated neighbors of
/// dimensions whose estimated gradient magnitude clears the threshold.
/// Stops early when the frontier empties. Never re-queries an estimated
/// dimension.
inline GradientEstimate sfd_from_seeds(LossOracle& f, const Vector& s,
                                       const SfdConfig& cfg,
                                       std::vector<std::size_t> seeds) {
  const std::size_t d = s.size();
  cfg.validate(d);

  GradientEstimate est;
  est.values.assign(d, 0.0);
  est.sampled_mask.assign(d, false);
  Vector probe = s;

  std::vector<std::size_t> frontier = std::move(seeds);
  double theta = cfg.theta;
  long sampled = 0;
  for (int t = 0; t <= cfg.n; ++t) {
    std::vector<std::size_t> estimated_now;
    for (std::size_t i : frontier) {
      if (est.sampled_mask[i]) continue;
      est.values[i] = detail::estimate_dim(f, probe, i, cfg.delta);
      est.sampled_mask[i] = true;
      estimated_now.push_back(i);
      ++sampled;
    }
    if (t == 0 && cfg.relative_theta) {
      double peak = 0.0;
      for (std::size_t i : estimated_now) peak = std::max(peak, std::abs(est.values[i]));
      theta = cfg.theta * peak;
      if (theta <= 0.0) break;  // flat seed estimates: nothing to chase
    }
    if (t == cfg.n) break;
    std::vector<std::size_t> next;
    for (std::size_t i : estimated_now) {
      if (std::abs(est.values[i]) >= theta) detail::append_neighbors(cfg, d, i, next);
    }
    next.erase(std::remove_if(next.begin(), next.end(),
                              [&](std::size_t i) { return est.sampled_mask[i]; }),
               next.end());
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end()), next.end());
    if (next.empty()) break;
    frontier = std::move(next);
  }
  est.query_count = 2 * sampled;
  return est;
}

/// Adaptive-sampling finite differences seeded with k distinct random
/// dimensions drawn from rng.
inline GradientEstimate sfd(LossOracle& f, const Vector& s, const SfdConfig& cfg,
                            Rng& rng) {
  const std::size_t d = s.size();
  cfg.validate(d);
  std::vector<std::size_t> seeds;
  std::vector<bool> seeded(d, false);
  const int k = std::min<int>(cfg.k, static_cast<int>(d));
  while (static_cast<int>(seeds.size()) < k) {
    std::size_t i = static_cast<std::size_t>(rng.uniform_int(static_cast<int>(d)));
    if (seeded[i]) continue;
    seeded[i] = true;
    seeds.push_back(i);
  }
  return sfd_from_seeds(f, s, cfg, std::move(seeds));
}

/// Fraction of sampled dimensions whose true gradient magnitude is >= theta.
inline double hit_rate(const GradientEstimate& est, const Vector& true_grad,
                       double theta) {
  if (theta <= 0.0) throw std::invalid_argument("hit_rate: theta must be > 0");
  if (est.sampled_mask.size() != true_grad.size()) {
    throw std::invalid_argument("hit_rate: length mismatch");
  }
  long sampled = 0;
  long hits = 0;
  for (std::size_t i = 0; i < true_grad.size(); ++i) {
    if (!est.sampled_mask[i]) continue;
    ++sampled;
    if (std::abs(true_grad[i]) >= theta) ++hits;
  }
  if (sampled == 0) throw std::invalid_argument("hit_rate: empty sample set");
  return static_cast<double>(hits) / static_cast<double>(sampled);
}

/// L1 error bound S_theta*C*delta^2 + (d - S_theta)*theta for an estimate
/// whose sampled set covers all non-trivial dimensions.
inline double theorem2_bound(int s_theta, double c, double delta, int d, double theta) {
  if (s_theta < 0 || s_theta > d) throw std::invalid_argument("theorem2_bound: S_theta out of range");
  if (c <= 0.0 || delta <= 0.0 || theta <= 0.0) {
    throw std::invalid_argument("theorem2_bound: C, delta, theta must be > 0");
  }
  return s_theta * c * delta * delta + (d - s_theta) * theta;
}

}  // namespace advrl

#endif  // ADVRL_GRADEST_HPP
