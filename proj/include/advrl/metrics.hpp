#ifndef ADVRL_METRICS_HPP
#define ADVRL_METRICS_HPP

#include <cmath>
#include <stdexcept>
#include <vector>

namespace advrl {

/// Per-episode record; the unit of all evaluations and acceptance checks.
struct EpisodeMetrics {
  int episode = 0;
  double episode_return = 0.0;
  int length = 0;
  std::vector<double> step_rewards;
  long queries = 0;
  double walltime_ms = 0.0;
};

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  int n = 0;
};

inline MeanSe mean_se(const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("mean_se: empty input");
  MeanSe out;
  out.n = static_cast<int>(xs.size());
  for (double x : xs) out.mean += x;
  out.mean /= out.n;
  if (out.n > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.se = std::sqrt(ss / (out.n - 1)) / std::sqrt(static_cast<double>(out.n));
  }
  return out;
}

inline std::vector<double> returns_of(const std::vector<EpisodeMetrics>& ms) {
  std::vector<double> out;
  out.reserve(ms.size());
  for (const auto& m : ms) out.push_back(m.episode_return);
  return out;
}

/// Standard error of a difference of two independent means.
inline double se_diff(const MeanSe& a, const MeanSe& b) {
  return std::sqrt(a.se * a.se + b.se * b.se);
}

}  // namespace advrl

#endif  // ADVRL_METRICS_HPP
