#ifndef ADVRL_ENVS_HPP
#define ADVRL_ENVS_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "advrl/numkit.hpp"

namespace advrl {

struct StepResult {
  Vector observation;
  double reward = 0.0;
  bool done = false;
};

// ---------------------------------------------------------------------------
// GridChase: NxN grid, agent chases a goal past a diagonal hazard band.
// Observation: 3*N*N one-hot planes (agent / goal / hazard).
// Dynamics M: per-action slip probabilities.
// ---------------------------------------------------------------------------
class GridChase {
 public:
  static constexpr int kHorizon = 100;
  static constexpr int kActionCount = 4;  // 0 up, 1 right, 2 down, 3 left
  static constexpr double kStepPenalty = -0.01;

  explicit GridChase(int n = 8) : n_(n), slip_(kActionCount, 0.0) {
    if (n < 3) throw std::invalid_argument("GridChase: n must be >= 3");
  }

  int size() const { return n_; }
  int obs_dim() const { return 3 * n_ * n_; }
  int action_count() const { return kActionCount; }
  bool done() const { return done_; }
  int step_count() const { return step_; }
  bool deterministic() const {
    return std::all_of(slip_.begin(), slip_.end(), [](double s) { return s == 0.0; });
  }

  /// Fixed layout: goal at (N-1,N-1), hazards on the anti-diagonal band
  /// excluding the two corner corridors. The agent start is the seeded
  /// jitter: uniform over safe non-goal cells.
  Vector reset(Rng rng) {
    episode_rng_ = rng;
    goal_r_ = n_ - 1;
    goal_c_ = n_ - 1;
    hazards_.clear();
    for (int r = 1; r < n_ - 1; ++r) {
      hazards_.emplace_back(r, n_ - 1 - r);
    }
    // Safe cells: everything except the hazard band and the goal.
    const int safe_count = n_ * n_ - (n_ - 2) - 1;
    int pick = episode_rng_.uniform_int(safe_count);
    for (int r = 0; r < n_; ++r) {
      for (int c = 0; c < n_; ++c) {
        if (is_hazard(r, c) || (r == goal_r_ && c == goal_c_)) continue;
        if (pick-- == 0) {
          agent_r_ = r;
          agent_c_ = c;
        }
      }
    }
    step_ = 0;
    done_ = false;
    return observation();
  }

  StepResult step(int action) {
    if (done_) throw std::logic_error("GridChase: step on finished episode");
    if (action < 0 || action >= kActionCount) {
      throw std::invalid_argument("GridChase: action out of range");
    }
    int executed = action;
    if (slip_[action] > 0.0 && episode_rng_.uniform() < slip_[action]) {
      // Uniformly one of the three other directions.
      int other = episode_rng_.uniform_int(kActionCount - 1);
      executed = other >= action ? other + 1 : other;
    }
    static constexpr int dr[kActionCount] = {-1, 0, 1, 0};
    static constexpr int dc[kActionCount] = {0, 1, 0, -1};
    int nr = agent_r_ + dr[executed];
    int nc = agent_c_ + dc[executed];
    if (nr >= 0 && nr < n_ && nc >= 0 && nc < n_) {
      agent_r_ = nr;
      agent_c_ = nc;
    }
    ++step_;

    StepResult out;
    out.reward = kStepPenalty;
    if (agent_r_ == goal_r_ && agent_c_ == goal_c_) {
      out.reward += 1.0;
      done_ = true;
    } else if (is_hazard(agent_r_, agent_c_)) {
      out.reward += -1.0;
      done_ = true;
    } else if (step_ >= kHorizon) {
      done_ = true;
    }
    out.done = done_;
    out.observation = observation();
    return out;
  }

  void set_dynamics(const Vector& slip) {
    if (slip.size() != kActionCount) {
      throw std::invalid_argument("GridChase: slip vector must have 4 components");
    }
    for (double s : slip) {
      if (!(s >= 0.0 && s <= 1.0)) {
        throw std::invalid_argument("GridChase: slip components must lie in [0,1]");
      }
    }
    slip_ = slip;
  }

  Vector dynamics() const { return slip_; }

  /// Native state: (agent_row, agent_col).
  Vector native_state() const {
    return {static_cast<double>(agent_r_), static_cast<double>(agent_c_)};
  }

  Vector observation() const {
    Vector obs(obs_dim(), 0.0);
    obs[agent_r_ * n_ + agent_c_] = 1.0;
    obs[n_ * n_ + goal_r_ * n_ + goal_c_] = 1.0;
    for (const auto& [r, c] : hazards_) obs[2 * n_ * n_ + r * n_ + c] = 1.0;
    return obs;
  }

 private:
  bool is_hazard(int r, int c) const {
    for (const auto& [hr, hc] : hazards_) {
      if (hr == r && hc == c) return true;
    }
    return false;
  }

  int n_;
  int agent_r_ = 0, agent_c_ = 0;
  int goal_r_ = 0, goal_c_ = 0;
  std::vector<std::pair<int, int>> hazards_;
  Vector slip_;
  int step_ = 0;
  bool done_ = true;
  Rng episode_rng_{0};
};

// ---------------------------------------------------------------------------
// PointReach: force-controlled point mass reaching a goal in the plane.
// Observation: (pos, vel, goal - pos) affinely mapped into [0,1]^6.
// Dynamics M: (mass, friction).
// ---------------------------------------------------------------------------
class PointReach {
 public:
  static constexpr int kHorizon = 100;
  static constexpr double kDt = 0.05;
  static constexpr double kPosBound = 2.0;
  static constexpr double kVelBound = 2.0;
  // goal - pos spans [-kPosBound - 1.5, kPosBound + 1.5]; use the symmetric hull.
  static constexpr double kDeltaBound = 4.0;

  int obs_dim() const { return 6; }
  int action_dim() const { return 2; }
  bool done() const { return done_; }
  int step_count() const { return step_; }

  /// pos = vel = 0, goal drawn uniformly in [0.5, 1.5]^2.
  Vector reset(Rng rng) {
    px_ = py_ = vx_ = vy_ = 0.0;
    gx_ = rng.uniform(0.5, 1.5);
    gy_ = rng.uniform(0.5, 1.5);
    step_ = 0;
    done_ = false;
    return observation();
  }

  /// Semi-implicit Euler: vel += (force/mass - friction*vel)*dt, pos += vel*dt.
  StepResult step(const Vector& force) {
    if (done_) throw std::logic_error("PointReach: step on finished episode");
    if (force.size() != 2) throw std::invalid_argument("PointReach: force must be 2-d");
    for (double f : force) {
      if (!(f >= -1.0 && f <= 1.0)) {
        throw std::invalid_argument("PointReach: force components must lie in [-1,1]");
      }
    }
    vx_ += (force[0] / mass_ - friction_ * vx_) * kDt;
    vy_ += (force[1] / mass_ - friction_ * vy_) * kDt;
    vx_ = std::clamp(vx_, -kVelBound, kVelBound);
    vy_ = std::clamp(vy_, -kVelBound, kVelBound);
    px_ = std::clamp(px_ + vx_ * kDt, -kPosBound, kPosBound);
    py_ = std::clamp(py_ + vy_ * kDt, -kPosBound, kPosBound);
    ++step_;

    StepResult out;
    out.reward = -std::hypot(px_ - gx_, py_ - gy_);
    done_ = step_ >= kHorizon;
    out.done = done_;
    out.observation = observation();
    return out;
  }

  void set_dynamics(const Vector& m) {
    if (m.size() != 2) throw std::invalid_argument("PointReach: dynamics must be (mass, friction)");
    if (!(m[0] > 0.0)) throw std::invalid_argument("PointReach: mass must be > 0");
    if (!(m[1] >= 0.0)) throw std::invalid_argument("PointReach: friction must be >= 0");
    mass_ = m[0];
    friction_ = m[1];
  }

  Vector dynamics() const { return {mass_, friction_}; }

  /// Native state: (pos_x, pos_y, vel_x, vel_y).
  Vector native_state() const { return {px_, py_, vx_, vy_}; }

  Vector goal() const { return {gx_, gy_}; }

  double distance_to_goal() const { return std::hypot(px_ - gx_, py_ - gy_); }

  Vector observation() const {
    auto unit = [](double v, double bound) { return (v + bound) / (2.0 * bound); };
    return {unit(px_, kPosBound),       unit(py_, kPosBound),
            unit(vx_, kVelBound),       unit(vy_, kVelBound),
            unit(gx_ - px_, kDeltaBound), unit(gy_ - py_, kDeltaBound)};
  }

 private:
  double px_ = 0.0, py_ = 0.0, vx_ = 0.0, vy_ = 0.0;
  double gx_ = 1.0, gy_ = 1.0;
  double mass_ = 1.0, friction_ = 0.1;
  int step_ = 0;
  bool done_ = true;
};

}  // namespace advrl

#endif  // ADVRL_ENVS_HPP
