#ifndef ADVRL_ENV_ATTACKS_HPP
#define ADVRL_ENV_ATTACKS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "advrl/agents.hpp"
#include "advrl/envs.hpp"
#include "advrl/numkit.hpp"

namespace advrl {

// ---------------------------------------------------------------------------
// Targeted environment-dynamics attacks: find a bounded relative
// perturbation of the dynamics vector that drives the frozen victim to a
// chosen target state at step t.
// ---------------------------------------------------------------------------
struct DynAttackSpec {
  Vector target_state;       // environment-native state, not observation
  int target_step = 50;
  double epsilon_m = 0.1;    // max componentwise relative perturbation
  int budget = 200;          // victim rollouts
  int rollouts_per_proposal = 1;  // >1 averages E[s_t] in stochastic envs
  std::uint64_t rollout_seed = 12345;

  void validate(int horizon) const {
    if (target_step < 1 || target_step > horizon) {
      throw std::invalid_argument("DynAttackSpec: target_step out of range");
    }
    if (epsilon_m < 0.0) throw std::invalid_argument("DynAttackSpec: epsilon_m must be >= 0");
    if (budget < 1) throw std::invalid_argument("DynAttackSpec: budget must be >= 1");
    if (rollouts_per_proposal < 1) {
      throw std::invalid_argument("DynAttackSpec: rollouts_per_proposal must be >= 1");
    }
  }
};

struct DynSearchResult {
  Vector best_m;
  double best_distance = 0.0;
  int proposals_evaluated = 0;
  std::vector<double> distance_trace;
  bool target_step_truncated = false;  // some rollout ended before target_step
};

/// 1 / ||s_t - target||_2, capped at 1e9 for an exact hit.
inline double attack_reward(const Vector& s_t, const Vector& target) {
  if (s_t.size() != target.size()) throw std::invalid_argument("attack_reward: length mismatch");
  double d2 = 0.0;
  for (std::size_t i = 0; i < s_t.size(); ++i) {
    d2 += (s_t[i] - target[i]) * (s_t[i] - target[i]);
  }
  double d = std::sqrt(d2);
  return d > 0.0 ? std::min(1.0 / d, 1e9) : 1e9;
}

/// Runs the frozen victim greedily under dynamics m from a fixed-seed
/// reset and returns the native state at step t; if the episode ends
/// earlier the terminal state is returned and flagged.
template <typename Env, typename Policy>
Vector rollout_state_at(Env env, const Policy& policy, const Vector& m, int t,
                        Rng rng, bool* truncated = nullptr) {
  env.set_dynamics(m);
  Vector obs = env.reset(rng);
  if (truncated) *truncated = false;
  for (int step = 0; step < t; ++step) {
    StepResult res = env.step(act(policy, obs));
    obs = res.observation;
    if (res.done) {
      if (truncated && step + 1 < t) *truncated = true;
      break;
    }
  }
  return env.native_state();
}

namespace detail {

/// Mean state at the target step over rollouts_per_proposal split seeds.
template <typename Env, typename Policy>
Vector expected_state_at(const Env& env, const Policy& policy, const Vector& m,
                         const DynAttackSpec& spec, bool* truncated) {
  Rng base(spec.rollout_seed);
  Vector mean;
  bool any_truncated = false;
  for (int i = 0; i < spec.rollouts_per_proposal; ++i) {
    bool trunc = false;
    Vector s = rollout_state_at(env, policy, m, spec.target_step,
                                spec.rollouts_per_proposal == 1 ? base : base.split(i),
                                &trunc);
    any_truncated = any_truncated || trunc;
    if (mean.empty()) {
      mean = std::move(s);
    } else {
      for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += s[j];
    }
  }
  for (double& v : mean) v /= spec.rollouts_per_proposal;
  if (truncated) *truncated = any_truncated;
  return mean;
}

inline void check_relative_bound(const Vector& m, const Vector& m0, double eps) {
  for (std::size_t i = 0; i < m.size(); ++i) {
    double base = m0[i] != 0.0 ? std::abs(m0[i]) : 1.0;
    if (std::abs(m[i] - m0[i]) > eps * base + 1e-12) {
      throw std::logic_error("dynamics proposal violates the relative bound");
    }
  }
}

}  // namespace detail

/// env-rand-bb: i.i.d. proposals m = M0 * (1 + u), u uniform in
/// [-eps_m, eps_m] per component; best kept.
template <typename Env, typename Policy>
DynSearchResult dyn_random_search(const Env& env, const Policy& policy,
                                  const DynAttackSpec& spec, Rng rng) {
  spec.validate(Env::kHorizon);
  const Vector m0 = env.dynamics();
  DynSearchResult out;
  out.best_m = m0;
  out.best_distance = std::numeric_limits<double>::infinity();

  const int proposals = spec.budget / spec.rollouts_per_proposal;
  for (int i = 0; i < proposals; ++i) {
    Vector m = m0;
    for (double& v : m) v *= 1.0 + rng.uniform(-spec.epsilon_m, spec.epsilon_m);
    detail::check_relative_bound(m, m0, spec.epsilon_m);
    bool trunc = false;
    Vector s = detail::expected_state_at(env, policy, m, spec, &trunc);
    out.target_step_truncated = out.target_step_truncated || trunc;
    double dist = 1.0 / attack_reward(s, spec.target_state);
    out.distance_trace.push_back(dist);
    ++out.proposals_evaluated;
    if (dist < out.best_distance) {
      out.best_distance = dist;
      out.best_m = m;
    }
  }
  return out;
}

struct DynRlConfig {
  int chain_length = 5;      // attacker episode: proposal chain of length L
  double step_scale = 0.5;   // action step as a fraction of epsilon_m
  double action_noise = 0.4;
  double noise_decay = 0.99;
  double actor_lr = 0.01;
  double critic_lr = 0.05;
  double gamma = 0.9;
  double rho = 0.05;
  int batch_size = 16;
  int warmup = 5;
  double reward_clip = 1e3;  // critic-side distance cap
  std::uint64_t seed = 7;
};

/// env-search-bb: a DDPG-lite attacker over the dynamics-space MDP.
/// State is the current relative perturbation u = (m - M0)/M0, the action
/// is a bounded step in u, and the reward is 1/distance at the target
/// step. Attacker episodes alternate their chain start between the best
/// perturbation found so far (local refinement of the incumbent) and a
/// fresh uniform draw inside the bound (global coverage), so the search
/// dominates plain random sampling instead of re-learning the landscape
/// from the origin each time. Every
/// iterate is projected back into the relative bound. Falls back to
/// random proposals when the budget is smaller than one attacker episode.
template <typename Env, typename Policy>
DynSearchResult dyn_rl_search(const Env& env, const Policy& policy,
                              const DynAttackSpec& spec, const DynRlConfig& cfg) {
  spec.validate(Env::kHorizon);
  const Vector m0 = env.dynamics();
  const int dim = static_cast<int>(m0.size());

  const int proposal_budget = spec.budget / spec.rollouts_per_proposal;
  Rng rng(cfg.seed);
  if (proposal_budget < cfg.chain_length) {
    DynAttackSpec fallback = spec;
    return dyn_random_search(env, policy, fallback, rng.split(0));
  }

  Rng init_rng = rng.split(0);
  Rng train_rng = rng.split(1);
  Mlp actor = make_mlp({dim, 64, 64, dim}, Activation::Tanh, 1.0, init_rng);
  Mlp critic = make_mlp({2 * dim, 64, 64, 1}, Activation::Linear, 1.0, init_rng);
  Mlp target_actor = actor;
  Mlp target_critic = critic;

  auto to_obs = [&](const Vector& u) {
    Vector obs(dim);
    for (int i = 0; i < dim; ++i) {
      obs[i] = spec.epsilon_m > 0.0 ? (u[i] / spec.epsilon_m + 1.0) / 2.0 : 0.5;
    }
    return obs;
  };
  auto to_dynamics = [&](const Vector& u) {
    Vector m = m0;
    for (int i = 0; i < dim; ++i) m[i] *= 1.0 + u[i];
    return m;
  };

  DynSearchResult out;
  out.best_m = m0;
  out.best_distance = std::numeric_limits<double>::infinity();

  ReplayBuffer<ContinuousTransition> buffer(4096);
  double noise = cfg.action_noise;
  int evaluated = 0;
  int chain = 0;
  Vector best_u(dim, 0.0);

  // Rolls out the victim under the perturbation u and records the proposal.
  auto evaluate = [&](const Vector& u) {
    Vector m = to_dynamics(u);
    detail::check_relative_bound(m, m0, spec.epsilon_m);
    bool trunc = false;
    Vector s = detail::expected_state_at(env, policy, m, spec, &trunc);
    out.target_step_truncated = out.target_step_truncated || trunc;
    double dist = 1.0 / attack_reward(s, spec.target_state);
    out.distance_trace.push_back(dist);
    ++out.proposals_evaluated;
    ++evaluated;
    if (dist < out.best_distance) {
      out.best_distance = dist;
      out.best_m = m;
      best_u = u;
    }
    return dist;
  };

  while (evaluated < proposal_budget) {
    Vector u = best_u;
    if (chain++ % 2 == 1) {
      for (double& v : u) v = train_rng.uniform(-spec.epsilon_m, spec.epsilon_m);
      // Score the restart point itself so coverage never depends on the
      // still-learning actor steering the first step somewhere useful.
      evaluate(u);
    }
    Vector obs = to_obs(u);
    for (int step = 0; step < cfg.chain_length && evaluated < proposal_budget; ++step) {
      Vector a = forward(actor, obs);
      for (double& v : a) v = std::clamp(v + noise * train_rng.normal(), -1.0, 1.0);
      for (int i = 0; i < dim; ++i) {
        u[i] = std::clamp(u[i] + a[i] * cfg.step_scale * spec.epsilon_m,
                          -spec.epsilon_m, spec.epsilon_m);
      }
      double dist = evaluate(u);

      // The critic trains on the negative distance: a bounded monotone
      // transform of the inverse-distance attack reward. The raw 1/d
      // spikes near hits and destabilizes plain SGD.
      double reward = -std::min(dist, cfg.reward_clip);
      Vector obs2 = to_obs(u);
      bool chain_done = step + 1 == cfg.chain_length;
      buffer.push({obs, a, reward, obs2, chain_done});
      obs = obs2;

      if (buffer.size() >= static_cast<std::size_t>(cfg.warmup)) {
        Vector critic_grad(param_count(critic), 0.0);
        Vector actor_grad(param_count(actor), 0.0);
        for (int b = 0; b < cfg.batch_size; ++b) {
          const auto& t = buffer.sample(train_rng);
          Vector a2 = forward(target_actor, t.s2);
          double q2 = forward(target_critic, concat(t.s2, a2))[0];
          double y = t.done ? t.r : t.r + cfg.gamma * q2;
          Vector sa = concat(t.s, t.a);
          double q = forward(critic, sa)[0];
          Backprop cbp = backward(critic, sa, {2.0 * (q - y) / cfg.batch_size});
          for (std::size_t i = 0; i < critic_grad.size(); ++i) critic_grad[i] += cbp.dparams[i];

          Vector mu = forward(actor, t.s);
          Backprop qbp = backward(critic, concat(t.s, mu), {1.0});
          Vector dq_da(qbp.dx.end() - dim, qbp.dx.end());
          for (double& g : dq_da) g = -g / cfg.batch_size;
          Backprop abp = backward(actor, t.s, dq_da);
          for (std::size_t i = 0; i < actor_grad.size(); ++i) actor_grad[i] += abp.dparams[i];
        }
        Vector cp = flatten_params(critic);
        sgd_step_inplace(cp, critic_grad, cfg.critic_lr);
        set_params(critic, cp);
        Vector ap = flatten_params(actor);
        sgd_step_inplace(ap, actor_grad, cfg.actor_lr);
        set_params(actor, ap);
        soft_update(target_critic, critic, cfg.rho);
        soft_update(target_actor, actor, cfg.rho);
      }
    }
    noise *= cfg.noise_decay;
  }
  return out;
}

}  // namespace advrl

#endif  // ADVRL_ENV_ATTACKS_HPP
