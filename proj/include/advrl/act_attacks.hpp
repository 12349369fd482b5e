#ifndef ADVRL_ACT_ATTACKS_HPP
#define ADVRL_ACT_ATTACKS_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "advrl/agents.hpp"
#include "advrl/envs.hpp"
#include "advrl/numkit.hpp"

namespace advrl {

// ---------------------------------------------------------------------------
// Action-space attack: a learned network perturbs the victim's
// action-selection values. The victim policy itself is never modified.
// ---------------------------------------------------------------------------
struct ActPerturbNet {
  // Discrete: observation -> |A| values. Continuous: (observation (+) action)
  // -> scalar. Either way the output is scaled-tanh bounded by epsilon_a.
  Mlp net;
  double epsilon_a = 0.0;
};

inline ActPerturbNet make_act_perturb_net_discrete(int obs_dim, int action_count,
                                                   double epsilon_a, Rng& rng) {
  ActPerturbNet pn;
  pn.epsilon_a = epsilon_a;
  pn.net = make_mlp({obs_dim, 64, 64, action_count}, Activation::ScaledTanh,
                    epsilon_a, rng);
  return pn;
}

inline ActPerturbNet make_act_perturb_net_continuous(int obs_dim, int action_dim,
                                                     double epsilon_a, Rng& rng) {
  ActPerturbNet pn;
  pn.epsilon_a = epsilon_a;
  pn.net = make_mlp({obs_dim + action_dim, 64, 64, 1}, Activation::ScaledTanh,
                    epsilon_a, rng);
  return pn;
}

/// argmax over Q(s,.) + Q'(s,.,w).
inline int perturbed_act(const QPolicy& victim, const ActPerturbNet& pnet,
                         const Vector& obs) {
  Vector q = forward(victim.net, obs);
  Vector qp = forward(pnet.net, obs);
  if (q.size() != qp.size()) throw std::invalid_argument("perturbed_act: shape mismatch");
  for (std::size_t i = 0; i < q.size(); ++i) q[i] += qp[i];
  return argmax_lowest(q);
}

/// Continuous: one gradient-step refinement of mu(s) on the perturbed
/// critic Q(s,a) + Q'(s,a,w), clipped back to the action bounds.
inline Vector perturbed_act(const ActorCritic& victim, const ActPerturbNet& pnet,
                            const Vector& obs, double refine_step = 0.5) {
  Vector a = forward(victim.actor, obs);
  Vector sa = concat(obs, a);
  Backprop qbp = backward(victim.critic, sa, {1.0});
  Backprop pbp = backward(pnet.net, sa, {1.0});
  for (std::size_t i = 0; i < a.size(); ++i) {
    double g = qbp.dx[obs.size() + i] + pbp.dx[obs.size() + i];
    a[i] = std::clamp(a[i] + refine_step * g, -1.0, 1.0);
  }
  return a;
}

/// 0.25x the victim's median on-policy Q spread; keeps the attack at
/// perturbation scale rather than a full override.
inline double default_epsilon_a(const QPolicy& victim, GridChase env, Rng rng,
                                int episodes = 10) {
  std::vector<double> spreads;
  for (int ep = 0; ep < episodes; ++ep) {
    Vector obs = env.reset(rng.split(ep));
    bool done = false;
    while (!done) {
      Vector q = forward(victim.net, obs);
      auto [lo, hi] = std::minmax_element(q.begin(), q.end());
      spreads.push_back(*hi - *lo);
      StepResult res = env.step(act(victim, obs));
      obs = res.observation;
      done = res.done;
    }
  }
  std::nth_element(spreads.begin(), spreads.begin() + spreads.size() / 2, spreads.end());
  return 0.25 * spreads[spreads.size() / 2];
}

/// Trains Q'(s,a,w) by SGD on the squared perturbed-Bellman loss with
/// flipped reward; actions during collection come from perturbed_act.
inline ActPerturbNet train_act_attack(const QPolicy& victim, GridChase env,
                                      double epsilon_a, const TrainConfig& cfg) {
  cfg.validate();
  if (epsilon_a <= 0.0) throw std::invalid_argument("train_act_attack: epsilon_a must be > 0");
  Rng rng(cfg.seed);
  Rng init_rng = rng.split(0);
  Rng train_rng = rng.split(1);
  ActPerturbNet pn = make_act_perturb_net_discrete(env.obs_dim(), env.action_count(),
                                                   epsilon_a, init_rng);
  if (cfg.episodes == 0) return pn;

  ReplayBuffer<DiscreteTransition> buffer(cfg.buffer_capacity);
  long total_steps = 0;
  for (int ep = 0; ep < cfg.episodes; ++ep) {
    Vector obs = env.reset(rng.split(2 + ep));
    bool done = false;
    while (!done) {
      int a = perturbed_act(victim, pn, obs);
      StepResult res = env.step(a);
      buffer.push({obs, a, res.reward, res.observation, res.done});
      obs = res.observation;
      done = res.done;
      ++total_steps;

      if (buffer.size() >= static_cast<std::size_t>(cfg.warmup) &&
          total_steps % cfg.update_every == 0) {
        Vector grad(param_count(pn.net), 0.0);
        for (int b = 0; b < cfg.batch_size; ++b) {
          const auto& t = buffer.sample(train_rng);
          const double r_tilde = -t.r;
          Vector q = forward(victim.net, t.s);
          Vector qp = forward(pn.net, t.s);
          double lhs = q[t.a] + qp[t.a];
          double target = r_tilde;
          Vector qp2;
          int a2 = 0;
          if (!t.done) {
            Vector q2 = forward(victim.net, t.s2);
            qp2 = forward(pn.net, t.s2);
            for (std::size_t i = 0; i < q2.size(); ++i) q2[i] += qp2[i];
            a2 = argmax_lowest(q2);
            target += cfg.gamma * q2[a2];
          }
          const double e = lhs - target;
          Vector dl(qp.size(), 0.0);
          dl[t.a] = 2.0 * e / cfg.batch_size;
          Backprop bp = backward(pn.net, t.s, dl);
          for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += bp.dparams[i];
          if (!t.done) {
            Vector dl2(qp2.size(), 0.0);
            dl2[a2] = -2.0 * e * cfg.gamma / cfg.batch_size;
            Backprop bp2 = backward(pn.net, t.s2, dl2);
            for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += bp2.dparams[i];
          }
        }
        Vector params = flatten_params(pn.net);
        sgd_step_inplace(params, grad, cfg.lr);
        set_params(pn.net, params);
      }
    }
  }
  return pn;
}

/// DDPG form: the perturbation acts on the critic value of a = mu(s).
inline ActPerturbNet train_act_attack(const ActorCritic& victim, PointReach env,
                                      double epsilon_a, const TrainConfig& cfg) {
  cfg.validate();
  if (epsilon_a <= 0.0) throw std::invalid_argument("train_act_attack: epsilon_a must be > 0");
  Rng rng(cfg.seed);
  Rng init_rng = rng.split(0);
  Rng train_rng = rng.split(1);
  ActPerturbNet pn = make_act_perturb_net_continuous(env.obs_dim(), env.action_dim(),
                                                     epsilon_a, init_rng);
  if (cfg.episodes == 0) return pn;

  ReplayBuffer<ContinuousTransition> buffer(cfg.buffer_capacity);
  long total_steps = 0;
  for (int ep = 0; ep < cfg.episodes; ++ep) {
    Vector obs = env.reset(rng.split(2 + ep));
    bool done = false;
    while (!done) {
      Vector a = perturbed_act(victim, pn, obs);
      StepResult res = env.step(a);
      buffer.push({obs, a, res.reward, res.observation, res.done});
      obs = res.observation;
      done = res.done;
      ++total_steps;

      if (buffer.size() >= static_cast<std::size_t>(cfg.warmup) &&
          total_steps % cfg.update_every == 0) {
        Vector grad(param_count(pn.net), 0.0);
        for (int b = 0; b < cfg.batch_size; ++b) {
          const auto& t = buffer.sample(train_rng);
          const double r_tilde = -t.r;
          Vector mu = forward(victim.actor, t.s);
          Vector sa = concat(t.s, mu);
          double lhs = forward(victim.critic, sa)[0] + forward(pn.net, sa)[0];
          double target = r_tilde;
          Vector sa2;
          if (!t.done) {
            Vector mu2 = forward(victim.actor, t.s2);
            sa2 = concat(t.s2, mu2);
            target += cfg.gamma *
                      (forward(victim.critic, sa2)[0] + forward(pn.net, sa2)[0]);
          }
          const double e = lhs - target;
          Backprop bp = backward(pn.net, sa, {2.0 * e / cfg.batch_size});
          for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += bp.dparams[i];
          if (!t.done) {
            Backprop bp2 = backward(pn.net, sa2, {-2.0 * e * cfg.gamma / cfg.batch_size});
            for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += bp2.dparams[i];
          }
        }
        Vector params = flatten_params(pn.net);
        sgd_step_inplace(params, grad, cfg.lr);
        set_params(pn.net, params);
      }
    }
  }
  return pn;
}

}  // namespace advrl

#endif  // ADVRL_ACT_ATTACKS_HPP
