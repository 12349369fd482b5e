#ifndef ADVRL_AGENTS_HPP
#define ADVRL_AGENTS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "advrl/envs.hpp"
#include "advrl/metrics.hpp"
#include "advrl/numkit.hpp"

namespace advrl {

struct TrainConfig {
  int episodes = 2500;
  double lr = 0.05;            // DQN Q-net learning rate
  double gamma = 0.99;
  double eps_start = 1.0;      // epsilon-greedy, decayed linearly over the
  double eps_end = 0.05;       // first half of training
  int batch_size = 32;
  int target_update = 250;     // DQN hard target copy period (updates)
  double rho = 0.005;          // DDPG soft target rate
  double action_noise = 0.1;   // DDPG Gaussian exploration sigma
  double actor_lr = 0.003;
  double critic_lr = 0.02;
  int warmup = 500;            // transitions before updates start
  int update_every = 1;
  int buffer_capacity = 50000;
  std::vector<int> hidden{64, 64};
  std::uint64_t seed = 1;

  void validate() const {
    if (episodes < 0) throw std::invalid_argument("TrainConfig: episodes must be >= 0");
    if (lr <= 0.0 || actor_lr <= 0.0 || critic_lr <= 0.0) {
      throw std::invalid_argument("TrainConfig: learning rates must be > 0");
    }
    if (!(gamma > 0.0 && gamma <= 1.0)) {
      throw std::invalid_argument("TrainConfig: gamma must lie in (0,1]");
    }
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (!(rho > 0.0 && rho <= 1.0)) throw std::invalid_argument("TrainConfig: rho must lie in (0,1]");
    if (buffer_capacity < 1) throw std::invalid_argument("TrainConfig: buffer capacity must be >= 1");
    if (hidden.empty()) throw std::invalid_argument("TrainConfig: hidden layers must be nonempty");
  }

  std::vector<int> layer_sizes(int in_dim, int out_dim) const {
    std::vector<int> sizes{in_dim};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(out_dim);
    return sizes;
  }
};

// ---------------------------------------------------------------------------
// Replay buffer: ring storage with uniform sampling.
// ---------------------------------------------------------------------------
template <typename Transition>
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be > 0");
  }

  void push(Transition t) {
    if (data_.size() < capacity_) {
      data_.push_back(std::move(t));
    } else {
      data_[next_] = std::move(t);
    }
    next_ = (next_ + 1) % capacity_;
  }

  const Transition& sample(Rng& rng) const {
    return data_[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(data_.size())))];
  }

  std::size_t size() const { return data_.size(); }

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Transition> data_;
};

struct DiscreteTransition {
  Vector s;
  int a = 0;
  double r = 0.0;
  Vector s2;
  bool done = false;
};

struct ContinuousTransition {
  Vector s;
  Vector a;
  double r = 0.0;
  Vector s2;
  bool done = false;
};

// ---------------------------------------------------------------------------
// Policies.
// ---------------------------------------------------------------------------
struct QPolicy {
  Mlp net;
  int action_count = 0;
};

struct ActorCritic {
  Mlp actor;
  Mlp critic;  // (observation (+) action) -> scalar
  Mlp target_actor;
  Mlp target_critic;
  double rho = 0.005;
};

inline int argmax_lowest(const Vector& q) {
  int best = 0;
  for (std::size_t i = 1; i < q.size(); ++i) {
    if (q[i] > q[best]) best = static_cast<int>(i);
  }
  return best;
}

/// Greedy action; Q-value ties break to the lowest index.
inline int act(const QPolicy& policy, const Vector& obs) {
  return argmax_lowest(forward(policy.net, obs));
}

inline Vector act(const ActorCritic& policy, const Vector& obs) {
  return forward(policy.actor, obs);
}

inline double bellman_target(double r, double gamma, const Vector& next_q, bool done) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("bellman_target: gamma out of range");
  if (done) return r;
  if (next_q.empty()) throw std::invalid_argument("bellman_target: empty next_q");
  return r + gamma * *std::max_element(next_q.begin(), next_q.end());
}

/// target <- (1 - rho) * target + rho * live, parameterwise.
inline void soft_update(Mlp& target, const Mlp& live, double rho) {
  Vector pt = flatten_params(target);
  Vector pl = flatten_params(live);
  for (std::size_t i = 0; i < pt.size(); ++i) pt[i] = (1.0 - rho) * pt[i] + rho * pl[i];
  set_params(target, pt);
}

inline Vector concat(const Vector& a, const Vector& b) {
  Vector out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

// ---------------------------------------------------------------------------
// DQN-lite on GridChase.
// ---------------------------------------------------------------------------
inline QPolicy train_dqn(GridChase env, const TrainConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  Rng init_rng = rng.split(0);
  Rng train_rng = rng.split(1);

  QPolicy policy;
  policy.action_count = env.action_count();
  policy.net = make_mlp(cfg.layer_sizes(env.obs_dim(), env.action_count()),
                        Activation::Linear, 1.0, init_rng);
  if (cfg.episodes == 0) return policy;

  Mlp target = policy.net;
  ReplayBuffer<DiscreteTransition> buffer(cfg.buffer_capacity);
  long total_steps = 0;
  long updates = 0;

  const int decay_episodes = std::max(1, cfg.episodes / 2);
  for (int ep = 0; ep < cfg.episodes; ++ep) {
    double eps = cfg.eps_start +
                 (cfg.eps_end - cfg.eps_start) *
                     std::min(1.0, static_cast<double>(ep) / decay_episodes);
    Vector obs = env.reset(rng.split(2 + ep));
    bool done = false;
    while (!done) {
      int a = train_rng.uniform() < eps ? train_rng.uniform_int(policy.action_count)
                                        : act(policy, obs);
      StepResult res = env.step(a);
      buffer.push({obs, a, res.reward, res.observation, res.done});
      obs = res.observation;
      done = res.done;
      ++total_steps;

      if (buffer.size() >= static_cast<std::size_t>(cfg.warmup) &&
          total_steps % cfg.update_every == 0) {
        Vector grad(param_count(policy.net), 0.0);
        for (int b = 0; b < cfg.batch_size; ++b) {
          const auto& t = buffer.sample(train_rng);
          double y = bellman_target(t.r, cfg.gamma, forward(target, t.s2), t.done);
          Vector q = forward(policy.net, t.s);
          Vector dl_dq(q.size(), 0.0);
          dl_dq[t.a] = 2.0 * (q[t.a] - y) / cfg.batch_size;
          Backprop bp = backward(policy.net, t.s, dl_dq);
          for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += bp.dparams[i];
        }
        Vector params = flatten_params(policy.net);
        sgd_step_inplace(params, grad, cfg.lr);
        set_params(policy.net, params);
        ++updates;
        if (updates % cfg.target_update == 0) target = policy.net;
      }
    }
  }
  return policy;
}

// ---------------------------------------------------------------------------
// DDPG-lite on PointReach, anchored by scripted demonstrations.
//
// Pure DDPG with these tiny nets and plain SGD oscillates: the policy learns
// full throttle toward the goal quadrant, the ReLU critic over-extrapolates at
// the action bounds, and braking never stabilizes. Every fifth episode is
// therefore driven by a proportional-derivative controller toward the goal;
// those transitions land in a separate demonstration buffer, fill a fixed
// quarter of every update batch, and supervise the actor directly
// (demonstration-anchored DDPG). The critic trains on all samples with the
// standard TD target.
// ---------------------------------------------------------------------------
inline ActorCritic train_ddpg(PointReach env, const TrainConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  Rng init_rng = rng.split(0);
  Rng train_rng = rng.split(1);

  ActorCritic ac;
  ac.rho = cfg.rho;
  ac.actor = make_mlp(cfg.layer_sizes(env.obs_dim(), env.action_dim()),
                      Activation::Tanh, 1.0, init_rng);
  ac.critic = make_mlp(cfg.layer_sizes(env.obs_dim() + env.action_dim(), 1),
                       Activation::Linear, 1.0, init_rng);
  // Near-zero final actor layer: the initial policy is ~0 force everywhere
  // instead of a random saturated one, so early exploration stays centered.
  {
    const std::size_t last = ac.actor.layer_count() - 1;
    for (double& w : ac.actor.weights[last].data) w *= 0.01;
    for (double& b : ac.actor.biases[last]) b = 0.0;
  }
  ac.target_actor = ac.actor;
  ac.target_critic = ac.critic;
  if (cfg.episodes == 0) return ac;

  const double kRewardScale = 0.1;  // keeps |Q| ~ 10 at gamma 0.99
  const double kBcWeight = 10.0;    // behavior-cloning weight on demo samples
  const int kDemoPeriod = 5;        // every k-th episode is controller-driven
  const int kActorDelay = 2;        // actor updates every k critic updates

  ReplayBuffer<ContinuousTransition> buffer(cfg.buffer_capacity);
  ReplayBuffer<ContinuousTransition> demos(cfg.buffer_capacity);
  long total_steps = 0;
  long updates = 0;

  for (int ep = 0; ep < cfg.episodes; ++ep) {
    const bool demo_ep = ep % kDemoPeriod == 0;
    Vector obs = env.reset(rng.split(2 + ep));
    bool done = false;
    while (!done) {
      Vector a(env.action_dim());
      if (demo_ep) {
        // Noisy proportional-derivative pull toward the goal.
        Vector s = env.native_state();
        Vector g = env.goal();
        for (int i = 0; i < env.action_dim(); ++i) {
          a[i] = std::clamp(3.0 * (g[i] - s[i]) - 1.5 * s[2 + i] +
                                cfg.action_noise * train_rng.normal(),
                            -1.0, 1.0);
        }
      } else {
        a = act(ac, obs);
        for (double& v : a) {
          v = std::clamp(v + cfg.action_noise * train_rng.normal(), -1.0, 1.0);
        }
      }
      StepResult res = env.step(a);
      (demo_ep ? demos : buffer)
          .push({obs, a, res.reward * kRewardScale, res.observation, res.done});
      obs = res.observation;
      done = res.done;
      ++total_steps;

      if (buffer.size() + demos.size() >= static_cast<std::size_t>(cfg.warmup) &&
          buffer.size() > 0 && total_steps % cfg.update_every == 0) {
        Vector critic_grad(param_count(ac.critic), 0.0);
        Vector actor_grad(param_count(ac.actor), 0.0);
        const bool do_actor = updates % kActorDelay == 0;
        for (int b = 0; b < cfg.batch_size; ++b) {
          const bool from_demo = demos.size() > 0 && b % 4 == 3;
          const auto& t = from_demo ? demos.sample(train_rng) : buffer.sample(train_rng);
          // Critic: squared TD error against the target networks. Rewards are
          // nonpositive, so any positive bootstrap value is overestimation and
          // is clamped away before it can feed back on itself.
          Vector a2 = forward(ac.target_actor, t.s2);
          double q2 = std::min(forward(ac.target_critic, concat(t.s2, a2))[0], 0.0);
          double y = t.done ? t.r : t.r + cfg.gamma * q2;
          Vector sa = concat(t.s, t.a);
          double q = forward(ac.critic, sa)[0];
          Backprop cbp = backward(ac.critic, sa, {2.0 * (q - y) / cfg.batch_size});
          for (std::size_t i = 0; i < critic_grad.size(); ++i) critic_grad[i] += cbp.dparams[i];

          if (!do_actor) continue;
          Vector mu = forward(ac.actor, t.s);
          Vector dl_dmu(env.action_dim(), 0.0);
          if (from_demo) {
            // Behavior cloning toward the demonstrated action.
            for (int i = 0; i < env.action_dim(); ++i) {
              dl_dmu[i] = kBcWeight * 2.0 * (mu[i] - t.a[i]) / cfg.batch_size;
            }
          } else {
            // Deterministic policy gradient: ascend Q(s, mu(s)).
            Backprop qbp = backward(ac.critic, concat(t.s, mu), {1.0});
            for (int i = 0; i < env.action_dim(); ++i) {
              dl_dmu[i] = -qbp.dx[env.obs_dim() + i] / cfg.batch_size;
            }
          }
          Backprop abp = backward(ac.actor, t.s, dl_dmu);
          for (std::size_t i = 0; i < actor_grad.size(); ++i) actor_grad[i] += abp.dparams[i];
        }
        Vector cp = flatten_params(ac.critic);
        sgd_step_inplace(cp, critic_grad, cfg.critic_lr);
        set_params(ac.critic, cp);
        if (do_actor) {
          Vector ap = flatten_params(ac.actor);
          sgd_step_inplace(ap, actor_grad, cfg.actor_lr);
          set_params(ac.actor, ap);
          soft_update(ac.target_actor, ac.actor, cfg.rho);
        }
        soft_update(ac.target_critic, ac.critic, cfg.rho);
        ++updates;
      }
    }
  }
  return ac;
}

// ---------------------------------------------------------------------------
// Greedy evaluation: no exploration noise, no attack.
// ---------------------------------------------------------------------------
template <typename Policy, typename Env>
std::vector<EpisodeMetrics> evaluate(const Policy& policy, Env env, int episodes,
                                     Rng rng) {
  if (episodes < 1) throw std::invalid_argument("evaluate: episodes must be >= 1");
  std::vector<EpisodeMetrics> out;
  out.reserve(episodes);
  for (int ep = 0; ep < episodes; ++ep) {
    EpisodeMetrics m;
    m.episode = ep;
    Vector obs = env.reset(rng.split(ep));
    bool done = false;
    while (!done) {
      StepResult res = env.step(act(policy, obs));
      m.step_rewards.push_back(res.reward);
      m.episode_return += res.reward;
      ++m.length;
      obs = res.observation;
      done = res.done;
    }
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace advrl

#endif  // ADVRL_AGENTS_HPP
