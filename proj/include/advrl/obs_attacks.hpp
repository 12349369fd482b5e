#ifndef ADVRL_OBS_ATTACKS_HPP
#define ADVRL_OBS_ATTACKS_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "advrl/agents.hpp"
#include "advrl/envs.hpp"
#include "advrl/gradest.hpp"
#include "advrl/metrics.hpp"
#include "advrl/numkit.hpp"
#include "advrl/victim.hpp"

namespace advrl {

// ---------------------------------------------------------------------------
// Perturbation primitives.
// ---------------------------------------------------------------------------
struct Perturbation {
  Vector delta;
  double epsilon = 0.0;
};

/// clip(s + delta, 0, 1): perturbed observations stay valid.
inline Vector perturb_obs(const Vector& s, const Vector& delta) {
  if (s.size() != delta.size()) throw std::invalid_argument("perturb_obs: length mismatch");
  Vector out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    out[i] = std::clamp(s[i] + delta[i], 0.0, 1.0);
  }
  return out;
}

/// Cross-entropy of softmax(q) against the one-hot greedy action, with its
/// gradient in q. FGSM ascends this loss to suppress the preferred action.
inline std::pair<double, Vector> attack_loss_discrete(const Vector& q, int a_star) {
  if (a_star < 0 || a_star >= static_cast<int>(q.size())) {
    throw std::invalid_argument("attack_loss_discrete: action index out of range");
  }
  Vector p = softmax_temp(q, 1.0);
  double loss = -std::log(p[a_star]);
  Vector dl_dq = p;
  dl_dq[a_star] -= 1.0;
  return {loss, std::move(dl_dq)};
}

/// delta = epsilon * sign(grad), with sign(0) = 0.
inline Perturbation fgsm(const Vector& grad_s, double epsilon) {
  if (epsilon <= 0.0) throw std::invalid_argument("fgsm: epsilon must be > 0");
  check_finite(grad_s, "fgsm gradient");
  Perturbation out;
  out.epsilon = epsilon;
  out.delta.resize(grad_s.size());
  for (std::size_t i = 0; i < grad_s.size(); ++i) {
    out.delta[i] = grad_s[i] > 0.0 ? epsilon : (grad_s[i] < 0.0 ? -epsilon : 0.0);
  }
  return out;
}

// ---------------------------------------------------------------------------
// White-box exact gradients of the attack losses.
// ---------------------------------------------------------------------------

/// Analytic observation gradient of the cross-entropy attack loss at the
/// policy's greedy action.
inline Vector exact_grad_discrete(const QPolicy& policy, const Vector& s) {
  Vector q = forward(policy.net, s);
  auto [loss, dl_dq] = attack_loss_discrete(q, argmax_lowest(q));
  (void)loss;
  return backward(policy.net, s, dl_dq).dx;
}

/// Analytic observation gradient of -Q(s, mu(s)).
inline Vector exact_grad_continuous(const ActorCritic& policy, const Vector& s) {
  Vector a = forward(policy.actor, s);
  Backprop cbp = backward(policy.critic, concat(s, a), {1.0});
  Vector dq_ds(cbp.dx.begin(), cbp.dx.begin() + s.size());
  Vector dq_da(cbp.dx.begin() + s.size(), cbp.dx.end());
  Backprop abp = backward(policy.actor, s, dq_da);
  Vector grad(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) grad[i] = -(dq_ds[i] + abp.dx[i]);
  return grad;
}

// ---------------------------------------------------------------------------
// Black-box per-frame attack steps (FD / SFD estimation).
// ---------------------------------------------------------------------------

inline LossOracle make_discrete_attack_oracle(VictimOracle& victim, int a_star) {
  return LossOracle([&victim, a_star](const Vector& x) {
    return attack_loss_discrete(victim.query_q(x), a_star).first;
  });
}

inline LossOracle make_continuous_attack_oracle(ContinuousVictimOracle& victim) {
  return LossOracle([&victim](const Vector& x) { return -victim.query_value(x); });
}

inline Perturbation fd_attack_step(VictimOracle& victim, const Vector& s,
                                   double epsilon, double delta) {
  LossOracle f = make_discrete_attack_oracle(victim, victim.victim_act(s));
  return fgsm(fd_full(f, s, delta).values, epsilon);
}

inline Perturbation fd_attack_step(ContinuousVictimOracle& victim, const Vector& s,
                                   double epsilon, double delta) {
  LossOracle f = make_continuous_attack_oracle(victim);
  return fgsm(fd_full(f, s, delta).values, epsilon);
}

inline Perturbation sfd_attack_step(VictimOracle& victim, const Vector& s,
                                    double epsilon, const SfdConfig& cfg, Rng& rng) {
  LossOracle f = make_discrete_attack_oracle(victim, victim.victim_act(s));
  return fgsm(sfd(f, s, cfg, rng).values, epsilon);
}

inline Perturbation sfd_attack_step(ContinuousVictimOracle& victim, const Vector& s,
                                    double epsilon, const SfdConfig& cfg, Rng& rng) {
  LossOracle f = make_continuous_attack_oracle(victim);
  return fgsm(sfd(f, s, cfg, rng).values, epsilon);
}

// ---------------------------------------------------------------------------
// Learned perturbation network (N-attack).
// ---------------------------------------------------------------------------
struct PerturbNet {
  Mlp net;  // observation -> observation-dim, scaled-tanh(epsilon) output
  double epsilon = 0.0;
};

inline PerturbNet make_perturb_net(int obs_dim, double epsilon, Rng& rng) {
  PerturbNet pn;
  pn.epsilon = epsilon;
  pn.net = make_mlp({obs_dim, 64, 64, obs_dim}, Activation::ScaledTanh, epsilon, rng);
  return pn;
}

inline Vector perturbation_of(const PerturbNet& pn, const Vector& s) {
  return forward(pn.net, s);
}

/// Trains h(s;w) against a frozen DQN victim on the squared Bellman-style
/// loss with flipped reward; the victim acts on perturbed observations
/// during data collection.
inline PerturbNet train_obs_nn_attack(const QPolicy& victim, GridChase env,
                                      double epsilon, const TrainConfig& cfg) {
  cfg.validate();
  if (epsilon <= 0.0) throw std::invalid_argument("train_obs_nn_attack: epsilon must be > 0");
  Rng rng(cfg.seed);
  Rng init_rng = rng.split(0);
  Rng train_rng = rng.split(1);
  PerturbNet pn = make_perturb_net(env.obs_dim(), epsilon, init_rng);
  if (cfg.episodes == 0) return pn;

  ReplayBuffer<DiscreteTransition> buffer(cfg.buffer_capacity);
  long total_steps = 0;
  for (int ep = 0; ep < cfg.episodes; ++ep) {
    Vector obs = env.reset(rng.split(2 + ep));
    bool done = false;
    while (!done) {
      Vector tilde = perturb_obs(obs, perturbation_of(pn, obs));
      int a = act(victim, tilde);
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
          Vector u = t.s;
          Vector hu = perturbation_of(pn, t.s);
          for (std::size_t i = 0; i < u.size(); ++i) u[i] += hu[i];
          Vector q = forward(victim.net, u);
          double target = r_tilde;
          Vector u2, q2;
          int a2 = 0;
          if (!t.done) {
            u2 = t.s2;
            Vector hu2 = perturbation_of(pn, t.s2);
            for (std::size_t i = 0; i < u2.size(); ++i) u2[i] += hu2[i];
            q2 = forward(victim.net, u2);
            a2 = argmax_lowest(q2);
            target += cfg.gamma * q2[a2];
          }
          const double e = q[t.a] - target;
          // dL/du through Q(u, a).
          Vector dl_dq(q.size(), 0.0);
          dl_dq[t.a] = 2.0 * e / cfg.batch_size;
          Vector dl_du = backward(victim.net, u, dl_dq).dx;
          Backprop pbp = backward(pn.net, t.s, dl_du);
          for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += pbp.dparams[i];
          if (!t.done) {
            // dL/du' through the max term.
            Vector dl_dq2(q2.size(), 0.0);
            dl_dq2[a2] = -2.0 * e * cfg.gamma / cfg.batch_size;
            Vector dl_du2 = backward(victim.net, u2, dl_dq2).dx;
            Backprop pbp2 = backward(pn.net, t.s2, dl_du2);
            for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += pbp2.dparams[i];
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

/// DDPG form of the N-attack loss; the action in Q(s+h, a) is the executed
/// action from the rollout buffer.
inline PerturbNet train_obs_nn_attack(const ActorCritic& victim, PointReach env,
                                      double epsilon, const TrainConfig& cfg) {
  cfg.validate();
  if (epsilon <= 0.0) throw std::invalid_argument("train_obs_nn_attack: epsilon must be > 0");
  Rng rng(cfg.seed);
  Rng init_rng = rng.split(0);
  Rng train_rng = rng.split(1);
  PerturbNet pn = make_perturb_net(env.obs_dim(), epsilon, init_rng);
  if (cfg.episodes == 0) return pn;

  const std::size_t obs_dim = static_cast<std::size_t>(env.obs_dim());
  ReplayBuffer<ContinuousTransition> buffer(cfg.buffer_capacity);
  long total_steps = 0;
  for (int ep = 0; ep < cfg.episodes; ++ep) {
    Vector obs = env.reset(rng.split(2 + ep));
    bool done = false;
    while (!done) {
      Vector tilde = perturb_obs(obs, perturbation_of(pn, obs));
      Vector a = act(victim, tilde);
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
          Vector u = t.s;
          Vector hu = perturbation_of(pn, t.s);
          for (std::size_t i = 0; i < u.size(); ++i) u[i] += hu[i];
          double q = forward(victim.critic, concat(u, t.a))[0];
          double target = r_tilde;
          Vector u2;
          if (!t.done) {
            u2 = t.s2;
            Vector hu2 = perturbation_of(pn, t.s2);
            for (std::size_t i = 0; i < u2.size(); ++i) u2[i] += hu2[i];
            Vector mu2 = forward(victim.actor, u2);
            target += cfg.gamma * forward(victim.critic, concat(u2, mu2))[0];
          }
          const double e = target - q;
          // dL/du through -Q(u, a).
          Backprop cbp = backward(victim.critic, concat(u, t.a),
                                  {-2.0 * e / cfg.batch_size});
          Vector dl_du(cbp.dx.begin(), cbp.dx.begin() + obs_dim);
          Backprop pbp = backward(pn.net, t.s, dl_du);
          for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += pbp.dparams[i];
          if (!t.done) {
            // dL/du' through gamma * Q(u', mu(u')).
            Vector mu2 = forward(victim.actor, u2);
            Backprop c2 = backward(victim.critic, concat(u2, mu2),
                                   {2.0 * e * cfg.gamma / cfg.batch_size});
            Vector dq_ds(c2.dx.begin(), c2.dx.begin() + obs_dim);
            Vector dq_da(c2.dx.begin() + obs_dim, c2.dx.end());
            Backprop a2 = backward(victim.actor, u2, dq_da);
            Vector dl_du2(obs_dim);
            for (std::size_t i = 0; i < obs_dim; ++i) dl_du2[i] = dq_ds[i] + a2.dx[i];
            Backprop pbp2 = backward(pn.net, t.s2, dl_du2);
            for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += pbp2.dparams[i];
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

// ---------------------------------------------------------------------------
// Surrogate policies for transferability and imitation attacks.
// ---------------------------------------------------------------------------
enum class SurrogateArch { Same, Different };

struct SurrogatePolicy {
  QPolicy policy;
  std::string provenance;  // transfer-same-arch | transfer-diff-arch | imitation
};

/// Independently trained policy in the victim's training environment.
/// "Different" uses three hidden layers of 64 instead of two.
inline SurrogatePolicy build_surrogate_transfer(GridChase env, SurrogateArch arch,
                                                const TrainConfig& base_cfg,
                                                std::uint64_t seed) {
  TrainConfig cfg = base_cfg;
  cfg.seed = seed;
  cfg.hidden = arch == SurrogateArch::Same ? std::vector<int>{64, 64}
                                           : std::vector<int>{64, 64, 64};
  SurrogatePolicy out;
  out.policy = train_dqn(env, cfg);
  out.provenance = arch == SurrogateArch::Same ? "transfer-same-arch" : "transfer-diff-arch";
  return out;
}

struct ImitationConfig {
  // Q-gaps between actions are small relative to their shared scale, so the
  // teacher needs a sharp temperature for the argmax to survive distillation.
  double tau = 0.05;
  int dataset_size = 5000;
  int epochs = 20;
  int batch_size = 32;
  double lr = 0.05;
  double explore_eps = 0.2;  // state-diversity exploration while collecting
  std::vector<int> hidden{64, 64};
  // The printed loss tempers only the teacher logits; this switch enables
  // the standard distillation form (student logits also divided by tau).
  bool temper_student = false;
  std::uint64_t seed = 1;
};

/// Policy-distillation surrogate trained purely from victim Q-value queries.
inline SurrogatePolicy train_imitation_surrogate(VictimOracle& victim, GridChase env,
                                                 const ImitationConfig& cfg) {
  if (cfg.tau <= 0.0) throw std::invalid_argument("train_imitation_surrogate: tau must be > 0");
  Rng rng(cfg.seed);
  Rng init_rng = rng.split(0);
  Rng train_rng = rng.split(1);

  // Collect D = {(s, q)} from victim rollouts with light exploration.
  std::vector<Vector> states;
  std::vector<Vector> teacher_q;
  int ep = 0;
  while (static_cast<int>(states.size()) < cfg.dataset_size) {
    Vector obs = env.reset(rng.split(2 + ep));
    ++ep;
    bool done = false;
    while (!done && static_cast<int>(states.size()) < cfg.dataset_size) {
      states.push_back(obs);
      teacher_q.push_back(victim.query_q(obs));
      int a = train_rng.uniform() < cfg.explore_eps
                  ? train_rng.uniform_int(victim.action_count())
                  : victim.victim_act(obs);
      StepResult res = env.step(a);
      obs = res.observation;
      done = res.done;
    }
  }

  std::vector<int> layers{env.obs_dim()};
  layers.insert(layers.end(), cfg.hidden.begin(), cfg.hidden.end());
  layers.push_back(victim.action_count());
  SurrogatePolicy out;
  out.provenance = "imitation";
  out.policy.action_count = victim.action_count();
  out.policy.net = make_mlp(layers, Activation::Linear, 1.0, init_rng);

  const int n = static_cast<int>(states.size());
  const long steps = static_cast<long>(cfg.epochs) * n / cfg.batch_size;
  for (long step = 0; step < steps; ++step) {
    Vector grad(param_count(out.policy.net), 0.0);
    for (int b = 0; b < cfg.batch_size; ++b) {
      int i = train_rng.uniform_int(n);
      Vector p_teacher = softmax_temp(teacher_q[i], cfg.tau);
      Vector q_s = forward(out.policy.net, states[i]);
      Vector p_student =
          cfg.temper_student ? softmax_temp(q_s, cfg.tau) : softmax_temp(q_s, 1.0);
      Vector dl_dq(q_s.size());
      const double scale = (cfg.temper_student ? 1.0 / cfg.tau : 1.0) / cfg.batch_size;
      for (std::size_t j = 0; j < q_s.size(); ++j) {
        dl_dq[j] = scale * (p_student[j] - p_teacher[j]);
      }
      Backprop bp = backward(out.policy.net, states[i], dl_dq);
      for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += bp.dparams[j];
    }
    Vector params = flatten_params(out.policy.net);
    sgd_step_inplace(params, grad, cfg.lr);
    set_params(out.policy.net, params);
  }
  return out;
}

/// Mean distillation loss of a surrogate over a dataset (monitoring helper).
inline double imitation_loss(const QPolicy& student, const std::vector<Vector>& states,
                             const std::vector<Vector>& teacher_q, double tau) {
  double total = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    Vector p_teacher = softmax_temp(teacher_q[i], tau);
    Vector p_student = softmax_temp(forward(student.net, states[i]), 1.0);
    total += kl_div(p_teacher, p_student);
  }
  return total / static_cast<double>(states.size());
}

// ---------------------------------------------------------------------------
// Q-variance frame selection and universal perturbations.
// ---------------------------------------------------------------------------

/// Bessel-corrected sample variance of a state's action values.
inline double qvalue_variance(const Vector& q) {
  if (q.size() < 2) throw std::invalid_argument("qvalue_variance: need >= 2 values");
  double mean = std::accumulate(q.begin(), q.end(), 0.0) / q.size();
  double ss = 0.0;
  for (double v : q) ss += (v - mean) * (v - mean);
  return ss / (q.size() - 1);
}

enum class FrameMode { All, Largest20, Smallest20 };

/// Indices among the first k frames used for the universal perturbation:
/// all of them, or the ceil(0.2 k) with the largest/smallest Q variance.
/// Ties resolve to the earlier frame.
inline std::vector<int> select_frames(const std::vector<double>& variances, int k,
                                      FrameMode mode) {
  if (k < 1 || k > static_cast<int>(variances.size())) {
    throw std::invalid_argument("select_frames: invalid k");
  }
  std::vector<int> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  if (mode == FrameMode::All) return idx;
  const int take = static_cast<int>(std::ceil(0.2 * k));
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    return mode == FrameMode::Largest20 ? variances[a] > variances[b]
                                        : variances[a] < variances[b];
  });
  idx.resize(take);
  std::sort(idx.begin(), idx.end());
  return idx;
}

struct UniversalPerturbation {
  Vector delta;
  std::vector<int> built_from;
  int k = 0;
};

/// delta = epsilon * sign(mean of the selected frames' gradients).
inline UniversalPerturbation build_universal(const std::vector<Vector>& gradients,
                                             double epsilon) {
  if (gradients.empty()) throw std::invalid_argument("build_universal: empty gradient list");
  const std::size_t d = gradients.front().size();
  Vector mean(d, 0.0);
  for (const Vector& g : gradients) {
    if (g.size() != d) throw std::invalid_argument("build_universal: length mismatch");
    for (std::size_t i = 0; i < d; ++i) mean[i] += g[i];
  }
  for (double& v : mean) v /= static_cast<double>(gradients.size());
  UniversalPerturbation out;
  out.delta = fgsm(mean, epsilon).delta;
  return out;
}

// ---------------------------------------------------------------------------
// Episode runners.
// ---------------------------------------------------------------------------

/// One episode where every frame is perturbed by delta_of(s) before the
/// victim sees it. Records per-step rewards and billed queries.
template <typename Oracle, typename Env, typename DeltaFn>
EpisodeMetrics run_perframe_episode(Oracle& victim, Env env, DeltaFn&& delta_of,
                                    Rng rng) {
  EpisodeMetrics m;
  const long q0 = victim.queries();
  Vector obs = env.reset(rng);
  bool done = false;
  while (!done) {
    Vector tilde = perturb_obs(obs, delta_of(obs));
    StepResult res = env.step(victim.victim_act(tilde));
    m.step_rewards.push_back(res.reward);
    m.episode_return += res.reward;
    ++m.length;
    obs = res.observation;
    done = res.done;
  }
  m.queries = victim.queries() - q0;
  return m;
}

enum class SeqMethod { FgsmWb, FdBb, SfdBb, RandBb };

struct SeqAttackConfig {
  SeqMethod method = SeqMethod::FgsmWb;
  int k = 20;  // warmup frames
  FrameMode mode = FrameMode::All;
  double epsilon = 0.01;
  double fd_delta = 1e-3;
  SfdConfig sfd;
};

/// Online sequential universal attack on a discrete victim: frames
/// 0..k-1 run unperturbed while gradients are collected (estimated live
/// for the black-box variants); from frame k on, a frozen universal
/// perturbation is applied. seq-rand skips gradient collection and draws
/// its perturbation once, uniform in [-eps, eps]^d.
inline EpisodeMetrics run_sequential_attack(VictimOracle& victim, GridChase env,
                                            const SeqAttackConfig& cfg, Rng rng) {
  if (cfg.k < 1 || cfg.k >= GridChase::kHorizon) {
    throw std::invalid_argument("run_sequential_attack: k out of range");
  }
  EpisodeMetrics m;
  const long q0 = victim.queries();
  Rng attack_rng = rng.split(1);
  Vector obs = env.reset(rng.split(0));
  const std::size_t d = obs.size();

  std::vector<Vector> gradients;
  std::vector<double> variances;
  Vector delta;  // frozen once built
  bool done = false;
  int frame = 0;
  while (!done) {
    if (delta.empty() && frame >= cfg.k) {
      if (cfg.method == SeqMethod::RandBb) {
        delta.resize(d);
        for (double& v : delta) v = attack_rng.uniform(-cfg.epsilon, cfg.epsilon);
      } else {
        std::vector<int> chosen =
            select_frames(variances, static_cast<int>(gradients.size()), cfg.mode);
        std::vector<Vector> selected;
        for (int i : chosen) selected.push_back(gradients[i]);
        UniversalPerturbation up = build_universal(selected, cfg.epsilon);
        delta = std::move(up.delta);
      }
    }

    Vector fed = obs;
    if (!delta.empty()) {
      fed = perturb_obs(obs, delta);
    } else if (cfg.method != SeqMethod::RandBb) {
      switch (cfg.method) {
        case SeqMethod::FgsmWb: {
          const QPolicy& net = victim.weights();
          gradients.push_back(exact_grad_discrete(net, obs));
          variances.push_back(qvalue_variance(forward(net.net, obs)));
          break;
        }
        case SeqMethod::FdBb: {
          int a_star = victim.victim_act(obs);
          LossOracle f = make_discrete_attack_oracle(victim, a_star);
          gradients.push_back(fd_full(f, obs, cfg.fd_delta).values);
          variances.push_back(qvalue_variance(victim.query_q(obs)));
          break;
        }
        case SeqMethod::SfdBb: {
          int a_star = victim.victim_act(obs);
          LossOracle f = make_discrete_attack_oracle(victim, a_star);
          gradients.push_back(sfd(f, obs, cfg.sfd, attack_rng).values);
          variances.push_back(qvalue_variance(victim.query_q(obs)));
          break;
        }
        case SeqMethod::RandBb:
          break;
      }
    }

    StepResult res = env.step(victim.victim_act(fed));
    m.step_rewards.push_back(res.reward);
    m.episode_return += res.reward;
    ++m.length;
    obs = res.observation;
    done = res.done;
    ++frame;
  }
  m.queries = victim.queries() - q0;
  return m;
}

}  // namespace advrl

#endif  // ADVRL_OBS_ATTACKS_HPP
