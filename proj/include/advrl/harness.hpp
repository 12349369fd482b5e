#ifndef ADVRL_HARNESS_HPP
#define ADVRL_HARNESS_HPP

#include <chrono>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "advrl/act_attacks.hpp"
#include "advrl/agents.hpp"
#include "advrl/env_attacks.hpp"
#include "advrl/envs.hpp"
#include "advrl/gradest.hpp"
#include "advrl/metrics.hpp"
#include "advrl/numkit.hpp"
#include "advrl/obs_attacks.hpp"
#include "advrl/policy_io.hpp"
#include "advrl/victim.hpp"

namespace advrl {

// ---------------------------------------------------------------------------
// Flat key=value configuration with '#' comments.
// ---------------------------------------------------------------------------
using KvConfig = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

inline KvConfig parse_config(std::istream& is) {
  KvConfig out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": expected key=value");
    }
    std::string key = detail::trim(line.substr(0, eq));
    std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) {
      throw std::runtime_error("config line " + std::to_string(lineno) + ": empty key");
    }
    out[key] = value;
  }
  return out;
}

inline KvConfig parse_config_string(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

inline KvConfig parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config file: " + path);
  return parse_config(f);
}

inline std::string kv_get(const KvConfig& kv, const std::string& key,
                          const std::string& fallback) {
  auto it = kv.find(key);
  return it == kv.end() ? fallback : it->second;
}

inline std::string kv_require(const KvConfig& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw std::runtime_error("missing required config key: " + key);
  return it->second;
}

inline double kv_get_double(const KvConfig& kv, const std::string& key, double fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    std::size_t pos = 0;
    double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing text");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("config key " + key + ": not a number: " + it->second);
  }
}

inline long kv_get_long(const KvConfig& kv, const std::string& key, long fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    std::size_t pos = 0;
    long v = std::stol(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing text");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("config key " + key + ": not an integer: " + it->second);
  }
}

inline std::uint64_t kv_get_u64(const KvConfig& kv, const std::string& key,
                                std::uint64_t fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    std::size_t pos = 0;
    std::uint64_t v = std::stoull(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing text");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("config key " + key + ": not an unsigned integer: " + it->second);
  }
}

inline Vector kv_get_vector(const KvConfig& kv, const std::string& key) {
  const std::string raw = kv_require(kv, key);
  Vector out;
  std::istringstream is(raw);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    tok = detail::trim(tok);
    if (tok.empty()) continue;
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw std::runtime_error("config key " + key + ": bad component: " + tok);
    }
  }
  if (out.empty()) throw std::runtime_error("config key " + key + ": empty vector");
  return out;
}

// ---------------------------------------------------------------------------
// Attack registry: one record per implemented method.
// ---------------------------------------------------------------------------
struct TaxonomyRecord {
  std::string method;
  std::string component;  // observation | action | dynamics | none
  std::string knowledge;  // white | black | n/a
  bool needs_arch = false;
  bool needs_params = false;
  bool needs_query = false;
  std::string realtime_note;
  std::string temporal;  // independent | sequential | n/a
};

inline const std::vector<TaxonomyRecord>& attack_registry() {
  static const std::vector<TaxonomyRecord> table = {
      {"non-adv", "none", "n/a", false, false, false, "n/a", "n/a"},
      {"obs-fgsm-wb", "observation", "white", true, true, true, "yes", "independent"},
      {"obs-nn-wb", "observation", "white", true, true, true, "yes", "independent"},
      {"obs-fgsm-bb", "observation", "black", false, false, false, "yes", "independent"},
      {"obs-imi-bb", "observation", "black", false, false, true, "yes", "independent"},
      {"obs-fd-bb", "observation", "black", false, false, true, "too slow", "independent"},
      {"obs-sfd-bb", "observation", "black", false, false, true, "too slow", "independent"},
      {"obs-seq-fgsm-wb", "observation", "white", true, true, true, "yes", "sequential"},
      {"obs-seq-fd-bb", "observation", "black", false, false, true, "yes", "sequential"},
      {"obs-seq-sfd-bb", "observation", "black", false, false, true, "yes", "sequential"},
      {"obs-seq-rand-bb", "observation", "black", false, false, false, "yes", "sequential"},
      {"act-nn-wb", "action", "white", true, true, true, "yes", "independent"},
      {"env-rand-bb", "dynamics", "black", false, false, true, "n/a", "n/a"},
      {"env-search-bb", "dynamics", "black", false, false, true, "n/a", "n/a"},
  };
  return table;
}

inline const TaxonomyRecord& find_taxonomy(const std::string& method) {
  for (const auto& rec : attack_registry()) {
    if (rec.method == method) return rec;
  }
  throw std::runtime_error("unknown attack method: " + method);
}

inline std::string taxonomy_table() {
  std::ostringstream os;
  os << "method,component,knowledge,needs_arch,needs_params,needs_query,realtime,temporal\n";
  for (const auto& r : attack_registry()) {
    os << r.method << ',' << r.component << ',' << r.knowledge << ','
       << (r.needs_arch ? "yes" : "no") << ',' << (r.needs_params ? "yes" : "no") << ','
       << (r.needs_query ? "yes" : "no") << ',' << r.realtime_note << ',' << r.temporal
       << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Experiment configuration.
// ---------------------------------------------------------------------------
struct ExperimentConfig {
  std::string env_id = "grid";  // grid | point
  std::string policy_path;
  std::string method = "non-adv";
  int episodes = 100;
  std::uint64_t seed = 1;
  std::string out_path;  // CSV destination; empty skips writing
  KvConfig params;       // full key set, attack.* / dyn.* / env.* looked up here

  static ExperimentConfig from_kv(const KvConfig& kv) {
    ExperimentConfig cfg;
    cfg.params = kv;
    cfg.env_id = kv_get(kv, "env", "grid");
    cfg.policy_path = kv_get(kv, "policy", "");
    cfg.method = kv_get(kv, "attack.method", kv_get(kv, "method", "non-adv"));
    cfg.episodes = static_cast<int>(kv_get_long(kv, "episodes", 100));
    cfg.seed = kv_get_u64(kv, "seed", 1);
    cfg.out_path = kv_get(kv, "out", "");
    return cfg;
  }

  void validate() const {
    if (env_id != "grid" && env_id != "point") {
      throw std::runtime_error("unknown env: " + env_id);
    }
    if (episodes < 1) throw std::runtime_error("episodes must be >= 1");
    find_taxonomy(method);
  }
};

/// Firewall instrumentation for one experiment run.
struct RunAudit {
  long weight_reads = 0;
  long billed_queries = 0;
};

namespace detail {

inline FrameMode frame_mode_from(const std::string& s) {
  if (s == "all") return FrameMode::All;
  if (s == "largest20") return FrameMode::Largest20;
  if (s == "smallest20") return FrameMode::Smallest20;
  throw std::runtime_error("unknown frame mode: " + s);
}

inline Topology topology_from(const std::string& s) {
  if (s == "flat-1d") return Topology::Flat1d;
  if (s == "grid-2d") return Topology::Grid2d;
  throw std::runtime_error("unknown topology: " + s);
}

inline SfdConfig sfd_from_params(const KvConfig& kv) {
  SfdConfig cfg;
  cfg.k = static_cast<int>(kv_get_long(kv, "attack.sfd.k", cfg.k));
  cfg.n = static_cast<int>(kv_get_long(kv, "attack.sfd.n", cfg.n));
  cfg.theta = kv_get_double(kv, "attack.sfd.theta", cfg.theta);
  cfg.delta = kv_get_double(kv, "attack.sfd.delta", cfg.delta);
  cfg.topology = topology_from(kv_get(kv, "attack.sfd.topology", "flat-1d"));
  cfg.grid_height = static_cast<int>(kv_get_long(kv, "attack.sfd.grid_height", 0));
  cfg.grid_width = static_cast<int>(kv_get_long(kv, "attack.sfd.grid_width", 0));
  cfg.relative_theta = kv_get(kv, "attack.sfd.relative_theta", "false") == "true";
  return cfg;
}

inline TrainConfig attack_train_config(const KvConfig& kv, std::uint64_t default_seed) {
  TrainConfig cfg;
  cfg.episodes = static_cast<int>(kv_get_long(kv, "attack.train.episodes", 300));
  cfg.lr = kv_get_double(kv, "attack.train.lr", 0.01);
  cfg.gamma = kv_get_double(kv, "attack.train.gamma", 0.99);
  cfg.warmup = static_cast<int>(kv_get_long(kv, "attack.train.warmup", 200));
  cfg.seed = kv_get_u64(kv, "attack.seed", default_seed);
  return cfg;
}

inline DynAttackSpec dyn_spec_from_params(const KvConfig& kv, std::uint64_t default_seed) {
  DynAttackSpec spec;
  spec.target_state = kv_get_vector(kv, "dyn.target");
  spec.target_step = static_cast<int>(kv_get_long(kv, "dyn.step", spec.target_step));
  spec.epsilon_m = kv_get_double(kv, "dyn.bound", spec.epsilon_m);
  spec.budget = static_cast<int>(kv_get_long(kv, "dyn.budget", spec.budget));
  spec.rollouts_per_proposal =
      static_cast<int>(kv_get_long(kv, "dyn.rollouts_per_proposal", 1));
  spec.rollout_seed = kv_get_u64(kv, "dyn.rollout_seed", default_seed);
  return spec;
}

/// Query-only policy views for the dynamics searches: the attacker drives
/// the victim through victim_act alone, never through weights().
struct OracleActor {
  VictimOracle* oracle;
};
inline int act(const OracleActor& p, const Vector& obs) { return p.oracle->victim_act(obs); }

struct ContinuousOracleActor {
  ContinuousVictimOracle* oracle;
};
inline Vector act(const ContinuousOracleActor& p, const Vector& obs) {
  return p.oracle->victim_act(obs);
}

class EpisodeTimer {
 public:
  EpisodeTimer() : start_(std::chrono::steady_clock::now()) {}
  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                     start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Per-environment experiment runners.
// ---------------------------------------------------------------------------
namespace detail {

template <typename Oracle, typename Env, typename DeltaFactory>
std::vector<EpisodeMetrics> run_perframe_episodes(Oracle& victim, const Env& env,
                                                  int episodes, Rng rng,
                                                  DeltaFactory&& make_delta) {
  std::vector<EpisodeMetrics> out;
  out.reserve(episodes);
  for (int ep = 0; ep < episodes; ++ep) {
    EpisodeTimer timer;
    auto delta_of = make_delta(ep);
    EpisodeMetrics m = run_perframe_episode(victim, env, delta_of, rng.split(ep));
    m.episode = ep;
    m.walltime_ms = timer.elapsed_ms();
    out.push_back(std::move(m));
  }
  return out;
}

inline std::vector<EpisodeMetrics> run_grid_experiment(const ExperimentConfig& cfg,
                                                       const QPolicy& policy,
                                                       RunAudit* audit) {
  GridChase env;
  if (cfg.params.count("env.slip")) {
    Vector slip = kv_get_vector(cfg.params, "env.slip");
    if (slip.size() == 1) slip.assign(GridChase::kActionCount, slip[0]);
    env.set_dynamics(slip);
  }
  if (policy.net.input_dim() != env.obs_dim()) {
    throw std::runtime_error("env/policy mismatch: policy input dim " +
                             std::to_string(policy.net.input_dim()) + " vs grid obs dim " +
                             std::to_string(env.obs_dim()));
  }

  VictimOracle victim(policy);
  Rng rng(cfg.seed);
  const double eps = kv_get_double(cfg.params, "attack.epsilon", 0.01);
  const double fd_delta = kv_get_double(cfg.params, "attack.fd_delta", 1e-3);
  const std::string& method = cfg.method;
  std::vector<EpisodeMetrics> out;

  if (method == "non-adv" || method == "env-rand-bb" || method == "env-search-bb") {
    if (method != "non-adv") {
      DynAttackSpec spec = dyn_spec_from_params(cfg.params, cfg.seed);
      OracleActor actor{&victim};
      DynSearchResult r;
      if (method == "env-rand-bb") {
        r = dyn_random_search(env, actor, spec, rng.split(1u << 20));
      } else {
        DynRlConfig rl;
        rl.seed = kv_get_u64(cfg.params, "attack.seed", cfg.seed);
        r = dyn_rl_search(env, actor, spec, rl);
      }
      env.set_dynamics(r.best_m);
    }
    const long setup_queries = victim.queries();
    Vector zero(env.obs_dim(), 0.0);
    out = run_perframe_episodes(victim, env, cfg.episodes, rng,
                                [&](int) { return [&](const Vector&) { return zero; }; });
    if (setup_queries > 0) out.front().queries += setup_queries;
  } else if (method == "obs-fgsm-wb") {
    const QPolicy& net = victim.weights();
    out = run_perframe_episodes(victim, env, cfg.episodes, rng, [&](int) {
      return [&](const Vector& s) { return fgsm(exact_grad_discrete(net, s), eps).delta; };
    });
  } else if (method == "obs-nn-wb") {
    const QPolicy& net = victim.weights();
    PerturbNet pn = train_obs_nn_attack(net, env, eps, attack_train_config(cfg.params, cfg.seed));
    out = run_perframe_episodes(victim, env, cfg.episodes, rng, [&](int) {
      return [&, pn](const Vector& s) { return perturbation_of(pn, s); };
    });
  } else if (method == "obs-fgsm-bb") {
    // Independently trained surrogate: the victim is never touched.
    SurrogateArch arch = kv_get(cfg.params, "attack.arch", "same") == "different"
                             ? SurrogateArch::Different
                             : SurrogateArch::Same;
    TrainConfig scfg;
    scfg.episodes =
        static_cast<int>(kv_get_long(cfg.params, "attack.train.episodes", scfg.episodes));
    SurrogatePolicy sur = build_surrogate_transfer(
        env, arch, scfg, kv_get_u64(cfg.params, "attack.seed", cfg.seed + 101));
    out = run_perframe_episodes(victim, env, cfg.episodes, rng, [&](int) {
      return [&](const Vector& s) {
        return fgsm(exact_grad_discrete(sur.policy, s), eps).delta;
      };
    });
  } else if (method == "obs-imi-bb") {
    ImitationConfig icfg;
    icfg.tau = kv_get_double(cfg.params, "attack.imi.tau", icfg.tau);
    icfg.dataset_size =
        static_cast<int>(kv_get_long(cfg.params, "attack.imi.dataset", icfg.dataset_size));
    icfg.epochs = static_cast<int>(kv_get_long(cfg.params, "attack.imi.epochs", icfg.epochs));
    icfg.lr = kv_get_double(cfg.params, "attack.imi.lr", icfg.lr);
    icfg.seed = kv_get_u64(cfg.params, "attack.seed", cfg.seed + 202);
    SurrogatePolicy sur = train_imitation_surrogate(victim, env, icfg);
    const long setup_queries = victim.queries();
    out = run_perframe_episodes(victim, env, cfg.episodes, rng, [&](int) {
      return [&](const Vector& s) {
        return fgsm(exact_grad_discrete(sur.policy, s), eps).delta;
      };
    });
    // Imitation-dataset queries are part of the attack's bill.
    out.front().queries += setup_queries;
  } else if (method == "obs-fd-bb") {
    out = run_perframe_episodes(victim, env, cfg.episodes, rng, [&](int) {
      return [&](const Vector& s) { return fd_attack_step(victim, s, eps, fd_delta).delta; };
    });
  } else if (method == "obs-sfd-bb") {
    SfdConfig sfd_cfg = sfd_from_params(cfg.params);
    auto attack_rng = std::make_shared<Rng>(rng.split(1u << 21));
    out = run_perframe_episodes(victim, env, cfg.episodes, rng, [&](int ep) {
      *attack_rng = Rng(cfg.seed).split((1u << 21) + ep);
      return [&, attack_rng](const Vector& s) {
        return sfd_attack_step(victim, s, eps, sfd_cfg, *attack_rng).delta;
      };
    });
  } else if (method == "obs-seq-fgsm-wb" || method == "obs-seq-fd-bb" ||
             method == "obs-seq-sfd-bb" || method == "obs-seq-rand-bb") {
    SeqAttackConfig scfg;
    scfg.method = method == "obs-seq-fgsm-wb"  ? SeqMethod::FgsmWb
                  : method == "obs-seq-fd-bb"  ? SeqMethod::FdBb
                  : method == "obs-seq-sfd-bb" ? SeqMethod::SfdBb
                                               : SeqMethod::RandBb;
    scfg.k = static_cast<int>(kv_get_long(cfg.params, "attack.k", scfg.k));
    scfg.mode = frame_mode_from(kv_get(cfg.params, "attack.mode", "all"));
    scfg.epsilon = eps;
    scfg.fd_delta = fd_delta;
    scfg.sfd = sfd_from_params(cfg.params);
    out.reserve(cfg.episodes);
    for (int ep = 0; ep < cfg.episodes; ++ep) {
      EpisodeTimer timer;
      EpisodeMetrics m = run_sequential_attack(victim, env, scfg, rng.split(ep));
      m.episode = ep;
      m.walltime_ms = timer.elapsed_ms();
      out.push_back(std::move(m));
    }
  } else if (method == "act-nn-wb") {
    const QPolicy& net = victim.weights();
    double eps_a = kv_get_double(cfg.params, "attack.epsilon_a", 0.0);
    if (eps_a <= 0.0) eps_a = default_epsilon_a(net, env, rng.split(1u << 22));
    ActPerturbNet pn =
        train_act_attack(net, env, eps_a, attack_train_config(cfg.params, cfg.seed));
    out.reserve(cfg.episodes);
    for (int ep = 0; ep < cfg.episodes; ++ep) {
      EpisodeTimer timer;
      EpisodeMetrics m;
      m.episode = ep;
      GridChase e = env;
      Vector obs = e.reset(rng.split(ep));
      bool done = false;
      while (!done) {
        StepResult res = e.step(perturbed_act(net, pn, obs));
        m.step_rewards.push_back(res.reward);
        m.episode_return += res.reward;
        ++m.length;
        obs = res.observation;
        done = res.done;
      }
      m.walltime_ms = timer.elapsed_ms();
      out.push_back(std::move(m));
    }
  } else {
    throw std::runtime_error("env/policy mismatch: method " + method +
                             " is not supported on the grid env");
  }

  if (audit) {
    audit->weight_reads = victim.weight_reads();
    audit->billed_queries = victim.queries();
  }
  return out;
}

inline std::vector<EpisodeMetrics> run_point_experiment(const ExperimentConfig& cfg,
                                                        const ActorCritic& policy,
                                                        RunAudit* audit) {
  PointReach env;
  if (cfg.params.count("env.mass") || cfg.params.count("env.friction")) {
    env.set_dynamics({kv_get_double(cfg.params, "env.mass", 1.0),
                      kv_get_double(cfg.params, "env.friction", 0.1)});
  }
  if (policy.actor.input_dim() != env.obs_dim()) {
    throw std::runtime_error("env/policy mismatch: actor input dim " +
                             std::to_string(policy.actor.input_dim()) +
                             " vs point obs dim " + std::to_string(env.obs_dim()));
  }

  ContinuousVictimOracle victim(policy);
  Rng rng(cfg.seed);
  const double eps = kv_get_double(cfg.params, "attack.epsilon", 0.01);
  const double fd_delta = kv_get_double(cfg.params, "attack.fd_delta", 1e-3);
  const std::string& method = cfg.method;
  std::vector<EpisodeMetrics> out;

  if (method == "non-adv" || method == "env-rand-bb" || method == "env-search-bb") {
    if (method != "non-adv") {
      DynAttackSpec spec = dyn_spec_from_params(cfg.params, cfg.seed);
      ContinuousOracleActor actor{&victim};
      DynSearchResult r;
      if (method == "env-rand-bb") {
        r = dyn_random_search(env, actor, spec, rng.split(1u << 20));
      } else {
        DynRlConfig rl;
        rl.seed = kv_get_u64(cfg.params, "attack.seed", cfg.seed);
        r = dyn_rl_search(env, actor, spec, rl);
      }
      env.set_dynamics(r.best_m);
    }
    Vector zero(env.obs_dim(), 0.0);
    out = run_perframe_episodes(victim, env, cfg.episodes, rng,
                                [&](int) { return [&](const Vector&) { return zero; }; });
  } else if (method == "obs-fgsm-wb") {
    const ActorCritic& net = victim.weights();
    out = run_perframe_episodes(victim, env, cfg.episodes, rng, [&](int) {
      return
          [&](const Vector& s) { return fgsm(exact_grad_continuous(net, s), eps).delta; };
    });
  } else if (method == "obs-nn-wb") {
    const ActorCritic& net = victim.weights();
    PerturbNet pn = train_obs_nn_attack(net, env, eps, attack_train_config(cfg.params, cfg.seed));
    out = run_perframe_episodes(victim, env, cfg.episodes, rng, [&](int) {
      return [&, pn](const Vector& s) { return perturbation_of(pn, s); };
    });
  } else if (method == "obs-fd-bb") {
    out = run_perframe_episodes(victim, env, cfg.episodes, rng, [&](int) {
      return [&](const Vector& s) { return fd_attack_step(victim, s, eps, fd_delta).delta; };
    });
  } else if (method == "obs-sfd-bb") {
    SfdConfig sfd_cfg = sfd_from_params(cfg.params);
    auto attack_rng = std::make_shared<Rng>(rng.split(1u << 21));
    out = run_perframe_episodes(victim, env, cfg.episodes, rng, [&](int ep) {
      *attack_rng = Rng(cfg.seed).split((1u << 21) + ep);
      return [&, attack_rng](const Vector& s) {
        return sfd_attack_step(victim, s, eps, sfd_cfg, *attack_rng).delta;
      };
    });
  } else if (method == "act-nn-wb") {
    const ActorCritic& net = victim.weights();
    const double eps_a = kv_get_double(cfg.params, "attack.epsilon_a", 0.5);
    ActPerturbNet pn =
        train_act_attack(net, env, eps_a, attack_train_config(cfg.params, cfg.seed));
    out.reserve(cfg.episodes);
    for (int ep = 0; ep < cfg.episodes; ++ep) {
      EpisodeTimer timer;
      EpisodeMetrics m;
      m.episode = ep;
      PointReach e = env;
      Vector obs = e.reset(rng.split(ep));
      bool done = false;
      while (!done) {
        StepResult res = e.step(perturbed_act(net, pn, obs));
        m.step_rewards.push_back(res.reward);
        m.episode_return += res.reward;
        ++m.length;
        obs = res.observation;
        done = res.done;
      }
      m.walltime_ms = timer.elapsed_ms();
      out.push_back(std::move(m));
    }
  } else {
    throw std::runtime_error("env/policy mismatch: method " + method +
                             " is not supported on the point env");
  }

  if (audit) {
    audit->weight_reads = victim.weight_reads();
    audit->billed_queries = victim.queries();
  }
  return out;
}

inline void enforce_firewall(const std::string& method, const RunAudit& audit) {
  const TaxonomyRecord& rec = find_taxonomy(method);
  if (rec.knowledge != "white" && audit.weight_reads > 0) {
    throw std::logic_error("firewall: method " + method + " read victim weights " +
                           std::to_string(audit.weight_reads) + " times");
  }
  if (rec.knowledge != "black" && audit.billed_queries > 0) {
    throw std::logic_error("firewall: method " + method + " billed " +
                           std::to_string(audit.billed_queries) + " oracle queries");
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// CSV persistence: metrics file plus a companion long-format step file.
// Both start with schema_version and method rows before the header.
// ---------------------------------------------------------------------------
inline void write_metrics_csv(std::ostream& os, const std::string& method,
                              const std::vector<EpisodeMetrics>& metrics) {
  os << "schema_version,1\n";
  os << "method," << method << "\n";
  os << "episode,return,length,queries,walltime_ms\n";
  for (const auto& m : metrics) {
    os << m.episode << ',' << detail::format_real(m.episode_return) << ',' << m.length
       << ',' << m.queries << ',';
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", m.walltime_ms);
    os << buf << '\n';
  }
}

inline void write_steps_csv(std::ostream& os, const std::string& method,
                            const std::vector<EpisodeMetrics>& metrics) {
  os << "schema_version,1\n";
  os << "method," << method << "\n";
  os << "episode,step,reward,cum_reward\n";
  for (const auto& m : metrics) {
    double cum = 0.0;
    for (std::size_t i = 0; i < m.step_rewards.size(); ++i) {
      cum += m.step_rewards[i];
      os << m.episode << ',' << i << ',' << detail::format_real(m.step_rewards[i]) << ','
         << detail::format_real(cum) << '\n';
    }
  }
}

inline std::string steps_path_of(const std::string& path) {
  const std::string suffix = ".csv";
  if (path.size() > suffix.size() &&
      path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0) {
    return path.substr(0, path.size() - suffix.size()) + ".steps.csv";
  }
  return path + ".steps.csv";
}

inline void write_metrics_files(const std::string& path, const std::string& method,
                                const std::vector<EpisodeMetrics>& metrics) {
  {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write metrics file: " + path);
    write_metrics_csv(f, method, metrics);
  }
  const std::string steps = steps_path_of(path);
  std::ofstream f(steps);
  if (!f) throw std::runtime_error("cannot write metrics file: " + steps);
  write_steps_csv(f, method, metrics);
}

struct MetricsFile {
  std::string method;
  std::vector<EpisodeMetrics> episodes;
};

inline MetricsFile read_metrics_csv(std::istream& is, const std::string& label) {
  MetricsFile out;
  std::string line;
  if (!std::getline(is, line) || detail::trim(line) != "schema_version,1") {
    throw std::runtime_error(label + ": missing schema_version,1 header");
  }
  if (!std::getline(is, line) || line.rfind("method,", 0) != 0) {
    throw std::runtime_error(label + ": missing method row");
  }
  out.method = detail::trim(line.substr(7));
  if (!std::getline(is, line) ||
      detail::trim(line) != "episode,return,length,queries,walltime_ms") {
    throw std::runtime_error(label + ": unexpected column header");
  }
  while (std::getline(is, line)) {
    line = detail::trim(line);
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string tok;
    EpisodeMetrics m;
    try {
      std::getline(row, tok, ',');
      m.episode = std::stoi(tok);
      std::getline(row, tok, ',');
      m.episode_return = std::stod(tok);
      std::getline(row, tok, ',');
      m.length = std::stoi(tok);
      std::getline(row, tok, ',');
      m.queries = std::stol(tok);
      std::getline(row, tok, ',');
      m.walltime_ms = std::stod(tok);
    } catch (const std::exception&) {
      throw std::runtime_error(label + ": bad CSV row: " + line);
    }
    out.episodes.push_back(std::move(m));
  }
  if (out.episodes.empty()) throw std::runtime_error(label + ": no episode rows");
  return out;
}

inline MetricsFile read_metrics_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open metrics file: " + path);
  return read_metrics_csv(f, path);
}

// ---------------------------------------------------------------------------
// run_experiment / summarize.
// ---------------------------------------------------------------------------
inline std::vector<EpisodeMetrics> run_experiment(const ExperimentConfig& cfg,
                                                  RunAudit* audit = nullptr) {
  cfg.validate();
  if (cfg.policy_path.empty()) throw std::runtime_error("missing required config key: policy");
  SavedPolicy saved = load_policy_file(cfg.policy_path);

  RunAudit local;
  std::vector<EpisodeMetrics> metrics;
  if (cfg.env_id == "grid") {
    if (saved.kind != "dqn") {
      throw std::runtime_error("env/policy mismatch: grid env needs a dqn policy, got " +
                               saved.kind);
    }
    metrics = detail::run_grid_experiment(cfg, saved.dqn, &local);
  } else {
    if (saved.kind != "ddpg") {
      throw std::runtime_error("env/policy mismatch: point env needs a ddpg policy, got " +
                               saved.kind);
    }
    metrics = detail::run_point_experiment(cfg, saved.ddpg, &local);
  }
  detail::enforce_firewall(cfg.method, local);
  if (audit) *audit = local;

  if (!cfg.out_path.empty()) write_metrics_files(cfg.out_path, cfg.method, metrics);
  return metrics;
}

/// Per-method mean return, standard error, mean queries, and deltas against
/// the first non-adv input. JSON text output.
inline std::string summarize(const std::vector<MetricsFile>& files) {
  if (files.empty()) throw std::runtime_error("summarize: no input files");

  const MetricsFile* baseline = nullptr;
  for (const auto& f : files) {
    if (f.method == "non-adv") {
      baseline = &f;
      break;
    }
  }
  MeanSe base_stats;
  if (baseline) base_stats = mean_se(returns_of(baseline->episodes));

  std::ostringstream os;
  os << "{\"schema_version\":1,\"methods\":[";
  for (std::size_t i = 0; i < files.size(); ++i) {
    const auto& f = files[i];
    MeanSe ret = mean_se(returns_of(f.episodes));
    double queries = 0.0;
    for (const auto& m : f.episodes) queries += static_cast<double>(m.queries);
    queries /= static_cast<double>(f.episodes.size());
    if (i) os << ',';
    os << "{\"method\":\"" << f.method << "\",\"episodes\":" << f.episodes.size()
       << ",\"mean_return\":" << detail::format_real(ret.mean)
       << ",\"se_return\":" << detail::format_real(ret.se)
       << ",\"mean_queries\":" << detail::format_real(queries);
    if (baseline) {
      os << ",\"delta_vs_non_adv\":" << detail::format_real(base_stats.mean - ret.mean)
         << ",\"se_delta\":" << detail::format_real(se_diff(base_stats, ret));
    } else {
      os << ",\"delta_vs_non_adv\":null,\"se_delta\":null";
    }
    os << '}';
  }
  os << "]}";
  return os.str();
}

inline std::string summarize_files(const std::vector<std::string>& paths) {
  std::vector<MetricsFile> files;
  files.reserve(paths.size());
  for (const auto& p : paths) files.push_back(read_metrics_file(p));
  return summarize(files);
}

}  // namespace advrl

#endif  // ADVRL_HARNESS_HPP
