// advrl: desk-scale adversarial-attack lab for deep RL policies.
//
// Subcommands: train, eval, attack, dyn-attack, sfd-bench, gradcheck, report.
// Exit codes: 0 success, 1 usage error, 2 runtime error.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "advrl/agents.hpp"
#include "advrl/env_attacks.hpp"
#include "advrl/envs.hpp"
#include "advrl/gradest.hpp"
#include "advrl/harness.hpp"
#include "advrl/numkit.hpp"
#include "advrl/policy_io.hpp"

namespace {

using namespace advrl;

constexpr const char* kConfigKeyHelp = R"(Config keys (flat key=value file, '#' comments):
  env                    grid | point                      (default grid)
  policy                 path to a saved policy JSON
  attack.method          non-adv | obs-fgsm-wb | obs-nn-wb | obs-fgsm-bb |
                         obs-imi-bb | obs-fd-bb | obs-sfd-bb | obs-seq-fgsm-wb |
                         obs-seq-fd-bb | obs-seq-sfd-bb | obs-seq-rand-bb |
                         act-nn-wb | env-rand-bb | env-search-bb
  episodes               evaluation episodes               (default 100)
  seed                   base seed; episode e uses split(e)
  out                    metrics CSV path; a companion *.steps.csv is written
  env.slip               grid slip probability (scalar or 4 comma values)
  env.mass, env.friction point-mass dynamics override
  attack.epsilon         L-inf observation budget          (default 0.01)
  attack.fd_delta        finite-difference step            (default 1e-3)
  attack.k               sequential-attack warmup frames   (default 20)
  attack.mode            all | largest20 | smallest20      (default all)
  attack.epsilon_a       action-value perturbation bound
  attack.arch            surrogate arch: same | different  (default same)
  attack.seed            attacker-side training seed
  attack.train.episodes  attacker net training episodes    (default 300)
  attack.train.lr        attacker net learning rate        (default 0.01)
  attack.imi.tau         distillation temperature          (default 1)
  attack.imi.dataset     imitation dataset size            (default 5000)
  attack.imi.epochs      imitation epochs                  (default 20)
  attack.sfd.k           SFD seed dimensions               (default 16)
  attack.sfd.n           SFD expansion iterations          (default 20)
  attack.sfd.theta       SFD gradient threshold            (default 0.01)
  attack.sfd.delta       SFD finite-difference step        (default 1e-3)
  attack.sfd.topology    flat-1d | grid-2d                 (default flat-1d)
  attack.sfd.grid_height, attack.sfd.grid_width
  attack.sfd.relative_theta  true | false
  dyn.target             target native state, comma separated
  dyn.step               target step t                     (default 50)
  dyn.bound              relative dynamics bound eps_M     (default 0.1)
  dyn.budget             victim rollouts                   (default 200)
  dyn.rollouts_per_proposal, dyn.rollout_seed
)";

int cmd_train(const std::string& env_id, int episodes, std::uint64_t seed,
              const std::string& out) {
  TrainConfig cfg;
  cfg.episodes = episodes;
  cfg.seed = seed;
  if (env_id == "grid") {
    QPolicy policy = train_dqn(GridChase(), cfg);
    save_policy_file(out, policy, "grid");
  } else if (env_id == "point") {
    cfg.warmup = 200;
    ActorCritic policy = train_ddpg(PointReach(), cfg);
    save_policy_file(out, policy, "point");
  } else {
    throw std::runtime_error("unknown env: " + env_id);
  }
  std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_eval(const std::string& policy_path, int episodes, std::uint64_t seed,
             const std::string& out) {
  ExperimentConfig cfg;
  SavedPolicy saved = load_policy_file(policy_path);
  cfg.env_id = saved.env_id;
  cfg.policy_path = policy_path;
  cfg.method = "non-adv";
  cfg.episodes = episodes;
  cfg.seed = seed;
  cfg.out_path = out;
  std::vector<EpisodeMetrics> metrics = run_experiment(cfg);
  MeanSe stats = mean_se(returns_of(metrics));
  std::cout << "episodes=" << metrics.size() << " mean_return="
            << detail::format_real(stats.mean) << " se="
            << detail::format_real(stats.se) << "\n";
  return 0;
}

int cmd_attack(const std::string& config_path, const std::vector<std::string>& overrides) {
  KvConfig kv = parse_config_file(config_path);
  for (const std::string& kvpair : overrides) {
    std::size_t eq = kvpair.find('=');
    if (eq == std::string::npos) {
      throw CLI::ValidationError("--set", "expected key=value, got: " + kvpair);
    }
    kv[kvpair.substr(0, eq)] = kvpair.substr(eq + 1);
  }
  ExperimentConfig cfg = ExperimentConfig::from_kv(kv);
  RunAudit audit;
  std::vector<EpisodeMetrics> metrics = run_experiment(cfg, &audit);
  MeanSe stats = mean_se(returns_of(metrics));
  double queries = 0.0;
  for (const auto& m : metrics) queries += static_cast<double>(m.queries);
  queries /= static_cast<double>(metrics.size());
  std::cout << "method=" << cfg.method << " episodes=" << metrics.size()
            << " mean_return=" << detail::format_real(stats.mean)
            << " se=" << detail::format_real(stats.se)
            << " mean_queries=" << detail::format_real(queries)
            << " weight_reads=" << audit.weight_reads << "\n";
  return 0;
}

void write_dyn_result_json(std::ostream& os, const std::string& method,
                           const DynSearchResult& r) {
  os << "{\"schema_version\":1,\"method\":\"" << method << "\",\"best_m\":[";
  for (std::size_t i = 0; i < r.best_m.size(); ++i) {
    if (i) os << ',';
    os << detail::format_real(r.best_m[i]);
  }
  os << "],\"best_distance\":" << detail::format_real(r.best_distance)
     << ",\"proposals_evaluated\":" << r.proposals_evaluated
     << ",\"target_step_truncated\":" << (r.target_step_truncated ? "true" : "false")
     << "}\n";
}

int cmd_dyn_attack(const std::string& policy_path, const std::string& method,
                   const std::string& target, const std::string& target_file, int step,
                   double bound, int budget, std::uint64_t seed, const std::string& out) {
  if (method != "random" && method != "search") {
    throw CLI::ValidationError("--method", "must be random or search");
  }
  std::string target_text = target;
  if (!target_file.empty()) {
    std::ifstream f(target_file);
    if (!f) throw std::runtime_error("cannot open target file: " + target_file);
    std::getline(f, target_text);
  }
  if (target_text.empty()) throw CLI::ValidationError("--target", "target state required");
  KvConfig one{{"dyn.target", target_text}};
  DynAttackSpec spec;
  spec.target_state = kv_get_vector(one, "dyn.target");
  spec.target_step = step;
  spec.epsilon_m = bound;
  spec.budget = budget;
  spec.rollout_seed = seed;

  SavedPolicy saved = load_policy_file(policy_path);
  DynSearchResult r;
  if (saved.kind == "dqn") {
    GridChase env;
    if (method == "random") {
      r = dyn_random_search(env, saved.dqn, spec, Rng(seed));
    } else {
      DynRlConfig rl;
      rl.seed = seed;
      r = dyn_rl_search(env, saved.dqn, spec, rl);
    }
  } else {
    PointReach env;
    if (method == "random") {
      r = dyn_random_search(env, saved.ddpg, spec, Rng(seed));
    } else {
      DynRlConfig rl;
      rl.seed = seed;
      r = dyn_rl_search(env, saved.ddpg, spec, rl);
    }
  }

  std::ostringstream json;
  write_dyn_result_json(json, method, r);
  if (out.empty()) {
    std::cout << json.str();
  } else {
    std::ofstream f(out);
    if (!f) throw std::runtime_error("cannot write: " + out);
    f << json.str();
    const std::string trace = out + ".trace.csv";
    std::ofstream t(trace);
    if (!t) throw std::runtime_error("cannot write: " + trace);
    t << "schema_version,1\nproposal,distance\n";
    for (std::size_t i = 0; i < r.distance_trace.size(); ++i) {
      t << i << ',' << detail::format_real(r.distance_trace[i]) << '\n';
    }
    std::cout << "wrote " << out << " and " << trace << "\n";
  }
  return 0;
}

// Synthetic gradient fields for the estimator benchmark: a smooth bump of
// non-trivial dimensions on a 2-d grid, queried through a quadratic oracle
// whose true gradient at the probe point is known exactly.
int cmd_sfd_bench(int fields, int height, int width, int k, int n, double theta,
                  double delta, std::uint64_t seed, const std::string& out) {
  std::ostringstream os;
  os << "schema_version,1\n";
  os << "field_id,method,budget,hit_rate,l1_error,query_count\n";
  const int d = height * width;
  Rng rng(seed);
  for (int field = 0; field < fields; ++field) {
    Rng field_rng = rng.split(field);
    // True gradient: zero except on a contiguous blob.
    Vector g(d, 0.0);
    const int cr = field_rng.uniform_int(height);
    const int cc = field_rng.uniform_int(width);
    const int radius = 2 + field_rng.uniform_int(4);
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) {
        const int dr = r - cr;
        const int dc = c - cc;
        if (dr * dr + dc * dc <= radius * radius) {
          g[r * width + c] = field_rng.uniform(2.0 * theta, 10.0 * theta);
        }
      }
    }
    LossOracle f([&g](const Vector& x) {
      double v = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) v += g[i] * x[i];
      return v;
    });
    Vector s(d, 0.5);

    SfdConfig cfg;
    cfg.k = k;
    cfg.n = n;
    cfg.theta = theta;
    cfg.delta = delta;
    cfg.topology = Topology::Grid2d;
    cfg.grid_height = height;
    cfg.grid_width = width;
    Rng sfd_rng = field_rng.split(1);
    GradientEstimate est = sfd(f, s, cfg, sfd_rng);

    auto l1_error = [&](const GradientEstimate& e) {
      double err = 0.0;
      for (int i = 0; i < d; ++i) err += std::abs(e.values[i] - g[i]);
      return err;
    };
    os << field << ",sfd," << est.query_count << ','
       << detail::format_real(hit_rate(est, g, theta)) << ','
       << detail::format_real(l1_error(est)) << ',' << est.query_count << '\n';

    // Random sampling at the same query budget.
    GradientEstimate rnd;
    rnd.values.assign(d, 0.0);
    rnd.sampled_mask.assign(d, false);
    Rng rand_rng = field_rng.split(2);
    long budget_dims = est.query_count / 2;
    Vector probe = s;
    long drawn = 0;
    while (drawn < budget_dims) {
      std::size_t i = static_cast<std::size_t>(rand_rng.uniform_int(d));
      if (rnd.sampled_mask[i]) continue;
      rnd.sampled_mask[i] = true;
      rnd.values[i] = detail::estimate_dim(f, probe, i, delta);
      ++drawn;
    }
    rnd.query_count = 2 * drawn;
    os << field << ",random," << rnd.query_count << ','
       << detail::format_real(hit_rate(rnd, g, theta)) << ','
       << detail::format_real(l1_error(rnd)) << ',' << rnd.query_count << '\n';
  }
  if (out.empty()) {
    std::cout << os.str();
  } else {
    std::ofstream f(out);
    if (!f) throw std::runtime_error("cannot write: " + out);
    f << os.str();
    std::cout << "wrote " << out << "\n";
  }
  return 0;
}

// Analytic backward pass against central finite differences on random
// networks; exits nonzero on any relative error above tolerance.
int cmd_gradcheck(int trials, double tolerance, std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    Rng trial = rng.split(t);
    const int in_dim = 2 + trial.uniform_int(6);
    const int hidden = 4 + trial.uniform_int(12);
    const int out_dim = 1 + trial.uniform_int(4);
    const Activation acts[] = {Activation::Linear, Activation::Tanh, Activation::ScaledTanh};
    const Activation act = acts[trial.uniform_int(3)];
    Mlp net = make_mlp({in_dim, hidden, out_dim}, act, act == Activation::ScaledTanh ? 0.7 : 1.0,
                       trial);
    Vector x(in_dim);
    for (double& v : x) v = trial.uniform(-1.0, 1.0);
    Vector dl_dy(out_dim);
    for (double& v : dl_dy) v = trial.uniform(-1.0, 1.0);

    Backprop bp = backward(net, x, dl_dy);
    auto loss = [&](const Mlp& m, const Vector& xv) {
      Vector y = forward(m, xv);
      double l = 0.0;
      for (int i = 0; i < out_dim; ++i) l += dl_dy[i] * y[i];
      return l;
    };

    const double h = 1e-6;
    Vector params = flatten_params(net);
    for (std::size_t i = 0; i < params.size(); ++i) {
      Mlp probe = net;
      Vector p = params;
      p[i] += h;
      set_params(probe, p);
      double plus = loss(probe, x);
      p[i] -= 2.0 * h;
      set_params(probe, p);
      double minus = loss(probe, x);
      double fd = (plus - minus) / (2.0 * h);
      double denom = std::max(1.0, std::abs(fd));
      worst = std::max(worst, std::abs(bp.dparams[i] - fd) / denom);
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      Vector xp = x;
      xp[i] += h;
      double plus = loss(net, xp);
      xp[i] -= 2.0 * h;
      double minus = loss(net, xp);
      double fd = (plus - minus) / (2.0 * h);
      double denom = std::max(1.0, std::abs(fd));
      worst = std::max(worst, std::abs(bp.dx[i] - fd) / denom);
    }
  }
  std::cout << "gradcheck trials=" << trials << " worst_rel_error="
            << detail::format_real(worst) << " tolerance="
            << detail::format_real(tolerance) << "\n";
  if (worst > tolerance) {
    std::cerr << "gradcheck FAILED\n";
    return 2;
  }
  return 0;
}

int cmd_report(const std::vector<std::string>& files, const std::string& out) {
  std::string json = summarize_files(files);
  if (out.empty()) {
    std::cout << json << "\n";
  } else {
    std::ofstream f(out);
    if (!f) throw std::runtime_error("cannot write: " + out);
    f << json << "\n";
    std::cout << "wrote " << out << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"advrl: adversarial attacks on deep RL policies"};
  app.footer(kConfigKeyHelp);
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "Train a victim policy and save it");
  std::string train_env = "grid";
  int train_episodes = 1500;
  std::uint64_t train_seed = 1;
  std::string train_out = "policy.json";
  train->add_option("--env", train_env, "grid | point");
  train->add_option("--episodes", train_episodes, "training episodes");
  train->add_option("--seed", train_seed, "training seed");
  train->add_option("--out", train_out, "output policy path")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a saved policy without attacks");
  std::string eval_policy;
  int eval_episodes = 100;
  std::uint64_t eval_seed = 1;
  std::string eval_out;
  eval->add_option("--policy", eval_policy, "policy path")->required();
  eval->add_option("--episodes", eval_episodes, "evaluation episodes");
  eval->add_option("--seed", eval_seed, "evaluation seed");
  eval->add_option("--out", eval_out, "metrics CSV path");

  // attack
  auto* attack = app.add_subcommand("attack", "Run an attack experiment from a config file");
  std::string attack_config;
  std::vector<std::string> attack_sets;
  attack->add_option("--config", attack_config, "key=value config file")->required();
  attack->add_option("--set", attack_sets, "override config key=value (repeatable)");

  // dyn-attack
  auto* dyn = app.add_subcommand("dyn-attack", "Search for a dynamics perturbation");
  std::string dyn_policy, dyn_method = "random", dyn_target, dyn_target_file, dyn_out;
  int dyn_step = 50, dyn_budget = 200;
  double dyn_bound = 0.1;
  std::uint64_t dyn_seed = 1;
  dyn->add_option("--policy", dyn_policy, "victim policy path")->required();
  dyn->add_option("--method", dyn_method, "random | search");
  dyn->add_option("--target", dyn_target, "target native state, comma separated");
  dyn->add_option("--target-file", dyn_target_file, "file with the target state");
  dyn->add_option("--step", dyn_step, "target step t");
  dyn->add_option("--bound", dyn_bound, "relative dynamics bound");
  dyn->add_option("--budget", dyn_budget, "victim rollout budget");
  dyn->add_option("--seed", dyn_seed, "search seed");
  dyn->add_option("--out", dyn_out, "result JSON path (adds a .trace.csv)");

  // sfd-bench
  auto* bench = app.add_subcommand("sfd-bench", "Estimator benchmark on synthetic fields");
  int bench_fields = 20, bench_h = 32, bench_w = 32, bench_k = 16, bench_n = 20;
  double bench_theta = 0.01, bench_delta = 1e-3;
  std::uint64_t bench_seed = 1;
  std::string bench_out;
  bench->add_option("--fields", bench_fields, "number of synthetic fields");
  bench->add_option("--height", bench_h, "grid height");
  bench->add_option("--width", bench_w, "grid width");
  bench->add_option("--k", bench_k, "seed dimensions");
  bench->add_option("--n", bench_n, "expansion iterations");
  bench->add_option("--theta", bench_theta, "gradient threshold");
  bench->add_option("--delta", bench_delta, "finite-difference step");
  bench->add_option("--seed", bench_seed, "benchmark seed");
  bench->add_option("--out", bench_out, "output CSV path");

  // gradcheck
  auto* grad = app.add_subcommand("gradcheck", "Check analytic gradients against FD");
  int grad_trials = 100;
  double grad_tol = 1e-5;
  std::uint64_t grad_seed = 1;
  grad->add_option("--trials", grad_trials, "random networks to check");
  grad->add_option("--tolerance", grad_tol, "max relative error");
  grad->add_option("--seed", grad_seed, "check seed");

  // report
  auto* report = app.add_subcommand("report", "Summarize metrics CSVs as JSON");
  std::vector<std::string> report_files;
  std::string report_out;
  report->add_option("files", report_files, "metrics CSV files")->required();
  report->add_option("--out", report_out, "output JSON path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*train) return cmd_train(train_env, train_episodes, train_seed, train_out);
    if (*eval) return cmd_eval(eval_policy, eval_episodes, eval_seed, eval_out);
    if (*attack) return cmd_attack(attack_config, attack_sets);
    if (*dyn) {
      return cmd_dyn_attack(dyn_policy, dyn_method, dyn_target, dyn_target_file, dyn_step,
                            dyn_bound, dyn_budget, dyn_seed, dyn_out);
    }
    if (*bench) {
      return cmd_sfd_bench(bench_fields, bench_h, bench_w, bench_k, bench_n, bench_theta,
                           bench_delta, bench_seed, bench_out);
    }
    if (*grad) return cmd_gradcheck(grad_trials, grad_tol, grad_seed);
    if (*report) return cmd_report(report_files, report_out);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
