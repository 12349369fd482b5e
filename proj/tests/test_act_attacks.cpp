#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "advrl/act_attacks.hpp"

using namespace advrl;

namespace {

QPolicy random_grid_policy(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.episodes = 0;
  cfg.seed = seed;
  return train_dqn(GridChase(), cfg);
}

ActorCritic random_point_policy(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.episodes = 0;
  cfg.seed = seed;
  return train_ddpg(PointReach(), cfg);
}

}  // namespace

TEST_CASE("discrete perturbed action is the argmax of the summed values") {
  QPolicy victim;
  victim.action_count = 3;
  victim.net = make_mlp({2, 3});  // zero weights: Q = bias
  victim.net.biases[0] = {1.0, 0.0, 0.5};

  ActPerturbNet pnet;
  pnet.epsilon_a = 2.0;
  pnet.net = make_mlp({2, 3}, Activation::ScaledTanh, 2.0);

  // Zero perturbation: argmax Q = action 0.
  REQUIRE(perturbed_act(victim, pnet, {0.3, 0.7}) == 0);

  // Bias the perturbation toward action 2: Q' = 2*tanh(b).
  pnet.net.biases[0] = {0.0, 0.0, 5.0};  // Q' ~ (0, 0, 2) -> sums (1, 0, 2.5)
  REQUIRE(perturbed_act(victim, pnet, {0.3, 0.7}) == 2);
}

TEST_CASE("perturbation values are bounded by epsilon_a") {
  Rng rng(6);
  ActPerturbNet pn = make_act_perturb_net_discrete(192, 4, 0.25, rng);
  REQUIRE(pn.epsilon_a == 0.25);
  GridChase env;
  Vector s = env.reset(Rng(1));
  for (double v : forward(pn.net, s)) REQUIRE(std::abs(v) <= 0.25);

  Rng rng2(6);
  ActPerturbNet pc = make_act_perturb_net_continuous(6, 2, 0.5, rng2);
  REQUIRE(pc.net.input_dim() == 8);
  REQUIRE(pc.net.output_dim() == 1);
}

TEST_CASE("continuous perturbed action stays in bounds") {
  ActorCritic victim = random_point_policy(3);
  Rng rng(4);
  ActPerturbNet pn = make_act_perturb_net_continuous(6, 2, 0.5, rng);
  PointReach env;
  Vector s = env.reset(Rng(2));
  Vector a = perturbed_act(victim, pn, s);
  REQUIRE(a.size() == 2);
  for (double v : a) {
    REQUIRE(v >= -1.0);
    REQUIRE(v <= 1.0);
  }
}

TEST_CASE("default action-perturbation scale is a quarter of the median q spread") {
  QPolicy policy = random_grid_policy(5);
  double eps = default_epsilon_a(policy, GridChase(), Rng(7));
  REQUIRE(eps > 0.0);
  // Random-init nets have small value spreads; the scale stays modest.
  REQUIRE(eps < 10.0);
  double again = default_epsilon_a(policy, GridChase(), Rng(7));
  REQUIRE(eps == again);
}

TEST_CASE("action-space training perturbs values, not the victim") {
  QPolicy policy = random_grid_policy(5);
  Vector before = flatten_params(policy.net);
  TrainConfig cfg;
  cfg.episodes = 3;
  cfg.warmup = 20;
  cfg.seed = 9;
  ActPerturbNet pn = train_act_attack(policy, GridChase(), 0.2, cfg);
  REQUIRE(flatten_params(policy.net) == before);

  ActPerturbNet pn2 = train_act_attack(policy, GridChase(), 0.2, cfg);
  REQUIRE(flatten_params(pn.net) == flatten_params(pn2.net));

  REQUIRE_THROWS_AS(train_act_attack(policy, GridChase(), 0.0, cfg), std::invalid_argument);
}

TEST_CASE("continuous action-space training runs and is deterministic") {
  ActorCritic policy = random_point_policy(5);
  Vector actor_before = flatten_params(policy.actor);
  TrainConfig cfg;
  cfg.episodes = 2;
  cfg.warmup = 50;
  cfg.seed = 9;
  ActPerturbNet pn = train_act_attack(policy, PointReach(), 0.5, cfg);
  REQUIRE(flatten_params(policy.actor) == actor_before);
  ActPerturbNet pn2 = train_act_attack(policy, PointReach(), 0.5, cfg);
  REQUIRE(flatten_params(pn.net) == flatten_params(pn2.net));
}
