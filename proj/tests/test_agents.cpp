#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "advrl/agents.hpp"
#include "advrl/envs.hpp"

using namespace advrl;

TEST_CASE("replay buffer ring semantics") {
  ReplayBuffer<int> buf(2);
  REQUIRE(buf.size() == 0);
  buf.push(1);
  buf.push(2);
  buf.push(3);  // overwrites the oldest
  REQUIRE(buf.size() == 2);
  Rng rng(1);
  bool saw1 = false;
  for (int i = 0; i < 100; ++i) {
    int v = buf.sample(rng);
    REQUIRE((v == 2 || v == 3));
    saw1 = saw1 || v == 1;
  }
  REQUIRE_FALSE(saw1);
  REQUIRE_THROWS_AS(ReplayBuffer<int>(0), std::invalid_argument);
}

TEST_CASE("greedy action ties break to the lowest index") {
  REQUIRE(argmax_lowest({1.0, 1.0, 0.5}) == 0);
  REQUIRE(argmax_lowest({0.0, 2.0, 2.0}) == 1);
  REQUIRE(argmax_lowest({-1.0}) == 0);
}

TEST_CASE("bellman target arithmetic") {
  REQUIRE(bellman_target(0.5, 0.9, {1.0, 3.0, 2.0}, false) ==
          Catch::Approx(0.5 + 0.9 * 3.0).epsilon(1e-15));
  REQUIRE(bellman_target(0.5, 0.9, {1.0, 3.0}, true) == 0.5);
  REQUIRE_THROWS_AS(bellman_target(0.0, 1.5, {1.0}, false), std::invalid_argument);
  REQUIRE_THROWS_AS(bellman_target(0.0, 0.9, {}, false), std::invalid_argument);
}

TEST_CASE("soft update is a contraction toward the live network") {
  Rng rng(2);
  Mlp live = make_mlp({3, 4, 2}, Activation::Linear, 1.0, rng);
  Mlp target = make_mlp({3, 4, 2}, Activation::Linear, 1.0, rng);

  Vector before_t = flatten_params(target);
  Vector pl = flatten_params(live);
  soft_update(target, live, 0.1);
  Vector after_t = flatten_params(target);
  for (std::size_t i = 0; i < pl.size(); ++i) {
    REQUIRE(after_t[i] ==
            Catch::Approx(before_t[i] + 0.1 * (pl[i] - before_t[i])).margin(1e-15));
  }

  // rho = 1 copies exactly.
  soft_update(target, live, 1.0);
  REQUIRE(flatten_params(target) == pl);
}

TEST_CASE("train config validation and layer sizing") {
  TrainConfig cfg;
  REQUIRE_NOTHROW(cfg.validate());
  REQUIRE(cfg.layer_sizes(192, 4) == std::vector<int>{192, 64, 64, 4});
  cfg.hidden = {32};
  REQUIRE(cfg.layer_sizes(6, 2) == std::vector<int>{6, 32, 2});
  cfg.gamma = 0.0;
  REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("zero-episode training returns the seeded initial network") {
  TrainConfig cfg;
  cfg.episodes = 0;
  cfg.seed = 7;
  QPolicy a = train_dqn(GridChase(), cfg);
  QPolicy b = train_dqn(GridChase(), cfg);
  REQUIRE(flatten_params(a.net) == flatten_params(b.net));
  REQUIRE(a.action_count == 4);
  REQUIRE(a.net.input_dim() == 192);
  REQUIRE(a.net.output_dim() == 4);

  cfg.seed = 8;
  QPolicy c = train_dqn(GridChase(), cfg);
  REQUIRE(flatten_params(a.net) != flatten_params(c.net));
}

TEST_CASE("short dqn training is deterministic") {
  TrainConfig cfg;
  cfg.episodes = 20;
  cfg.warmup = 50;
  cfg.seed = 3;
  QPolicy a = train_dqn(GridChase(), cfg);
  QPolicy b = train_dqn(GridChase(), cfg);
  REQUIRE(flatten_params(a.net) == flatten_params(b.net));
}

TEST_CASE("short ddpg training is deterministic and bounded") {
  TrainConfig cfg;
  cfg.episodes = 3;
  cfg.warmup = 50;
  cfg.seed = 3;
  ActorCritic a = train_ddpg(PointReach(), cfg);
  ActorCritic b = train_ddpg(PointReach(), cfg);
  REQUIRE(flatten_params(a.actor) == flatten_params(b.actor));
  REQUIRE(flatten_params(a.critic) == flatten_params(b.critic));

  PointReach env;
  Vector obs = env.reset(Rng(1));
  Vector act_out = act(a, obs);
  REQUIRE(act_out.size() == 2);
  for (double v : act_out) {
    REQUIRE(v > -1.0);
    REQUIRE(v < 1.0);
  }
}

TEST_CASE("evaluation is deterministic and returns sum per-step rewards") {
  TrainConfig cfg;
  cfg.episodes = 0;
  cfg.seed = 11;
  QPolicy policy = train_dqn(GridChase(), cfg);

  auto a = evaluate(policy, GridChase(), 5, Rng(9));
  auto b = evaluate(policy, GridChase(), 5, Rng(9));
  REQUIRE(a.size() == 5);
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].episode_return == b[i].episode_return);
    REQUIRE(a[i].length == b[i].length);
    double sum = 0.0;
    for (double r : a[i].step_rewards) sum += r;
    REQUIRE(a[i].episode_return == Catch::Approx(sum).margin(1e-12));
    REQUIRE(static_cast<int>(a[i].step_rewards.size()) == a[i].length);
    REQUIRE(a[i].queries == 0);
  }
}

TEST_CASE("mean and standard error helpers") {
  MeanSe s = mean_se({1.0, 1.0, 1.0});
  REQUIRE(s.mean == 1.0);
  REQUIRE(s.se == 0.0);

  // mean 2, sample sd 1, se 1/sqrt(3).
  MeanSe t = mean_se({1.0, 2.0, 3.0});
  REQUIRE(t.mean == Catch::Approx(2.0));
  REQUIRE(t.se == Catch::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-12));
  REQUIRE(se_diff(s, t) == Catch::Approx(t.se).epsilon(1e-12));
  REQUIRE_THROWS_AS(mean_se({}), std::invalid_argument);
}
