#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <string>

#include "advrl/agents.hpp"
#include "advrl/io.hpp"
#include "advrl/numkit.hpp"
#include "advrl/policy_io.hpp"

using namespace advrl;

TEST_CASE("mlp serialization round trips bit-exactly") {
  Rng rng(17);
  Mlp net = make_mlp({5, 16, 3}, Activation::ScaledTanh, 0.01, rng);
  Mlp loaded = load_mlp(save_mlp(net));

  REQUIRE(loaded.layer_sizes == net.layer_sizes);
  REQUIRE(loaded.output_activation == net.output_activation);
  REQUIRE(loaded.output_scale == net.output_scale);
  REQUIRE(flatten_params(loaded) == flatten_params(net));

  Vector x{0.11, 0.22, 0.33, 0.44, 0.55};
  REQUIRE(forward(loaded, x) == forward(net, x));
}

TEST_CASE("mlp loader rejects malformed input") {
  REQUIRE_THROWS(load_mlp(std::string("{\"format_version\":2}")));
  REQUIRE_THROWS(load_mlp(std::string("{}")));
  // Shape mismatch: 2x2 layer with only 3 weights.
  REQUIRE_THROWS(load_mlp(std::string(
      R"({"format_version":1,"layer_sizes":[2,2],"hidden_activation":"relu",
          "output_activation":"linear","output_scale":1,
          "weights":[[1,2,3]],"biases":[[0,0]]})")));
  // Non-finite weight.
  REQUIRE_THROWS(load_mlp(std::string(
      R"({"format_version":1,"layer_sizes":[1,1],"hidden_activation":"relu",
          "output_activation":"linear","output_scale":1,
          "weights":[[1e999]],"biases":[[0]]})")));
}

TEST_CASE("policy files round trip") {
  Rng rng(23);
  const std::string path = "test_policy_roundtrip.json";

  SECTION("dqn") {
    QPolicy p;
    p.action_count = 4;
    p.net = make_mlp({6, 8, 4}, Activation::Linear, 1.0, rng);
    save_policy_file(path, p, "grid");
    SavedPolicy loaded = load_policy_file(path);
    REQUIRE(loaded.kind == "dqn");
    REQUIRE(loaded.env_id == "grid");
    REQUIRE(loaded.dqn.action_count == 4);
    REQUIRE(flatten_params(loaded.dqn.net) == flatten_params(p.net));
  }

  SECTION("ddpg") {
    ActorCritic p;
    p.actor = make_mlp({6, 8, 2}, Activation::Tanh, 1.0, rng);
    p.critic = make_mlp({8, 8, 1}, Activation::Linear, 1.0, rng);
    save_policy_file(path, p, "point");
    SavedPolicy loaded = load_policy_file(path);
    REQUIRE(loaded.kind == "ddpg");
    REQUIRE(loaded.env_id == "point");
    REQUIRE(flatten_params(loaded.ddpg.actor) == flatten_params(p.actor));
    REQUIRE(flatten_params(loaded.ddpg.critic) == flatten_params(p.critic));
    // Targets initialize to the live networks.
    REQUIRE(flatten_params(loaded.ddpg.target_actor) == flatten_params(p.actor));
  }

  std::remove(path.c_str());
}

TEST_CASE("missing policy file raises") {
  REQUIRE_THROWS(load_policy_file("does_not_exist_anywhere.json"));
}
