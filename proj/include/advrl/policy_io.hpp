#ifndef ADVRL_POLICY_IO_HPP
#define ADVRL_POLICY_IO_HPP

#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "advrl/agents.hpp"
#include "advrl/io.hpp"

namespace advrl {

struct SavedPolicy {
  std::string kind;    // "dqn" | "ddpg"
  std::string env_id;  // "grid" | "point"
  QPolicy dqn;
  ActorCritic ddpg;
};

inline void save_policy(std::ostream& os, const QPolicy& policy, const std::string& env_id) {
  os << "{\"kind\":\"dqn\",\"env_id\":\"" << env_id
     << "\",\"action_count\":" << policy.action_count << ",\"net\":";
  save_mlp(os, policy.net);
  os << "}";
}

inline void save_policy(std::ostream& os, const ActorCritic& policy, const std::string& env_id) {
  os << "{\"kind\":\"ddpg\",\"env_id\":\"" << env_id << "\",\"actor\":";
  save_mlp(os, policy.actor);
  os << ",\"critic\":";
  save_mlp(os, policy.critic);
  os << "}";
}

template <typename Policy>
void save_policy_file(const std::string& path, const Policy& policy, const std::string& env_id) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write policy file: " + path);
  save_policy(f, policy, env_id);
}

inline SavedPolicy load_policy_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open policy file: " + path);
  nlohmann::json j = nlohmann::json::parse(f);
  SavedPolicy out;
  out.kind = j.at("kind").get<std::string>();
  out.env_id = j.at("env_id").get<std::string>();
  if (out.kind == "dqn") {
    out.dqn.action_count = j.at("action_count").get<int>();
    out.dqn.net = mlp_from_json(j.at("net"));
  } else if (out.kind == "ddpg") {
    out.ddpg.actor = mlp_from_json(j.at("actor"));
    out.ddpg.critic = mlp_from_json(j.at("critic"));
    out.ddpg.target_actor = out.ddpg.actor;
    out.ddpg.target_critic = out.ddpg.critic;
  } else {
    throw std::runtime_error("unknown policy kind: " + out.kind);
  }
  return out;
}

}  // namespace advrl

#endif  // ADVRL_POLICY_IO_HPP
