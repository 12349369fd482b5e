#ifndef ADVRL_VICTIM_HPP
#define ADVRL_VICTIM_HPP

#include "advrl/agents.hpp"
#include "advrl/numkit.hpp"

namespace advrl {

// Black-box firewall around a victim policy. Attack code only ever holds
// this wrapper: query_* calls are billed to the attacker's query budget,
// weights() accesses are recorded so black-box runs can prove they made
// none. victim_act is the environment loop acting, not an attacker query.

class VictimOracle {
 public:
  explicit VictimOracle(const QPolicy& policy) : policy_(&policy) {}

  int victim_act(const Vector& obs) const { return act(*policy_, obs); }

  /// Attacker-billed Q-value query.
  Vector query_q(const Vector& obs) {
    ++queries_;
    return forward(policy_->net, obs);
  }

  /// White-box access, recorded.
  const QPolicy& weights() {
    ++weight_reads_;
    return *policy_;
  }

  int action_count() const { return policy_->action_count; }
  long queries() const { return queries_; }
  long weight_reads() const { return weight_reads_; }
  void reset_counters() { queries_ = weight_reads_ = 0; }

 private:
  const QPolicy* policy_;
  long queries_ = 0;
  long weight_reads_ = 0;
};

class ContinuousVictimOracle {
 public:
  explicit ContinuousVictimOracle(const ActorCritic& policy) : policy_(&policy) {}

  Vector victim_act(const Vector& obs) const { return act(*policy_, obs); }

  /// Attacker-billed value query: Q(s, mu(s)).
  double query_value(const Vector& obs) {
    ++queries_;
    Vector a = forward(policy_->actor, obs);
    return forward(policy_->critic, concat(obs, a))[0];
  }

  const ActorCritic& weights() {
    ++weight_reads_;
    return *policy_;
  }

  long queries() const { return queries_; }
  long weight_reads() const { return weight_reads_; }
  void reset_counters() { queries_ = weight_reads_ = 0; }

 private:
  const ActorCritic* policy_;
  long queries_ = 0;
  long weight_reads_ = 0;
};

}  // namespace advrl

#endif  // ADVRL_VICTIM_HPP
