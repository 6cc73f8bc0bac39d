#pragma once

// Optimistic policy optimization over a finite model class: exploration
// bonuses driven by accumulated occupancy, truncated optimistic backups,
// exponential-weights policy improvement, and a per-context cache that
// replays the whole policy sequence deterministically from the estimator
// history.

#include <unordered_map>
#include <vector>

#include "cmdp.hpp"
#include "oracles.hpp"

namespace opocmdp {

struct AlgoParams {
  double eta = 0.0;        // exponential-weights step size
  double beta_loss = 0.0;  // bonus scale for the loss estimator
  double beta_dyn = 0.0;   // bonus scale for the dynamics estimator
  double bonus_scale = 1.0;
  double delta = 0.1;
};

// Theoretical schedule for horizon H, T episodes, state/action counts and
// class sizes. Natural logarithms throughout. bonus_scale is left at 1.
AlgoParams default_parameters(int episodes, int horizon, int num_states, int num_actions,
                              int loss_class_size, int dyn_class_size, double delta);

// min{1, (beta/2) / (1 + cum_occupancy)}.
double exploration_bonus(double beta, double cum_occupancy);

// b_loss + 2 H b_dyn: the loss bonus plus the dynamics bonus propagated
// through the remaining value range.
double combined_bonus(double bonus_loss, double bonus_dyn, int horizon);

struct OptimisticValues {
  std::vector<double> V;               // per state, terminal 0
  std::vector<std::vector<double>> Q;  // per state/action
};

// Backward recursion with the bonus-lowered loss, truncated at zero:
//   Q(s,a) = max{0, loss(s,a) - bonus(s,a) + E_{p_hat} V(s')},  V = <pi, Q>.
// bonus is indexed like a loss table (terminal rows ignored).
OptimisticValues optimistic_backup(const Loss& loss_hat, const Dynamics& dyn_hat,
                                   const std::vector<std::vector<double>>& bonus,
                                   const Policy& policy, const LayeredStateSpace& space);

// Per-row exponential weights: pi'(a|s) proportional to pi(a|s) exp(-eta Q(s,a)).
// Each row is shifted by its minimum before exponentiation.
Policy policy_improve(const Policy& policy, const std::vector<std::vector<double>>& q_values,
                      double eta, const LayeredStateSpace& space);

// Estimator indices per round: entry k (1-based) is the pair fit on the
// first k-1 trajectories, so entry 1 is the empty-dataset fit.
struct EstimatorHistory {
  std::vector<int> loss_idx;
  std::vector<int> dyn_idx;

  int rounds() const { return static_cast<int>(loss_idx.size()); }
  void push(int loss_index, int dyn_index) {
    loss_idx.push_back(loss_index);
    dyn_idx.push_back(dyn_index);
  }
};

// Rebuilds pi^1..pi^t for each context from the estimator history alone.
// Stage k turns pi^k into pi^{k+1} using estimator entry k and the bonus
// accumulated from pi^1..pi^{k-1} under the entry-k dynamics candidate.
//
// Cached per context: the policy prefix, the per-stage optimistic values,
// and per dynamics-candidate the cumulative occupancy of the prefix, each
// extended monotonically. Calls must present histories that agree on the
// consumed prefix; a mismatch throws rather than silently recomputing.
class PolicySequenceCache {
 public:
  PolicySequenceCache(const CmdpModel& model, const LossClass& loss_class,
                      const DynamicsClass& dyn_class, const AlgoParams& params);

  // pi^stage for the context (stage >= 1; stage 1 is uniform).
  const Policy& policy(int context, int stage, const EstimatorHistory& history);

  // Combined bonus table for the given stage: entry-`stage` betas and the
  // occupancy of pi^1..pi^{stage-1} under the entry-`stage` dynamics
  // candidate. Indexed like a loss table.
  std::vector<std::vector<double>> bonus_table(int context, int stage,
                                               const EstimatorHistory& history);

  // sum_{i<=upto} q(.|pi^i_context, candidate) for any dynamics candidate.
  const std::vector<std::vector<double>>& cumulative_occupancy(int context, int candidate,
                                                               int upto,
                                                               const EstimatorHistory& history);

  const std::vector<Policy>& policies(int context) const;
  // Optimistic values recorded per completed stage (stage k at index k-1).
  const std::vector<OptimisticValues>& stage_values(int context) const;

 private:
  struct CumOccupancy {
    std::vector<std::vector<double>> sum;
    int upto = 0;
  };
  struct PerContext {
    std::vector<Policy> policies;
    std::vector<OptimisticValues> values;
    std::unordered_map<int, CumOccupancy> cum;
    std::vector<int> consumed_loss;  // estimator indices already baked into policies
    std::vector<int> consumed_dyn;
  };

  void check_history(const PerContext& pc, const EstimatorHistory& history) const;
  PerContext& context_state(int context);

  const CmdpModel* model_;
  const LossClass* loss_class_;
  const DynamicsClass* dyn_class_;
  AlgoParams params_;
  std::vector<PerContext> contexts_;
};

// The replay operation as a free function; forwards to the cache.
const Policy& replay_policy_sequence(int context, int stage, const EstimatorHistory& history,
                                     PolicySequenceCache& cache);

}  // namespace opocmdp
