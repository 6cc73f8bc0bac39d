#pragma once

// Offline regression over finite realizable classes: least-squares selection
// of a loss table, log-likelihood selection of a dynamics table, and the
// exact population diagnostics that track how fast the selected candidates
// converge to the truth.

#include <vector>

#include "cmdp.hpp"

namespace opocmdp {

// A finite class of context-indexed loss tables. candidates[truth_index]
// must equal the data-generating table (realizability).
struct LossClass {
  std::vector<LossTable> candidates;
  int truth_index = 0;

  int size() const { return static_cast<int>(candidates.size()); }
};

struct DynamicsClass {
  std::vector<DynamicsTable> candidates;
  int truth_index = 0;

  int size() const { return static_cast<int>(candidates.size()); }
};

struct TrajectoryDataset {
  std::vector<Trajectory> trajectories;

  int size() const { return static_cast<int>(trajectories.size()); }
};

// Checks every candidate against the state space: same structural rules as
// validate_model, plus truth_index in range. Violations name the candidate.
ValidationResult validate_loss_class(const LossClass& cls, const LayeredStateSpace& space,
                                     int num_actions, int num_contexts);
ValidationResult validate_dynamics_class(const DynamicsClass& cls, const LayeredStateSpace& space,
                                         int num_actions, int num_contexts);

// The fit objectives are sums of per-(trajectory, step) terms, so candidates
// carry running totals and each new trajectory costs O(|class| * H). The
// batch fits below are thin wrappers that replay a whole dataset.
class LeastSquaresScorer {
 public:
  explicit LeastSquaresScorer(const LossClass& cls);

  void add(const Trajectory& traj);
  // argmin of the summed squared errors; ties and the empty dataset resolve
  // to the smallest index.
  int best_index() const;
  const std::vector<double>& totals() const { return totals_; }

 private:
  const LossClass* cls_;
  std::vector<double> totals_;
};

class LogLossScorer {
 public:
  explicit LogLossScorer(const DynamicsClass& cls);

  void add(const Trajectory& traj);
  // argmax of the summed log-likelihoods; a candidate that assigns zero
  // probability to an observed transition drops to -inf and cannot win
  // against any candidate with positive likelihood.
  int best_index() const;
  const std::vector<double>& totals() const { return totals_; }

 private:
  const DynamicsClass* cls_;
  std::vector<double> totals_;
};

int least_squares_fit(const TrajectoryDataset& dataset, const LossClass& cls);
int log_loss_fit(const TrajectoryDataset& dataset, const DynamicsClass& cls);

// Population squared-error of f_hat against f_star accumulated over the past
// policies: sum over contexts (weighted) of sum over policies i of
// E_{(s,a) ~ (pi^i_c, true dynamics)} (f_hat - f_star)^2. Exact via occupancy
// measures; past_policies[c] lists pi^1..pi^{t-1} for context c.
double squared_error_diagnostic(const LossTable& f_hat, const CmdpModel& model,
                                const std::vector<std::vector<Policy>>& past_policies);

// Same accumulation with the per-(s,a) squared Hellinger distance between
// estimated and true transition rows.
double hellinger_diagnostic(const DynamicsTable& p_hat, const CmdpModel& model,
                            const std::vector<std::vector<Policy>>& past_policies);

}  // namespace opocmdp
