#include "oracles.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace opocmdp {

namespace {

CmdpModel shell_model(const LayeredStateSpace& space, int num_actions, int num_contexts) {
  CmdpModel m;
  m.space = space;
  m.num_actions = num_actions;
  m.context_dist.weights.assign(num_contexts, 1.0 / num_contexts);
  return m;
}

}  // namespace

ValidationResult validate_loss_class(const LossClass& cls, const LayeredStateSpace& space,
                                     int num_actions, int num_contexts) {
  ValidationResult res;
  if (cls.candidates.empty()) {
    res.violations.push_back("loss class is empty");
    return res;
  }
  if (cls.truth_index < 0 || cls.truth_index >= cls.size())
    res.violations.push_back("loss class truth_index out of range");
  // Reuse the model checks: pair each candidate with valid placeholder
  // dynamics so only the loss rules can fire.
  CmdpModel shell = shell_model(space, num_actions, num_contexts);
  Dynamics unif;
  unif.p.resize(space.num_states);
  for (int s = 0; s < space.num_states; ++s) {
    const int h = space.layer_of[s];
    if (h == space.horizon()) continue;
    const auto& next = space.layers[h + 1];
    std::vector<double> row(space.num_states, 0.0);
    for (int sp : next) row[sp] = 1.0 / next.size();
    unif.p[s].assign(num_actions, row);
  }
  shell.dynamics.assign(num_contexts, unif);
  for (int i = 0; i < cls.size(); ++i) {
    if (static_cast<int>(cls.candidates[i].size()) != num_contexts) {
      res.violations.push_back("loss candidate " + std::to_string(i) +
                               ": context count mismatch");
      continue;
    }
    shell.loss = cls.candidates[i];
    for (const auto& v : validate_model(shell).violations)
      res.violations.push_back("loss candidate " + std::to_string(i) + ": " + v);
  }
  return res;
}

ValidationResult validate_dynamics_class(const DynamicsClass& cls, const LayeredStateSpace& space,
                                         int num_actions, int num_contexts) {
  ValidationResult res;
  if (cls.candidates.empty()) {
    res.violations.push_back("dynamics class is empty");
    return res;
  }
  if (cls.truth_index < 0 || cls.truth_index >= cls.size())
    res.violations.push_back("dynamics class truth_index out of range");
  CmdpModel shell = shell_model(space, num_actions, num_contexts);
  Loss zero;
  zero.l.assign(space.num_states, std::vector<double>(num_actions, 0.0));
  shell.loss.assign(num_contexts, zero);
  for (int i = 0; i < cls.size(); ++i) {
    if (static_cast<int>(cls.candidates[i].size()) != num_contexts) {
      res.violations.push_back("dynamics candidate " + std::to_string(i) +
                               ": context count mismatch");
      continue;
    }
    shell.dynamics = cls.candidates[i];
    for (const auto& v : validate_model(shell).violations)
      res.violations.push_back("dynamics candidate " + std::to_string(i) + ": " + v);
  }
  return res;
}

LeastSquaresScorer::LeastSquaresScorer(const LossClass& cls)
    : cls_(&cls), totals_(cls.candidates.size(), 0.0) {
  if (cls.candidates.empty()) throw std::invalid_argument("least-squares fit over empty class");
}

void LeastSquaresScorer::add(const Trajectory& traj) {
  for (std::size_t i = 0; i < totals_.size(); ++i) {
    const Loss& cand = cls_->candidates[i][traj.context];
    double acc = 0.0;
    for (const auto& step : traj.steps) {
      const double d = cand.l[step.state][step.action] - step.loss;
      acc += d * d;
    }
    totals_[i] += acc;
  }
}

int LeastSquaresScorer::best_index() const {
  int best = 0;
  for (std::size_t i = 1; i < totals_.size(); ++i)
    if (totals_[i] < totals_[best]) best = static_cast<int>(i);
  return best;
}

LogLossScorer::LogLossScorer(const DynamicsClass& cls)
    : cls_(&cls), totals_(cls.candidates.size(), 0.0) {
  if (cls.candidates.empty()) throw std::invalid_argument("log-loss fit over empty class");
}

void LogLossScorer::add(const Trajectory& traj) {
  for (std::size_t i = 0; i < totals_.size(); ++i) {
    const Dynamics& cand = cls_->candidates[i][traj.context];
    double acc = 0.0;
    for (std::size_t h = 0; h < traj.steps.size(); ++h) {
      const auto& step = traj.steps[h];
      const int next =
          (h + 1 < traj.steps.size()) ? traj.steps[h + 1].state : traj.terminal_state;
      // log(0) = -inf: a candidate ruled out by an observed transition stays
      // ruled out, no special casing needed.
      acc += std::log(cand.p[step.state][step.action][next]);
    }
    totals_[i] += acc;
  }
}

int LogLossScorer::best_index() const {
  int best = 0;
  for (std::size_t i = 1; i < totals_.size(); ++i)
    if (totals_[i] > totals_[best]) best = static_cast<int>(i);
  return best;
}

int least_squares_fit(const TrajectoryDataset& dataset, const LossClass& cls) {
  LeastSquaresScorer scorer(cls);
  for (const auto& traj : dataset.trajectories) scorer.add(traj);
  return scorer.best_index();
}

int log_loss_fit(const TrajectoryDataset& dataset, const DynamicsClass& cls) {
  LogLossScorer scorer(cls);
  for (const auto& traj : dataset.trajectories) scorer.add(traj);
  return scorer.best_index();
}

namespace {

// Shared accumulation: weighted sum over contexts and past policies of the
// occupancy-weighted per-(s,a) error.
template <typename ErrFn>
double population_diagnostic(const CmdpModel& model,
                             const std::vector<std::vector<Policy>>& past_policies, ErrFn err) {
  if (static_cast<int>(past_policies.size()) != model.num_contexts())
    throw std::invalid_argument("diagnostic: policy list does not match context count");
  const auto& space = model.space;
  const int H = space.horizon();
  double total = 0.0;
  for (int c = 0; c < model.num_contexts(); ++c) {
    const double w = model.context_dist.weights[c];
    double ctx_acc = 0.0;
    for (const Policy& pi : past_policies[c]) {
      const OccupancyMeasure occ = occupancy_measures(pi, model.dynamics[c], space);
      for (int h = 0; h < H; ++h)
        for (int s : space.layers[h])
          for (std::size_t a = 0; a < occ.q[s].size(); ++a)
            if (occ.q[s][a] > 0.0) ctx_acc += occ.q[s][a] * err(c, s, static_cast<int>(a));
    }
    total += w * ctx_acc;
  }
  return total;
}

}  // namespace

double squared_error_diagnostic(const LossTable& f_hat, const CmdpModel& model,
                                const std::vector<std::vector<Policy>>& past_policies) {
  if (static_cast<int>(f_hat.size()) != model.num_contexts())
    throw std::invalid_argument("diagnostic: loss table context count mismatch");
  return population_diagnostic(model, past_policies, [&](int c, int s, int a) {
    const double d = f_hat[c].l[s][a] - model.loss[c].l[s][a];
    return d * d;
  });
}

double hellinger_diagnostic(const DynamicsTable& p_hat, const CmdpModel& model,
                            const std::vector<std::vector<Policy>>& past_policies) {
  if (static_cast<int>(p_hat.size()) != model.num_contexts())
    throw std::invalid_argument("diagnostic: dynamics table context count mismatch");
  return population_diagnostic(model, past_policies, [&](int c, int s, int a) {
    return hellinger_sq(p_hat[c].p[s][a], model.dynamics[c].p[s][a]);
  });
}

}  // namespace opocmdp
