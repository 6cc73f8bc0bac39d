#include "opo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace opocmdp {

AlgoParams default_parameters(int episodes, int horizon, int num_states, int num_actions,
                              int loss_class_size, int dyn_class_size, double delta) {
  if (episodes < 1 || horizon < 1 || num_states < 2 || num_actions < 1)
    throw std::invalid_argument("default_parameters: bad problem dimensions");
  if (loss_class_size < 1 || dyn_class_size < 1)
    throw std::invalid_argument("default_parameters: class sizes must be positive");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("default_parameters: delta must lie in (0,1)");
  const double T = episodes;
  const double H = horizon;
  const double S = num_states;
  const double A = num_actions;
  const double F = loss_class_size;
  const double P = dyn_class_size;

  AlgoParams params;
  params.delta = delta;
  params.eta = std::sqrt(2.0 * std::log(A) / (H * H * T));
  const double conf = std::log(128.0 * std::pow(T, 4.0) * H * F * P / (delta * delta));
  const double logT1 = std::log(T + 1.0);
  params.beta_loss = std::sqrt(5184.0 * T * std::pow(H, 7.0) * conf / (7.0 * S * A * logT1));
  params.beta_dyn = std::sqrt(5184.0 * T * std::pow(H, 6.0) * conf / (14.0 * S * A * logT1));
  params.bonus_scale = 1.0;
  return params;
}

double exploration_bonus(double beta, double cum_occupancy) {
  if (beta < 0.0) throw std::invalid_argument("exploration_bonus: beta must be nonnegative");
  if (cum_occupancy < 0.0)
    throw std::invalid_argument("exploration_bonus: cumulative occupancy must be nonnegative");
  return std::min(1.0, 0.5 * beta / (1.0 + cum_occupancy));
}

double combined_bonus(double bonus_loss, double bonus_dyn, int horizon) {
  return bonus_loss + 2.0 * horizon * bonus_dyn;
}

OptimisticValues optimistic_backup(const Loss& loss_hat, const Dynamics& dyn_hat,
                                   const std::vector<std::vector<double>>& bonus,
                                   const Policy& policy, const LayeredStateSpace& space) {
  if (static_cast<int>(bonus.size()) != space.num_states)
    throw std::invalid_argument("optimistic_backup: bonus table has wrong number of rows");
  const int H = space.horizon();
  OptimisticValues vals;
  vals.V.assign(space.num_states, 0.0);
  vals.Q.resize(space.num_states);
  for (int s = 0; s < space.num_states; ++s)
    vals.Q[s].assign(space.layer_of[s] < H ? policy.probs[s].size() : 0, 0.0);
  for (int h = H - 1; h >= 0; --h) {
    for (int s : space.layers[h]) {
      const auto& row = policy.probs[s];
      double v = 0.0;
      for (std::size_t a = 0; a < row.size(); ++a) {
        double next = 0.0;
        for (int sp : space.layers[h + 1]) next += dyn_hat.p[s][a][sp] * vals.V[sp];
        const double q = loss_hat.l[s][a] - bonus[s][a] + next;
        vals.Q[s][a] = q > 0.0 ? q : 0.0;
        v += row[a] * vals.Q[s][a];
      }
      vals.V[s] = v;
    }
  }
  return vals;
}

Policy policy_improve(const Policy& policy, const std::vector<std::vector<double>>& q_values,
                      double eta, const LayeredStateSpace& space) {
  if (eta < 0.0) throw std::invalid_argument("policy_improve: eta must be nonnegative");
  if (static_cast<int>(policy.probs.size()) != space.num_states ||
      static_cast<int>(q_values.size()) != space.num_states)
    throw std::invalid_argument("policy_improve: shape mismatch");
  const int H = space.horizon();
  Policy next = policy;
  for (int h = 0; h < H; ++h) {
    for (int s : space.layers[h]) {
      const auto& row = policy.probs[s];
      const auto& q = q_values[s];
      if (q.size() != row.size())
        throw std::invalid_argument("policy_improve: action count mismatch");
      // Shift by the row minimum so the exponent is bounded in [-eta*range, 0]
      // and rows with zero-probability actions stay finite.
      double shift = q.empty() ? 0.0 : q[0];
      for (double qv : q) shift = std::min(shift, qv);
      double total = 0.0;
      for (std::size_t a = 0; a < row.size(); ++a) {
        const double w = row[a] * std::exp(-eta * (q[a] - shift));
        next.probs[s][a] = w;
        total += w;
      }
      if (total <= 0.0) throw std::runtime_error("policy_improve: row normalizer vanished");
      for (std::size_t a = 0; a < row.size(); ++a) next.probs[s][a] /= total;
    }
  }
  return next;
}

PolicySequenceCache::PolicySequenceCache(const CmdpModel& model, const LossClass& loss_class,
                                         const DynamicsClass& dyn_class, const AlgoParams& params)
    : model_(&model), loss_class_(&loss_class), dyn_class_(&dyn_class), params_(params) {
  if (params.bonus_scale < 0.0)
    throw std::invalid_argument("policy cache: bonus_scale must be nonnegative");
  contexts_.resize(model.num_contexts());
  for (auto& pc : contexts_)
    pc.policies.push_back(Policy::uniform(model.space, model.num_actions));
}

void PolicySequenceCache::check_history(const PerContext& pc,
                                        const EstimatorHistory& history) const {
  const std::size_t n = pc.consumed_loss.size();
  if (history.loss_idx.size() < n || history.dyn_idx.size() < n ||
      !std::equal(pc.consumed_loss.begin(), pc.consumed_loss.end(), history.loss_idx.begin()) ||
      !std::equal(pc.consumed_dyn.begin(), pc.consumed_dyn.end(), history.dyn_idx.begin()))
    throw std::runtime_error(
        "policy cache: estimator history disagrees with the prefix already replayed");
}

PolicySequenceCache::PerContext& PolicySequenceCache::context_state(int context) {
  if (context < 0 || context >= static_cast<int>(contexts_.size()))
    throw std::invalid_argument("policy cache: context index out of range");
  return contexts_[context];
}

const Policy& PolicySequenceCache::policy(int context, int stage,
                                          const EstimatorHistory& history) {
  if (stage < 1) throw std::invalid_argument("policy cache: stage must be >= 1");
  PerContext& pc = context_state(context);
  check_history(pc, history);
  while (static_cast<int>(pc.policies.size()) < stage) {
    const int k = static_cast<int>(pc.policies.size());  // completing stage k
    if (history.rounds() < k)
      throw std::invalid_argument("policy cache: estimator history too short for stage");
    const int jl = history.loss_idx[k - 1];
    const int jd = history.dyn_idx[k - 1];
    if (jl < 0 || jl >= loss_class_->size() || jd < 0 || jd >= dyn_class_->size())
      throw std::invalid_argument("policy cache: estimator index out of range");
    const auto bonus = bonus_table(context, k, history);
    OptimisticValues vals =
        optimistic_backup(loss_class_->candidates[jl][context],
                          dyn_class_->candidates[jd][context], bonus,
                          pc.policies[k - 1], model_->space);
    pc.policies.push_back(
        policy_improve(pc.policies[k - 1], vals.Q, params_.eta, model_->space));
    pc.values.push_back(std::move(vals));
    pc.consumed_loss.push_back(jl);
    pc.consumed_dyn.push_back(jd);
  }
  return pc.policies[stage - 1];
}

std::vector<std::vector<double>> PolicySequenceCache::bonus_table(
    int context, int stage, const EstimatorHistory& history) {
  if (stage < 1) throw std::invalid_argument("policy cache: stage must be >= 1");
  if (history.rounds() < stage)
    throw std::invalid_argument("policy cache: estimator history too short for bonus table");
  if (stage > 1) policy(context, stage - 1, history);
  const int jd = history.dyn_idx[stage - 1];
  const auto& cum = cumulative_occupancy(context, jd, stage - 1, history);
  const auto& space = model_->space;
  const int H = space.horizon();
  const double beta_l = params_.beta_loss * params_.bonus_scale;
  const double beta_p = params_.beta_dyn * params_.bonus_scale;
  std::vector<std::vector<double>> table(space.num_states);
  for (int s = 0; s < space.num_states; ++s) {
    if (space.layer_of[s] == H) continue;
    table[s].resize(model_->num_actions);
    for (int a = 0; a < model_->num_actions; ++a) {
      const double b_l = exploration_bonus(beta_l, cum[s][a]);
      const double b_p = exploration_bonus(beta_p, cum[s][a]);
      table[s][a] = combined_bonus(b_l, b_p, H);
    }
  }
  return table;
}

const std::vector<std::vector<double>>& PolicySequenceCache::cumulative_occupancy(
    int context, int candidate, int upto, const EstimatorHistory& history) {
  if (candidate < 0 || candidate >= dyn_class_->size())
    throw std::invalid_argument("policy cache: dynamics candidate out of range");
  if (upto < 0) throw std::invalid_argument("policy cache: upto must be nonnegative");
  if (upto > 0) policy(context, upto, history);
  PerContext& pc = context_state(context);
  CumOccupancy& entry = pc.cum[candidate];
  if (entry.sum.empty()) {
    entry.sum.resize(model_->space.num_states);
    for (int s = 0; s < model_->space.num_states; ++s)
      if (model_->space.layer_of[s] < model_->space.horizon())
        entry.sum[s].assign(model_->num_actions, 0.0);
  }
  const Dynamics& dyn = dyn_class_->candidates[candidate][context];
  while (entry.upto < upto) {
    const int i = entry.upto + 1;
    const OccupancyMeasure occ =
        occupancy_measures(pc.policies[i - 1], dyn, model_->space);
    for (int s = 0; s < model_->space.num_states; ++s)
      for (std::size_t a = 0; a < occ.q[s].size(); ++a) entry.sum[s][a] += occ.q[s][a];
    entry.upto = i;
  }
  return entry.sum;
}

const std::vector<Policy>& PolicySequenceCache::policies(int context) const {
  if (context < 0 || context >= static_cast<int>(contexts_.size()))
    throw std::invalid_argument("policy cache: context index out of range");
  return contexts_[context].policies;
}

const std::vector<OptimisticValues>& PolicySequenceCache::stage_values(int context) const {
  if (context < 0 || context >= static_cast<int>(contexts_.size()))
    throw std::invalid_argument("policy cache: context index out of range");
  return contexts_[context].values;
}

const Policy& replay_policy_sequence(int context, int stage, const EstimatorHistory& history,
                                     PolicySequenceCache& cache) {
  return cache.policy(context, stage, history);
}

}  // namespace opocmdp
