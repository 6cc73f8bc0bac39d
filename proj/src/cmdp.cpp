#include "cmdp.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace opocmdp {

namespace {

// Expected next-layer value sum_{s'} p[s' ] V[s'], iterating the next layer
// in ascending state order. Every backup in this file goes through here so
// that policy evaluation, optimal planning, and optimistic planning produce
// bit-identical arithmetic on identical inputs.
double next_value(const Dynamics& dynamics, const LayeredStateSpace& space, int s, int a,
                  const std::vector<double>& V) {
  const int h = space.layer_of[s];
  double acc = 0.0;
  for (int sp : space.layers[h + 1]) acc += dynamics.p[s][a][sp] * V[sp];
  return acc;
}

void check_policy_shape(const Policy& policy, const LayeredStateSpace& space) {
  if (static_cast<int>(policy.probs.size()) != space.num_states)
    throw std::invalid_argument("policy has wrong number of state rows");
}

void check_dynamics_shape(const Dynamics& dynamics, const LayeredStateSpace& space) {
  if (static_cast<int>(dynamics.p.size()) != space.num_states)
    throw std::invalid_argument("dynamics has wrong number of state rows");
}

}  // namespace

LayeredStateSpace LayeredStateSpace::from_widths(std::span<const int> widths) {
  if (widths.size() < 2) throw std::invalid_argument("layered space needs at least 2 layers");
  if (widths.front() != 1 || widths.back() != 1)
    throw std::invalid_argument("first and last layer must be singletons");
  LayeredStateSpace space;
  space.layers.resize(widths.size());
  for (std::size_t h = 0; h < widths.size(); ++h) {
    if (widths[h] < 1) throw std::invalid_argument("layer widths must be positive");
    for (int i = 0; i < widths[h]; ++i) {
      space.layers[h].push_back(space.num_states);
      space.layer_of.push_back(static_cast<int>(h));
      ++space.num_states;
    }
  }
  return space;
}

Policy Policy::uniform(const LayeredStateSpace& space, int num_actions) {
  Policy pi;
  pi.probs.assign(space.num_states, std::vector<double>(num_actions, 1.0 / num_actions));
  return pi;
}

ValidationResult validate_model(const CmdpModel& model) {
  ValidationResult res;
  auto fail = [&res](const std::string& msg) { res.violations.push_back(msg); };
  const auto& space = model.space;

  if (space.layers.size() < 2) {
    fail("state space has fewer than 2 layers");
    return res;
  }
  if (static_cast<int>(space.layer_of.size()) != space.num_states)
    fail("layer_of size does not match num_states");
  int counted = 0;
  for (std::size_t h = 0; h < space.layers.size(); ++h) {
    for (int s : space.layers[h]) {
      ++counted;
      if (s < 0 || s >= space.num_states) {
        fail("layer " + std::to_string(h) + " lists out-of-range state " + std::to_string(s));
      } else if (space.layer_of[s] != static_cast<int>(h)) {
        fail("state " + std::to_string(s) + " listed in layer " + std::to_string(h) +
             " but layer_of says " + std::to_string(space.layer_of[s]));
      }
    }
  }
  if (counted != space.num_states) fail("layers do not partition the state set");
  if (space.layers.front().size() != 1) fail("start layer is not a singleton");
  if (space.layers.back().size() != 1) fail("terminal layer is not a singleton");
  if (!res.ok()) return res;

  if (model.num_actions < 1) fail("num_actions must be positive");
  const int C = model.num_contexts();
  if (C < 1) fail("model has no contexts");
  if (static_cast<int>(model.loss.size()) != C) fail("loss table count does not match contexts");
  if (static_cast<int>(model.context_dist.weights.size()) != C)
    fail("context weight count does not match contexts");
  if (!res.ok()) return res;

  const int H = space.horizon();
  const int term = space.terminal_state();
  for (int c = 0; c < C; ++c) {
    const Dynamics& dyn = model.dynamics[c];
    const Loss& loss = model.loss[c];
    if (static_cast<int>(dyn.p.size()) != space.num_states ||
        static_cast<int>(loss.l.size()) != space.num_states) {
      fail("context " + std::to_string(c) + ": table has wrong number of state rows");
      continue;
    }
    for (int s = 0; s < space.num_states; ++s) {
      const int h = space.layer_of[s];
      if (s == term) {
        if (!dyn.p[s].empty())
          fail("context " + std::to_string(c) + ": terminal state has transition rows");
        for (std::size_t a = 0; a < loss.l[s].size(); ++a) {
          if (loss.l[s][a] != 0.0)
            fail("context " + std::to_string(c) + ": terminal loss (a=" + std::to_string(a) +
                 ") is nonzero");
        }
        continue;
      }
      if (static_cast<int>(dyn.p[s].size()) != model.num_actions ||
          static_cast<int>(loss.l[s].size()) != model.num_actions) {
        fail("context " + std::to_string(c) + ", state " + std::to_string(s) +
             ": row count does not match num_actions");
        continue;
      }
      for (int a = 0; a < model.num_actions; ++a) {
        const double lv = loss.l[s][a];
        if (!(lv >= 0.0 && lv <= 1.0)) {
          std::ostringstream os;
          os << "loss (c=" << c << ",s=" << s << ",a=" << a << ") = " << lv << " outside [0,1]";
          fail(os.str());
        }
        const auto& row = dyn.p[s][a];
        if (static_cast<int>(row.size()) != space.num_states) {
          fail("dynamics row (c=" + std::to_string(c) + ",s=" + std::to_string(s) +
               ",a=" + std::to_string(a) + ") has wrong length");
          continue;
        }
        double sum = 0.0;
        for (int sp = 0; sp < space.num_states; ++sp) {
          const double p = row[sp];
          if (p < 0.0) {
            std::ostringstream os;
            os << "dynamics (c=" << c << ",s=" << s << ",a=" << a << ",s'=" << sp << ") = " << p
               << " is negative";
            fail(os.str());
          }
          if (p != 0.0 && space.layer_of[sp] != h + 1) {
            std::ostringstream os;
            os << "dynamics (c=" << c << ",s=" << s << ",a=" << a << ") puts mass " << p
               << " on state " << sp << " outside layer " << h + 1;
            fail(os.str());
          }
          sum += p;
        }
        if (std::abs(sum - 1.0) > kInputTol) {
          std::ostringstream os;
          os << "dynamics row (c=" << c << ",s=" << s << ",a=" << a << ") sums to " << sum;
          fail(os.str());
        }
      }
    }
  }

  double wsum = 0.0;
  for (std::size_t c = 0; c < model.context_dist.weights.size(); ++c) {
    const double w = model.context_dist.weights[c];
    if (w < 0.0) fail("context weight " + std::to_string(c) + " is negative");
    wsum += w;
  }
  if (std::abs(wsum - 1.0) > kInputTol) {
    std::ostringstream os;
    os << "context weights sum to " << wsum;
    fail(os.str());
  }
  (void)H;
  return res;
}

OccupancyMeasure occupancy_measures(const Policy& policy, const Dynamics& dynamics,
                                    const LayeredStateSpace& space) {
  check_policy_shape(policy, space);
  check_dynamics_shape(dynamics, space);
  const int H = space.horizon();
  OccupancyMeasure occ;
  occ.q.resize(space.num_states);
  std::vector<double> reach(space.num_states, 0.0);
  reach[space.start_state()] = 1.0;
  for (int s = 0; s < space.num_states; ++s) {
    const std::size_t na = (space.layer_of[s] < H) ? policy.probs[s].size() : 0;
    occ.q[s].assign(na, 0.0);
  }
  for (int h = 0; h < H; ++h) {
    for (int s : space.layers[h]) {
      const double r = reach[s];
      const auto& row = policy.probs[s];
      for (std::size_t a = 0; a < row.size(); ++a) {
        const double q = r * row[a];
        occ.q[s][a] = q;
        if (q == 0.0) continue;
        for (int sp : space.layers[h + 1]) reach[sp] += q * dynamics.p[s][a][sp];
      }
    }
  }
  return occ;
}

ValueFunctions value_backup(const Policy& policy, const Dynamics& dynamics, const Loss& loss,
                            const LayeredStateSpace& space) {
  check_policy_shape(policy, space);
  check_dynamics_shape(dynamics, space);
  if (static_cast<int>(loss.l.size()) != space.num_states)
    throw std::invalid_argument("loss has wrong number of state rows");
  const int H = space.horizon();
  ValueFunctions vf;
  vf.V.assign(space.num_states, 0.0);
  vf.Q.resize(space.num_states);
  for (int s = 0; s < space.num_states; ++s)
    vf.Q[s].assign(space.layer_of[s] < H ? policy.probs[s].size() : 0, 0.0);
  for (int h = H - 1; h >= 0; --h) {
    for (int s : space.layers[h]) {
      const auto& row = policy.probs[s];
      double v = 0.0;
      for (std::size_t a = 0; a < row.size(); ++a) {
        const double q = loss.l[s][a] + next_value(dynamics, space, s, static_cast<int>(a), vf.V);
        vf.Q[s][a] = q;
        v += row[a] * q;
      }
      vf.V[s] = v;
    }
  }
  return vf;
}

OptimalSolution optimal_policy(const Dynamics& dynamics, const Loss& loss,
                               const LayeredStateSpace& space) {
  check_dynamics_shape(dynamics, space);
  const int H = space.horizon();
  OptimalSolution sol;
  sol.V.assign(space.num_states, 0.0);
  sol.policy.probs.resize(space.num_states);
  for (int s : space.layers[H]) sol.policy.probs[s] = {};
  for (int h = H - 1; h >= 0; --h) {
    for (int s : space.layers[h]) {
      const int na = static_cast<int>(loss.l[s].size());
      sol.policy.probs[s].assign(na, 0.0);
      int best = 0;
      double best_q = 0.0;
      for (int a = 0; a < na; ++a) {
        const double q = loss.l[s][a] + next_value(dynamics, space, s, a, sol.V);
        if (a == 0 || q < best_q) {
          best = a;
          best_q = q;
        }
      }
      sol.policy.probs[s][best] = 1.0;
      sol.V[s] = best_q;
    }
  }
  return sol;
}

Trajectory sample_trajectory(const Policy& policy, const CmdpModel& model, int context,
                             LossMode mode, RngStream& stream) {
  if (context < 0 || context >= model.num_contexts())
    throw std::invalid_argument("sample_trajectory: context index out of range");
  const auto& space = model.space;
  check_policy_shape(policy, space);
  const Dynamics& dyn = model.dynamics[context];
  const Loss& loss = model.loss[context];
  const int H = space.horizon();
  Trajectory traj;
  traj.context = context;
  traj.steps.reserve(H);
  int s = space.start_state();
  for (int h = 0; h < H; ++h) {
    const int a = sample_categorical(stream, policy.probs[s]);
    double l = loss.l[s][a];
    if (mode == LossMode::kBernoulli) l = sample_bernoulli(stream, l) ? 1.0 : 0.0;
    traj.steps.push_back({s, a, l});
    s = sample_categorical(stream, dyn.p[s][a]);
  }
  traj.terminal_state = s;
  return traj;
}

namespace {

void check_distribution_pair(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("distribution length mismatch");
  double sp = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0 || q[i] < 0.0) throw std::invalid_argument("negative probability entry");
    sp += p[i];
    sq += q[i];
  }
  if (std::abs(sp - 1.0) > kInputTol || std::abs(sq - 1.0) > kInputTol)
    throw std::invalid_argument("input is not a probability distribution");
}

}  // namespace

double hellinger_sq(std::span<const double> p, std::span<const double> q) {
  check_distribution_pair(p, q);
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = std::sqrt(p[i]) - std::sqrt(q[i]);
    acc += d * d;
  }
  return acc;
}

double tv_distance(std::span<const double> p, std::span<const double> q) {
  check_distribution_pair(p, q);
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - q[i]);
  return 0.5 * acc;
}

ChangeOfMeasureCheck value_change_of_measure_check(const Policy& policy,
                                                   const Dynamics& dynamics_true,
                                                   const Dynamics& dynamics_est,
                                                   const Loss& loss,
                                                   const LayeredStateSpace& space) {
  const int H = space.horizon();
  for (int s = 0; s < space.num_states; ++s)
    for (double lv : loss.l[s])
      if (!(lv >= 0.0 && lv <= 1.0))
        throw std::invalid_argument("change-of-measure check needs losses in [0,1]");

  const int s1 = space.start_state();
  const double v_true = value_backup(policy, dynamics_true, loss, space).V[s1];
  const double v_est = value_backup(policy, dynamics_est, loss, space).V[s1];

  // E under (true dynamics, policy) of the summed per-step squared Hellinger
  // distances, computed exactly from the occupancy measure.
  const OccupancyMeasure occ = occupancy_measures(policy, dynamics_true, space);
  double term = 0.0;
  for (int h = 0; h < H; ++h) {
    for (int s : space.layers[h]) {
      for (std::size_t a = 0; a < occ.q[s].size(); ++a) {
        const double w = occ.q[s][a];
        if (w == 0.0) continue;
        term += w * hellinger_sq(dynamics_est.p[s][a], dynamics_true.p[s][a]);
      }
    }
  }

  ChangeOfMeasureCheck out;
  out.hellinger_term = term;
  const double hh = static_cast<double>(H) * H;
  const double forward_rhs = 3.0 * v_true + 9.0 * hh * term;
  out.forward_slack = forward_rhs - v_est;
  out.forward_holds = out.forward_slack >= -kComputedTol;
  const double reverse_rhs = 3.0 * v_est + (54.0 * hh + 162.0 * hh * hh) * term;
  out.reverse_slack = reverse_rhs - v_true;
  out.reverse_holds = out.reverse_slack >= -kComputedTol;
  return out;
}

}  // namespace opocmdp
