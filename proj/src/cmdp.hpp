#pragma once

// Layered contextual MDPs and the exact dynamic-programming primitives built
// on them: occupancy measures, value/Q backups, optimal policies, trajectory
// sampling, and the distribution distances used by the verification suites.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rng.hpp"

namespace opocmdp {

// Input rows (probabilities, weights) are validated to this tolerance;
// computed quantities are compared at the looser one.
inline constexpr double kInputTol = 1e-12;
inline constexpr double kComputedTol = 1e-10;

// States live in one global index space, with a layer map on the side.
// Layers run 0..H; layer 0 and layer H are singletons (the start state and
// the terminal state). A horizon-H episode takes H steps, one per layer
// 0..H-1, and ends in the terminal state.
struct LayeredStateSpace {
  int num_states = 0;
  std::vector<int> layer_of;             // state -> layer
  std::vector<std::vector<int>> layers;  // layer -> states, ascending

  int horizon() const { return static_cast<int>(layers.size()) - 1; }
  int start_state() const { return layers.front().front(); }
  int terminal_state() const { return layers.back().front(); }

  // widths[h] is the size of layer h; widths.front() and widths.back() must
  // be 1. States are numbered contiguously layer by layer.
  static LayeredStateSpace from_widths(std::span<const int> widths);
};

// Per-state-action transition rows for one context. p[s][a] is a probability
// vector over the global state space, supported on layer(s)+1. The terminal
// state has no rows (empty inner vector).
struct Dynamics {
  std::vector<std::vector<std::vector<double>>> p;
};

// Immediate losses in [0,1] for one context. The terminal row is stored
// explicitly as zeros so every state indexes uniformly.
struct Loss {
  std::vector<std::vector<double>> l;
};

// Context-indexed tables.
using DynamicsTable = std::vector<Dynamics>;
using LossTable = std::vector<Loss>;

struct ContextDistribution {
  std::vector<double> weights;  // nonnegative, sums to 1
};

struct Policy {
  std::vector<std::vector<double>> probs;  // probs[s][a], rows sum to 1

  static Policy uniform(const LayeredStateSpace& space, int num_actions);
};

// q[s][a] = probability of reaching s and playing a; the layer of s fixes
// the step index. The terminal row is zeros.
struct OccupancyMeasure {
  std::vector<std::vector<double>> q;
};

struct TrajectoryStep {
  int state = 0;
  int action = 0;
  double loss = 0.0;
};

struct Trajectory {
  int context = 0;
  std::vector<TrajectoryStep> steps;  // one per layer 0..H-1
  int terminal_state = 0;
};

struct CmdpModel {
  LayeredStateSpace space;
  int num_actions = 0;
  DynamicsTable dynamics;  // per context
  LossTable loss;          // per context
  ContextDistribution context_dist;

  int num_contexts() const { return static_cast<int>(dynamics.size()); }
};

struct ValidationResult {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

// Structural and numerical checks: layer partition consistent, singleton
// endpoints, rows are distributions to kInputTol, transitions respect layer
// adjacency, losses in [0,1] with a zero terminal row, context weights form
// a distribution. Every violation names its indices.
ValidationResult validate_model(const CmdpModel& model);

// Forward recursion for q_h(s,a | policy, dynamics).
OccupancyMeasure occupancy_measures(const Policy& policy, const Dynamics& dynamics,
                                    const LayeredStateSpace& space);

struct ValueFunctions {
  std::vector<double> V;                // per state, terminal 0
  std::vector<std::vector<double>> Q;   // per state/action, terminal row 0
};

// Exact Bellman backup of the policy under the given dynamics and loss.
ValueFunctions value_backup(const Policy& policy, const Dynamics& dynamics,
                            const Loss& loss, const LayeredStateSpace& space);

struct OptimalSolution {
  Policy policy;          // deterministic; ties broken toward the smaller action index
  std::vector<double> V;  // optimal values per state
};

OptimalSolution optimal_policy(const Dynamics& dynamics, const Loss& loss,
                               const LayeredStateSpace& space);

enum class LossMode {
  kBernoulli,      // observed loss ~ Bernoulli(l[s][a])
  kDeterministic,  // observed loss = l[s][a]
};

// Rolls out one episode. Per step the stream is consumed in a fixed order:
// action, loss (skipped in deterministic mode), next state.
Trajectory sample_trajectory(const Policy& policy, const CmdpModel& model, int context,
                             LossMode mode, RngStream& stream);

// Squared Hellinger distance sum_x (sqrt(p_x) - sqrt(q_x))^2, in [0, 2].
double hellinger_sq(std::span<const double> p, std::span<const double> q);

// Total variation distance (1/2) sum_x |p_x - q_x|.
double tv_distance(std::span<const double> p, std::span<const double> q);

struct ChangeOfMeasureCheck {
  // forward: V under estimated dynamics <= 3 V under true + 9 H^2 * hellinger_term
  bool forward_holds = false;
  double forward_slack = 0.0;  // rhs - lhs
  // reverse: V under true <= 3 V under estimated + (54 H^2 + 162 H^4) * hellinger_term
  bool reverse_holds = false;
  double reverse_slack = 0.0;
  // E under (true dynamics, policy) of the per-step squared Hellinger distance
  // between the two transition rows, summed over steps.
  double hellinger_term = 0.0;
};

// Change-of-measure bound between two models sharing a loss but differing in
// dynamics, evaluated exactly through occupancy measures and value backups.
ChangeOfMeasureCheck value_change_of_measure_check(const Policy& policy,
                                                   const Dynamics& dynamics_true,
                                                   const Dynamics& dynamics_est,
                                                   const Loss& loss,
                                                   const LayeredStateSpace& space);

}  // namespace opocmdp
