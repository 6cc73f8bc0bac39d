#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "opo.hpp"
#include "test_util.hpp"

using namespace opocmdp;
namespace tt = opocmdp::test;

namespace {

// Uniform-bonus table shaped like a loss table.
std::vector<std::vector<double>> flat_bonus(const LayeredStateSpace& space, int num_actions,
                                            double value) {
  std::vector<std::vector<double>> bonus(space.num_states);
  for (int s = 0; s < space.num_states; ++s)
    if (space.layer_of[s] < space.horizon()) bonus[s].assign(num_actions, value);
  return bonus;
}

// Single-context environment pieces around one random instance.
struct ClassSetup {
  CmdpModel model;
  LossClass loss_cls;
  DynamicsClass dyn_cls;
};

ClassSetup singleton_setup(const tt::RandomInstance& inst) {
  ClassSetup s;
  s.model = tt::wrap_model(inst.space, inst.num_actions, inst.dynamics, inst.loss);
  s.loss_cls.candidates = {{inst.loss}};
  s.loss_cls.truth_index = 0;
  s.dyn_cls.candidates = {{inst.dynamics}};
  s.dyn_cls.truth_index = 0;
  return s;
}

}  // namespace

TEST_CASE("parameter schedule reference values") {
  const AlgoParams p = default_parameters(1000, 3, 4, 2, 2, 2, 0.1);
  CHECK(std::abs(p.eta - 0.012411) < 1e-6);
  CHECK(p.eta == doctest::Approx(std::sqrt(2.0 * std::log(2.0) / 9000.0)).epsilon(1e-15));
  CHECK(p.beta_loss > 0.0);
  CHECK(p.beta_dyn > 0.0);
  CHECK(p.bonus_scale == 1.0);
  CHECK(p.delta == 0.1);
}

TEST_CASE("loss and dynamics bonus scales stay in a fixed ratio") {
  for (int H : {1, 2, 5, 9}) {
    const AlgoParams p = default_parameters(250, H, 6, 3, 4, 7, 0.05);
    CHECK(p.beta_loss / p.beta_dyn == doctest::Approx(std::sqrt(2.0 * H)).epsilon(1e-12));
  }
  // T=1 keeps the log(T+1) denominators finite.
  const AlgoParams tiny = default_parameters(1, 2, 3, 2, 1, 1, 0.5);
  CHECK(std::isfinite(tiny.beta_loss));
  CHECK(tiny.beta_loss > 0.0);
  CHECK(std::isfinite(tiny.beta_dyn));
  CHECK(tiny.beta_dyn > 0.0);
}

TEST_CASE("parameter schedule input validation") {
  CHECK_THROWS_AS(default_parameters(0, 3, 4, 2, 2, 2, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(default_parameters(10, 0, 4, 2, 2, 2, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(default_parameters(10, 3, 4, 2, 0, 2, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(default_parameters(10, 3, 4, 2, 2, 2, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(default_parameters(10, 3, 4, 2, 2, 2, 1.0), std::invalid_argument);
}

TEST_CASE("exploration bonus reference values") {
  CHECK(exploration_bonus(4.0, 0.0) == 1.0);
  CHECK(exploration_bonus(4.0, 9.0) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(exploration_bonus(0.5, 0.0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(exploration_bonus(0.0, 5.0) == 0.0);
  CHECK_THROWS_AS(exploration_bonus(-1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(exploration_bonus(1.0, -0.5), std::invalid_argument);
}

TEST_CASE("exploration bonus monotonicity") {
  double prev = 1.0;
  for (double cum : {0.0, 0.5, 1.0, 4.0, 100.0}) {
    const double b = exploration_bonus(3.0, cum);
    CHECK(b <= prev + 1e-15);
    CHECK(b >= 0.0);
    CHECK(b <= 1.0);
    prev = b;
  }
  CHECK(exploration_bonus(2.0, 3.0) <= exploration_bonus(5.0, 3.0));
}

TEST_CASE("combined bonus reference values") {
  CHECK(combined_bonus(0.0, 0.0, 3) == 0.0);
  CHECK(combined_bonus(1.0, 1.0, 3) == 7.0);
  CHECK(combined_bonus(0.2, 0.1, 2) == doctest::Approx(0.6).epsilon(1e-15));
}

TEST_CASE("optimistic backup two-step hand case") {
  auto space = tt::make_space({1, 1, 1});
  Dynamics dyn;
  dyn.p.resize(3);
  dyn.p[0] = {{0.0, 1.0, 0.0}, {0.0, 1.0, 0.0}};
  dyn.p[1] = {{0.0, 0.0, 1.0}, {0.0, 0.0, 1.0}};
  Loss loss;
  loss.l = {{0.5, 0.5}, {0.5, 0.5}, {0.0, 0.0}};
  auto bonus = flat_bonus(space, 2, 0.0);
  bonus[0] = {0.8, 0.8};
  const Policy pi = Policy::uniform(space, 2);
  const auto vals = optimistic_backup(loss, dyn, bonus, pi, space);
  CHECK(vals.Q[1][0] == 0.5);
  CHECK(vals.Q[1][1] == 0.5);
  CHECK(vals.Q[0][0] == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(vals.V[0] == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(vals.V[2] == 0.0);
}

TEST_CASE("optimistic backup clips fully under a dominating bonus") {
  RngStream rng = make_stream(31, 0);
  const auto inst = tt::random_instance(rng, 4, 3, 3);
  const Policy pi = tt::random_policy(rng, inst.space, inst.num_actions);
  const auto bonus = flat_bonus(inst.space, inst.num_actions, 1.0);  // >= every loss
  const auto vals = optimistic_backup(inst.loss, inst.dynamics, bonus, pi, inst.space);
  for (double v : vals.V) CHECK(v == 0.0);
  for (const auto& row : vals.Q)
    for (double q : row) CHECK(q == 0.0);
}

TEST_CASE("optimistic backup with zero bonus is the exact Bellman backup") {
  RngStream rng = make_stream(32, 0);
  for (int trial = 0; trial < 30; ++trial) {
    const auto inst = tt::random_instance(rng, 5, 4, 3);
    const Policy pi = tt::random_policy(rng, inst.space, inst.num_actions);
    const auto bonus = flat_bonus(inst.space, inst.num_actions, 0.0);
    const auto opt = optimistic_backup(inst.loss, inst.dynamics, bonus, pi, inst.space);
    const auto vf = value_backup(pi, inst.dynamics, inst.loss, inst.space);
    for (int s = 0; s < inst.space.num_states; ++s) {
      CHECK(opt.V[s] == vf.V[s]);  // bitwise: same recursion, clip never fires
      for (std::size_t a = 0; a < vf.Q[s].size(); ++a) CHECK(opt.Q[s][a] == vf.Q[s][a]);
    }
  }
}

TEST_CASE("optimistic values stay within layer bounds") {
  RngStream rng = make_stream(33, 0);
  for (int trial = 0; trial < 30; ++trial) {
    const auto inst = tt::random_instance(rng, 5, 4, 3);
    const Policy pi = tt::random_policy(rng, inst.space, inst.num_actions);
    auto bonus = flat_bonus(inst.space, inst.num_actions, 0.0);
    for (auto& row : bonus)
      for (double& b : row) b = uniform01(rng);
    const auto vals = optimistic_backup(inst.loss, inst.dynamics, bonus, pi, inst.space);
    const int H = inst.space.horizon();
    for (int s = 0; s < inst.space.num_states; ++s) {
      const double cap = H - inst.space.layer_of[s];
      CHECK(vals.V[s] >= 0.0);
      CHECK(vals.V[s] <= cap + kComputedTol);
      // V is the policy average of Q.
      double avg = 0.0;
      for (std::size_t a = 0; a < vals.Q[s].size(); ++a) {
        CHECK(vals.Q[s][a] >= 0.0);
        CHECK(vals.Q[s][a] <= cap + kComputedTol);
        avg += pi.probs[s][a] * vals.Q[s][a];
      }
      if (!vals.Q[s].empty()) CHECK(std::abs(vals.V[s] - avg) <= kComputedTol);
    }
  }
}

TEST_CASE("a bonus covering the loss error keeps the backup optimistic") {
  RngStream rng = make_stream(34, 0);
  for (int trial = 0; trial < 30; ++trial) {
    const auto inst = tt::random_instance(rng, 4, 3, 3);
    const Policy pi = tt::random_policy(rng, inst.space, inst.num_actions);
    const Loss f_hat = tt::random_loss(rng, inst.space, inst.num_actions);
    auto bonus = flat_bonus(inst.space, inst.num_actions, 0.0);
    for (int s = 0; s < inst.space.num_states; ++s)
      for (std::size_t a = 0; a < bonus[s].size(); ++a)
        bonus[s][a] = std::abs(f_hat.l[s][a] - inst.loss.l[s][a]);
    const auto vals = optimistic_backup(f_hat, inst.dynamics, bonus, pi, inst.space);
    const auto vf = value_backup(pi, inst.dynamics, inst.loss, inst.space);
    CHECK(vals.V[inst.space.start_state()] <= vf.V[inst.space.start_state()] + kComputedTol);
  }
}

TEST_CASE("policy improvement hand case") {
  auto space = tt::make_space({1, 1});
  const Policy pi = Policy::uniform(space, 2);
  std::vector<std::vector<double>> q = {{0.0, 1.0}, {}};
  const Policy next = policy_improve(pi, q, std::log(2.0), space);
  CHECK(next.probs[0][0] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(next.probs[0][1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("policy improvement identities") {
  RngStream rng = make_stream(35, 0);
  const auto inst = tt::random_instance(rng, 4, 3, 3);
  const Policy pi = tt::random_policy(rng, inst.space, inst.num_actions);
  std::vector<std::vector<double>> q(inst.space.num_states);
  for (int s = 0; s < inst.space.num_states; ++s) {
    if (inst.space.layer_of[s] == inst.space.horizon()) continue;
    q[s].resize(inst.num_actions);
    for (double& v : q[s]) v = 3.0 * uniform01(rng);
  }

  // eta = 0 leaves the policy unchanged.
  const Policy same = policy_improve(pi, q, 0.0, inst.space);
  for (int s = 0; s < inst.space.num_states; ++s)
    for (std::size_t a = 0; a < pi.probs[s].size(); ++a)
      CHECK(same.probs[s][a] == doctest::Approx(pi.probs[s][a]).epsilon(1e-14));

  // Constant rows leave the policy unchanged, rows always renormalize.
  std::vector<std::vector<double>> flat(inst.space.num_states);
  for (int s = 0; s < inst.space.num_states; ++s)
    if (inst.space.layer_of[s] < inst.space.horizon()) flat[s].assign(inst.num_actions, 0.7);
  const Policy flat_next = policy_improve(pi, flat, 1.3, inst.space);
  for (int s = 0; s < inst.space.num_states; ++s) {
    if (inst.space.layer_of[s] == inst.space.horizon()) continue;
    double sum = 0.0;
    for (std::size_t a = 0; a < pi.probs[s].size(); ++a) {
      CHECK(flat_next.probs[s][a] == doctest::Approx(pi.probs[s][a]).epsilon(1e-13));
      sum += flat_next.probs[s][a];
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }

  // Shift invariance: adding a constant to a row changes nothing.
  auto shifted = q;
  for (auto& row : shifted)
    for (double& v : row) v += 17.5;
  const Policy a_pol = policy_improve(pi, q, 0.8, inst.space);
  const Policy b_pol = policy_improve(pi, shifted, 0.8, inst.space);
  for (int s = 0; s < inst.space.num_states; ++s)
    for (std::size_t a = 0; a < pi.probs[s].size(); ++a)
      CHECK(a_pol.probs[s][a] == doctest::Approx(b_pol.probs[s][a]).epsilon(1e-12));

  // Mass moves toward smaller Q.
  auto space2 = tt::make_space({1, 1});
  std::vector<std::vector<double>> q2 = {{0.2, 0.9}, {}};
  const Policy moved = policy_improve(Policy::uniform(space2, 2), q2, 1.0, space2);
  CHECK(moved.probs[0][0] > 0.5);

  CHECK_THROWS_AS(policy_improve(pi, q, -0.1, inst.space), std::invalid_argument);
  std::vector<std::vector<double>> bad(1);
  CHECK_THROWS_AS(policy_improve(pi, bad, 0.5, inst.space), std::invalid_argument);
}

TEST_CASE("stage one policy is uniform") {
  RngStream rng = make_stream(36, 0);
  const auto inst = tt::random_instance(rng, 3, 3, 3);
  ClassSetup setup = singleton_setup(inst);
  AlgoParams params;
  params.eta = 0.1;
  params.beta_loss = 1.0;
  params.beta_dyn = 1.0;
  PolicySequenceCache cache(setup.model, setup.loss_cls, setup.dyn_cls, params);
  EstimatorHistory history;
  history.push(0, 0);
  const Policy& pi1 = cache.policy(0, 1, history);
  for (int s = 0; s < inst.space.num_states; ++s)
    for (double p : pi1.probs[s]) CHECK(p == 1.0 / inst.num_actions);
}

TEST_CASE("saturated bonuses keep the second stage uniform") {
  // H=1, f*=0.5 on both actions: the combined first-stage bonus is
  // 1 + 2H = 3, so every optimistic Q clips to zero and the improvement
  // step is a no-op.
  auto space = tt::make_space({1, 1});
  Dynamics dyn;
  dyn.p.resize(2);
  dyn.p[0] = {{0.0, 1.0}, {0.0, 1.0}};
  Loss loss;
  loss.l = {{0.5, 0.5}, {0.0, 0.0}};
  ClassSetup setup;
  setup.model = tt::wrap_model(space, 2, dyn, loss);
  setup.loss_cls.candidates = {{loss}};
  setup.dyn_cls.candidates = {{dyn}};

  AlgoParams params;
  params.eta = 0.5;
  params.beta_loss = 4.0;  // beta/2 = 2 >= 1 saturates at cum_occupancy 0
  params.beta_dyn = 4.0;
  PolicySequenceCache cache(setup.model, setup.loss_cls, setup.dyn_cls, params);
  EstimatorHistory history;
  history.push(0, 0);
  history.push(0, 0);

  const auto bonus = cache.bonus_table(0, 1, history);
  CHECK(bonus[0][0] == 3.0);
  CHECK(bonus[0][1] == 3.0);

  const Policy& pi2 = cache.policy(0, 2, history);
  CHECK(pi2.probs[0][0] == 0.5);
  CHECK(pi2.probs[0][1] == 0.5);
  const auto& vals = cache.stage_values(0);
  REQUIRE(vals.size() >= 1);
  CHECK(vals[0].Q[0][0] == 0.0);
  CHECK(vals[0].V[0] == 0.0);
}

TEST_CASE("second stage matches a hand-assembled update") {
  RngStream rng = make_stream(37, 0);
  const auto inst = tt::random_instance(rng, 3, 3, 2);
  ClassSetup setup = singleton_setup(inst);
  AlgoParams params;
  params.eta = 0.3;
  params.beta_loss = 0.0;  // no bonus: plain backup under the fitted tables
  params.beta_dyn = 0.0;
  PolicySequenceCache cache(setup.model, setup.loss_cls, setup.dyn_cls, params);
  EstimatorHistory history;
  history.push(0, 0);

  const Policy uniform = Policy::uniform(inst.space, inst.num_actions);
  const auto bonus = flat_bonus(inst.space, inst.num_actions, 0.0);
  const auto vals = optimistic_backup(inst.loss, inst.dynamics, bonus, uniform, inst.space);
  const Policy expected = policy_improve(uniform, vals.Q, params.eta, inst.space);

  const Policy& pi2 = cache.policy(0, 2, history);
  for (int s = 0; s < inst.space.num_states; ++s)
    for (std::size_t a = 0; a < expected.probs[s].size(); ++a)
      CHECK(pi2.probs[s][a] == expected.probs[s][a]);
}

TEST_CASE("replay is deterministic and incremental access matches jumps") {
  RngStream rng = make_stream(38, 0);
  const auto inst = tt::random_instance(rng, 3, 3, 2);
  CmdpModel model = tt::wrap_model(inst.space, inst.num_actions, inst.dynamics, inst.loss);

  LossClass loss_cls;
  DynamicsClass dyn_cls;
  for (int i = 0; i < 3; ++i) {
    loss_cls.candidates.push_back({tt::random_loss(rng, inst.space, inst.num_actions)});
    dyn_cls.candidates.push_back({tt::random_dynamics(rng, inst.space, inst.num_actions)});
  }
  loss_cls.candidates[0] = {inst.loss};
  dyn_cls.candidates[0] = {inst.dynamics};

  AlgoParams params;
  params.eta = 0.2;
  params.beta_loss = 2.0;
  params.beta_dyn = 1.0;

  EstimatorHistory history;
  for (int k = 0; k < 30; ++k) history.push(sample_index(rng, 3), sample_index(rng, 3));

  PolicySequenceCache step_cache(model, loss_cls, dyn_cls, params);
  PolicySequenceCache jump_cache(model, loss_cls, dyn_cls, params);
  for (int stage = 1; stage <= 30; ++stage) step_cache.policy(0, stage, history);
  jump_cache.policy(0, 30, history);

  REQUIRE(step_cache.policies(0).size() == 30);
  REQUIRE(jump_cache.policies(0).size() == 30);
  for (int k = 0; k < 30; ++k)
    for (int s = 0; s < inst.space.num_states; ++s)
      for (std::size_t a = 0; a < step_cache.policies(0)[k].probs[s].size(); ++a)
        CHECK(step_cache.policies(0)[k].probs[s][a] == jump_cache.policies(0)[k].probs[s][a]);

  // The free-function entry point hits the same cache path.
  PolicySequenceCache third(model, loss_cls, dyn_cls, params);
  const Policy& via_free = replay_policy_sequence(0, 30, history, third);
  for (int s = 0; s < inst.space.num_states; ++s)
    for (std::size_t a = 0; a < via_free.probs[s].size(); ++a)
      CHECK(via_free.probs[s][a] == step_cache.policies(0)[29].probs[s][a]);
}

TEST_CASE("cumulative occupancy sums the replayed prefix") {
  RngStream rng = make_stream(39, 0);
  const auto inst = tt::random_instance(rng, 3, 3, 2);
  ClassSetup setup = singleton_setup(inst);
  AlgoParams params;
  params.eta = 0.4;
  params.beta_loss = 1.0;
  params.beta_dyn = 1.0;
  PolicySequenceCache cache(setup.model, setup.loss_cls, setup.dyn_cls, params);
  EstimatorHistory history;
  for (int k = 0; k < 8; ++k) history.push(0, 0);

  const auto& cum = cache.cumulative_occupancy(0, 0, 6, history);
  std::vector<std::vector<double>> expected(inst.space.num_states);
  for (int s = 0; s < inst.space.num_states; ++s)
    if (inst.space.layer_of[s] < inst.space.horizon())
      expected[s].assign(inst.num_actions, 0.0);
  for (int i = 1; i <= 6; ++i) {
    const auto occ =
        occupancy_measures(cache.policies(0)[i - 1], inst.dynamics, inst.space);
    for (int s = 0; s < inst.space.num_states; ++s)
      for (std::size_t a = 0; a < occ.q[s].size(); ++a) expected[s][a] += occ.q[s][a];
  }
  for (int s = 0; s < inst.space.num_states; ++s) {
    if (inst.space.layer_of[s] == inst.space.horizon()) continue;
    for (int a = 0; a < inst.num_actions; ++a)
      CHECK(cum[s][a] == doctest::Approx(expected[s][a]).epsilon(1e-12));
  }
}

TEST_CASE("cache rejects inconsistent or short histories") {
  RngStream rng = make_stream(40, 0);
  const auto inst = tt::random_instance(rng, 3, 3, 2);
  CmdpModel model = tt::wrap_model(inst.space, inst.num_actions, inst.dynamics, inst.loss);
  LossClass loss_cls;
  DynamicsClass dyn_cls;
  for (int i = 0; i < 2; ++i) {
    loss_cls.candidates.push_back({inst.loss});
    dyn_cls.candidates.push_back({inst.dynamics});
  }
  AlgoParams params;
  params.eta = 0.2;
  params.beta_loss = 1.0;
  params.beta_dyn = 1.0;

  PolicySequenceCache cache(model, loss_cls, dyn_cls, params);
  EstimatorHistory history;
  history.push(0, 0);
  history.push(1, 0);
  history.push(0, 1);
  cache.policy(0, 3, history);

  EstimatorHistory other;
  other.push(1, 1);  // disagrees on the consumed prefix
  other.push(1, 0);
  other.push(0, 1);
  CHECK_THROWS_AS(cache.policy(0, 3, other), std::runtime_error);

  CHECK_THROWS_AS(cache.policy(0, 10, history), std::invalid_argument);
  CHECK_THROWS_AS(cache.policy(0, 0, history), std::invalid_argument);
  CHECK_THROWS_AS(cache.policy(5, 1, history), std::invalid_argument);

  EstimatorHistory bad_index;
  bad_index.push(7, 0);
  PolicySequenceCache fresh(model, loss_cls, dyn_cls, params);
  CHECK_THROWS_AS(fresh.policy(0, 2, bad_index), std::invalid_argument);

  AlgoParams bad_params = params;
  bad_params.bonus_scale = -1.0;
  CHECK_THROWS_AS(PolicySequenceCache(model, loss_cls, dyn_cls, bad_params),
                  std::invalid_argument);
}

TEST_CASE("known-model reduction tracks plain mirror descent") {
  // Singleton truth classes and zero bonus scale: each stage's optimistic
  // values must coincide bitwise with the exact Bellman backup of the
  // current policy, and the policy sequence with direct OMD iteration.
  RngStream rng = make_stream(41, 0);
  const auto inst = tt::random_instance(rng, 4, 3, 3);
  ClassSetup setup = singleton_setup(inst);
  AlgoParams params;
  params.eta = 0.15;
  params.beta_loss = 3.0;
  params.beta_dyn = 2.0;
  params.bonus_scale = 0.0;

  PolicySequenceCache cache(setup.model, setup.loss_cls, setup.dyn_cls, params);
  EstimatorHistory history;
  for (int k = 0; k < 50; ++k) history.push(0, 0);
  cache.policy(0, 50, history);

  Policy direct = Policy::uniform(inst.space, inst.num_actions);
  for (int k = 1; k < 50; ++k) {
    const auto vf = value_backup(direct, inst.dynamics, inst.loss, inst.space);
    const auto& staged = cache.stage_values(0)[k - 1];
    for (int s = 0; s < inst.space.num_states; ++s) {
      CHECK(staged.V[s] == vf.V[s]);
      for (std::size_t a = 0; a < vf.Q[s].size(); ++a) CHECK(staged.Q[s][a] == vf.Q[s][a]);
    }
    direct = policy_improve(direct, vf.Q, params.eta, inst.space);
    const Policy& cached = cache.policies(0)[k];
    for (int s = 0; s < inst.space.num_states; ++s)
      for (std::size_t a = 0; a < direct.probs[s].size(); ++a)
        CHECK(cached.probs[s][a] == direct.probs[s][a]);
  }
}
