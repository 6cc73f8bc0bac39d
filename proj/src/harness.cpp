#include "harness.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace opocmdp {

namespace {

// Stream ids carved out of the root seed.
constexpr std::uint64_t kEnvStream = 0;
constexpr std::uint64_t kContextStream = 1;
constexpr std::uint64_t kTrajectoryStream = 2;

// Distractor dynamics rows are floored here and renormalized.
constexpr double kDynamicsFloor = 1e-3;

// Headroom for accumulated floating-point error in suite sums; the audited
// inequalities all carry order-one analytic slack at desk scale.
constexpr double kSuiteTol = 1e-8;

}  // namespace

void ExperimentConfig::validate() const {
  auto bad = [](const std::string& msg) { throw std::invalid_argument("config: " + msg); };
  if (episodes < 1) bad("episodes must be >= 1");
  if (horizon < 1) bad("horizon must be >= 1");
  if (static_cast<int>(layer_widths.size()) != horizon + 1)
    bad("layer_widths must have horizon+1 entries");
  if (layer_widths.front() != 1 || layer_widths.back() != 1)
    bad("layer_widths must start and end with 1");
  for (int w : layer_widths)
    if (w < 1) bad("layer_widths entries must be >= 1");
  if (num_actions < 1) bad("num_actions must be >= 1");
  if (num_contexts < 1) bad("num_contexts must be >= 1");
  if (loss_class_size < 1) bad("loss_class_size must be >= 1");
  if (dyn_class_size < 1) bad("dyn_class_size must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) bad("delta must lie in (0,1)");
  if (!(bonus_scale >= 0.0)) bad("bonus_scale must be >= 0");
  if (!context_weights.empty()) {
    if (static_cast<int>(context_weights.size()) != num_contexts)
      bad("context_weights must have num_contexts entries");
    double sum = 0.0;
    for (double w : context_weights) {
      if (w < 0.0) bad("context_weights entries must be >= 0");
      sum += w;
    }
    if (std::abs(sum - 1.0) > kInputTol) bad("context_weights must sum to 1");
  }
}

namespace {

std::vector<double> dirichlet_row(RngStream& rng, int n) {
  // Normalized unit-rate exponentials; -log of a (0,1] uniform.
  std::vector<double> row(n);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    row[i] = -std::log1p(-uniform01(rng));
    sum += row[i];
  }
  if (sum <= 0.0) {
    std::fill(row.begin(), row.end(), 1.0 / n);
    return row;
  }
  for (double& v : row) v /= sum;
  return row;
}

Dynamics random_dynamics(const LayeredStateSpace& space, int num_actions, RngStream& rng,
                         bool floored) {
  const int H = space.horizon();
  Dynamics dyn;
  dyn.p.resize(space.num_states);
  for (int s = 0; s < space.num_states; ++s) {
    if (space.layer_of[s] == H) continue;
    const auto& next = space.layers[space.layer_of[s] + 1];
    dyn.p[s].resize(num_actions);
    for (int a = 0; a < num_actions; ++a) {
      std::vector<double> row = dirichlet_row(rng, static_cast<int>(next.size()));
      if (floored) {
        double total = 0.0;
        for (double& v : row) {
          v = std::max(v, kDynamicsFloor);
          total += v;
        }
        for (double& v : row) v /= total;
      }
      std::vector<double> full(space.num_states, 0.0);
      for (std::size_t i = 0; i < next.size(); ++i) full[next[i]] = row[i];
      dyn.p[s][a] = std::move(full);
    }
  }
  return dyn;
}

Loss random_loss(const LayeredStateSpace& space, int num_actions, RngStream& rng) {
  const int H = space.horizon();
  Loss loss;
  loss.l.assign(space.num_states, std::vector<double>(num_actions, 0.0));
  for (int s = 0; s < space.num_states; ++s) {
    if (space.layer_of[s] == H) continue;
    for (int a = 0; a < num_actions; ++a) loss.l[s][a] = uniform01(rng);
  }
  return loss;
}

}  // namespace

Environment generate_environment(const ExperimentConfig& config, RngStream& rng) {
  config.validate();
  Environment env;
  auto& model = env.model;
  model.space = LayeredStateSpace::from_widths(config.layer_widths);
  model.num_actions = config.num_actions;
  if (config.context_weights.empty())
    model.context_dist.weights.assign(config.num_contexts, 1.0 / config.num_contexts);
  else
    model.context_dist.weights = config.context_weights;

  // Draw order is part of the determinism contract: truth dynamics, truth
  // losses, loss-class slot and distractors, dynamics-class slot and
  // distractors.
  for (int c = 0; c < config.num_contexts; ++c)
    model.dynamics.push_back(random_dynamics(model.space, config.num_actions, rng, false));
  for (int c = 0; c < config.num_contexts; ++c)
    model.loss.push_back(random_loss(model.space, config.num_actions, rng));

  env.loss_class.truth_index = sample_index(rng, config.loss_class_size);
  env.loss_class.candidates.resize(config.loss_class_size);
  for (int i = 0; i < config.loss_class_size; ++i) {
    if (i == env.loss_class.truth_index) {
      env.loss_class.candidates[i] = model.loss;
      continue;
    }
    for (int c = 0; c < config.num_contexts; ++c)
      env.loss_class.candidates[i].push_back(
          random_loss(model.space, config.num_actions, rng));
  }

  env.dyn_class.truth_index = sample_index(rng, config.dyn_class_size);
  env.dyn_class.candidates.resize(config.dyn_class_size);
  for (int i = 0; i < config.dyn_class_size; ++i) {
    if (i == env.dyn_class.truth_index) {
      env.dyn_class.candidates[i] = model.dynamics;
      continue;
    }
    for (int c = 0; c < config.num_contexts; ++c)
      env.dyn_class.candidates[i].push_back(
          random_dynamics(model.space, config.num_actions, rng, true));
  }

  ValidationResult vr = validate_model(model);
  if (!vr.ok()) throw std::runtime_error("generated model failed validation: " + vr.violations[0]);
  vr = validate_loss_class(env.loss_class, model.space, config.num_actions, config.num_contexts);
  if (!vr.ok()) throw std::runtime_error("generated loss class failed validation: " + vr.violations[0]);
  vr = validate_dynamics_class(env.dyn_class, model.space, config.num_actions,
                               config.num_contexts);
  if (!vr.ok())
    throw std::runtime_error("generated dynamics class failed validation: " + vr.violations[0]);
  return env;
}

namespace {

AlgoParams params_for(const ExperimentConfig& config, const CmdpModel& model) {
  AlgoParams params = default_parameters(config.episodes, config.horizon, model.space.num_states,
                                         config.num_actions, config.loss_class_size,
                                         config.dyn_class_size, config.delta);
  params.bonus_scale = config.bonus_scale;
  params.delta = config.delta;
  return params;
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  RunResult result;
  result.config = config;
  result.algorithm = Algorithm::kOpo;

  RngStream env_rng = make_stream(config.seed, kEnvStream);
  result.env = generate_environment(config, env_rng);
  const CmdpModel& model = result.env.model;
  const LayeredStateSpace& space = model.space;
  const int C = model.num_contexts();
  const int T = config.episodes;
  const int s1 = space.start_state();
  result.params = params_for(config, model);

  std::vector<OptimalSolution> optima;
  optima.reserve(C);
  for (int c = 0; c < C; ++c)
    optima.push_back(optimal_policy(model.dynamics[c], model.loss[c], space));

  RngStream ctx_rng = make_stream(config.seed, kContextStream);
  RngStream traj_rng = make_stream(config.seed, kTrajectoryStream);

  LeastSquaresScorer ls(result.env.loss_class);
  LogLossScorer ll(result.env.dyn_class);
  result.history.push(ls.best_index(), ll.best_index());  // entry 1: empty-dataset fit

  PolicySequenceCache cache(model, result.env.loss_class, result.env.dyn_class, result.params);

  // Running sums over i < t of q(.|pi^i_c, true dynamics), per context; feeds
  // the concentration diagnostics.
  std::vector<std::vector<std::vector<double>>> cum_truth(C);
  for (int c = 0; c < C; ++c) {
    cum_truth[c].resize(space.num_states);
    for (int s = 0; s < space.num_states; ++s)
      if (space.layer_of[s] < space.horizon())
        cum_truth[c][s].assign(model.num_actions, 0.0);
  }
  result.true_occupancy.resize(C);

  const auto& weights = model.context_dist.weights;
  double cum_regret = 0.0;
  double cum_expected = 0.0;
  std::vector<double> realized(C, 0.0);
  result.records.reserve(T);

  for (int t = 1; t <= T; ++t) {
    const int c_t = sample_categorical(ctx_rng, weights);
    for (int c = 0; c < C; ++c) cache.policy(c, t, result.history);

    const int jl = result.history.loss_idx[t - 1];
    const int jd = result.history.dyn_idx[t - 1];

    // Cumulative population diagnostics for the round-t estimators against
    // the occupancy mass of pi^1..pi^{t-1} under the true dynamics.
    double sq_diag = 0.0;
    double hel_diag = 0.0;
    for (int c = 0; c < C; ++c) {
      const Loss& fh = result.env.loss_class.candidates[jl][c];
      const Dynamics& ph = result.env.dyn_class.candidates[jd][c];
      double sq_acc = 0.0;
      double hel_acc = 0.0;
      for (int s = 0; s < space.num_states; ++s) {
        if (space.layer_of[s] >= space.horizon()) continue;
        for (int a = 0; a < model.num_actions; ++a) {
          const double mass = cum_truth[c][s][a];
          if (mass == 0.0) continue;
          const double d = fh.l[s][a] - model.loss[c].l[s][a];
          sq_acc += mass * d * d;
          hel_acc += mass * hellinger_sq(ph.p[s][a], model.dynamics[c].p[s][a]);
        }
      }
      sq_diag += weights[c] * sq_acc;
      hel_diag += weights[c] * hel_acc;
    }

    double expected_inc = 0.0;
    for (int c = 0; c < C; ++c) {
      const Policy& pi = cache.policy(c, t, result.history);
      realized[c] = value_backup(pi, model.dynamics[c], model.loss[c], space).V[s1];
      expected_inc += weights[c] * (realized[c] - optima[c].V[s1]);
      result.true_occupancy[c].push_back(occupancy_measures(pi, model.dynamics[c], space));
    }

    const auto bonus = cache.bonus_table(c_t, t, result.history);
    double bonus_mass = 0.0;
    const OccupancyMeasure& occ_t = result.true_occupancy[c_t].back();
    for (int s = 0; s < space.num_states; ++s)
      for (std::size_t a = 0; a < occ_t.q[s].size(); ++a)
        bonus_mass += occ_t.q[s][a] * bonus[s][a];

    const Trajectory traj = sample_trajectory(cache.policy(c_t, t, result.history), model, c_t,
                                              config.loss_mode, traj_rng);
    ls.add(traj);
    ll.add(traj);
    result.history.push(ls.best_index(), ll.best_index());  // entry t+1

    for (int c = 0; c < C; ++c) {
      const OccupancyMeasure& occ = result.true_occupancy[c].back();
      for (int s = 0; s < space.num_states; ++s)
        for (std::size_t a = 0; a < occ.q[s].size(); ++a) cum_truth[c][s][a] += occ.q[s][a];
    }

    const double inc = realized[c_t] - optima[c_t].V[s1];
    cum_regret += inc;
    cum_expected += expected_inc;
    result.records.push_back({t, c_t, realized[c_t], optima[c_t].V[s1], inc, cum_regret,
                              expected_inc, cum_expected, jl, jd, bonus_mass, sq_diag, hel_diag});
  }

  result.policies.resize(C);
  result.stage_values.resize(C);
  for (int c = 0; c < C; ++c) {
    result.policies[c] = cache.policies(c);
    result.stage_values[c] = cache.stage_values(c);
  }
  return result;
}

RunResult run_baseline(const ExperimentConfig& config, Algorithm algorithm) {
  if (algorithm == Algorithm::kOpo) return run_experiment(config);
  config.validate();
  RunResult result;
  result.config = config;
  result.algorithm = algorithm;

  RngStream env_rng = make_stream(config.seed, kEnvStream);
  result.env = generate_environment(config, env_rng);
  const CmdpModel& model = result.env.model;
  const LayeredStateSpace& space = model.space;
  const int C = model.num_contexts();
  const int s1 = space.start_state();
  result.params = params_for(config, model);

  std::vector<double> played(C, 0.0), optimal(C, 0.0);
  const Policy uniform = Policy::uniform(space, model.num_actions);
  double expected_inc = 0.0;
  for (int c = 0; c < C; ++c) {
    const OptimalSolution sol = optimal_policy(model.dynamics[c], model.loss[c], space);
    optimal[c] = sol.V[s1];
    const Policy& pi = (algorithm == Algorithm::kUniform) ? uniform : sol.policy;
    played[c] = value_backup(pi, model.dynamics[c], model.loss[c], space).V[s1];
    expected_inc += model.context_dist.weights[c] * (played[c] - optimal[c]);
  }

  RngStream ctx_rng = make_stream(config.seed, kContextStream);
  double cum_regret = 0.0;
  double cum_expected = 0.0;
  result.records.reserve(config.episodes);
  for (int t = 1; t <= config.episodes; ++t) {
    const int c_t = sample_categorical(ctx_rng, model.context_dist.weights);
    const double inc = played[c_t] - optimal[c_t];
    cum_regret += inc;
    cum_expected += expected_inc;
    result.records.push_back({t, c_t, played[c_t], optimal[c_t], inc, cum_regret, expected_inc,
                              cum_expected, 0, 0, 0.0, 0.0, 0.0});
  }
  return result;
}

RunResult baseline_uniform(const ExperimentConfig& config) {
  return run_baseline(config, Algorithm::kUniform);
}

RunResult baseline_known_model(const ExperimentConfig& config) {
  return run_baseline(config, Algorithm::kKnownModel);
}

double pseudo_regret(const std::vector<RunRecord>& records) {
  if (records.empty()) throw std::invalid_argument("pseudo_regret: empty record list");
  return records.back().cum_regret;
}

double expected_regret(const std::vector<RunRecord>& records) {
  if (records.empty()) throw std::invalid_argument("expected_regret: empty record list");
  return records.back().cum_expected_regret;
}

double regret_bound(const ExperimentConfig& config) {
  config.validate();
  int num_states = 0;
  for (int w : config.layer_widths) num_states += w;
  const AlgoParams sched =
      default_parameters(config.episodes, config.horizon, num_states, config.num_actions,
                         config.loss_class_size, config.dyn_class_size, config.delta);
  const double T = config.episodes;
  const double H = config.horizon;
  const double S = num_states;
  const double A = config.num_actions;
  const double F = config.loss_class_size;
  const double P = config.dyn_class_size;
  const double delta = config.delta;

  const double l1 = std::log(128.0 * std::pow(T, 4.0) * H * F * P / (delta * delta));
  const double l2 = std::log(8.0 * T * H * P / delta);
  const double l3 = std::log(4.0 * T * H * P / delta);
  const double beta_min = std::min(sched.beta_loss, sched.beta_dyn);

  return H + H * (H + 1.0) + 224.0 * T * std::pow(H, 3.0) * l1 / sched.beta_loss +
         50.0 * T * std::pow(H, 4.0) * l2 / sched.beta_dyn +
         5184.0 * T * std::pow(H, 7.0) * l3 / beta_min +
         7.0 * (sched.beta_loss + 2.0 * H * sched.beta_dyn) * S * A * std::log(T + 1.0) +
         std::sqrt(2.0 * std::pow(H, 4.0) * T * std::log(A));
}

GapCheck azuma_gap_check(const std::vector<RunRecord>& records, int horizon, double delta) {
  if (records.empty()) throw std::invalid_argument("azuma_gap_check: empty record list");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("azuma_gap_check: delta must lie in (0,1)");
  GapCheck check;
  const double T = records.size();
  check.gap = std::abs(records.back().cum_regret - records.back().cum_expected_regret);
  check.allowed = 2.0 * horizon * std::sqrt(2.0 * T * std::log(8.0 / delta));
  check.holds = check.gap <= check.allowed + kComputedTol;
  return check;
}

namespace {

SuiteCheck check_log_sums(const RunResult& run) {
  SuiteCheck check;
  check.name = "occupancy_log_sums";
  const auto& space = run.env.model.space;
  const double T = run.records.size();
  const double bound = 2.0 * std::log(T + 1.0);
  double worst = bound;  // vacuous case: slack equals the bound itself
  bool ok = true;
  std::ostringstream detail;
  for (std::size_t c = 0; c < run.true_occupancy.size(); ++c) {
    for (int s = 0; s < space.num_states; ++s) {
      if (space.layer_of[s] >= space.horizon()) continue;
      for (int a = 0; a < run.env.model.num_actions; ++a) {
        double denom = 1.0;  // lambda = 1
        double acc = 0.0;
        for (const auto& occ : run.true_occupancy[c]) {
          const double x = occ.q[s][a];
          acc += x / denom;
          denom += x;
        }
        const double slack = bound - acc;
        if (slack < worst) worst = slack;
        if (slack < -kSuiteTol && ok) {
          ok = false;
          detail << "violated at context " << c << ", state " << s << ", action " << a;
        }
      }
    }
  }
  check.passed = ok;
  check.worst_slack = worst;
  check.detail = detail.str();
  return check;
}

SuiteCheck check_omd(const RunResult& run) {
  SuiteCheck check;
  check.name = "omd_inequality";
  const auto& space = run.env.model.space;
  const int A = run.env.model.num_actions;
  const double eta = run.params.eta;
  bool ok = true;
  bool any = false;
  double worst = 0.0;
  std::ostringstream detail;
  for (std::size_t c = 0; c < run.stage_values.size(); ++c) {
    const auto& values = run.stage_values[c];
    const auto& policies = run.policies[c];
    for (int s = 0; s < space.num_states; ++s) {
      if (space.layer_of[s] >= space.horizon()) continue;
      double inner_sum = 0.0;   // sum_k <pi^k(.|s), Q^k(s,.)>
      double quad_sum = 0.0;    // sum_k sum_a pi^k(a|s) Q^k(s,a)^2
      std::vector<double> comp(A, 0.0);  // sum_k Q^k(s,u) per comparator u
      for (std::size_t k = 0; k < values.size(); ++k) {
        const auto& q = values[k].Q[s];
        const auto& pi = policies[k].probs[s];
        for (int a = 0; a < A; ++a) {
          inner_sum += pi[a] * q[a];
          quad_sum += pi[a] * q[a] * q[a];
          comp[a] += q[a];
        }
      }
      const double rhs = std::log(static_cast<double>(A)) / eta + 0.5 * eta * quad_sum;
      for (int u = 0; u < A; ++u) {
        const double lhs = inner_sum - comp[u];
        const double slack = rhs - lhs;
        if (!any || slack < worst) worst = slack;
        any = true;
        if (slack < -kSuiteTol && ok) {
          ok = false;
          detail << "violated at context " << c << ", state " << s << ", comparator " << u;
        }
      }
    }
  }
  if (!any) worst = 0.0;
  check.passed = ok;
  check.worst_slack = worst;
  check.detail = detail.str();
  return check;
}

SuiteCheck check_change_of_measure(const RunResult& run) {
  SuiteCheck check;
  check.name = "change_of_measure";
  const auto& model = run.env.model;
  bool ok = true;
  bool any = false;
  double worst = 0.0;
  std::ostringstream detail;
  if (run.policies.empty()) {  // baseline runs carry no replayed sequence
    check.passed = true;
    return check;
  }
  for (std::size_t idx = 0; idx < run.records.size(); ++idx) {
    const int jd = run.records[idx].dyn_estimator_idx;
    for (int c = 0; c < model.num_contexts(); ++c) {
      const Policy& pi = run.policies[c][idx];
      const ChangeOfMeasureCheck cm = value_change_of_measure_check(
          pi, model.dynamics[c], run.env.dyn_class.candidates[jd][c], model.loss[c], model.space);
      const double slack = std::min(cm.forward_slack, cm.reverse_slack);
      if (!any || slack < worst) worst = slack;
      any = true;
      if (!(cm.forward_holds && cm.reverse_holds) && ok) {
        ok = false;
        detail << "violated at episode " << idx + 1 << ", context " << c;
      }
    }
  }
  if (!any) worst = 0.0;
  check.passed = ok;
  check.worst_slack = worst;
  check.detail = detail.str();
  return check;
}

SuiteCheck check_concentration(const RunResult& run, bool hellinger) {
  SuiteCheck check;
  const ExperimentConfig& cfg = run.config;
  const double T = cfg.episodes;
  const double H = cfg.horizon;
  double bound;
  if (hellinger) {
    check.name = "oracle_concentration_hellinger";
    bound = 2.0 * H * std::log(T * H * cfg.dyn_class_size / cfg.delta);
  } else {
    check.name = "oracle_concentration_sq";
    bound = 68.0 * H * std::log(2.0 * std::pow(T, 3.0) * cfg.loss_class_size / cfg.delta);
  }
  bool ok = true;
  double worst = bound;
  std::ostringstream detail;
  for (const RunRecord& rec : run.records) {
    const double value = hellinger ? rec.hellinger_diag : rec.sq_err_diag;
    const double slack = bound - value;
    if (slack < worst) worst = slack;
    if (slack < -kSuiteTol && ok) {
      ok = false;
      detail << "violated at episode " << rec.episode;
    }
  }
  check.passed = ok;
  check.worst_slack = worst;
  check.detail = detail.str();
  return check;
}

SuiteCheck check_azuma(const RunResult& run) {
  SuiteCheck check;
  check.name = "azuma_gap";
  const GapCheck gap = azuma_gap_check(run.records, run.config.horizon, run.config.delta);
  check.passed = gap.holds;
  check.worst_slack = gap.allowed - gap.gap;
  if (!gap.holds) check.detail = "realized-vs-expected regret gap exceeds the band";
  return check;
}

SuiteCheck check_increments(const RunResult& run) {
  SuiteCheck check;
  check.name = "nonnegative_increments";
  bool ok = true;
  bool any = false;
  double worst = 0.0;
  std::ostringstream detail;
  for (const RunRecord& rec : run.records) {
    const double slack = std::min(rec.regret_increment, rec.expected_regret_increment);
    if (!any || slack < worst) worst = slack;
    any = true;
    if (slack < -kComputedTol && ok) {
      ok = false;
      detail << "negative increment at episode " << rec.episode;
    }
  }
  if (!any) worst = 0.0;
  check.passed = ok;
  check.worst_slack = worst;
  check.detail = detail.str();
  return check;
}

}  // namespace

SuiteReport lemma_suite(const RunResult& run) {
  SuiteReport report;
  report.checks.push_back(check_log_sums(run));
  report.checks.push_back(check_omd(run));
  report.checks.push_back(check_change_of_measure(run));
  return report;
}

SuiteReport verification_suite(const RunResult& run) {
  SuiteReport report = lemma_suite(run);
  report.checks.push_back(check_concentration(run, false));
  report.checks.push_back(check_concentration(run, true));
  report.checks.push_back(check_azuma(run));
  report.checks.push_back(check_increments(run));
  return report;
}

double regret_loglog_slope(const std::vector<RunRecord>& records) {
  const int T = static_cast<int>(records.size());
  std::vector<double> xs, ys;
  for (int t = T / 2 + 1; t <= T; ++t) {
    const double cum = records[t - 1].cum_regret;
    if (cum <= 0.0) continue;
    xs.push_back(std::log(static_cast<double>(t)));
    ys.push_back(std::log(cum));
  }
  if (xs.size() < 2) return 0.0;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= xs.size();
  my /= ys.size();
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    num += (xs[i] - mx) * (ys[i] - my);
    den += (xs[i] - mx) * (xs[i] - mx);
  }
  if (den == 0.0) return 0.0;
  return num / den;
}

}  // namespace opocmdp
