#pragma once

#include <array>
#include <memory>
#include <optional>

#include "stlmpc/collision_net.hpp"
#include "stlmpc/locomotion_spec.hpp"

namespace stlmpc {

constexpr std::size_t kHorizonSteps = 3;
constexpr std::size_t kDecisionSize = 3 * kHorizonSteps;

struct DecisionVector {
  std::array<Vec2, kHorizonSteps> footholds{};
  std::array<double, kHorizonSteps> durations{};

  std::array<double, kDecisionSize> flat() const;
  static DecisionVector from_flat(const std::array<double, kDecisionSize>& z);
  std::vector<ControlInput> plan(double apex) const;
};

struct MpcWeights {
  double robustness = 10.0;
  double control = 1.0;
  double penalty = 1e3;
};

struct SolverConfig {
  MpcWeights weights;
  double beta = 30.0;
  double delta_col = 0.02;
  double tolerance = 1e-4;  // on the infinity norm of the projected gradient step
  int max_iters = 150;
  double violation_tol = 0.005;
  int penalty_escalations = 2;  // restarts with 10x penalty weight while violations exceed violation_tol
  double fd_step = 1e-6;
  double min_remaining = 0.01;  // shortest allowed remainder of the current step, seconds
  double budget_s = 0.033;
  bool enforce_budget = false;
  bool multi_start = true;          // try the seeds when the warm start ends infeasible
  bool always_multi_start = false;  // try the seeds even after a feasible warm start
  // Planner: CoM velocity error (m/s) against the previous plan's prediction above which the
  // replan explores all seeds.
  double reseed_mismatch = 0.05;
};

// Everything about the robot and task that stays fixed between replans.
struct PlannerSetup {
  ModelParams model;
  NominalGait nominal;
  RiemannianRegion region;
  FootBound bound;
  std::shared_ptr<const Mlp> collision;  // null disables the collision term
};

struct NlpProblem {
  ReducedState initial;
  const PlannerSetup* setup = nullptr;
  MpcWeights weights;
  double delta_col = 0.02;
  DecisionVector reference;  // nominal footholds and durations for the control cost
  std::array<double, kDecisionSize> lower{};
  std::array<double, kDecisionSize> upper{};
};

NlpProblem build_nlp(const ReducedState& state, const PlannerSetup& setup, const SolverConfig& config);

struct Objective {
  double value = 0.0;
  double smooth_robustness = 0.0;
  double control_cost = 0.0;
  double penalty = 0.0;
  double max_violation = 0.0;
};

// J(z) = -w_rho rho_beta + w_u control cost + w_pen (collision and reach penalties).
Objective evaluate_objective(const NlpProblem& problem, const DecisionVector& z, double beta);
// Same, with dJ/dz (analytic through the trace, finite differences through the rollout).
Objective evaluate_objective(const NlpProblem& problem, const DecisionVector& z, double beta, double fd_step,
                             std::array<double, kDecisionSize>& gradient);

DecisionVector project(const NlpProblem& problem, const DecisionVector& z);

struct SolveStats {
  int iterations = 0;
  double objective = 0.0;
  double max_violation = 0.0;
  double wall_time_s = 0.0;
  bool converged = false;
  bool timed_out = false;
  int start = 0;  // 0 warm, 1 nominal, 2 capture point, 3 crossed leg
  // J at the start point and after every accepted iterate of that start's first descent.
  std::vector<double> objective_history;
};

struct PlanResult {
  ReducedState initial;
  DecisionVector decision;
  stl::Trace trace;
  double robustness = 0.0;  // exact, recomputed on trace
  double control_cost = 0.0;
  SolveStats solve_stats;
  bool feasible = false;
};

// Plan traces are sampled on the absolute grid k * dt, so the first sample lies this far
// after the state's time.
double first_sample_offset(const ReducedState& state, const ModelParams& params);

// Spec over the full horizon of a trace with `samples` samples.
stl::Formula horizon_spec(const PlannerSetup& setup, std::size_t samples);

// Seeds for multi-start, in order: nominal, capture point, crossed-leg mirror.
std::array<DecisionVector, 3> seed_decisions(const NlpProblem& problem);

PlanResult solve(const NlpProblem& problem, const std::optional<DecisionVector>& warm_start,
                 const SolverConfig& config);

// Receding-horizon wrapper that owns the warm start.
class Planner {
 public:
  Planner(PlannerSetup setup, SolverConfig config);

  PlanResult replan(const ReducedState& measured);
  void reset();

  const PlannerSetup& setup() const { return *setup_; }
  const SolverConfig& config() const { return config_; }
  const std::optional<PlanResult>& last() const { return last_; }

 private:
  bool completed_step(const ReducedState& measured) const;

  std::shared_ptr<const PlannerSetup> setup_;
  SolverConfig config_;
  std::optional<PlanResult> last_;
  Leg last_stance_ = Leg::Left;
  Vec2 last_stance_pos_;
};

// CoM position and velocity the plan predicts at absolute time t.
std::pair<Vec2, Vec2> predicted_com(const PlanResult& plan, const PlannerSetup& setup, double t);

// Previous decision shifted to the measured state: a completed step is dropped and a
// nominal step appended; the first duration is clamped to stay ahead of the elapsed time.
DecisionVector shift_decision(const DecisionVector& previous, bool step_completed, const NlpProblem& problem);

}  // namespace stlmpc
