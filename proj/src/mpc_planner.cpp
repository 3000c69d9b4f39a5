#include "stlmpc/mpc_planner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace stlmpc {

std::array<double, kDecisionSize> DecisionVector::flat() const {
  std::array<double, kDecisionSize> z{};
  for (std::size_t k = 0; k < kHorizonSteps; ++k) {
    z[2 * k] = footholds[k].x;
    z[2 * k + 1] = footholds[k].y;
    z[2 * kHorizonSteps + k] = durations[k];
  }
  return z;
}

DecisionVector DecisionVector::from_flat(const std::array<double, kDecisionSize>& z) {
  DecisionVector d;
  for (std::size_t k = 0; k < kHorizonSteps; ++k) {
    d.footholds[k] = {z[2 * k], z[2 * k + 1]};
    d.durations[k] = z[2 * kHorizonSteps + k];
  }
  return d;
}

std::vector<ControlInput> DecisionVector::plan(double apex) const {
  std::vector<ControlInput> out;
  for (std::size_t k = 0; k < kHorizonSteps; ++k) out.push_back({footholds[k], durations[k], apex});
  return out;
}

NlpProblem build_nlp(const ReducedState& state, const PlannerSetup& setup, const SolverConfig& config) {
  const ModelParams& m = setup.model;
  const NominalGait& nom = setup.nominal;
  NlpProblem p;
  p.initial = state;
  p.setup = &setup;
  p.weights = config.weights;
  p.delta_col = config.delta_col;
  const auto ref = nominal_footholds(nom, state.stance_pos, state.stance_leg, static_cast<int>(kHorizonSteps));
  for (std::size_t k = 0; k < kHorizonSteps; ++k) {
    p.reference.footholds[k] = ref[k];
    p.reference.durations[k] = nom.gait.nominal_T;
  }
  const std::size_t d0 = 2 * kHorizonSteps;
  for (std::size_t k = 0; k < kHorizonSteps; ++k) {
    p.lower[d0 + k] = m.t_min;
    p.upper[d0 + k] = m.t_max;
  }
  p.lower[d0] = std::min(m.t_max, std::max(m.t_min, state.elapsed + config.min_remaining));
  // Footholds must be on the treadmill at touchdown for some admissible timing.
  double early = state.time - state.elapsed;
  double late = early;
  for (std::size_t k = 0; k < kHorizonSteps; ++k) {
    early += p.lower[d0 + k];
    late += p.upper[d0 + k];
    p.lower[2 * k] = setup.bound.x_min + m.belt_speed * early;
    p.upper[2 * k] = setup.bound.x_max + m.belt_speed * late;
    p.lower[2 * k + 1] = setup.bound.y_min;
    p.upper[2 * k + 1] = setup.bound.y_max;
  }
  return p;
}

DecisionVector project(const NlpProblem& problem, const DecisionVector& d) {
  auto z = d.flat();
  for (std::size_t i = 0; i < kDecisionSize; ++i) z[i] = std::clamp(z[i], problem.lower[i], problem.upper[i]);
  return DecisionVector::from_flat(z);
}

double first_sample_offset(const ReducedState& state, const ModelParams& params) {
  const double next = std::ceil(state.time / params.dt - 1e-9) * params.dt;
  return std::max(0.0, next - state.time);
}

stl::Formula horizon_spec(const PlannerSetup& setup, std::size_t samples) {
  const double horizon = static_cast<double>(samples > 0 ? samples - 1 : 0) * setup.model.dt;
  return build_loco_spec(setup.bound, setup.region, setup.nominal.gait, horizon);
}

namespace {

constexpr std::size_t kCh = 12;
using Row = std::array<double, kCh>;
enum : std::size_t { kComX, kComY, kVx, kVy, kRelX, kRelY, kSwX, kSwY, kSwZ, kFootX, kFootY, kLeft };

struct Sampled {
  std::vector<ControlInput> plan;
  std::vector<StepSegment> segs;
  std::vector<std::size_t> assign;
  std::vector<Row> rows;
};

// Samples the plan at the planner's grid. With `assign` given, each sample stays on the
// step it had at the base point so finite differences see one smooth branch.
Sampled sample(const NlpProblem& p, const DecisionVector& z, const std::vector<std::size_t>* assign) {
  const ModelParams& m = p.setup->model;
  Sampled s;
  s.plan = z.plan(p.setup->nominal.gait.swing_apex);
  s.segs = plan_segments(p.initial, s.plan, m);
  const double first = first_sample_offset(p.initial, m);
  if (assign) {
    s.assign = *assign;
  } else {
    const double total = s.segs.back().begin + s.segs.back().length;
    const auto n = static_cast<std::size_t>(std::max(0LL, std::llround((total - first) / m.dt))) + 1;
    s.assign.resize(n);
    for (std::size_t k = 0; k < n; ++k)
      s.assign[k] = segment_index(s.segs, first + static_cast<double>(k) * m.dt);
  }
  s.rows.resize(s.assign.size());
  for (std::size_t k = 0; k < s.assign.size(); ++k) {
    const std::size_t j = s.assign[k];
    const double t = first + static_cast<double>(k) * m.dt;
    const double tau = assign ? t : std::max(t, s.segs[j].begin);
    state_channels(segment_state(s.segs[j], s.plan[j], tau, m), m, s.rows[k]);
  }
  return s;
}

Features row_features(const Row& r) {
  return {r[kRelX], r[kRelY], r[kSwX] - r[kComX], r[kSwY] - r[kComY], r[kSwZ], r[kLeft] > 0.5 ? 1.0 : -1.0};
}

struct ReachTerm {
  double penalty = 0.0;
  double max_violation = 0.0;
};

ReachTerm reach_term(const NlpProblem& p, const Sampled& s) {
  const ModelParams& m = p.setup->model;
  ReachTerm out;
  for (std::size_t k = 0; k < s.segs.size(); ++k) {
    const StepSegment& seg = s.segs[k];
    const ReducedState end = segment_state(seg, s.plan[k], seg.begin + seg.length, m);
    const double over = std::max(0.0, norm(s.plan[k].next_foothold - end.com_pos) - m.max_reach);
    out.penalty += over * over;
    out.max_violation = std::max(out.max_violation, over);
  }
  return out;
}

double control_cost(const NlpProblem& p, const DecisionVector& z) {
  double c = 0.0;
  for (std::size_t k = 0; k < kHorizonSteps; ++k) {
    const Vec2 d = z.footholds[k] - p.reference.footholds[k];
    const double dt = z.durations[k] - p.reference.durations[k];
    c += d.x * d.x + d.y * d.y + dt * dt;
  }
  return c;
}

stl::Trace to_trace(const NlpProblem& p, const Sampled& s) {
  const auto names = rollout_channels();
  stl::Trace tr(p.setup->model.dt, p.initial.time + first_sample_offset(p.initial, p.setup->model));
  for (std::size_t c = 0; c < kCh; ++c) {
    std::vector<double> v(s.rows.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = s.rows[k][c];
    tr.add_channel(names[c], std::move(v));
  }
  add_riemannian_channels(tr, p.setup->model);
  return tr;
}

// Objective at a sampled point; with `dj` it also fills dJ/d(row values) for the trace part.
Objective objective_at(const NlpProblem& p, const DecisionVector& z, const Sampled& s, double beta,
                       std::vector<Row>* dj) {
  Objective o;
  const stl::Trace tr = to_trace(p, s);
  const stl::Formula spec = horizon_spec(*p.setup, s.rows.size());
  const auto rho = stl::smooth_robustness(spec, tr, 0, beta, dj != nullptr);
  o.smooth_robustness = rho.value;
  o.control_cost = control_cost(p, z);

  if (dj) {
    dj->assign(s.rows.size(), Row{});
    const double w = -p.weights.robustness;
    const double w2 = p.setup->model.omega() * p.setup->model.omega();
    for (std::size_t c = 0; c < kCh; ++c)
      for (std::size_t k = 0; k < s.rows.size(); ++k) (*dj)[k][c] = w * rho.gradient[c][k];
    const auto& gs = rho.gradient[tr.index_of("riem_sag")];
    const auto& gl = rho.gradient[tr.index_of("riem_lat")];
    for (std::size_t k = 0; k < s.rows.size(); ++k) {
      const Row& r = s.rows[k];
      (*dj)[k][kVx] += w * gs[k] * 2.0 * r[kVx];
      (*dj)[k][kRelX] += w * gs[k] * -2.0 * w2 * r[kRelX];
      (*dj)[k][kVy] += w * gl[k] * 2.0 * r[kVy];
      (*dj)[k][kRelY] += w * gl[k] * -2.0 * w2 * r[kRelY];
    }
  }

  double pen = 0.0;
  if (const Mlp* net = p.setup->collision.get()) {
    for (std::size_t k = 0; k < s.rows.size(); ++k) {
      const Features f = row_features(s.rows[k]);
      Features g{};
      const double margin = dj ? net->evaluate(f, g) : net->evaluate(f);
      const double v = p.delta_col - margin;
      if (v <= 0.0) continue;
      pen += v * v;
      o.max_violation = std::max(o.max_violation, v);
      if (dj) {
        // d(pen)/d(margin) = -2 v; features are differences of channels
        const double c = p.weights.penalty * -2.0 * v;
        Row& d = (*dj)[k];
        d[kRelX] += c * g[0];
        d[kRelY] += c * g[1];
        d[kSwX] += c * g[2];
        d[kComX] -= c * g[2];
        d[kSwY] += c * g[3];
        d[kComY] -= c * g[3];
        d[kSwZ] += c * g[4];
      }
    }
  }
  const ReachTerm reach = reach_term(p, s);
  pen += reach.penalty;
  o.max_violation = std::max(o.max_violation, reach.max_violation);
  o.penalty = pen;
  o.value = -p.weights.robustness * o.smooth_robustness + p.weights.control * o.control_cost +
            p.weights.penalty * pen;
  return o;
}

}  // namespace

Objective evaluate_objective(const NlpProblem& problem, const DecisionVector& z, double beta) {
  return objective_at(problem, z, sample(problem, z, nullptr), beta, nullptr);
}

Objective evaluate_objective(const NlpProblem& problem, const DecisionVector& z, double beta, double fd_step,
                             std::array<double, kDecisionSize>& gradient) {
  const Sampled base = sample(problem, z, nullptr);
  std::vector<Row> dj;
  const Objective o = objective_at(problem, z, base, beta, &dj);
  const auto zf = z.flat();
  for (std::size_t i = 0; i < kDecisionSize; ++i) {
    const double up = std::min(fd_step, problem.upper[i] - zf[i]);
    const double down = std::min(fd_step, zf[i] - problem.lower[i]);
    const bool duration = i >= 2 * kHorizonSteps;
    // Footholds are unconstrained in the dynamics; durations must stay admissible.
    const double a = duration ? std::max(0.0, up) : fd_step;
    const double b = duration ? std::max(0.0, down) : fd_step;
    if (a + b <= 0.0) {
      gradient[i] = 0.0;
      continue;
    }
    auto zp = zf, zm = zf;
    zp[i] += a;
    zm[i] -= b;
    const Sampled sp = a > 0 ? sample(problem, DecisionVector::from_flat(zp), &base.assign) : base;
    const Sampled sm = b > 0 ? sample(problem, DecisionVector::from_flat(zm), &base.assign) : base;
    double g = 0.0;
    for (std::size_t k = 0; k < base.rows.size(); ++k)
      for (std::size_t c = 0; c < kCh; ++c) {
        const double d = dj[k][c];
        if (d != 0.0) g += d * (sp.rows[k][c] - sm.rows[k][c]);
      }
    g += problem.weights.penalty * (reach_term(problem, sp).penalty - reach_term(problem, sm).penalty);
    g /= a + b;
    const std::size_t k = i < 2 * kHorizonSteps ? i / 2 : i - 2 * kHorizonSteps;
    const double ref = i < 2 * kHorizonSteps ? (i % 2 == 0 ? problem.reference.footholds[k].x
                                                           : problem.reference.footholds[k].y)
                                             : problem.reference.durations[k];
    g += problem.weights.control * 2.0 * (zf[i] - ref);
    gradient[i] = g;
  }
  return o;
}

namespace {

// Footholds from index `fixed` on are placed at the LIPM capture point at touchdown plus the
// nominal capture offset, rolling the pendulum through the given durations.
DecisionVector capture_chain(const NlpProblem& p, DecisionVector d, std::size_t fixed) {
  const ModelParams& m = p.setup->model;
  const Vec2 off = nominal_capture_offset(p.setup->nominal, m, 1.0);
  const double w = m.omega();
  const ReducedState& s = p.initial;
  AxisState ax{s.com_pos.x, s.com_vel.x};
  AxisState ay{s.com_pos.y, s.com_vel.y};
  Vec2 stance = s.stance_pos;
  Leg leg = s.stance_leg;
  for (std::size_t k = 0; k < kHorizonSteps; ++k) {
    const double rem = std::max(0.0, d.durations[k] - (k == 0 ? s.elapsed : 0.0));
    ax = lipm_flow(ax.x, ax.v, stance.x, rem, m);
    ay = lipm_flow(ay.x, ay.v, stance.y, rem, m);
    if (k >= fixed) d.footholds[k] = {ax.x + ax.v / w + off.x, ay.x + ay.v / w + lateral_sign(leg) * off.y};
    stance = d.footholds[k];
    leg = other(leg);
  }
  return project(p, d);
}

}  // namespace

std::array<DecisionVector, 3> seed_decisions(const NlpProblem& p) {
  const NominalGait& nom = p.setup->nominal;
  const ReducedState& s = p.initial;
  std::array<DecisionVector, 3> seeds;
  seeds[0] = project(p, p.reference);

  DecisionVector d = p.reference;
  for (double& t : d.durations) t = nom.gait.nominal_T;
  d.durations[0] = std::clamp(nom.gait.nominal_T, p.lower[2 * kHorizonSteps], p.upper[2 * kHorizonSteps]);
  seeds[1] = capture_chain(p, d, 0);
  // First step lands across the stance foot's sagittal line (on the stance side), far enough
  // forward to pass it, then keep capturing.
  const Vec2 p1 = seeds[1].footholds[0];
  const double side = lateral_sign(s.stance_leg);
  const double gap = std::max(std::abs(p1.y - s.stance_pos.y), nom.gait.step_width / 2.0);
  d.footholds[0] = {std::max(p1.x, s.stance_pos.x + 2.0 * nom.gait.step_length), s.stance_pos.y + side * gap};
  seeds[2] = capture_chain(p, project(p, d), 1);
  return seeds;
}

namespace {

using Vec9 = std::array<double, kDecisionSize>;
using Clock = std::chrono::steady_clock;

double dot(const Vec9& a, const Vec9& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < kDecisionSize; ++i) s += a[i] * b[i];
  return s;
}

struct Descent {
  DecisionVector z;
  Objective obj;
  int iterations = 0;
  bool converged = false;
  bool timed_out = false;
  std::vector<double> history;
};

Descent descend(const NlpProblem& p, const DecisionVector& start, const SolverConfig& cfg, Clock::time_point t0) {
  Descent out;
  Vec9 z = project(p, start).flat();
  Vec9 g{};
  Objective obj = evaluate_objective(p, DecisionVector::from_flat(z), cfg.beta, cfg.fd_step, g);
  std::array<Vec9, kDecisionSize> H{};
  bool identity = true;
  auto reset_h = [&] {
    for (std::size_t i = 0; i < kDecisionSize; ++i) {
      H[i].fill(0.0);
      H[i][i] = 1.0;
    }
    identity = true;
  };
  reset_h();
  out.history.push_back(obj.value);

  int it = 0;
  for (; it < cfg.max_iters; ++it) {
    if (cfg.enforce_budget && std::chrono::duration<double>(Clock::now() - t0).count() > cfg.budget_s) {
      out.timed_out = true;
      break;
    }
    double pg = 0.0;
    std::array<bool, kDecisionSize> active{};
    for (std::size_t i = 0; i < kDecisionSize; ++i) {
      const double zi = std::clamp(z[i] - g[i], p.lower[i], p.upper[i]);
      pg = std::max(pg, std::abs(zi - z[i]));
      active[i] = (z[i] <= p.lower[i] && g[i] > 0.0) || (z[i] >= p.upper[i] && g[i] < 0.0);
    }
    if (pg <= cfg.tolerance) {
      out.converged = true;
      break;
    }
    Vec9 gf = g;
    for (std::size_t i = 0; i < kDecisionSize; ++i)
      if (active[i]) gf[i] = 0.0;
    Vec9 d{};
    auto direction = [&] {
      for (std::size_t i = 0; i < kDecisionSize; ++i) {
        d[i] = 0.0;
        if (active[i]) continue;
        for (std::size_t j = 0; j < kDecisionSize; ++j) d[i] -= H[i][j] * gf[j];
      }
      if (identity) {
        // first step or after a reset: cap the move at 5 cm / 50 ms
        double mx = 0.0;
        for (double v : d) mx = std::max(mx, std::abs(v));
        if (mx > 0.05)
          for (double& v : d) v *= 0.05 / mx;
      }
    };
    direction();
    if (dot(d, g) >= 0.0) {
      reset_h();
      direction();
    }

    bool accepted = false;
    Vec9 zt{};
    Objective ot;
    for (double alpha = 1.0; alpha > 1e-6; alpha *= 0.5) {
      for (std::size_t i = 0; i < kDecisionSize; ++i)
        zt[i] = std::clamp(z[i] + alpha * d[i], p.lower[i], p.upper[i]);
      Vec9 step{};
      for (std::size_t i = 0; i < kDecisionSize; ++i) step[i] = zt[i] - z[i];
      ot = evaluate_objective(p, DecisionVector::from_flat(zt), cfg.beta);
      if (ot.value <= obj.value + 1e-4 * dot(g, step)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (identity) break;
      reset_h();
      continue;
    }
    Vec9 gt{};
    ot = evaluate_objective(p, DecisionVector::from_flat(zt), cfg.beta, cfg.fd_step, gt);
    Vec9 s{}, y{};
    for (std::size_t i = 0; i < kDecisionSize; ++i) {
      s[i] = zt[i] - z[i];
      y[i] = gt[i] - g[i];
    }
    const double sy = dot(s, y);
    if (sy > 1e-12) {
      if (identity) {
        const double scale = sy / dot(y, y);
        for (std::size_t i = 0; i < kDecisionSize; ++i) H[i][i] = scale;
      }
      // H <- (I - r s y^T) H (I - r y s^T) + r s s^T
      const double r = 1.0 / sy;
      Vec9 hy{};
      for (std::size_t i = 0; i < kDecisionSize; ++i)
        for (std::size_t j = 0; j < kDecisionSize; ++j) hy[i] += H[i][j] * y[j];
      const double yhy = dot(y, hy);
      for (std::size_t i = 0; i < kDecisionSize; ++i)
        for (std::size_t j = 0; j < kDecisionSize; ++j)
          H[i][j] += -r * (hy[i] * s[j] + s[i] * hy[j]) + (r * r * yhy + r) * s[i] * s[j];
      identity = false;
    }
    z = zt;
    g = gt;
    obj = ot;
    out.history.push_back(obj.value);
  }
  out.z = DecisionVector::from_flat(z);
  out.obj = obj;
  out.iterations = it;
  return out;
}

PlanResult finish(const NlpProblem& p, const Descent& d, const SolverConfig& cfg) {
  PlanResult r;
  r.initial = p.initial;
  r.decision = d.z;
  r.trace = rollout(p.initial, d.z.plan(p.setup->nominal.gait.swing_apex), p.setup->model,
                    first_sample_offset(p.initial, p.setup->model));
  add_riemannian_channels(r.trace, p.setup->model);
  const stl::Formula spec = horizon_spec(*p.setup, r.trace.size());
  r.robustness = stl::robustness(spec, r.trace, 0).value;
  r.control_cost = d.obj.control_cost;
  r.solve_stats.iterations = d.iterations;
  r.solve_stats.objective = d.obj.value;
  r.solve_stats.max_violation = d.obj.max_violation;
  r.solve_stats.converged = d.converged;
  r.solve_stats.timed_out = d.timed_out;
  r.feasible = r.robustness >= 0.0 && d.obj.max_violation <= cfg.violation_tol && stl::satisfies(spec, r.trace, 0);
  return r;
}

bool better(const PlanResult& a, const PlanResult& b) {
  if (a.feasible != b.feasible) return a.feasible;
  return a.solve_stats.objective < b.solve_stats.objective;
}

}  // namespace

PlanResult solve(const NlpProblem& problem, const std::optional<DecisionVector>& warm_start,
                 const SolverConfig& config) {
  if (!problem.setup) throw std::invalid_argument("problem has no setup");
  const auto t0 = Clock::now();
  std::optional<PlanResult> best;
  int iterations = 0;
  bool timed_out = false;
  auto run = [&](const DecisionVector& start, int id) {
    Descent d = descend(problem, start, config, t0);
    iterations += d.iterations;
    std::vector<double> history = std::move(d.history);
    // Penalty continuation: a run that ends with violations above tolerance restarts from its
    // endpoint with a stiffer penalty.
    NlpProblem stiff = problem;
    for (int e = 0; e < config.penalty_escalations && !d.timed_out && d.obj.max_violation > config.violation_tol;
         ++e) {
      stiff.weights.penalty *= 10.0;
      const int before = iterations;
      d = descend(stiff, d.z, config, t0);
      iterations = before + d.iterations;
      d.obj = evaluate_objective(problem, d.z, config.beta);
    }
    timed_out = timed_out || d.timed_out;
    PlanResult r = finish(problem, d, config);
    r.solve_stats.start = id;
    r.solve_stats.objective_history = std::move(history);
    if (!best || better(r, *best)) best = std::move(r);
  };
  if (warm_start) run(*warm_start, 0);
  if (!warm_start || config.always_multi_start || (config.multi_start && !best->feasible)) {
    const auto seeds = seed_decisions(problem);
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      if (timed_out) break;
      if (!config.multi_start && !config.always_multi_start && warm_start) break;
      run(seeds[i], static_cast<int>(i) + 1);
      if (!config.multi_start && !config.always_multi_start) break;
    }
  }
  best->solve_stats.iterations = iterations;
  best->solve_stats.timed_out = timed_out;
  best->solve_stats.wall_time_s = std::chrono::duration<double>(Clock::now() - t0).count();
  return *best;
}

DecisionVector shift_decision(const DecisionVector& previous, bool step_completed, const NlpProblem& problem) {
  DecisionVector d = previous;
  if (step_completed) {
    for (std::size_t k = 0; k + 1 < kHorizonSteps; ++k) {
      d.footholds[k] = previous.footholds[k + 1];
      d.durations[k] = previous.durations[k + 1];
    }
    d.durations[kHorizonSteps - 1] = previous.durations[kHorizonSteps - 1];
    return capture_chain(problem, project(problem, d), kHorizonSteps - 1);
  }
  return project(problem, d);
}

std::pair<Vec2, Vec2> predicted_com(const PlanResult& plan, const PlannerSetup& setup, double t) {
  const auto u = plan.decision.plan(setup.nominal.gait.swing_apex);
  const auto segs = plan_segments(plan.initial, u, setup.model);
  const double tau = t - plan.initial.time;
  const std::size_t k = segment_index(segs, tau);
  const ReducedState st = segment_state(segs[k], u[k], tau, setup.model);
  return {st.com_pos, st.com_vel};
}

Planner::Planner(PlannerSetup setup, SolverConfig config)
    : setup_(std::make_shared<const PlannerSetup>(std::move(setup))), config_(config) {}

void Planner::reset() { last_.reset(); }

bool Planner::completed_step(const ReducedState& measured) const {
  return measured.stance_leg != last_stance_ || norm(measured.stance_pos - last_stance_pos_) > 1e-12;
}

PlanResult Planner::replan(const ReducedState& measured) {
  for (double v : {measured.com_pos.x, measured.com_pos.y, measured.com_vel.x, measured.com_vel.y,
                   measured.swing_pos.x, measured.swing_pos.y, measured.swing_pos.z, measured.stance_pos.x,
                   measured.stance_pos.y, measured.elapsed, measured.time})
    if (!std::isfinite(v)) throw std::invalid_argument("measured state is not finite");
  const NlpProblem problem = build_nlp(measured, *setup_, config_);
  std::optional<DecisionVector> warm;
  if (last_) warm = shift_decision(last_->decision, completed_step(measured), problem);
  SolverConfig cfg = config_;
  if (last_) {
    const Vec2 v = predicted_com(*last_, *setup_, measured.time).second;
    if (norm(v - measured.com_vel) > config_.reseed_mismatch) cfg.always_multi_start = true;
  }
  PlanResult r = solve(problem, warm, cfg);
  last_ = r;
  last_stance_ = measured.stance_leg;
  last_stance_pos_ = measured.stance_pos;
  return r;
}

}  // namespace stlmpc
