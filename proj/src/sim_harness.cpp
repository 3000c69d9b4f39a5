#include "stlmpc/sim_harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "json.hpp"

namespace stlmpc {

using nlohmann::json;

// ---------------------------------------------------------------- config

void HarnessConfig::validate() const {
  try {
    model.validate();
    treadmill.validate();
    nominal_gait(gait, model);
    calibrate_region(nominal_gait(gait, model), region_margin, region_normalizer).validate();
    collision.geometry.validate();
  } catch (const std::exception& e) {
    throw InfeasibleConfigError(e.what());
  }
  const auto& w = mpc.weights;
  if (!(w.robustness > 0 && w.control > 0 && w.penalty > 0)) throw InfeasibleConfigError("mpc weights must be positive");
  if (!(mpc.beta > 0)) throw InfeasibleConfigError("mpc.beta must be positive");
  if (!(mpc.delta_col >= 0)) throw InfeasibleConfigError("mpc.delta_col must be non-negative");
  if (!(mpc.tolerance > 0 && mpc.max_iters > 0 && mpc.fd_step > 0)) throw InfeasibleConfigError("bad solver limits");
  if (mpc.penalty_escalations < 0 || !(mpc.reseed_mismatch > 0))
    throw InfeasibleConfigError("bad penalty escalation count or reseed threshold");
  if (!(control_rate > 0)) throw InfeasibleConfigError("control rate must be positive");
  if (!(state_noise >= 0)) throw InfeasibleConfigError("state noise must be non-negative");
  if (!treadmill.contains({0.0, gait.step_width / 2.0}) || !treadmill.contains({0.0, -gait.step_width / 2.0}))
    throw InfeasibleConfigError("nominal footholds are off the treadmill");
  if (sweep.phases.empty() || sweep.directions <= 0) throw InfeasibleConfigError("empty sweep grid");
  for (double s : sweep.phases)
    if (!(s >= 0.0 && s < 1.0)) throw InfeasibleConfigError("sweep phase outside [0, 1)");
  if (!(sweep.force_cap > 0 && sweep.resolution > 0 && sweep.push_duration > 0))
    throw InfeasibleConfigError("sweep force cap, resolution and push duration must be positive");
  if (sweep.steps_after_push < 3) throw InfeasibleConfigError("sweep.steps_after_push must be at least 3");
  if (collision.samples == 0) throw InfeasibleConfigError("collision.samples must be positive");
}

namespace {

// Reads known keys of one section and rejects the rest.
class Section {
 public:
  Section(const json& root, const char* name) : name_(name) {
    if (root.contains(name)) {
      if (!root[name].is_object()) throw InfeasibleConfigError(std::string(name) + " must be an object");
      obj_ = root[name];
    }
  }
  template <class T>
  void get(const char* key, T& out) {
    seen_.push_back(key);
    if (!obj_.contains(key)) return;
    try {
      out = obj_[key].get<T>();
    } catch (const json::exception& e) {
      throw InfeasibleConfigError(name_ + "." + key + ": " + e.what());
    }
  }
  void finish() const {
    for (const auto& item : obj_.items())
      if (std::find(seen_.begin(), seen_.end(), item.key()) == seen_.end())
        throw InfeasibleConfigError("unknown config key " + name_ + "." + item.key());
  }
  bool has(const char* key) const { return obj_.contains(key); }

 private:
  std::string name_;
  json obj_ = json::object();
  std::vector<std::string> seen_;
};

}  // namespace

HarnessConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw InfeasibleConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw InfeasibleConfigError("config must be a JSON object");
  for (const auto& item : root.items()) {
    static const std::vector<std::string> known{"model", "gait", "riemannian", "treadmill", "mpc", "collision", "sweep"};
    if (std::find(known.begin(), known.end(), item.key()) == known.end())
      throw InfeasibleConfigError("unknown config section " + item.key());
  }
  HarnessConfig c;
  Section model(root, "model");
  model.get("h", c.model.h);
  model.get("g", c.model.g);
  model.get("mass", c.model.mass);
  model.get("t_min", c.model.t_min);
  model.get("t_max", c.model.t_max);
  model.get("dt", c.model.dt);
  model.get("max_reach", c.model.max_reach);
  model.finish();

  Section gait(root, "gait");
  gait.get("step_length", c.gait.step_length);
  gait.get("step_width", c.gait.step_width);
  gait.get("nominal_T", c.gait.nominal_T);
  gait.get("keyframe_tol", c.gait.keyframe_tol);
  gait.get("swing_apex", c.gait.swing_apex);
  gait.finish();

  Section riem(root, "riemannian");
  riem.get("margin_fraction", c.region_margin);
  riem.get("normalizer_factor", c.region_normalizer);
  riem.finish();

  Section tm(root, "treadmill");
  tm.get("x_min", c.treadmill.x_min);
  tm.get("x_max", c.treadmill.x_max);
  tm.get("y_min", c.treadmill.y_min);
  tm.get("y_max", c.treadmill.y_max);
  tm.get("scale", c.treadmill.scale);
  // the belt runs at the nominal walking speed unless given
  c.model.belt_speed = c.gait.nominal_T > 0 ? c.gait.step_length / c.gait.nominal_T : 0.0;
  tm.get("belt_speed", c.model.belt_speed);
  tm.finish();

  Section mpc(root, "mpc");
  mpc.get("w_rho", c.mpc.weights.robustness);
  mpc.get("w_u", c.mpc.weights.control);
  mpc.get("w_pen", c.mpc.weights.penalty);
  mpc.get("beta", c.mpc.beta);
  mpc.get("delta_col", c.mpc.delta_col);
  mpc.get("tolerance", c.mpc.tolerance);
  mpc.get("max_iters", c.mpc.max_iters);
  mpc.get("violation_tol", c.mpc.violation_tol);
  mpc.get("fd_step", c.mpc.fd_step);
  mpc.get("min_remaining", c.mpc.min_remaining);
  mpc.get("budget_s", c.mpc.budget_s);
  mpc.get("enforce_budget", c.mpc.enforce_budget);
  mpc.get("multi_start", c.mpc.multi_start);
  mpc.get("penalty_escalations", c.mpc.penalty_escalations);
  mpc.get("reseed_mismatch", c.mpc.reseed_mismatch);
  mpc.get("control_rate", c.control_rate);
  mpc.get("state_noise", c.state_noise);
  mpc.finish();

  Section col(root, "collision");
  col.get("hip_offset", c.collision.geometry.hip_offset);
  col.get("leg_radius", c.collision.geometry.leg_radius);
  c.collision.geometry.pelvis_height = c.model.h;
  col.get("samples", c.collision.samples);
  col.get("seed", c.collision.seed);
  col.get("hidden", c.collision.train.hidden);
  col.get("epochs", c.collision.train.epochs);
  col.get("batch", c.collision.train.batch);
  col.get("learning_rate", c.collision.train.learning_rate);
  col.get("momentum", c.collision.train.momentum);
  col.get("validation_fraction", c.collision.train.validation_fraction);
  col.get("boundary_fraction", c.collision.ranges.boundary_fraction);
  col.get("boundary_band", c.collision.ranges.boundary_band);
  col.get("model_path", c.collision.model_path);
  col.finish();
  c.collision.train.seed = c.collision.seed;

  Section sw(root, "sweep");
  sw.get("phases", c.sweep.phases);
  sw.get("directions", c.sweep.directions);
  sw.get("force_cap", c.sweep.force_cap);
  sw.get("resolution", c.sweep.resolution);
  sw.get("push_duration", c.sweep.push_duration);
  sw.get("steps_after_push", c.sweep.steps_after_push);
  sw.finish();

  c.validate();
  return c;
}

HarnessConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InfeasibleConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const HarnessConfig& c) {
  json j;
  j["model"] = {{"h", c.model.h},         {"g", c.model.g},   {"mass", c.model.mass},
                {"t_min", c.model.t_min}, {"t_max", c.model.t_max}, {"dt", c.model.dt},
                {"max_reach", c.model.max_reach}};
  j["gait"] = {{"step_length", c.gait.step_length}, {"step_width", c.gait.step_width},
               {"nominal_T", c.gait.nominal_T},     {"keyframe_tol", c.gait.keyframe_tol},
               {"swing_apex", c.gait.swing_apex}};
  j["riemannian"] = {{"margin_fraction", c.region_margin}, {"normalizer_factor", c.region_normalizer}};
  j["treadmill"] = {{"x_min", c.treadmill.x_min}, {"x_max", c.treadmill.x_max}, {"y_min", c.treadmill.y_min},
                    {"y_max", c.treadmill.y_max}, {"scale", c.treadmill.scale},
                    {"belt_speed", c.model.belt_speed}};
  j["mpc"] = {{"w_rho", c.mpc.weights.robustness},
              {"w_u", c.mpc.weights.control},
              {"w_pen", c.mpc.weights.penalty},
              {"beta", c.mpc.beta},
              {"delta_col", c.mpc.delta_col},
              {"tolerance", c.mpc.tolerance},
              {"max_iters", c.mpc.max_iters},
              {"violation_tol", c.mpc.violation_tol},
              {"fd_step", c.mpc.fd_step},
              {"min_remaining", c.mpc.min_remaining},
              {"budget_s", c.mpc.budget_s},
              {"enforce_budget", c.mpc.enforce_budget},
              {"multi_start", c.mpc.multi_start},
              {"penalty_escalations", c.mpc.penalty_escalations},
              {"reseed_mismatch", c.mpc.reseed_mismatch},
              {"control_rate", c.control_rate},
              {"state_noise", c.state_noise}};
  j["collision"] = {{"hip_offset", c.collision.geometry.hip_offset},
                    {"leg_radius", c.collision.geometry.leg_radius},
                    {"samples", c.collision.samples},
                    {"seed", c.collision.seed},
                    {"hidden", c.collision.train.hidden},
                    {"epochs", c.collision.train.epochs},
                    {"batch", c.collision.train.batch},
                    {"learning_rate", c.collision.train.learning_rate},
                    {"momentum", c.collision.train.momentum},
                    {"validation_fraction", c.collision.train.validation_fraction},
                    {"boundary_fraction", c.collision.ranges.boundary_fraction},
                    {"boundary_band", c.collision.ranges.boundary_band},
                    {"model_path", c.collision.model_path}};
  j["sweep"] = {{"phases", c.sweep.phases},
                {"directions", c.sweep.directions},
                {"force_cap", c.sweep.force_cap},
                {"resolution", c.sweep.resolution},
                {"push_duration", c.sweep.push_duration},
                {"steps_after_push", c.sweep.steps_after_push}};
  return j.dump(2);
}

// ---------------------------------------------------------------- controllers

double Perturbation::angle() const { return std::numbers::pi / 6.0 * direction_index; }

ReducedState apply_push(const ReducedState& state, const Perturbation& p, double mass) {
  ReducedState s = state;
  const double dv = p.magnitude * p.duration / mass;
  s.com_vel.x += dv * std::cos(p.angle());
  s.com_vel.y += dv * std::sin(p.angle());
  return s;
}

ControlInput baseline_controller(const ReducedState& state, const NominalGait& nominal, const ModelParams& params,
                                 const FootBound& bound) {
  const double T = nominal.gait.nominal_T;
  const Vec2 off = nominal_capture_offset(nominal, params, state.elapsed / T);
  const double sgn = lateral_sign(state.stance_leg);
  const double w = params.omega();
  Vec2 p{state.com_pos.x + state.com_vel.x / w + off.x, state.com_pos.y + state.com_vel.y / w + sgn * off.y};
  const double t_td = state.time - state.elapsed + T;
  p.x = std::clamp(p.x, bound.x_min + params.belt_speed * t_td, bound.x_max + params.belt_speed * t_td);
  p.y = std::clamp(p.y, bound.y_min, bound.y_max);
  return {p, T, nominal.gait.swing_apex};
}

const char* controller_name(Controller c) { return c == Controller::StlMpc ? "stl" : "baseline"; }

std::shared_ptr<const Mlp> obtain_collision_model(const CollisionConfig& config) {
  if (!config.model_path.empty()) {
    std::ifstream in(config.model_path);
    if (!in) throw InfeasibleConfigError("cannot read collision model " + config.model_path);
    std::stringstream ss;
    ss << in.rdbuf();
    return std::make_shared<const Mlp>(Mlp::from_json(ss.str()));
  }
  const auto data = sample_dataset(config.samples, config.geometry, config.ranges, config.seed);
  TrainConfig tc = config.train;
  tc.seed = config.seed;
  return std::make_shared<const Mlp>(train_mlp(data, tc).net);
}

Experiment make_experiment(const HarnessConfig& config, std::shared_ptr<const Mlp> collision) {
  config.validate();
  Experiment e;
  e.config = config;
  e.setup.model = config.model;
  e.setup.nominal = nominal_gait(config.gait, config.model);
  e.setup.region = calibrate_region(e.setup.nominal, config.region_margin, config.region_normalizer);
  e.setup.bound = config.treadmill;
  e.setup.collision = std::move(collision);
  e.geometry = config.collision.geometry;
  e.geometry.pelvis_height = config.model.h;
  return e;
}

// ---------------------------------------------------------------- episodes

namespace {

constexpr int kPushStep = 2;
constexpr double kEventTol = 1e-12;
constexpr int kMarginSubsamples = 4;

// Smallest tau >= 0 with rel_x(tau) = 0 under the stance flow, or -1.
double keyframe_offset(const ReducedState& s, const ModelParams& m) {
  const double w = m.omega();
  const double r0 = s.com_pos.x - s.stance_pos.x;
  const double v0 = s.com_vel.x;
  if (r0 == 0.0) return 0.0;
  if (v0 == 0.0) return -1.0;
  const double arg = -r0 * w / v0;
  if (arg < 0.0 || arg >= 1.0) return -1.0;
  return std::atanh(arg) / w;
}

bool finite_state(const ReducedState& s) {
  for (double v : {s.com_pos.x, s.com_pos.y, s.com_vel.x, s.com_vel.y, s.swing_pos.x, s.swing_pos.y, s.swing_pos.z})
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace

EpisodeResult run_episode(Controller controller, const std::optional<Perturbation>& push, const Experiment& exp,
                          const EpisodeOptions& opt) {
  const ModelParams& m = exp.setup.model;
  const NominalGait& nom = exp.setup.nominal;
  const FootBound& bound = exp.setup.bound;
  const double apex = nom.gait.swing_apex;
  const double period = 1.0 / exp.config.control_rate;
  const int last_step = kPushStep + opt.steps_after_push;

  EpisodeResult res;
  res.push_step = kPushStep;
  res.min_collision_margin = std::numeric_limits<double>::infinity();

  ReducedState s = nom.keyframe;
  s.time = 0.0;
  ControlInput u{{}, nom.gait.nominal_T, apex};
  Vec3 anchor = s.swing_pos;
  double anchor_phase = s.phase;
  int step = 0;
  bool pushed = false;
  double reference_time = -1.0;  // keyframes at or after this count toward recovery
  int keyframe_step = -1;

  std::optional<Planner> planner;
  if (controller == Controller::StlMpc) planner.emplace(exp.setup, exp.config.mpc);
  std::mt19937_64 rng(exp.config.seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  std::vector<std::array<double, 12>> rows;
  std::vector<double> margins;
  std::size_t next_sample = 0;

  auto control = [&] {
    ReducedState measured = s;
    if (exp.config.state_noise > 0) {
      const double sd = exp.config.state_noise;
      measured.com_pos.x += sd * noise(rng);
      measured.com_pos.y += sd * noise(rng);
      measured.com_vel.x += sd * noise(rng);
      measured.com_vel.y += sd * noise(rng);
    }
    if (planner) {
      PlanResult r = planner->replan(measured);
      res.solve_times.push_back(r.solve_stats.wall_time_s);
      u = {r.decision.footholds[0], r.decision.durations[0], apex};
      if (opt.on_plan) opt.on_plan(r);
      if (opt.keep_plans) res.plans.push_back(std::move(r));
    } else {
      u = baseline_controller(measured, nom, m, bound);
    }
    u.step_duration = std::clamp(u.step_duration, m.t_min, m.t_max);
    u.step_duration = std::max(u.step_duration, s.elapsed);
    anchor = s.swing_pos;
    anchor_phase = s.elapsed / u.step_duration;
    s.phase = anchor_phase;
  };

  // Recovery bookkeeping; returns true once the outcome is known.
  std::vector<int> good_steps;
  auto decided = [&]() -> bool {
    if (res.fell || res.left_treadmill || res.min_collision_margin < 0.0) return true;
    for (int j = kPushStep; j <= kPushStep + 1; ++j) {
      const bool a = std::find(good_steps.begin(), good_steps.end(), j) != good_steps.end();
      const bool b = std::find(good_steps.begin(), good_steps.end(), j + 1) != good_steps.end();
      if (a && b) {
        res.recovered = true;
        res.steps_to_recover = j - kPushStep + 1;
        return true;
      }
    }
    return step > kPushStep + 2;
  };

  control();
  long tick = 1;
  bool done = false;
  while (!done) {
    const double t_td = s.time + (u.step_duration - s.elapsed);
    double t_push = std::numeric_limits<double>::infinity();
    if (push && !pushed && step == kPushStep)
      t_push = std::max(s.time, s.time + push->phase * u.step_duration - s.elapsed);
    const double t_tick = static_cast<double>(tick) * period;
    const double t_next = std::min({t_tick, t_td, t_push});
    const double span = t_next - s.time;

    // samples strictly before the event
    for (;;) {
      const double ts = static_cast<double>(next_sample) * m.dt;
      if (ts >= t_next - kEventTol) break;
      const ReducedState st = flow_step(s, anchor, anchor_phase, u, std::max(0.0, ts - s.time), m);
      std::array<double, 12> row{};
      state_channels(st, m, row);
      rows.push_back(row);
      for (int q = 0; q < kMarginSubsamples; ++q) {
        const double tq = ts + m.dt * q / kMarginSubsamples;
        if (tq >= t_next - kEventTol) break;
        const double mg = capsule_margin(flow_step(s, anchor, anchor_phase, u, std::max(0.0, tq - s.time), m),
                                         exp.geometry);
        res.min_collision_margin = std::min(res.min_collision_margin, mg);
      }
      margins.push_back(capsule_margin(st, exp.geometry));
      if (!bound.contains({row[9], row[10]})) res.left_treadmill = true;
      if (!finite_state(st) || norm(st.com_pos - st.stance_pos) > 1.0) res.fell = true;
      ++next_sample;
    }

    // keyframe inside [s.time, t_next)
    if (keyframe_step != step) {
      const double tk = keyframe_offset(s, m);
      if (tk >= 0.0 && tk < span - kEventTol) {
        const ReducedState kf = flow_step(s, anchor, anchor_phase, u, tk, m);
        Keyframe k{step, kf.time, riemannian_distance(kf, exp.setup.region, m)};
        res.keyframes.push_back(k);
        keyframe_step = step;
        if (reference_time >= 0.0 && k.time >= reference_time - kEventTol && k.distance > 0.0)
          good_steps.push_back(step);
      }
    }

    s = flow_step(s, anchor, anchor_phase, u, span, m);
    s.time = t_next;
    if (!finite_state(s) || norm(s.com_pos - s.stance_pos) > 1.0) res.fell = true;

    bool replanned = false;
    if (t_next >= t_td - kEventTol) {
      Vec2 p = u.next_foothold;
      const Vec2 d = p - s.com_pos;
      if (norm(d) > m.max_reach) p = s.com_pos + (m.max_reach / norm(d)) * d;
      res.touchdowns.push_back({step, s.time, p, s.stance_pos, other(s.stance_leg)});
      s = reset_map(s, p);
      ++step;
      if (step == kPushStep && !push) reference_time = s.time;
      if (step > last_step) done = true;
      if (!done && !(opt.stop_when_decided && decided())) {
        control();
        replanned = true;
      }
    }
    if (push && !pushed && t_next >= t_push - kEventTol && step == kPushStep) {
      s = apply_push(s, *push, m.mass);
      pushed = true;
      res.push_time = s.time;
      reference_time = s.time;
    }
    if (t_next >= t_tick - kEventTol) {
      ++tick;
      if (!replanned && !done) control();
    }
    if (res.fell) done = true;
    if (opt.stop_when_decided && decided()) done = true;
  }
  decided();
  if (res.fell || res.left_treadmill || res.min_collision_margin < 0.0) {
    res.recovered = false;
    res.steps_to_recover = 0;
  }
  if (!std::isfinite(res.min_collision_margin)) res.min_collision_margin = 0.0;

  const auto names = rollout_channels();
  stl::Trace tr(m.dt, 0.0);
  for (std::size_t c = 0; c < names.size(); ++c) {
    std::vector<double> v(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) v[k] = rows[k][c];
    tr.add_channel(names[c], std::move(v));
  }
  if (!rows.empty()) add_riemannian_channels(tr, m);
  tr.add_channel("capsule_margin", std::move(margins));
  res.trace = std::move(tr);
  return res;
}

// ---------------------------------------------------------------- sweep

ForceResult max_recoverable_force(Controller controller, int direction_index, double phase, const Experiment& exp,
                                  const std::function<void(const PlanResult&)>& on_plan) {
  const SweepConfig& sc = exp.config.sweep;
  EpisodeOptions opt;
  opt.steps_after_push = sc.steps_after_push;
  opt.stop_when_decided = true;
  opt.keep_plans = false;
  opt.on_plan = on_plan;
  ForceResult out;
  auto recovers = [&](long units) {
    ++out.episodes;
    Perturbation p{direction_index, static_cast<double>(units) * sc.resolution, sc.push_duration, phase};
    return run_episode(controller, p, exp, opt).recovered;
  };
  const long cap = static_cast<long>(std::floor(sc.force_cap / sc.resolution + 1e-9));
  if (!recovers(0)) {
    out.failed = true;
    out.error = "unperturbed walking does not recover";
    return out;
  }
  if (recovers(cap)) {
    out.max_force = static_cast<double>(cap) * sc.resolution;
    out.saturated = true;
    return out;
  }
  long lo = 0, hi = cap;
  while (hi - lo > 1) {
    const long mid = lo + (hi - lo) / 2;
    (recovers(mid) ? lo : hi) = mid;
  }
  if (lo >= 2 && !recovers(lo / 2)) out.non_monotone = true;
  out.max_force = static_cast<double>(lo) * sc.resolution;
  return out;
}

const SpiderRow* SpiderTable::find(Controller c, double phase, int direction) const {
  for (const auto& r : rows)
    if (r.controller == c && r.phase == phase && r.direction_index == direction) return &r;
  return nullptr;
}

double SpiderTable::dominance_fraction(bool strict) const {
  int cells = 0, dominated = 0;
  for (const auto& r : rows) {
    if (r.controller != Controller::StlMpc) continue;
    const SpiderRow* b = find(Controller::Baseline, r.phase, r.direction_index);
    if (!b) continue;
    ++cells;
    const double a = r.result.failed ? -1.0 : r.result.max_force;
    const double c = b->result.failed ? -1.0 : b->result.max_force;
    if (strict ? a > c : a >= c) ++dominated;
  }
  return cells ? static_cast<double>(dominated) / cells : 0.0;
}

SpiderTable sweep(const std::vector<Controller>& controllers, const Experiment& exp,
                  const std::function<void(const PlanResult&)>& on_plan,
                  const std::function<void(const SpiderRow&)>& on_row) {
  SpiderTable t;
  for (Controller c : controllers)
    for (double phase : exp.config.sweep.phases)
      for (int d = 0; d < exp.config.sweep.directions; ++d) {
        SpiderRow row{c, phase, d, {}};
        try {
          row.result = max_recoverable_force(c, d, phase, exp, on_plan);
        } catch (const std::exception& e) {
          row.result.failed = true;
          row.result.error = e.what();
        }
        if (on_row) on_row(row);
        t.rows.push_back(std::move(row));
      }
  std::sort(t.rows.begin(), t.rows.end(), [](const SpiderRow& a, const SpiderRow& b) {
    if (a.controller != b.controller) return a.controller < b.controller;
    if (a.phase != b.phase) return a.phase < b.phase;
    return a.direction_index < b.direction_index;
  });
  return t;
}

namespace {

std::string num(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

void write_spider_csv(std::ostream& os, const SpiderTable& table) {
  os << "controller,phase,direction_index,angle_deg,max_force,saturated,non_monotone,failed\n";
  for (const auto& r : table.rows)
    os << controller_name(r.controller) << ',' << num(r.phase) << ',' << r.direction_index << ','
       << num(30.0 * r.direction_index) << ',' << num(r.result.max_force) << ',' << r.result.saturated << ','
       << r.result.non_monotone << ',' << r.result.failed << '\n';
}

std::string spider_summary_json(const SpiderTable& table, double wall_time_s) {
  json j;
  json cells = json::array();
  for (const auto& r : table.rows) {
    if (r.controller != Controller::StlMpc) continue;
    const SpiderRow* b = table.find(Controller::Baseline, r.phase, r.direction_index);
    if (!b) continue;
    cells.push_back({{"phase", r.phase},
                     {"direction_index", r.direction_index},
                     {"stl", r.result.max_force},
                     {"baseline", b->result.max_force},
                     {"dominates", r.result.max_force >= b->result.max_force && !r.result.failed},
                     {"strictly", r.result.max_force > b->result.max_force && !r.result.failed}});
  }
  j["cells"] = cells;
  j["dominance_fraction"] = table.dominance_fraction(false);
  j["strict_dominance_fraction"] = table.dominance_fraction(true);
  json failed = json::array();
  for (const auto& r : table.rows)
    if (r.result.failed)
      failed.push_back({{"controller", controller_name(r.controller)},
                        {"phase", r.phase},
                        {"direction_index", r.direction_index},
                        {"error", r.result.error}});
  j["failed_cells"] = failed;
  j["wall_time_s"] = wall_time_s;
  return j.dump(2);
}

void write_trace_csv(std::ostream& os, const stl::Trace& trace) {
  os << "time";
  for (const auto& n : trace.names()) os << ',' << n;
  os << '\n';
  for (std::size_t k = 0; k < trace.size(); ++k) {
    os << num(trace.time(k));
    for (std::size_t c = 0; c < trace.num_channels(); ++c) os << ',' << num(trace.channel(c)[k]);
    os << '\n';
  }
}

std::string episode_json(const EpisodeResult& r, Controller controller, const std::optional<Perturbation>& push) {
  json j;
  j["controller"] = controller_name(controller);
  if (push)
    j["push"] = {{"direction_index", push->direction_index},
                 {"magnitude", push->magnitude},
                 {"duration", push->duration},
                 {"phase", push->phase},
                 {"time", r.push_time}};
  j["recovered"] = r.recovered;
  j["steps_to_recover"] = r.steps_to_recover;
  j["min_collision_margin"] = r.min_collision_margin;
  j["fell"] = r.fell;
  j["left_treadmill"] = r.left_treadmill;
  json kf = json::array();
  for (const auto& k : r.keyframes) kf.push_back({{"step", k.step}, {"time", k.time}, {"distance", k.distance}});
  j["keyframes"] = kf;
  json td = json::array();
  for (const auto& t : r.touchdowns)
    td.push_back({{"step", t.step},
                  {"time", t.time},
                  {"foothold", {t.foothold.x, t.foothold.y}},
                  {"stance", {t.stance.x, t.stance.y}},
                  {"landing", t.landing == Leg::Left ? "left" : "right"}});
  j["touchdowns"] = td;
  json plans = json::array();
  for (const auto& p : r.plans)
    plans.push_back({{"time", p.trace.t0()},
                     {"feasible", p.feasible},
                     {"robustness", p.robustness},
                     {"iterations", p.solve_stats.iterations},
                     {"start", p.solve_stats.start},
                     {"wall_time_s", p.solve_stats.wall_time_s}});
  j["plans"] = plans;
  return j.dump(2);
}

}  // namespace stlmpc
