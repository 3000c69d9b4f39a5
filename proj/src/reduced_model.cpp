#include "stlmpc/reduced_model.hpp"

#include <algorithm>
#include <array>
#include <string>

namespace stlmpc {

void ModelParams::validate() const {
  if (!(h > 0 && g > 0 && mass > 0 && t_min > 0 && t_max >= t_min && dt > 0 && max_reach > 0))
    throw std::invalid_argument("model parameters must be positive with t_min <= t_max");
}

AxisState lipm_flow(double x0, double v0, double p, double t, const ModelParams& params) {
  const double w = params.omega();
  const double c = std::cosh(w * t);
  const double s = std::sinh(w * t);
  return {p + (x0 - p) * c + (v0 / w) * s, (x0 - p) * w * s + v0 * c};
}

namespace {

double smoothstep(double s) { return s * s * (3.0 - 2.0 * s); }
double hermite_decay(double s) { return (1.0 - s) * (1.0 - s) * (1.0 + 2.0 * s); }
double apex_bump(double apex, double s) { return 16.0 * apex * s * s * (1.0 - s) * (1.0 - s); }

}  // namespace

Vec3 swing_trajectory(const Vec3& from, const Vec2& to, double apex, double s) {
  s = std::clamp(s, 0.0, 1.0);
  const double b = smoothstep(s);
  return {from.x + (to.x - from.x) * b, from.y + (to.y - from.y) * b,
          from.z * hermite_decay(s) + apex_bump(apex, s)};
}

Vec3 swing_position(const Vec3& anchor, double anchor_phase, const Vec2& to, double apex, double phase) {
  phase = std::clamp(phase, 0.0, 1.0);
  anchor_phase = std::clamp(anchor_phase, 0.0, 1.0);
  const double remaining = 1.0 - anchor_phase;
  const double sigma = remaining > 1e-12 ? std::clamp((phase - anchor_phase) / remaining, 0.0, 1.0) : 1.0;
  const double b = smoothstep(sigma);
  const double z = apex_bump(apex, phase) + (anchor.z - apex_bump(apex, anchor_phase)) * hermite_decay(sigma);
  return {anchor.x + (to.x - anchor.x) * b, anchor.y + (to.y - anchor.y) * b, std::max(0.0, z)};
}

ReducedState reset_map(const ReducedState& state, const Vec2& touchdown) {
  ReducedState next = state;
  next.swing_pos = {state.stance_pos.x, state.stance_pos.y, 0.0};
  next.stance_pos = touchdown;
  next.stance_leg = other(state.stance_leg);
  next.phase = 0.0;
  next.elapsed = 0.0;
  return next;
}

ReducedState flow_step(const ReducedState& state, const Vec3& anchor, double anchor_phase,
                       const ControlInput& u, double t, const ModelParams& params) {
  ReducedState next = state;
  const AxisState ax = lipm_flow(state.com_pos.x, state.com_vel.x, state.stance_pos.x, t, params);
  const AxisState ay = lipm_flow(state.com_pos.y, state.com_vel.y, state.stance_pos.y, t, params);
  next.com_pos = {ax.x, ay.x};
  next.com_vel = {ax.v, ay.v};
  next.elapsed = state.elapsed + t;
  next.time = state.time + t;
  next.phase = next.elapsed / u.step_duration;
  next.swing_pos = swing_position(anchor, anchor_phase, u.next_foothold, u.swing_apex_height, next.phase);
  return next;
}

namespace {

constexpr std::array<const char*, 12> kChannels = {"com_x",   "com_y",   "com_vx", "com_vy",
                                                   "rel_x",   "rel_y",   "swing_x", "swing_y",
                                                   "swing_z", "foot_x",  "foot_y", "stance_left"};

}  // namespace

std::span<const char* const> rollout_channels() { return kChannels; }

namespace {

constexpr double kBoundaryTol = 1e-9;

}  // namespace

std::vector<StepSegment> plan_segments(const ReducedState& initial, std::span<const ControlInput> plan,
                                       const ModelParams& params) {
  if (plan.empty()) throw std::invalid_argument("rollout needs a non-empty plan");
  for (const auto& u : plan) {
    if (u.step_duration < params.t_min - kBoundaryTol || u.step_duration > params.t_max + kBoundaryTol)
      throw DurationError("step duration " + std::to_string(u.step_duration) + " outside [" +
                          std::to_string(params.t_min) + ", " + std::to_string(params.t_max) + "]");
  }
  if (plan.front().step_duration <= initial.elapsed)
    throw DurationError("first step duration does not exceed the elapsed time of the current step");

  std::vector<StepSegment> segs;
  segs.reserve(plan.size());
  StepSegment first;
  first.start = initial;
  first.start.phase = initial.elapsed / plan[0].step_duration;
  first.anchor = initial.swing_pos;
  first.anchor_phase = first.start.phase;
  first.length = plan[0].step_duration - initial.elapsed;
  segs.push_back(first);
  for (std::size_t j = 1; j < plan.size(); ++j) {
    const StepSegment& prev = segs.back();
    ReducedState end = flow_step(prev.start, prev.anchor, prev.anchor_phase, plan[j - 1], prev.length, params);
    StepSegment s;
    s.start = reset_map(end, plan[j - 1].next_foothold);
    s.anchor = s.start.swing_pos;
    s.anchor_phase = 0.0;
    s.begin = prev.begin + prev.length;
    s.length = plan[j].step_duration;
    segs.push_back(s);
  }
  return segs;
}

ReducedState segment_state(const StepSegment& seg, const ControlInput& u, double tau, const ModelParams& params) {
  return flow_step(seg.start, seg.anchor, seg.anchor_phase, u, tau - seg.begin, params);
}

std::size_t segment_index(std::span<const StepSegment> segs, double tau) {
  std::size_t j = 0;
  while (j + 1 < segs.size() && tau >= segs[j + 1].begin - kBoundaryTol) ++j;
  return j;
}

void state_channels(const ReducedState& st, const ModelParams& params, std::span<double> out) {
  out[0] = st.com_pos.x;
  out[1] = st.com_pos.y;
  out[2] = st.com_vel.x;
  out[3] = st.com_vel.y;
  out[4] = st.com_pos.x - st.stance_pos.x;
  out[5] = st.com_pos.y - st.stance_pos.y;
  out[6] = st.swing_pos.x;
  out[7] = st.swing_pos.y;
  out[8] = st.swing_pos.z;
  out[9] = st.stance_pos.x - params.belt_speed * st.time;
  out[10] = st.stance_pos.y;
  out[11] = st.stance_leg == Leg::Left ? 1.0 : 0.0;
}

RolloutResult rollout_with_states(const ReducedState& initial, std::span<const ControlInput> plan,
                                  const ModelParams& params, double first_sample) {
  if (!(first_sample >= 0.0)) throw std::invalid_argument("negative first sample offset");
  const auto segs = plan_segments(initial, plan, params);
  RolloutResult out;
  for (std::size_t j = 1; j < segs.size(); ++j) out.touchdown_states.push_back(segs[j].start);
  const double total = segs.back().begin + segs.back().length;
  const auto n = static_cast<std::size_t>(std::max(0LL, std::llround((total - first_sample) / params.dt))) + 1;

  std::array<std::vector<double>, kChannels.size()> ch;
  for (auto& c : ch) c.resize(n);
  std::array<double, kChannels.size()> row{};
  for (std::size_t k = 0; k < n; ++k) {
    const double tau = first_sample + static_cast<double>(k) * params.dt;
    const std::size_t j = segment_index(segs, tau);
    const StepSegment& s = segs[j];
    state_channels(segment_state(s, plan[j], std::max(s.begin, tau), params), params, row);
    for (std::size_t c = 0; c < row.size(); ++c) ch[c][k] = row[c];
  }
  out.trace = stl::Trace(params.dt, initial.time + first_sample);
  for (std::size_t c = 0; c < kChannels.size(); ++c) out.trace.add_channel(kChannels[c], std::move(ch[c]));
  return out;
}

stl::Trace rollout(const ReducedState& initial, std::span<const ControlInput> plan, const ModelParams& params,
                   double first_sample) {
  return rollout_with_states(initial, plan, params, first_sample).trace;
}

}  // namespace stlmpc
