#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "stlmpc/stl.hpp"

namespace stlmpc {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

enum class Leg { Left, Right };

inline Leg other(Leg l) { return l == Leg::Left ? Leg::Right : Leg::Left; }
// +1 for left, -1 for right; the left foot sits on the +y side.
inline double lateral_sign(Leg l) { return l == Leg::Left ? 1.0 : -1.0; }

// Sagittal axis is x (forward), lateral axis is y (left). Positions are in the
// belt frame of the treadmill; CoM height is the constant ModelParams::h.
struct ReducedState {
  Vec2 com_pos;
  Vec2 com_vel;
  Vec3 swing_pos;
  Vec2 stance_pos;
  Leg stance_leg = Leg::Left;
  double phase = 0.0;    // fraction of the current step elapsed, [0, 1)
  double elapsed = 0.0;  // seconds since the current step's touchdown
  double time = 0.0;     // absolute time, seconds
};

struct ControlInput {
  Vec2 next_foothold;
  double step_duration = 0.4;
  double swing_apex_height = 0.08;
};

struct ModelParams {
  double h = 0.9;
  double g = 9.81;
  double mass = 33.0;
  double t_min = 0.25;
  double t_max = 0.6;
  double dt = 0.02;
  // Belt speed of the treadmill; foot_x/foot_y channels are reported in the room frame.
  double belt_speed = 0.0;
  // Largest horizontal CoM-to-foothold distance at touchdown.
  double max_reach = 0.5;

  double omega() const { return std::sqrt(g / h); }
  void validate() const;
};

struct AxisState {
  double x = 0.0;
  double v = 0.0;
};

// Closed-form solution of x'' = omega^2 (x - p) from (x0, v0) after time t.
AxisState lipm_flow(double x0, double v0, double p, double t, const ModelParams& params);

// Fresh swing from `from` to the ground at `to`: cubic horizontal blend with zero end
// velocity, vertical profile z_from (1-s)^2 (1+2s) + 16 apex s^2 (1-s)^2.
Vec3 swing_trajectory(const Vec3& from, const Vec2& to, double apex, double s);

// Swing position for a swing re-targeted at phase `anchor_phase` from position `anchor`:
// the horizontal blend runs over the remaining phase while the vertical profile keeps the
// nominal apex schedule of the whole step. Equals swing_trajectory when anchor_phase = 0.
Vec3 swing_position(const Vec3& anchor, double anchor_phase, const Vec2& to, double apex, double phase);

// Touchdown: swap legs, CoM unchanged.
ReducedState reset_map(const ReducedState& state, const Vec2& touchdown);

// Advances the continuous flow of the current step by t seconds (no touchdown inside).
// `anchor` / `anchor_phase` describe the current swing parameterization.
ReducedState flow_step(const ReducedState& state, const Vec3& anchor, double anchor_phase,
                       const ControlInput& u, double t, const ModelParams& params);

class DurationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Channel names emitted by rollout, in order.
std::span<const char* const> rollout_channels();

// One step of a plan: the flow from `start` (post-touchdown, or the initial state for the
// first step) over `length` seconds, beginning `begin` seconds after the initial state.
struct StepSegment {
  ReducedState start;
  Vec3 anchor;
  double anchor_phase = 0.0;
  double begin = 0.0;
  double length = 0.0;
};

// Validates durations and chains the steps of a plan through the reset map.
std::vector<StepSegment> plan_segments(const ReducedState& initial, std::span<const ControlInput> plan,
                                       const ModelParams& params);

// State on segment `seg` at time tau after the initial state. tau may fall outside the
// segment, in which case the step's flow is extrapolated.
ReducedState segment_state(const StepSegment& seg, const ControlInput& u, double tau, const ModelParams& params);

// Index of the segment owning sample time tau: a sample on a boundary belongs to the new step.
std::size_t segment_index(std::span<const StepSegment> segs, double tau);

// Values of rollout_channels() for one state.
void state_channels(const ReducedState& s, const ModelParams& params, std::span<double> out);

// Simulates the hybrid model through the plan; the first entry finishes the current step
// (its swing re-anchored at the initial swing position). Samples every params.dt from
// initial.time + first_sample; length round((remaining time - first_sample) / dt) + 1.
stl::Trace rollout(const ReducedState& initial, std::span<const ControlInput> plan,
                   const ModelParams& params, double first_sample = 0.0);

// Same as rollout, also returning the post-touchdown state at each step boundary.
struct RolloutResult {
  stl::Trace trace;
  std::vector<ReducedState> touchdown_states;
};
RolloutResult rollout_with_states(const ReducedState& initial, std::span<const ControlInput> plan,
                                  const ModelParams& params, double first_sample = 0.0);

}  // namespace stlmpc
