#include "stlmpc/locomotion_spec.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace stlmpc {

void FootBound::validate() const {
  if (!(x_max > x_min && y_max > y_min && scale > 0)) throw std::invalid_argument("degenerate foot bound");
}

void RiemannianRegion::validate() const {
  if (!(sag.min < sag.max && lat.min < lat.max)) throw std::invalid_argument("empty Riemannian region");
  if (!(normalizer.x > 0 && normalizer.y > 0)) throw std::invalid_argument("region normalizer must be positive");
}

NominalGait nominal_gait(const GaitParams& gait, const ModelParams& params) {
  params.validate();
  const double T = gait.nominal_T;
  if (T < params.t_min || T > params.t_max)
    throw InfeasibleGaitError("nominal step duration outside duration bounds");
  if (!(gait.step_width > 0.0))
    throw InfeasibleGaitError("no periodic lateral gait without a positive step width");
  if (gait.step_length < 0.0) throw InfeasibleGaitError("negative step length");
  if (!(gait.keyframe_tol > 0.0)) throw InfeasibleGaitError("keyframe tolerance must be positive");
  if (std::hypot(gait.step_length / 2.0, gait.step_width / 2.0) > params.max_reach)
    throw InfeasibleGaitError("nominal footholds beyond kinematic reach");

  const double w = params.omega();
  const double c = std::cosh(w * T);
  const double s = std::sinh(w * T);
  const double half_l = gait.step_length / 2.0;
  const double half_w = gait.step_width / 2.0;

  NominalGait out;
  out.gait = gait;
  // Sagittal: rel_x runs -L/2 -> +L/2 with equal touchdown/liftoff speed.
  out.touchdown_vx = w * half_l * (1.0 + c) / s;
  out.keyframe_vx = std::sqrt(std::max(0.0, out.touchdown_vx * out.touchdown_vx - w * w * half_l * half_l));
  // Lateral: rel_y(t) = a cosh(w (t - T/2)) with rel_y(0) = -W/2 in a left stance.
  const double a = -half_w / std::cosh(w * T / 2.0);
  out.touchdown_vy = half_w * w * std::tanh(w * T / 2.0);
  out.sigma_sag = out.keyframe_vx * out.keyframe_vx;
  out.sigma_lat = -w * w * a * a;
  out.foothold_offset = {gait.step_length, -gait.step_width};

  ReducedState& k = out.keyframe;
  k.stance_leg = Leg::Left;
  k.stance_pos = {0.0, half_w};
  k.com_pos = {0.0, half_w + a};
  k.com_vel = {out.keyframe_vx, 0.0};
  k.elapsed = T / 2.0;
  k.phase = 0.5;
  k.time = 0.0;
  k.swing_pos = swing_trajectory({-gait.step_length, -half_w, 0.0}, {gait.step_length, -half_w},
                                 gait.swing_apex, 0.5);
  return out;
}

ReducedState nominal_touchdown(const NominalGait& nominal) {
  const GaitParams& g = nominal.gait;
  ReducedState s;
  s.stance_leg = Leg::Left;
  s.stance_pos = {0.0, g.step_width / 2.0};
  s.com_pos = {-g.step_length / 2.0, 0.0};
  s.com_vel = {nominal.touchdown_vx, nominal.touchdown_vy};
  s.swing_pos = {-g.step_length, -g.step_width / 2.0, 0.0};
  s.phase = 0.0;
  s.elapsed = 0.0;
  s.time = 0.0;
  return s;
}

std::vector<Vec2> nominal_footholds(const NominalGait& nominal, Vec2 stance, Leg stance_leg, int steps) {
  std::vector<Vec2> out;
  Leg leg = stance_leg;
  Vec2 p = stance;
  for (int i = 0; i < steps; ++i) {
    p = {p.x + nominal.foothold_offset.x, p.y + lateral_sign(leg) * nominal.foothold_offset.y};
    out.push_back(p);
    leg = other(leg);
  }
  return out;
}

Vec2 nominal_capture_offset(const NominalGait& nominal, const ModelParams& params, double phase) {
  const ReducedState td = nominal_touchdown(nominal);
  const double t = std::clamp(phase, 0.0, 1.0) * nominal.gait.nominal_T;
  const AxisState ax = lipm_flow(td.com_pos.x, td.com_vel.x, td.stance_pos.x, t, params);
  const AxisState ay = lipm_flow(td.com_pos.y, td.com_vel.y, td.stance_pos.y, t, params);
  const double w = params.omega();
  const Vec2 foothold = td.stance_pos + nominal.foothold_offset;
  return foothold - Vec2{ax.x + ax.v / w, ay.x + ay.v / w};
}

OrbitalEnergy orbital_coordinates(const ReducedState& state, const ModelParams& params) {
  const double w2 = params.omega() * params.omega();
  const Vec2 rel = state.com_pos - state.stance_pos;
  return {state.com_vel.x * state.com_vel.x - w2 * rel.x * rel.x,
          state.com_vel.y * state.com_vel.y - w2 * rel.y * rel.y};
}

void add_riemannian_channels(stl::Trace& trace, const ModelParams& params) {
  for (const char* name : {"rel_x", "rel_y", "com_vx", "com_vy"})
    if (!trace.has_channel(name)) throw std::invalid_argument(std::string("missing channel: ") + name);
  const double w2 = params.omega() * params.omega();
  auto rx = trace.channel("rel_x");
  auto ry = trace.channel("rel_y");
  auto vx = trace.channel("com_vx");
  auto vy = trace.channel("com_vy");
  std::vector<double> sag(trace.size()), lat(trace.size());
  for (std::size_t k = 0; k < trace.size(); ++k) {
    sag[k] = vx[k] * vx[k] - w2 * rx[k] * rx[k];
    lat[k] = vy[k] * vy[k] - w2 * ry[k] * ry[k];
  }
  trace.set_channel("riem_sag", std::move(sag));
  trace.set_channel("riem_lat", std::move(lat));
}

stl::Trace riemannian_channels(const stl::Trace& trace, const ModelParams& params) {
  stl::Trace out = trace;
  add_riemannian_channels(out, params);
  return out;
}

RiemannianRegion calibrate_region(const NominalGait& nominal, double margin_fraction, double normalizer_factor,
                                  double min_half_width) {
  if (!(margin_fraction > 0 && normalizer_factor > 0 && min_half_width > 0))
    throw std::invalid_argument("region calibration parameters must be positive");
  const double hs = std::max(margin_fraction * std::abs(nominal.sigma_sag), min_half_width);
  const double hl = std::max(margin_fraction * std::abs(nominal.sigma_lat), min_half_width);
  RiemannianRegion r;
  r.sag = {nominal.sigma_sag - hs, nominal.sigma_sag + hs};
  r.lat = {nominal.sigma_lat - hl, nominal.sigma_lat + hl};
  r.normalizer = {normalizer_factor * hs, normalizer_factor * hl};
  return r;
}

namespace {

// lo <= channel <= hi as two normalized atoms.
void band(std::vector<stl::Formula>& out, const char* channel, double lo, double hi, double scale) {
  out.push_back(stl::Formula::atom(channel, 1.0 / scale, -lo / scale, scale));
  out.push_back(stl::Formula::atom(channel, -1.0 / scale, hi / scale, scale));
}

}  // namespace

stl::Formula stable_atoms(const RiemannianRegion& region, const GaitParams& gait) {
  region.validate();
  std::vector<stl::Formula> atoms;
  band(atoms, "rel_x", -gait.keyframe_tol, gait.keyframe_tol, gait.keyframe_tol);
  band(atoms, "riem_sag", region.sag.min, region.sag.max, region.normalizer.x);
  band(atoms, "riem_lat", region.lat.min, region.lat.max, region.normalizer.y);
  return stl::Formula::conjunction(std::move(atoms));
}

stl::Formula build_loco_spec(const FootBound& bound, const RiemannianRegion& region, const GaitParams& gait,
                             double horizon_T) {
  bound.validate();
  if (!(horizon_T >= 0.0)) throw std::invalid_argument("negative horizon");
  std::vector<stl::Formula> foot;
  band(foot, "foot_x", bound.x_min, bound.x_max, bound.scale);
  band(foot, "foot_y", bound.y_min, bound.y_max, bound.scale);
  const stl::Interval window{0.0, horizon_T};
  return stl::Formula::conjunction(
      {stl::Formula::always(window, stl::Formula::conjunction(std::move(foot))),
       stl::Formula::eventually(window, stable_atoms(region, gait))});
}

double riemannian_distance(const OrbitalEnergy& sigma, const RiemannianRegion& region) {
  return std::min({(sigma.sag - region.sag.min) / region.normalizer.x,
                   (region.sag.max - sigma.sag) / region.normalizer.x,
                   (sigma.lat - region.lat.min) / region.normalizer.y,
                   (region.lat.max - sigma.lat) / region.normalizer.y});
}

double riemannian_distance(const ReducedState& keyframe_state, const RiemannianRegion& region,
                           const ModelParams& params) {
  return riemannian_distance(orbital_coordinates(keyframe_state, params), region);
}

}  // namespace stlmpc
