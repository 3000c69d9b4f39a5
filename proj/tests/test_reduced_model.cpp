#include <cmath>
#include <random>

#include "doctest.h"
#include "stlmpc/locomotion_spec.hpp"
#include "stlmpc/reduced_model.hpp"

using namespace stlmpc;

namespace {

// Classical RK4 on x'' = w^2 (x - p); independent of the closed form.
AxisState rk4(double x, double v, double p, double t, double w, double step) {
  const auto steps = static_cast<long>(std::llround(t / step));
  const double h = t / static_cast<double>(steps);
  auto acc = [&](double xx) { return w * w * (xx - p); };
  for (long i = 0; i < steps; ++i) {
    const double k1x = v, k1v = acc(x);
    const double k2x = v + 0.5 * h * k1v, k2v = acc(x + 0.5 * h * k1x);
    const double k3x = v + 0.5 * h * k2v, k3v = acc(x + 0.5 * h * k2x);
    const double k4x = v + h * k3v, k4v = acc(x + h * k3x);
    x += h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
    v += h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
  }
  return {x, v};
}

ReducedState left_stance() {
  ReducedState s;
  s.com_pos = {0.05, 0.02};
  s.com_vel = {0.4, -0.1};
  s.swing_pos = {-0.2, -0.12, 0.03};
  s.stance_pos = {0.0, 0.125};
  s.stance_leg = Leg::Left;
  s.phase = 0.3;
  s.elapsed = 0.12;
  return s;
}

}  // namespace

TEST_CASE("lipm_flow: trivial cases") {
  ModelParams p;
  auto eq = lipm_flow(0.3, 0.0, 0.3, 0.77, p);
  CHECK(eq.x == 0.3);
  CHECK(eq.v == 0.0);
  auto zero = lipm_flow(0.1, -0.4, 0.25, 0.0, p);
  CHECK(zero.x == 0.1);
  CHECK(zero.v == -0.4);
}

TEST_CASE("lipm_flow: closed form vs RK4") {
  ModelParams p;  // h = 0.9, g = 9.81
  const double w = p.omega();
  CHECK(w == doctest::Approx(3.30151).epsilon(1e-5));
  auto cf = lipm_flow(0.1, 0.0, 0.0, 0.1, p);
  auto rk = rk4(0.1, 0.0, 0.0, 0.1, w, 1e-5);
  CHECK(std::abs(cf.x - rk.x) <= 1e-6);
  CHECK(cf.x == doctest::Approx(0.1 * std::cosh(0.33015)).epsilon(1e-5));

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    double x0 = u(rng), v0 = u(rng), pp = u(rng);
    for (double t = 0.1; t <= 1.0 + 1e-12; t += 0.1) {
      auto a = lipm_flow(x0, v0, pp, t, p);
      auto b = rk4(x0, v0, pp, t, w, 1e-4);
      worst = std::max({worst, std::abs(a.x - b.x), std::abs(a.v - b.v)});
    }
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("lipm_flow: orbital energy and composition") {
  ModelParams p;
  const double w = p.omega();
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::uniform_real_distribution<double> ut(0.0, 0.6);
  for (int i = 0; i < 200; ++i) {
    double x0 = u(rng), v0 = u(rng), pp = u(rng), t1 = ut(rng), t2 = ut(rng);
    auto energy = [&](double x, double v) { return v * v / 2 - w * w * (x - pp) * (x - pp) / 2; };
    auto a = lipm_flow(x0, v0, pp, t1, p);
    double e0 = energy(x0, v0), e1 = energy(a.x, a.v);
    CHECK(std::abs(e1 - e0) <= 1e-9 * std::max(1.0, std::abs(e0)));
    auto both = lipm_flow(x0, v0, pp, t1 + t2, p);
    auto seq = lipm_flow(a.x, a.v, pp, t2, p);
    CHECK(std::abs(both.x - seq.x) <= 1e-9);
    CHECK(std::abs(both.v - seq.v) <= 1e-9);
  }
}

TEST_CASE("swing_trajectory: boundaries and apex") {
  Vec3 from{0.1, -0.2, 0.0};
  Vec2 to{0.5, -0.1};
  auto s0 = swing_trajectory(from, to, 0.08, 0.0);
  CHECK(s0.x == from.x);
  CHECK(s0.y == from.y);
  CHECK(s0.z == from.z);
  auto s1 = swing_trajectory(from, to, 0.08, 1.0);
  CHECK(s1.x == doctest::Approx(to.x));
  CHECK(s1.y == doctest::Approx(to.y));
  CHECK(s1.z == 0.0);
  auto mid = swing_trajectory({0, 0, 0}, {0.4, 0}, 0.08, 0.5);
  CHECK(mid.x == doctest::Approx(0.2));
  CHECK(mid.z >= 0.07);
  for (double s = 0.0; s <= 1.0; s += 0.01) CHECK(swing_trajectory({0, 0, 0.05}, to, 0.08, s).z >= 0.0);
}

TEST_CASE("swing_position: re-anchoring matches a fresh swing at phase 0") {
  Vec3 from{0.1, -0.2, 0.0};
  Vec2 to{0.5, -0.1};
  for (double s = 0.0; s <= 1.0; s += 0.05) {
    auto a = swing_trajectory(from, to, 0.08, s);
    auto b = swing_position(from, 0.0, to, 0.08, s);
    CHECK(a.x == doctest::Approx(b.x));
    CHECK(a.z == doctest::Approx(b.z));
  }
  // re-anchored mid swing with an unchanged target continues from the anchor
  auto mid = swing_trajectory(from, to, 0.08, 0.4);
  auto cont = swing_position(mid, 0.4, to, 0.08, 0.4);
  CHECK(cont.x == doctest::Approx(mid.x));
  CHECK(cont.z == doctest::Approx(mid.z));
}

TEST_CASE("reset_map: leg swap with CoM continuity") {
  ReducedState s = left_stance();
  s.phase = 1.0;
  auto r = reset_map(s, {0.3, -0.1});
  CHECK(r.stance_leg == Leg::Right);
  CHECK(r.stance_pos.x == 0.3);
  CHECK(r.stance_pos.y == -0.1);
  CHECK(r.swing_pos.x == s.stance_pos.x);
  CHECK(r.swing_pos.y == s.stance_pos.y);
  CHECK(r.swing_pos.z == 0.0);
  CHECK(r.com_pos.x == s.com_pos.x);
  CHECK(r.com_pos.y == s.com_pos.y);
  CHECK(r.com_vel.x == s.com_vel.x);
  CHECK(r.com_vel.y == s.com_vel.y);
  CHECK(r.phase == 0.0);
  auto back = reset_map(r, s.stance_pos);
  CHECK(back.stance_leg == Leg::Left);
  CHECK(back.stance_pos.x == s.stance_pos.x);
}

TEST_CASE("rollout: sample count and channel layout") {
  ModelParams p;
  ReducedState s = left_stance();
  s.elapsed = 0.0;
  s.phase = 0.0;
  std::vector<ControlInput> plan{{{0.2, -0.125}, 0.4, 0.08}};
  auto tr = rollout(s, plan, p);
  CHECK(tr.size() == 21);
  CHECK(tr.num_channels() == rollout_channels().size());
  CHECK(tr.at("stance_left", 0) == 1.0);

  std::vector<ControlInput> bad{{{0.2, -0.125}, 0.7, 0.08}};
  CHECK_THROWS_AS(rollout(s, bad, p), DurationError);
  CHECK_THROWS_AS(rollout(s, std::span<const ControlInput>{}, p), std::invalid_argument);
}

TEST_CASE("rollout: CoM channels are continuous across touchdowns") {
  ModelParams p;
  ReducedState s = left_stance();
  s.elapsed = 0.0;
  // Durations are multiples of dt, so samples 20 and 38 fall exactly on touchdowns.
  std::vector<ControlInput> plan{{{0.25, -0.12}, 0.4, 0.08}, {{0.45, 0.13}, 0.36, 0.08}, {{0.7, -0.11}, 0.44, 0.08}};
  auto res = rollout_with_states(s, plan, p);
  REQUIRE(res.touchdown_states.size() == 2);
  const auto& tr = res.trace;
  for (std::size_t k : {std::size_t{20}, std::size_t{38}}) {
    CHECK(tr.at("stance_left", k) != tr.at("stance_left", k - 1));
    // flow the pre-touchdown sample forward one period about the old stance foot
    const double px = tr.at("com_x", k - 1) - tr.at("rel_x", k - 1);
    const double py = tr.at("com_y", k - 1) - tr.at("rel_y", k - 1);
    auto fx = lipm_flow(tr.at("com_x", k - 1), tr.at("com_vx", k - 1), px, p.dt, p);
    auto fy = lipm_flow(tr.at("com_y", k - 1), tr.at("com_vy", k - 1), py, p.dt, p);
    CHECK(std::abs(fx.x - tr.at("com_x", k)) < 1e-12);
    CHECK(std::abs(fx.v - tr.at("com_vx", k)) < 1e-12);
    CHECK(std::abs(fy.x - tr.at("com_y", k)) < 1e-12);
    CHECK(std::abs(fy.v - tr.at("com_vy", k)) < 1e-12);
  }
  CHECK(res.touchdown_states[0].stance_pos.x == 0.25);
  CHECK(res.touchdown_states[1].swing_pos.x == 0.25);
}

TEST_CASE("rollout: nominal periodic plan reproduces keyframes") {
  ModelParams p;
  GaitParams g;
  NominalGait nom = nominal_gait(g, p);
  ReducedState s = nom.keyframe;
  std::vector<ControlInput> plan;
  auto feet = nominal_footholds(nom, s.stance_pos, s.stance_leg, 5);
  for (auto f : feet) plan.push_back({f, g.nominal_T, g.swing_apex});
  auto res = rollout_with_states(s, plan, p);
  // Touchdown states two steps apart are identical up to the stride translation.
  const auto& a = res.touchdown_states[0];
  const auto& b = res.touchdown_states[2];
  CHECK(std::abs((b.com_pos.x - b.stance_pos.x) - (a.com_pos.x - a.stance_pos.x)) < 1e-8);
  CHECK(std::abs((b.com_pos.y - b.stance_pos.y) - (a.com_pos.y - a.stance_pos.y)) < 1e-8);
  CHECK(std::abs(b.com_vel.x - a.com_vel.x) < 1e-8);
  CHECK(std::abs(b.com_vel.y - a.com_vel.y) < 1e-8);
  CHECK(std::abs(a.com_vel.x - nom.touchdown_vx) < 1e-8);
}
