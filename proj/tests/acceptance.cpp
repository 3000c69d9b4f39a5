// Runs every acceptance criterion and prints one PASS/FAIL line each, with the measured numbers.
// Exit status is the number of failed criteria, or 0 with --report-only.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "stlmpc/sim_harness.hpp"
#include "support/stl_oracle.hpp"

using namespace stlmpc;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;
std::string lines;

void report(int id, bool pass, const std::string& detail) {
  char head[64];
  std::snprintf(head, sizeof head, "[%s] criterion %d: ", pass ? "PASS" : "FAIL", id);
  lines += head + detail + "\n";
  std::printf("%s%s\n", head, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return NAN;
  std::sort(v.begin(), v.end());
  return v[static_cast<std::size_t>(q * static_cast<double>(v.size() - 1) + 0.5)];
}

void stl_soundness() {
  const auto t0 = Clock::now();
  testing::InstanceGenerator gen(2024);
  int checked = 0, bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto inst = gen.next();
    const double r = stl::robustness(inst.formula, inst.trace, 0).value;
    if (std::abs(r) <= 1e-9) continue;
    ++checked;
    const bool sat = stl::satisfies(inst.formula, inst.trace, 0);
    if ((r > 0) != sat || sat != testing::oracle::sat(inst.formula, inst.trace, 0)) ++bad;
  }
  const double wall = seconds_since(t0);
  report(1, bad == 0 && wall < 10.0, fmt("%d sign mismatches over %d pairs, %.2f s", bad, checked, wall));
}

void smooth_bound_and_gradient() {
  double worst_ratio = 0.0;
  for (double beta : {10.0, 30.0, 100.0}) {
    testing::InstanceGenerator gen(2024);
    for (int i = 0; i < 1000; ++i) {
      const auto inst = gen.next();
      const double exact = stl::robustness(inst.formula, inst.trace, 0).value;
      const double smooth = stl::smooth_robustness(inst.formula, inst.trace, 0, beta, false).value;
      const double depth = inst.formula.minmax_depth();
      const double width = static_cast<double>(std::max<std::size_t>(2, inst.formula.max_arity(inst.trace.dt())));
      const double bound = depth * std::log(width) / beta;
      const double err = std::abs(smooth - exact);
      if (bound == 0.0) {
        if (err > 1e-12) worst_ratio = INFINITY;
      } else {
        worst_ratio = std::max(worst_ratio, err / bound);
      }
    }
  }
  testing::InstanceGenerator gen(23);
  const double h = 1e-6, beta = 10.0;
  double worst_rel = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto inst = gen.next(3, 30);
    const auto s = stl::smooth_robustness(inst.formula, inst.trace, 0, beta);
    for (std::size_t c = 0; c < inst.trace.num_channels(); ++c)
      for (std::size_t j = 0; j < inst.trace.size(); ++j) {
        stl::Trace plus = inst.trace, minus = inst.trace;
        plus.mutable_channel(c)[j] += h;
        minus.mutable_channel(c)[j] -= h;
        const double fd = (stl::smooth_robustness(inst.formula, plus, 0, beta, false).value -
                           stl::smooth_robustness(inst.formula, minus, 0, beta, false).value) /
                          (2 * h);
        const double g = s.gradient[c][j];
        worst_rel = std::max(worst_rel, std::abs(fd - g) / std::max({std::abs(fd), std::abs(g), 1e-3}));
      }
  }
  report(2, worst_ratio <= 1.0 + 1e-9 && worst_rel <= 1e-4,
         fmt("max |smooth - exact| / bound = %.3f over 3000 pairs; max gradient rel. error %.2e on 100 instances",
             worst_ratio, worst_rel));
}

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

void dynamics() {
  const ModelParams p;
  const double w = p.omega();
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  double rk_err = 0.0, energy_drift = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double x0 = u(rng), v0 = u(rng), pp = u(rng);
    for (int k = 1; k <= 10; ++k) {
      const double t = 0.1 * k;
      const auto a = lipm_flow(x0, v0, pp, t, p);
      const auto b = rk4(x0, v0, pp, t, w, 1e-4);
      rk_err = std::max({rk_err, std::abs(a.x - b.x), std::abs(a.v - b.v)});
    }
    double x = x0, v = v0;
    auto energy = [&](double xx, double vv) { return vv * vv / 2 - w * w * (xx - pp) * (xx - pp) / 2; };
    for (int k = 0; k < 50; ++k) {
      const auto a = lipm_flow(x, v, pp, p.dt, p);
      energy_drift = std::max(energy_drift, std::abs(energy(a.x, a.v) - energy(x, v)) /
                                                std::max(1.0, std::abs(energy(x, v))));
      x = a.x;
      v = a.v;
    }
  }
  const GaitParams g;
  const auto nom = nominal_gait(g, p);
  const ReducedState s = nominal_touchdown(nom);
  std::vector<ControlInput> plan;
  for (auto f : nominal_footholds(nom, s.stance_pos, s.stance_leg, 10)) plan.push_back({f, g.nominal_T, g.swing_apex});
  const auto res = rollout_with_states(s, plan, p);
  double kf_drift = 0.0;
  for (const auto& td : res.touchdown_states) {
    const double sgn = lateral_sign(td.stance_leg);
    const auto ax = lipm_flow(td.com_pos.x, td.com_vel.x, td.stance_pos.x, g.nominal_T / 2, p);
    const auto ay = lipm_flow(td.com_pos.y, td.com_vel.y, td.stance_pos.y, g.nominal_T / 2, p);
    kf_drift = std::max({kf_drift, std::abs(ax.x - td.stance_pos.x), std::abs(ax.v - nom.keyframe_vx),
                         std::abs(sgn * (ay.x - td.stance_pos.y) - (nom.keyframe.com_pos.y - nom.keyframe.stance_pos.y)),
                         std::abs(ay.v)});
  }
  report(3, rk_err <= 1e-6 && energy_drift <= 1e-9 && kf_drift < 1e-6,
         fmt("closed form vs RK4 %.2e, orbital energy drift %.2e per step, keyframe drift %.2e over 10 steps", rk_err,
             energy_drift, kf_drift));
}

std::shared_ptr<const Mlp> collision_net(const HarnessConfig& c, const std::filesystem::path& out) {
  const auto& cc = c.collision;
  const auto t0 = Clock::now();
  const auto data = sample_dataset(cc.samples, cc.geometry, cc.ranges, cc.seed);
  TrainConfig tc = cc.train;
  tc.seed = cc.seed;
  const auto trained = train_mlp(data, tc);
  const double wall = seconds_since(t0);
  const auto test = sample_dataset(10000, cc.geometry, cc.ranges, cc.seed + 1000);
  const auto acc = evaluate_accuracy(trained.net, test, 0.02);
  report(4, acc.sign_agreement >= 0.97 && acc.within_tolerance >= 0.95 && wall <= 300.0 && !trained.diverged,
         fmt("sign agreement %.4f, |err| <= 0.02 m on %.4f of 10k held-out, training %.1f s", acc.sign_agreement,
             acc.within_tolerance, wall));
  std::ofstream(out) << trained.net.to_json();
  return std::make_shared<const Mlp>(trained.net);
}

std::string csv_of(const SpiderTable& t) {
  std::ostringstream os;
  write_spider_csv(os, t);
  return os.str();
}

// The landing foot normally ends up on its own side of the stance foot; crossing puts it on the other.
bool first_post_push_crosses(const EpisodeResult& r) {
  for (const auto& td : r.touchdowns)
    if (td.step == r.push_step) return lateral_sign(td.landing) * (td.foothold.y - td.stance.y) < 0.0;
  return false;
}

void crossed_leg(const Experiment& exp, const SpiderTable& table) {
  const double phase = 0.25;
  const int dir = 3;  // left push during a left stance: toward the stance side
  const SpiderRow* row = table.find(Controller::StlMpc, phase, dir);
  if (!row) {
    report(6, false, "phase 0.25 missing from the sweep");
    return;
  }
  const double force = row->result.max_force;
  const auto r = run_episode(Controller::StlMpc, Perturbation{dir, force, exp.config.sweep.push_duration, phase}, exp);
  const bool crosses = first_post_push_crosses(r);
  const bool pass = r.recovered && crosses && r.min_collision_margin >= 0.0;

  // Diagnostics: which forces make the planner cross at all, and what happens to those episodes.
  int crossing = 0, crossing_recovered = 0, crossing_safe = 0;
  double first_cross = -1.0;
  for (double f = 20.0; f <= exp.config.sweep.force_cap + 1e-9; f += 20.0) {
    const auto e = run_episode(Controller::StlMpc, Perturbation{dir, f, exp.config.sweep.push_duration, phase}, exp);
    if (!first_post_push_crosses(e)) continue;
    ++crossing;
    if (first_cross < 0) first_cross = f;
    if (e.min_collision_margin >= 0.0 && !e.fell && !e.left_treadmill) ++crossing_safe;
    if (e.recovered) ++crossing_recovered;
  }
  report(6, pass,
         fmt("sweep force %.0f N: recovered=%d, first foothold crosses=%d, min margin %.3f m; scan 20..%.0f N: "
             "%d crossing episodes (first at %.0f N), %d collision-free, %d recovered within two steps",
             force, r.recovered, crosses, r.min_collision_margin, exp.config.sweep.force_cap, crossing, first_cross,
             crossing_safe, crossing_recovered));
}

void solve_budget(const Experiment& exp) {
  EpisodeOptions opt;
  opt.steps_after_push = 10;
  const auto r = run_episode(Controller::StlMpc, std::nullopt, exp, opt);
  std::vector<double> warm(r.solve_times.begin() + 1, r.solve_times.end());
  const double med = quantile(warm, 0.5), p95 = quantile(warm, 0.95);
  report(8, !warm.empty() && med <= 0.033 && p95 <= 0.100,
         fmt("%zu warm-started solves during nominal walking: median %.2f ms, p95 %.2f ms (cold first solve %.1f ms)",
             warm.size(), 1e3 * med, 1e3 * p95, 1e3 * r.solve_times.front()));
}

}  // namespace

int main(int argc, char** argv) {
  std::filesystem::path out = "acceptance_out";
  bool report_only = false;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--report-only")
      report_only = true;
    else
      out = a;
  }
  std::filesystem::create_directories(out);

  stl_soundness();
  smooth_bound_and_gradient();
  dynamics();

  HarnessConfig config = parse_config("{}");
  const auto net = collision_net(config, out / "collision_model.json");
  const Experiment exp = make_experiment(config, net);

  solve_budget(exp);

  // Full sweep, checking every feasible plan against the exact specification.
  long feasible = 0, violations = 0;
  auto gate = [&](const PlanResult& p) {
    if (!p.feasible) return;
    ++feasible;
    if (!stl::satisfies(horizon_spec(exp.setup, p.trace.size()), p.trace, 0)) ++violations;
  };
  auto t0 = Clock::now();
  const auto table = sweep({Controller::StlMpc, Controller::Baseline}, exp, gate);
  const double sweep_wall = seconds_since(t0);
  const std::string csv = csv_of(table);
  std::ofstream(out / "spider.csv") << csv;
  std::ofstream(out / "summary.json") << spider_summary_json(table, sweep_wall);

  report(5, violations == 0 && feasible > 0,
         fmt("%ld feasible plans across the sweep, %ld violate the exact specification", feasible, violations));
  crossed_leg(exp, table);

  int failed_cells = 0, nonmono = 0;
  for (const auto& r : table.rows) {
    failed_cells += r.result.failed;
    nonmono += r.result.non_monotone;
  }
  const double dom = table.dominance_fraction(false), strict = table.dominance_fraction(true);
  report(7, dom >= 0.75 && strict >= 0.5 && sweep_wall < 1800.0,
         fmt("STL-MPC >= baseline in %.1f%% of cells, > in %.1f%%, sweep %.0f s (%d failed cells, %d non-monotone)",
             100 * dom, 100 * strict, sweep_wall, failed_cells, nonmono));

  t0 = Clock::now();
  const std::string again = csv_of(sweep({Controller::StlMpc, Controller::Baseline}, exp));
  report(9, again == csv,
         fmt("second sweep CSV %s the first (%zu bytes, %.0f s)", again == csv ? "is byte-identical to" : "differs from",
             csv.size(), seconds_since(t0)));

  std::printf("%d criteria failed\n", failures);
  std::ofstream(out / "report.txt") << lines << failures << " criteria failed\n";
  return report_only ? 0 : failures;
}
