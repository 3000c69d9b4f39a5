#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>

#include "stlmpc/mpc_planner.hpp"

namespace stlmpc {

class InfeasibleConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CollisionConfig {
  LegGeometry geometry;
  SamplingRanges ranges;
  TrainConfig train;
  std::size_t samples = 50000;
  std::uint64_t seed = 1;
  std::string model_path;  // load instead of training when set
};

struct SweepConfig {
  std::vector<double> phases{0.25, 0.5, 0.75};
  int directions = 12;
  double force_cap = 600.0;
  double resolution = 5.0;
  double push_duration = 0.1;
  int steps_after_push = 3;
};

struct HarnessConfig {
  ModelParams model;
  GaitParams gait;
  double region_margin = 0.5;
  double region_normalizer = 4.0;
  FootBound treadmill;
  SolverConfig mpc;
  CollisionConfig collision;
  SweepConfig sweep;
  double control_rate = 30.0;
  double state_noise = 0.0;  // std of Gaussian noise on measured CoM position/velocity
  std::uint64_t seed = 1;

  // Throws InfeasibleConfigError.
  void validate() const;
};

HarnessConfig parse_config(const std::string& json_text);
HarnessConfig load_config(const std::string& path);
std::string config_to_json(const HarnessConfig& config);

struct Perturbation {
  int direction_index = 0;  // angle 30 deg * index, 0 = forward, 3 = left
  double magnitude = 0.0;   // newtons
  double duration = 0.1;    // seconds
  double phase = 0.25;      // within the pushed left stance

  double angle() const;
};

ReducedState apply_push(const ReducedState& state, const Perturbation& p, double mass);

// Capture-point stepping with the nominal capture offset at the current phase, fixed nominal
// duration, foothold clamped onto the treadmill at the nominal touchdown time.
ControlInput baseline_controller(const ReducedState& state, const NominalGait& nominal, const ModelParams& params,
                                 const FootBound& bound);

enum class Controller { StlMpc, Baseline };
const char* controller_name(Controller c);

// Config plus the derived objects every episode needs.
struct Experiment {
  HarnessConfig config;
  PlannerSetup setup;
  LegGeometry geometry;
};

Experiment make_experiment(const HarnessConfig& config, std::shared_ptr<const Mlp> collision);
std::shared_ptr<const Mlp> obtain_collision_model(const CollisionConfig& config);

struct Keyframe {
  int step = 0;  // step index in the episode
  double time = 0.0;
  double distance = 0.0;  // riemannian_distance at the keyframe
};

struct Touchdown {
  int step = 0;  // index of the step that ends here
  double time = 0.0;
  Vec2 foothold;         // belt frame
  Vec2 stance;           // foot that was in stance during the step
  Leg landing = Leg::Left;
};

struct EpisodeResult {
  bool recovered = false;
  int steps_to_recover = 0;
  stl::Trace trace;
  std::vector<PlanResult> plans;
  double min_collision_margin = 0.0;
  bool fell = false;
  bool left_treadmill = false;
  int push_step = -1;
  double push_time = -1.0;
  std::vector<Keyframe> keyframes;
  std::vector<Touchdown> touchdowns;
  std::vector<double> solve_times;  // wall time of every replan, seconds
};

struct EpisodeOptions {
  int steps_after_push = 3;
  bool stop_when_decided = false;
  bool keep_plans = true;
  std::function<void(const PlanResult&)> on_plan;
};

// Starts at the nominal left-stance keyframe, walks one right step, and pushes during the
// following left stance (step 2). Without a push, step 2 is still the reference step.
EpisodeResult run_episode(Controller controller, const std::optional<Perturbation>& push, const Experiment& exp,
                          const EpisodeOptions& options = {});

struct ForceResult {
  double max_force = 0.0;
  bool saturated = false;
  bool non_monotone = false;
  bool failed = false;
  std::string error;
  int episodes = 0;
};

ForceResult max_recoverable_force(Controller controller, int direction_index, double phase, const Experiment& exp,
                                  const std::function<void(const PlanResult&)>& on_plan = {});

struct SpiderRow {
  Controller controller = Controller::StlMpc;
  double phase = 0.0;
  int direction_index = 0;
  ForceResult result;
};

struct SpiderTable {
  std::vector<SpiderRow> rows;

  const SpiderRow* find(Controller c, double phase, int direction) const;
  double dominance_fraction(bool strict) const;
};

SpiderTable sweep(const std::vector<Controller>& controllers, const Experiment& exp,
                  const std::function<void(const PlanResult&)>& on_plan = {},
                  const std::function<void(const SpiderRow&)>& on_row = {});

void write_spider_csv(std::ostream& os, const SpiderTable& table);
std::string spider_summary_json(const SpiderTable& table, double wall_time_s);

// Time column first, then every trace channel.
void write_trace_csv(std::ostream& os, const stl::Trace& trace);
std::string episode_json(const EpisodeResult& r, Controller controller, const std::optional<Perturbation>& push);

}  // namespace stlmpc
