#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "stlmpc/sim_harness.hpp"

using namespace stlmpc;
namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
};

HarnessConfig load(const Globals& g) {
  HarnessConfig c = g.config_path.empty() ? parse_config("{}") : load_config(g.config_path);
  if (g.seed) {
    c.seed = *g.seed;
    c.collision.seed = *g.seed;
    c.collision.train.seed = *g.seed;
  }
  c.validate();
  return c;
}

Experiment experiment(const HarnessConfig& c) {
  if (c.collision.model_path.empty()) std::cerr << "training collision model (" << c.collision.samples << " samples)\n";
  return make_experiment(c, obtain_collision_model(c.collision));
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string trace_csv(const stl::Trace& t) {
  std::ostringstream os;
  write_trace_csv(os, t);
  return os.str();
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw InfeasibleConfigError("bad phase list entry '" + item + "'");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"STL-MPC push recovery on a reduced-order biped"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "JSON configuration file");
  app.add_option("--seed", g.seed, "seed for state noise and collision-model training");

  auto* walk = app.add_subcommand("walk", "nominal walking with the STL-MPC, writes a trace CSV");
  std::string walk_out = "walk_trace.csv";
  std::string walk_controller = "stl";
  walk->add_option("--out", walk_out, "trace CSV path");
  walk->add_option("--controller", walk_controller)->check(CLI::IsMember({"stl", "baseline"}));

  auto* push = app.add_subcommand("push", "single push episode, writes episode JSON and trace CSV");
  Perturbation p;
  std::string push_controller = "stl";
  std::string push_out = ".";
  push->add_option("--dir", p.direction_index, "direction index, 30 deg each, 0 = forward, 3 = left")
      ->required()
      ->check(CLI::Range(0, 11));
  push->add_option("--phase", p.phase, "phase of the pushed left stance")->required()->check(CLI::Range(0.0, 0.999999));
  push->add_option("--force", p.magnitude, "newtons")->required()->check(CLI::NonNegativeNumber);
  push->add_option("--duration", p.duration, "seconds")->check(CLI::PositiveNumber);
  push->add_option("--controller", push_controller)->check(CLI::IsMember({"stl", "baseline"}));
  push->add_option("--out", push_out, "output directory");

  auto* sw = app.add_subcommand("sweep", "maximum recoverable force per direction and phase for both controllers");
  std::string phases;
  std::string sweep_out = "sweep";
  sw->add_option("--phases", phases, "comma-separated stance phases");
  sw->add_option("--out", sweep_out, "output directory");

  auto* train = app.add_subcommand("train-collision", "train the leg-collision network and write it as JSON");
  std::size_t n = 50000;
  std::string model_out = "model.json";
  train->add_option("--n", n, "number of samples")->check(CLI::PositiveNumber);
  train->add_option("--out", model_out, "model path");

  CLI11_PARSE(app, argc, argv);

  try {
    HarnessConfig c = load(g);
    if (*walk) {
      const auto exp = experiment(c);
      const Controller ctl = walk_controller == "stl" ? Controller::StlMpc : Controller::Baseline;
      const auto r = run_episode(ctl, std::nullopt, exp);
      write_file(walk_out, trace_csv(r.trace));
      std::cout << "recovered=" << r.recovered << " keyframes=" << r.keyframes.size()
                << " min_collision_margin=" << r.min_collision_margin << " trace=" << walk_out << "\n";
    } else if (*push) {
      const auto exp = experiment(c);
      const Controller ctl = push_controller == "stl" ? Controller::StlMpc : Controller::Baseline;
      const auto r = run_episode(ctl, p, exp);
      const fs::path dir(push_out);
      write_file(dir / "episode.json", episode_json(r, ctl, p));
      write_file(dir / "trace.csv", trace_csv(r.trace));
      std::cout << "recovered=" << r.recovered << " steps_to_recover=" << r.steps_to_recover
                << " min_collision_margin=" << r.min_collision_margin << " fell=" << r.fell
                << " left_treadmill=" << r.left_treadmill << "\n";
    } else if (*sw) {
      if (!phases.empty()) {
        c.sweep.phases = parse_list(phases);
        c.validate();
      }
      const auto exp = experiment(c);
      const auto t0 = std::chrono::steady_clock::now();
      const auto table = sweep({Controller::StlMpc, Controller::Baseline}, exp, {}, [](const SpiderRow& row) {
        std::cerr << controller_name(row.controller) << " phase " << row.phase << " dir " << row.direction_index
                  << ": " << row.result.max_force << " N" << (row.result.failed ? " (failed)" : "") << "\n";
      });
      const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      const fs::path dir(sweep_out);
      std::ostringstream csv;
      write_spider_csv(csv, table);
      write_file(dir / "spider.csv", csv.str());
      write_file(dir / "summary.json", spider_summary_json(table, wall));
      std::cout << "dominance=" << table.dominance_fraction(false)
                << " strict_dominance=" << table.dominance_fraction(true) << " wall_time_s=" << wall << "\n";
    } else if (*train) {
      const auto& cc = c.collision;
      const auto data = sample_dataset(n, cc.geometry, cc.ranges, cc.seed);
      TrainConfig tc = cc.train;
      tc.seed = cc.seed;
      const auto t0 = std::chrono::steady_clock::now();
      const auto result = train_mlp(data, tc);
      const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (result.diverged) throw std::runtime_error("collision training diverged");
      const auto test = sample_dataset(10000, cc.geometry, cc.ranges, cc.seed + 1);
      const auto acc = evaluate_accuracy(result.net, test);
      write_file(model_out, result.net.to_json());
      std::cout << "sign_agreement=" << acc.sign_agreement << " within_0.02=" << acc.within_tolerance
                << " best_epoch=" << result.best_epoch << " train_time_s=" << wall << " model=" << model_out << "\n";
    }
  } catch (const InfeasibleConfigError& e) {
    std::cerr << "infeasible configuration: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
