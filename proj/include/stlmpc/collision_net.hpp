#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "stlmpc/reduced_model.hpp"

namespace stlmpc {

struct LegGeometry {
  double hip_offset = 0.18;    // lateral distance between hip joints
  double leg_radius = 0.04;    // capsule radius of each leg
  double pelvis_height = 0.9;  // same as ModelParams::h

  void validate() const;
};

// Pelvis-frame features of a reduced state:
// (rel_x, rel_y) = CoM - stance foot, (sw_x, sw_y) = swing foot - CoM, sw_z, stance sign (+1 left).
using Features = std::array<double, 6>;

Features collision_features(const ReducedState& state);

// Closest distance between segments [p0, p1] and [q0, q1].
double segment_distance(const Vec3& p0, const Vec3& p1, const Vec3& q0, const Vec3& q1);

// Signed clearance between the two leg capsules (hip to foot), meters.
double capsule_margin(const Features& f, const LegGeometry& geom);
double capsule_margin(const ReducedState& state, const LegGeometry& geom);

struct SamplingRanges {
  std::array<double, 5> lo{-0.4, -0.4, -0.6, -0.5, 0.0};
  std::array<double, 5> hi{0.4, 0.4, 0.6, 0.5, 0.12};
  double boundary_fraction = 0.25;
  double boundary_band = 0.03;  // |margin| below this counts as near the boundary
};

struct Sample {
  Features x{};
  double margin = 0.0;
};

std::vector<Sample> sample_dataset(std::size_t n, const LegGeometry& geom, const SamplingRanges& ranges,
                                   std::uint64_t seed);

void write_dataset_csv(std::ostream& os, const std::vector<Sample>& data);
std::vector<Sample> read_dataset_csv(std::istream& is);

// Fully connected network, tanh hidden layers and a linear output. Inputs are
// standardized with (x - input_offset) * input_scale and the output multiplied by output_scale.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<int> layer_sizes);

  const std::vector<int>& layer_sizes() const { return sizes_; }
  std::size_t num_layers() const { return weights_.size(); }
  // Row-major (out x in) weight matrix of layer l.
  std::vector<double>& weights(std::size_t l) { return weights_[l]; }
  const std::vector<double>& weights(std::size_t l) const { return weights_[l]; }
  std::vector<double>& biases(std::size_t l) { return biases_[l]; }
  const std::vector<double>& biases(std::size_t l) const { return biases_[l]; }

  Features input_offset{};
  Features input_scale{1, 1, 1, 1, 1, 1};
  double output_scale = 1.0;

  double evaluate(const Features& x) const;
  // Value and gradient with respect to the raw (unstandardized) features.
  double evaluate(const Features& x, Features& gradient) const;

  bool operator==(const Mlp& other) const = default;

  std::string to_json() const;
  static Mlp from_json(const std::string& text);
  void validate() const;

 private:
  double forward(const Features& x, Features* gradient) const;

  std::vector<int> sizes_;
  std::vector<std::vector<double>> weights_;
  std::vector<std::vector<double>> biases_;
};

struct TrainConfig {
  std::vector<int> hidden{32, 32};
  int epochs = 200;
  std::size_t batch = 64;
  double learning_rate = 0.02;
  double momentum = 0.9;
  double validation_fraction = 0.2;
  std::uint64_t seed = 1;
};

struct TrainResult {
  Mlp net;
  double initial_validation_mse = 0.0;
  double best_validation_mse = 0.0;
  int best_epoch = -1;
  bool diverged = false;
};

// Mini-batch SGD with momentum on squared margin error; returns the parameters with the
// lowest validation loss. Deterministic given the seed.
TrainResult train_mlp(const std::vector<Sample>& data, const TrainConfig& config);

struct MarginEval {
  double value = 0.0;
  Features gradient{};
};

MarginEval mlp_margin(const Mlp& net, const ReducedState& state);

struct AccuracyReport {
  double sign_agreement = 0.0;
  double within_tolerance = 0.0;  // fraction with |net - oracle| <= tolerance
  double mean_abs_error = 0.0;
};

AccuracyReport evaluate_accuracy(const Mlp& net, const std::vector<Sample>& data, double tolerance = 0.02);

}  // namespace stlmpc
