#include "stlmpc/collision_net.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <numbers>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace stlmpc {

void LegGeometry::validate() const {
  if (!(hip_offset > 0 && leg_radius > 0 && pelvis_height > 0))
    throw std::invalid_argument("leg geometry must be positive");
}

Features collision_features(const ReducedState& s) {
  return {s.com_pos.x - s.stance_pos.x,
          s.com_pos.y - s.stance_pos.y,
          s.swing_pos.x - s.com_pos.x,
          s.swing_pos.y - s.com_pos.y,
          s.swing_pos.z,
          lateral_sign(s.stance_leg)};
}

namespace {

double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
Vec3 sub(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
Vec3 axpy(const Vec3& a, double s, const Vec3& d) { return {a.x + s * d.x, a.y + s * d.y, a.z + s * d.z}; }

}  // namespace

double segment_distance(const Vec3& p0, const Vec3& p1, const Vec3& q0, const Vec3& q1) {
  constexpr double kEps = 1e-14;
  const Vec3 d1 = sub(p1, p0);
  const Vec3 d2 = sub(q1, q0);
  const Vec3 r = sub(p0, q0);
  const double a = dot(d1, d1);
  const double e = dot(d2, d2);
  const double f = dot(d2, r);
  double s = 0.0;
  double t = 0.0;
  if (a <= kEps && e <= kEps) {
    return std::sqrt(dot(r, r));
  }
  if (a <= kEps) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = dot(d1, r);
    if (e <= kEps) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = dot(d1, d2);
      const double denom = a * e - b * b;
      s = denom > kEps * a * e ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  const Vec3 diff = sub(axpy(p0, s, d1), axpy(q0, t, d2));
  return std::sqrt(dot(diff, diff));
}

double capsule_margin(const Features& f, const LegGeometry& geom) {
  const double sgn = f[5] >= 0.0 ? 1.0 : -1.0;
  const double h = geom.pelvis_height;
  const double half = geom.hip_offset / 2.0;
  const Vec3 stance_hip{0.0, sgn * half, h};
  const Vec3 swing_hip{0.0, -sgn * half, h};
  const Vec3 stance_foot{-f[0], -f[1], 0.0};
  const Vec3 swing_foot{f[2], f[3], f[4]};
  return segment_distance(stance_hip, stance_foot, swing_hip, swing_foot) - 2.0 * geom.leg_radius;
}

double capsule_margin(const ReducedState& state, const LegGeometry& geom) {
  return capsule_margin(collision_features(state), geom);
}

std::vector<Sample> sample_dataset(std::size_t n, const LegGeometry& geom, const SamplingRanges& ranges,
                                   std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("dataset size must be positive");
  geom.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&] {
    Sample s;
    for (std::size_t i = 0; i < 5; ++i) s.x[i] = ranges.lo[i] + (ranges.hi[i] - ranges.lo[i]) * unit(rng);
    s.x[5] = unit(rng) < 0.5 ? 1.0 : -1.0;
    s.margin = capsule_margin(s.x, geom);
    return s;
  };
  std::vector<Sample> out;
  out.reserve(n);
  const auto n_boundary = static_cast<std::size_t>(std::llround(ranges.boundary_fraction * static_cast<double>(n)));
  // Interleave boundary samples so any prefix keeps the same mix.
  std::size_t placed_boundary = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool boundary = placed_boundary * n < n_boundary * (i + 1) && placed_boundary < n_boundary;
    if (boundary) {
      Sample s = draw();
      for (int tries = 0; std::abs(s.margin) >= ranges.boundary_band && tries < 100000; ++tries) s = draw();
      out.push_back(s);
      ++placed_boundary;
    } else {
      out.push_back(draw());
    }
  }
  return out;
}

void write_dataset_csv(std::ostream& os, const std::vector<Sample>& data) {
  os << "rel_x,rel_y,swing_x,swing_y,swing_z,stance_sign,margin\n";
  os.precision(17);
  for (const auto& s : data) {
    for (double v : s.x) os << v << ',';
    os << s.margin << '\n';
  }
}

std::vector<Sample> read_dataset_csv(std::istream& is) {
  std::vector<Sample> out;
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("empty dataset file");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    Sample s;
    std::string cell;
    for (std::size_t i = 0; i < 7; ++i) {
      if (!std::getline(ss, cell, ',')) throw std::runtime_error("dataset row needs 7 columns: " + line);
      double v = std::stod(cell);
      if (i < 6) s.x[i] = v; else s.margin = v;
    }
    out.push_back(s);
  }
  return out;
}

Mlp::Mlp(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2 || sizes_.front() != 6 || sizes_.back() != 1)
    throw std::invalid_argument("collision network maps 6 features to 1 output");
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    if (sizes_[l] <= 0 || sizes_[l + 1] <= 0) throw std::invalid_argument("layer sizes must be positive");
    weights_.emplace_back(static_cast<std::size_t>(sizes_[l] * sizes_[l + 1]), 0.0);
    biases_.emplace_back(static_cast<std::size_t>(sizes_[l + 1]), 0.0);
  }
}

void Mlp::validate() const {
  if (sizes_.size() < 2 || sizes_.front() != 6 || sizes_.back() != 1)
    throw std::invalid_argument("collision network maps 6 features to 1 output");
  if (weights_.size() + 1 != sizes_.size() || biases_.size() + 1 != sizes_.size())
    throw std::invalid_argument("layer count mismatch");
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    if (weights_[l].size() != static_cast<std::size_t>(sizes_[l] * sizes_[l + 1]) ||
        biases_[l].size() != static_cast<std::size_t>(sizes_[l + 1]))
      throw std::invalid_argument("layer " + std::to_string(l) + " has inconsistent dimensions");
    for (double v : weights_[l])
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite weight");
    for (double v : biases_[l])
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite bias");
  }
}

namespace {

// tanh through a single exp; glibc's tanh dominates planner time otherwise.
inline double fast_tanh(double x) {
  const double t = std::exp(-2.0 * std::abs(x));
  const double r = (1.0 - t) / (1.0 + t);
  return x < 0.0 ? -r : r;
}

std::vector<double>& scratch() {
  thread_local std::vector<double> buf;
  return buf;
}

}  // namespace

double Mlp::evaluate(const Features& x) const { return forward(x, nullptr); }

double Mlp::evaluate(const Features& x, Features& gradient) const { return forward(x, &gradient); }

double Mlp::forward(const Features& x, Features* gradient) const {
  std::size_t total = 0, widest = 0;
  for (int n : sizes_) {
    total += static_cast<std::size_t>(n);
    widest = std::max(widest, static_cast<std::size_t>(n));
  }
  auto& buf = scratch();
  if (buf.size() < total + 2 * widest) buf.resize(total + 2 * widest);
  // activations of every layer back to back, then room for the reverse sweep
  double* act = buf.data();
  for (std::size_t i = 0; i < x.size(); ++i) act[i] = (x[i] - input_offset[i]) * input_scale[i];
  std::size_t off = 0;
  const std::size_t L = weights_.size();
  for (std::size_t l = 0; l < L; ++l) {
    const auto in = static_cast<std::size_t>(sizes_[l]);
    const auto out = static_cast<std::size_t>(sizes_[l + 1]);
    const double* a = act + off;
    double* z = act + off + in;
    const double* W = weights_[l].data();
    for (std::size_t o = 0; o < out; ++o) {
      const double* w = W + o * in;
      double acc = biases_[l][o];
      for (std::size_t i = 0; i < in; ++i) acc += w[i] * a[i];
      z[o] = l + 1 < L ? fast_tanh(acc) : acc;
    }
    off += in;
  }
  const double y = act[off];
  if (!gradient) return y * output_scale;

  double* delta = buf.data() + total;
  double* prev = delta + widest;
  delta[0] = output_scale;
  std::size_t width = 1;
  for (std::size_t l = L; l-- > 0;) {
    const auto in = static_cast<std::size_t>(sizes_[l]);
    off -= in;
    const double* a = act + off;
    const double* W = weights_[l].data();
    std::fill(prev, prev + in, 0.0);
    for (std::size_t o = 0; o < width; ++o) {
      const double* w = W + o * in;
      const double d = delta[o];
      for (std::size_t i = 0; i < in; ++i) prev[i] += w[i] * d;
    }
    if (l > 0)
      for (std::size_t i = 0; i < in; ++i) prev[i] *= 1.0 - a[i] * a[i];
    std::copy(prev, prev + in, delta);
    width = in;
  }
  for (std::size_t i = 0; i < gradient->size(); ++i) (*gradient)[i] = delta[i] * input_scale[i];
  return y * output_scale;
}

std::string Mlp::to_json() const {
  nlohmann::json j;
  j["layer_sizes"] = sizes_;
  j["activation"] = "tanh";
  j["weights"] = weights_;
  j["biases"] = biases_;
  j["input_offset"] = input_offset;
  j["input_scale"] = input_scale;
  j["output_scale"] = output_scale;
  return j.dump();
}

Mlp Mlp::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  if (j.value("activation", std::string("tanh")) != "tanh")
    throw std::invalid_argument("unsupported activation: " + j["activation"].get<std::string>());
  Mlp net(j.at("layer_sizes").get<std::vector<int>>());
  net.weights_ = j.at("weights").get<std::vector<std::vector<double>>>();
  net.biases_ = j.at("biases").get<std::vector<std::vector<double>>>();
  if (j.contains("input_offset")) net.input_offset = j["input_offset"].get<Features>();
  if (j.contains("input_scale")) net.input_scale = j["input_scale"].get<Features>();
  net.output_scale = j.value("output_scale", 1.0);
  net.validate();
  return net;
}

namespace {

// Flat-buffer trainer state for one network.
struct Trainer {
  Mlp& net;
  std::vector<std::vector<double>> acts;
  std::vector<std::vector<double>> deltas;
  std::vector<std::vector<double>> gw, gb, vw, vb;

  explicit Trainer(Mlp& n) : net(n) {
    const auto& sz = net.layer_sizes();
    for (int s : sz) {
      acts.emplace_back(static_cast<std::size_t>(s));
      deltas.emplace_back(static_cast<std::size_t>(s));
    }
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
      gw.emplace_back(net.weights(l).size(), 0.0);
      gb.emplace_back(net.biases(l).size(), 0.0);
    }
    vw = gw;
    vb = gb;
  }

  double forward(const Features& x) {
    const auto& sz = net.layer_sizes();
    for (std::size_t i = 0; i < 6; ++i) acts[0][i] = (x[i] - net.input_offset[i]) * net.input_scale[i];
    const std::size_t L = net.num_layers();
    for (std::size_t l = 0; l < L; ++l) {
      const auto in = static_cast<std::size_t>(sz[l]);
      const auto out = static_cast<std::size_t>(sz[l + 1]);
      const auto& W = net.weights(l);
      const auto& b = net.biases(l);
      for (std::size_t o = 0; o < out; ++o) {
        double acc = b[o];
        const double* w = W.data() + o * in;
        for (std::size_t i = 0; i < in; ++i) acc += w[i] * acts[l][i];
        acts[l + 1][o] = l + 1 < L ? fast_tanh(acc) : acc;
      }
    }
    return acts[L][0];
  }

  // Accumulates d(0.5 * err^2 * weight)/dparams after forward().
  void backward(double dout) {
    const auto& sz = net.layer_sizes();
    const std::size_t L = net.num_layers();
    deltas[L][0] = dout;
    for (std::size_t l = L; l-- > 0;) {
      const auto in = static_cast<std::size_t>(sz[l]);
      const auto out = static_cast<std::size_t>(sz[l + 1]);
      const auto& W = net.weights(l);
      auto& dprev = deltas[l];
      std::fill(dprev.begin(), dprev.end(), 0.0);
      for (std::size_t o = 0; o < out; ++o) {
        const double d = deltas[l + 1][o];
        gb[l][o] += d;
        double* g = gw[l].data() + o * in;
        const double* w = W.data() + o * in;
        for (std::size_t i = 0; i < in; ++i) {
          g[i] += d * acts[l][i];
          dprev[i] += d * w[i];
        }
      }
      if (l > 0)
        for (std::size_t i = 0; i < in; ++i) dprev[i] *= 1.0 - acts[l][i] * acts[l][i];
    }
  }

  void step(double lr, double momentum, double inv_batch) {
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
      auto& W = net.weights(l);
      auto& b = net.biases(l);
      for (std::size_t i = 0; i < W.size(); ++i) {
        vw[l][i] = momentum * vw[l][i] - lr * gw[l][i] * inv_batch;
        W[i] += vw[l][i];
        gw[l][i] = 0.0;
      }
      for (std::size_t i = 0; i < b.size(); ++i) {
        vb[l][i] = momentum * vb[l][i] - lr * gb[l][i] * inv_batch;
        b[i] += vb[l][i];
        gb[l][i] = 0.0;
      }
    }
  }
};

double mse(const Mlp& net, const std::vector<Sample>& data, std::span<const std::size_t> idx) {
  double s = 0.0;
  for (std::size_t i : idx) {
    double e = net.evaluate(data[i].x) - data[i].margin;
    s += e * e;
  }
  return idx.empty() ? 0.0 : s / static_cast<double>(idx.size());
}

}  // namespace

TrainResult train_mlp(const std::vector<Sample>& data, const TrainConfig& config) {
  if (data.empty()) throw std::invalid_argument("empty training set");
  if (config.epochs < 0 || config.batch == 0) throw std::invalid_argument("bad training configuration");
  std::vector<int> sizes{6};
  sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
  sizes.push_back(1);
  Mlp net(sizes);

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  auto n_val = static_cast<std::size_t>(std::llround(config.validation_fraction * static_cast<double>(data.size())));
  if (data.size() > 1) n_val = std::clamp<std::size_t>(n_val, 1, data.size() - 1); else n_val = 0;
  std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  const std::span<const std::size_t> val_idx = val.empty() ? std::span<const std::size_t>(train) : val;

  // Standardize inputs and output on the training split.
  Features mean{}, sq{};
  double out_sq = 0.0;
  for (std::size_t i : train) {
    for (std::size_t k = 0; k < 6; ++k) {
      mean[k] += data[i].x[k];
      sq[k] += data[i].x[k] * data[i].x[k];
    }
    out_sq += data[i].margin * data[i].margin;
  }
  const double nt = static_cast<double>(train.size());
  for (std::size_t k = 0; k < 6; ++k) {
    mean[k] /= nt;
    const double var = sq[k] / nt - mean[k] * mean[k];
    net.input_offset[k] = mean[k];
    net.input_scale[k] = var > 1e-12 ? 1.0 / std::sqrt(var) : 1.0;
  }
  net.output_scale = out_sq > 1e-24 ? std::sqrt(out_sq / nt) : 1.0;

  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const double limit = std::sqrt(6.0 / (sizes[l] + sizes[l + 1]));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (auto& w : net.weights(l)) w = u(rng);
  }

  TrainResult result;
  result.initial_validation_mse = mse(net, data, val_idx);
  result.best_validation_mse = result.initial_validation_mse;
  result.net = net;

  Trainer tr(net);
  const double inv_out = 1.0 / net.output_scale;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(train.begin(), train.end(), rng);
    const double lr = config.learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * epoch / std::max(1, config.epochs)));
    for (std::size_t start = 0; start < train.size(); start += config.batch) {
      const std::size_t end = std::min(train.size(), start + config.batch);
      for (std::size_t b = start; b < end; ++b) {
        const Sample& s = data[train[b]];
        const double err = tr.forward(s.x) - s.margin * inv_out;
        tr.backward(2.0 * err);
      }
      tr.step(lr, config.momentum, 1.0 / static_cast<double>(end - start));
    }
    const double v = mse(net, data, val_idx);
    if (!std::isfinite(v)) break;
    if (v < result.best_validation_mse) {
      result.best_validation_mse = v;
      result.best_epoch = epoch;
      result.net = net;
    }
  }
  result.diverged = !(result.best_validation_mse < result.initial_validation_mse) && config.epochs > 0;
  return result;
}

MarginEval mlp_margin(const Mlp& net, const ReducedState& state) {
  MarginEval out;
  out.value = net.evaluate(collision_features(state), out.gradient);
  return out;
}

AccuracyReport evaluate_accuracy(const Mlp& net, const std::vector<Sample>& data, double tolerance) {
  AccuracyReport r;
  if (data.empty()) return r;
  std::size_t agree = 0, within = 0;
  double abs_sum = 0.0;
  for (const auto& s : data) {
    const double v = net.evaluate(s.x);
    if ((v >= 0.0) == (s.margin >= 0.0)) ++agree;
    const double e = std::abs(v - s.margin);
    if (e <= tolerance) ++within;
    abs_sum += e;
  }
  const double n = static_cast<double>(data.size());
  r.sign_agreement = static_cast<double>(agree) / n;
  r.within_tolerance = static_cast<double>(within) / n;
  r.mean_abs_error = abs_sum / n;
  return r;
}

}  // namespace stlmpc
