#include <algorithm>
#include <cmath>
#include <limits>

#include "stlmpc/stl.hpp"

namespace stlmpc::stl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Window {
  std::size_t lo;
  std::size_t hi;
};

Window window(const Node& n, double dt) {
  return {static_cast<std::size_t>(std::llround(n.interval.lo / dt)),
          static_cast<std::size_t>(std::llround(n.interval.hi / dt))};
}

// Resolves channel names to trace indices once per evaluation.
struct Bound {
  const Trace& trace;

  std::size_t channel(const std::string& name) const {
    if (!trace.has_channel(name)) throw UnknownChannelError("unknown channel: " + name);
    return trace.index_of(name);
  }
};

void check_horizon(const Formula& f, const Trace& y, std::size_t k) {
  if (y.size() == 0) throw HorizonError("empty trace");
  std::size_t h = f.horizon_samples(y.dt());
  if (k + h >= y.size())
    throw HorizonError("formula needs sample " + std::to_string(k + h) + " but trace has " +
                       std::to_string(y.size()));
}

// Evaluates an affine atom over [begin, begin + count).
void predicate_values(const Predicate& p, const Bound& b, std::size_t begin, std::span<double> out) {
  std::fill(out.begin(), out.end(), p.offset);
  for (const auto& t : p.terms) {
    auto ch = b.trace.channel(b.channel(t.channel));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += t.coef * ch[begin + i];
  }
}

// Quantitative signal over indices [begin, begin + count). The Boolean semantics are
// recovered by thresholding each predicate at 0 and using +-1 values, which min/max
// preserve exactly.
std::vector<double> eval_signal(const Formula& f, const Bound& b, std::size_t begin,
                                std::size_t count, bool boolean) {
  const Node& n = f.node();
  std::vector<double> out(count);
  switch (n.kind) {
    case Kind::Predicate:
      predicate_values(n.predicate, b, begin, out);
      if (boolean)
        for (auto& v : out) v = v >= 0.0 ? 1.0 : -1.0;
      return out;
    case Kind::Not: {
      auto c = eval_signal(n.children[0], b, begin, count, boolean);
      for (std::size_t i = 0; i < count; ++i) out[i] = -c[i];
      return out;
    }
    case Kind::And:
    case Kind::Or: {
      const bool is_and = n.kind == Kind::And;
      std::fill(out.begin(), out.end(), is_and ? kInf : -kInf);
      for (const auto& child : n.children) {
        auto c = eval_signal(child, b, begin, count, boolean);
        for (std::size_t i = 0; i < count; ++i)
          out[i] = is_and ? std::min(out[i], c[i]) : std::max(out[i], c[i]);
      }
      return out;
    }
    case Kind::Always:
    case Kind::Eventually: {
      const bool is_always = n.kind == Kind::Always;
      Window w = window(n, b.trace.dt());
      auto c = eval_signal(n.children[0], b, begin + w.lo, count + (w.hi - w.lo), boolean);
      for (std::size_t i = 0; i < count; ++i) {
        double acc = is_always ? kInf : -kInf;
        for (std::size_t j = 0; j <= w.hi - w.lo; ++j)
          acc = is_always ? std::min(acc, c[i + j]) : std::max(acc, c[i + j]);
        out[i] = acc;
      }
      return out;
    }
    case Kind::Until: {
      Window w = window(n, b.trace.dt());
      // left needed on [begin, begin + count - 1 + hi), right on [begin + lo, begin + count - 1 + hi]
      auto left = eval_signal(n.children[0], b, begin, count + w.hi, boolean);
      auto right = eval_signal(n.children[1], b, begin + w.lo, count + (w.hi - w.lo), boolean);
      for (std::size_t i = 0; i < count; ++i) {
        double best = -kInf;
        double prefix = kInf;  // min of left over [i, j)
        for (std::size_t j = i; j <= i + w.hi; ++j) {
          if (j >= i + w.lo) best = std::max(best, std::min(right[j - w.lo], prefix));
          prefix = std::min(prefix, left[j]);
        }
        out[i] = best;
      }
      return out;
    }
  }
  return out;
}

// Smooth evaluation keeps the per-node signals for the reverse sweep.
struct Tape {
  std::size_t begin = 0;
  std::vector<double> value;
  std::vector<Tape> kids;
};

double lse_min(std::span<const double> v, double beta, std::vector<double>* weights) {
  double m = *std::min_element(v.begin(), v.end());
  double s = 0.0;
  if (weights) weights->resize(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double e = std::exp(-beta * (v[i] - m));
    if (weights) (*weights)[i] = e;
    s += e;
  }
  if (weights)
    for (auto& w : *weights) w /= s;
  return m - std::log(s) / beta;
}

double lse_max(std::span<const double> v, double beta, std::vector<double>* weights) {
  double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  if (weights) weights->resize(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double e = std::exp(beta * (v[i] - m));
    if (weights) (*weights)[i] = e;
    s += e;
  }
  if (weights)
    for (auto& w : *weights) w /= s;
  return m + std::log(s) / beta;
}

Tape smooth_forward(const Formula& f, const Bound& b, std::size_t begin, std::size_t count,
                    double beta) {
  const Node& n = f.node();
  Tape t;
  t.begin = begin;
  t.value.resize(count);
  std::vector<double> buf;
  switch (n.kind) {
    case Kind::Predicate:
      predicate_values(n.predicate, b, begin, t.value);
      break;
    case Kind::Not:
      t.kids.push_back(smooth_forward(n.children[0], b, begin, count, beta));
      for (std::size_t i = 0; i < count; ++i) t.value[i] = -t.kids[0].value[i];
      break;
    case Kind::And:
    case Kind::Or:
      for (const auto& child : n.children) t.kids.push_back(smooth_forward(child, b, begin, count, beta));
      buf.resize(t.kids.size());
      for (std::size_t i = 0; i < count; ++i) {
        for (std::size_t c = 0; c < t.kids.size(); ++c) buf[c] = t.kids[c].value[i];
        t.value[i] = n.kind == Kind::And ? lse_min(buf, beta, nullptr) : lse_max(buf, beta, nullptr);
      }
      break;
    case Kind::Always:
    case Kind::Eventually: {
      Window w = window(n, b.trace.dt());
      t.kids.push_back(smooth_forward(n.children[0], b, begin + w.lo, count + (w.hi - w.lo), beta));
      const auto& c = t.kids[0].value;
      for (std::size_t i = 0; i < count; ++i) {
        std::span<const double> win(c.data() + i, w.hi - w.lo + 1);
        t.value[i] = n.kind == Kind::Always ? lse_min(win, beta, nullptr) : lse_max(win, beta, nullptr);
      }
      break;
    }
    case Kind::Until: {
      Window w = window(n, b.trace.dt());
      t.kids.push_back(smooth_forward(n.children[0], b, begin, count + w.hi, beta));
      t.kids.push_back(smooth_forward(n.children[1], b, begin + w.lo, count + (w.hi - w.lo), beta));
      const auto& left = t.kids[0].value;
      const auto& right = t.kids[1].value;
      std::vector<double> inner;
      for (std::size_t i = 0; i < count; ++i) {
        inner.clear();
        for (std::size_t j = i + w.lo; j <= i + w.hi; ++j) {
          buf.assign(left.begin() + static_cast<std::ptrdiff_t>(i),
                     left.begin() + static_cast<std::ptrdiff_t>(j));
          buf.push_back(right[j - w.lo]);
          inner.push_back(lse_min(buf, beta, nullptr));
        }
        t.value[i] = lse_max(inner, beta, nullptr);
      }
      break;
    }
  }
  return t;
}

void smooth_backward(const Formula& f, const Bound& b, const Tape& t, std::span<const double> adj,
                     double beta, std::vector<std::vector<double>>& grad) {
  const Node& n = f.node();
  const std::size_t count = t.value.size();
  std::vector<double> buf;
  std::vector<double> wts;
  switch (n.kind) {
    case Kind::Predicate:
      for (const auto& term : n.predicate.terms) {
        auto& g = grad[b.channel(term.channel)];
        for (std::size_t i = 0; i < count; ++i) g[t.begin + i] += term.coef * adj[i];
      }
      break;
    case Kind::Not: {
      std::vector<double> a(adj.begin(), adj.end());
      for (auto& v : a) v = -v;
      smooth_backward(n.children[0], b, t.kids[0], a, beta, grad);
      break;
    }
    case Kind::And:
    case Kind::Or: {
      std::vector<std::vector<double>> a(t.kids.size(), std::vector<double>(count, 0.0));
      buf.resize(t.kids.size());
      for (std::size_t i = 0; i < count; ++i) {
        if (adj[i] == 0.0) continue;
        for (std::size_t c = 0; c < t.kids.size(); ++c) buf[c] = t.kids[c].value[i];
        if (n.kind == Kind::And) lse_min(buf, beta, &wts); else lse_max(buf, beta, &wts);
        for (std::size_t c = 0; c < t.kids.size(); ++c) a[c][i] = adj[i] * wts[c];
      }
      for (std::size_t c = 0; c < t.kids.size(); ++c)
        smooth_backward(n.children[c], b, t.kids[c], a[c], beta, grad);
      break;
    }
    case Kind::Always:
    case Kind::Eventually: {
      Window w = window(n, b.trace.dt());
      const auto& c = t.kids[0].value;
      std::vector<double> a(c.size(), 0.0);
      for (std::size_t i = 0; i < count; ++i) {
        if (adj[i] == 0.0) continue;
        std::span<const double> win(c.data() + i, w.hi - w.lo + 1);
        if (n.kind == Kind::Always) lse_min(win, beta, &wts); else lse_max(win, beta, &wts);
        for (std::size_t j = 0; j < wts.size(); ++j) a[i + j] += adj[i] * wts[j];
      }
      smooth_backward(n.children[0], b, t.kids[0], a, beta, grad);
      break;
    }
    case Kind::Until: {
      Window w = window(n, b.trace.dt());
      const auto& left = t.kids[0].value;
      const auto& right = t.kids[1].value;
      std::vector<double> a_left(left.size(), 0.0);
      std::vector<double> a_right(right.size(), 0.0);
      std::vector<double> inner;
      std::vector<std::vector<double>> inner_w;
      for (std::size_t i = 0; i < count; ++i) {
        if (adj[i] == 0.0) continue;
        inner.clear();
        inner_w.clear();
        for (std::size_t j = i + w.lo; j <= i + w.hi; ++j) {
          buf.assign(left.begin() + static_cast<std::ptrdiff_t>(i),
                     left.begin() + static_cast<std::ptrdiff_t>(j));
          buf.push_back(right[j - w.lo]);
          inner_w.emplace_back();
          inner.push_back(lse_min(buf, beta, &inner_w.back()));
        }
        lse_max(inner, beta, &wts);
        for (std::size_t q = 0; q < inner.size(); ++q) {
          std::size_t j = i + w.lo + q;
          double g = adj[i] * wts[q];
          const auto& iw = inner_w[q];
          for (std::size_t m = 0; m + 1 < iw.size(); ++m) a_left[i + m] += g * iw[m];
          a_right[j - w.lo] += g * iw.back();
        }
      }
      smooth_backward(n.children[0], b, t.kids[0], a_left, beta, grad);
      smooth_backward(n.children[1], b, t.kids[1], a_right, beta, grad);
      break;
    }
  }
}

void check_channels(const Formula& f, const Trace& y) {
  for (const auto& c : f.channels())
    if (!y.has_channel(c)) throw UnknownChannelError("unknown channel: " + c);
}

}  // namespace

double softmin(std::span<const double> v, double beta) { return lse_min(v, beta, nullptr); }
double softmax(std::span<const double> v, double beta) { return lse_max(v, beta, nullptr); }

bool satisfies(const Formula& f, const Trace& y, std::size_t k) {
  check_channels(f, y);
  check_horizon(f, y, k);
  return eval_signal(f, Bound{y}, k, 1, true)[0] > 0.0;
}

Robustness robustness(const Formula& f, const Trace& y, std::size_t k) {
  check_channels(f, y);
  check_horizon(f, y, k);
  return {eval_signal(f, Bound{y}, k, 1, false)[0], k};
}

SmoothRobustness smooth_robustness(const Formula& f, const Trace& y, std::size_t k, double beta,
                                   bool with_gradient) {
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  check_channels(f, y);
  check_horizon(f, y, k);
  Bound b{y};
  Tape tape = smooth_forward(f, b, k, 1, beta);
  SmoothRobustness out;
  out.value = tape.value[0];
  if (with_gradient) {
    out.gradient.assign(y.num_channels(), std::vector<double>(y.size(), 0.0));
    const double seed = 1.0;
    smooth_backward(f, b, tape, std::span<const double>(&seed, 1), beta, out.gradient);
  }
  return out;
}

}  // namespace stlmpc::stl
