#pragma once

#include <cstddef>
#include <memory>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stlmpc::stl {

// Uniformly sampled multi-channel signal. Sample k is at time t0 + k * dt.
class Trace {
 public:
  Trace() = default;
  Trace(double dt, double t0);

  void add_channel(std::string name, std::vector<double> samples);
  // Replaces samples of an existing channel or adds it.
  void set_channel(const std::string& name, std::vector<double> samples);

  std::size_t size() const;
  std::size_t num_channels() const { return names_.size(); }
  double dt() const { return dt_; }
  double t0() const { return t0_; }
  double time(std::size_t k) const { return t0_ + static_cast<double>(k) * dt_; }

  bool has_channel(std::string_view name) const;
  // Throws std::out_of_range for unknown names.
  std::size_t index_of(std::string_view name) const;
  std::span<const double> channel(std::string_view name) const;
  std::span<const double> channel(std::size_t index) const { return data_.at(index); }
  std::span<double> mutable_channel(std::size_t index) { return data_.at(index); }
  const std::vector<std::string>& names() const { return names_; }

  double at(std::string_view name, std::size_t k) const { return channel(name)[k]; }

 private:
  double dt_ = 1.0;
  double t0_ = 0.0;
  std::vector<std::string> names_;
  std::vector<std::vector<double>> data_;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct LinearTerm {
  std::string channel;
  double coef = 1.0;
};

// Affine atom sum(coef * y) + offset >= 0. `scale` is the normalization
// factor already folded into coef/offset, kept for reporting.
struct Predicate {
  std::vector<LinearTerm> terms;
  double offset = 0.0;
  double scale = 1.0;
};

enum class Kind { Predicate, Not, And, Or, Always, Eventually, Until };

class Formula;

struct Node {
  Kind kind = Kind::Predicate;
  Predicate predicate;
  Interval interval;
  std::vector<Formula> children;
};

// Immutable, cheaply copyable STL formula tree.
class Formula {
 public:
  static Formula atom(Predicate p);
  // Shorthand for coef * channel + offset >= 0.
  static Formula atom(std::string channel, double coef, double offset, double scale = 1.0);
  static Formula negation(Formula child);
  static Formula conjunction(std::vector<Formula> children);
  static Formula disjunction(std::vector<Formula> children);
  static Formula always(Interval iv, Formula child);
  static Formula eventually(Interval iv, Formula child);
  static Formula until(Interval iv, Formula left, Formula right);

  Kind kind() const { return node_->kind; }
  const Node& node() const { return *node_; }
  const std::vector<Formula>& children() const { return node_->children; }

  // Nesting depth counting only min/max nodes (And, Or, Always, Eventually, Until).
  int minmax_depth() const;
  // Largest fan-in of any min/max node once windows are mapped to `dt`.
  std::size_t max_arity(double dt) const;
  // Number of samples past k the formula reads.
  std::size_t horizon_samples(double dt) const;
  std::set<std::string> channels() const;

 private:
  explicit Formula(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line, int column);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

class UnknownChannelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class HorizonError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Formula parse_formula(std::string_view text);
Formula parse_formula(std::string_view text, const std::set<std::string>& channel_names);

// Canonical, fully parenthesized text; parse_formula(to_string(f)) rebuilds f.
std::string to_string(const Formula& f);

struct Robustness {
  double value = 0.0;
  std::size_t at_index = 0;
};

bool satisfies(const Formula& f, const Trace& y, std::size_t k);
Robustness robustness(const Formula& f, const Trace& y, std::size_t k);

struct SmoothRobustness {
  double value = 0.0;
  // gradient[c][j] = d value / d channel c at sample j, channel order as in the trace.
  std::vector<std::vector<double>> gradient;
};

// Log-sum-exp relaxation of robustness; beta > 0.
SmoothRobustness smooth_robustness(const Formula& f, const Trace& y, std::size_t k, double beta,
                                   bool with_gradient = true);

double softmin(std::span<const double> v, double beta);
double softmax(std::span<const double> v, double beta);

}  // namespace stlmpc::stl
