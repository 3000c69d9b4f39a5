#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "stlmpc/stl.hpp"

namespace stlmpc::stl {

Trace::Trace(double dt, double t0) : dt_(dt), t0_(t0) {
  if (!(dt > 0.0)) throw std::invalid_argument("trace dt must be positive");
}

void Trace::add_channel(std::string name, std::vector<double> samples) {
  if (has_channel(name)) throw std::invalid_argument("duplicate channel: " + name);
  if (samples.empty()) throw std::invalid_argument("channel must have at least one sample: " + name);
  if (!data_.empty() && samples.size() != data_.front().size())
    throw std::invalid_argument("channel length mismatch: " + name);
  names_.push_back(std::move(name));
  data_.push_back(std::move(samples));
}

void Trace::set_channel(const std::string& name, std::vector<double> samples) {
  if (!has_channel(name)) {
    add_channel(name, std::move(samples));
    return;
  }
  if (samples.size() != size()) throw std::invalid_argument("channel length mismatch: " + name);
  data_[index_of(name)] = std::move(samples);
}

std::size_t Trace::size() const { return data_.empty() ? 0 : data_.front().size(); }

bool Trace::has_channel(std::string_view name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::size_t Trace::index_of(std::string_view name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw std::out_of_range("unknown channel: " + std::string(name));
  return static_cast<std::size_t>(it - names_.begin());
}

std::span<const double> Trace::channel(std::string_view name) const {
  return data_[index_of(name)];
}

namespace {

void check_interval(const Interval& iv) {
  if (!(iv.lo >= 0.0) || !(iv.hi >= iv.lo) || !std::isfinite(iv.hi))
    throw std::invalid_argument("malformed interval: need 0 <= lo <= hi < inf");
}

bool is_minmax(Kind k) { return k != Kind::Predicate && k != Kind::Not; }

}  // namespace

Formula Formula::atom(Predicate p) {
  if (p.terms.empty()) throw std::invalid_argument("predicate needs at least one channel term");
  auto n = std::make_shared<Node>();
  n->kind = Kind::Predicate;
  n->predicate = std::move(p);
  return Formula(std::move(n));
}

Formula Formula::atom(std::string channel, double coef, double offset, double scale) {
  Predicate p;
  p.terms.push_back({std::move(channel), coef});
  p.offset = offset;
  p.scale = scale;
  return atom(std::move(p));
}

Formula Formula::negation(Formula child) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Not;
  n->children.push_back(std::move(child));
  return Formula(std::move(n));
}

Formula Formula::conjunction(std::vector<Formula> children) {
  if (children.empty()) throw std::invalid_argument("conjunction of nothing");
  if (children.size() == 1) return children.front();
  auto n = std::make_shared<Node>();
  n->kind = Kind::And;
  n->children = std::move(children);
  return Formula(std::move(n));
}

Formula Formula::disjunction(std::vector<Formula> children) {
  if (children.empty()) throw std::invalid_argument("disjunction of nothing");
  if (children.size() == 1) return children.front();
  auto n = std::make_shared<Node>();
  n->kind = Kind::Or;
  n->children = std::move(children);
  return Formula(std::move(n));
}

Formula Formula::always(Interval iv, Formula child) {
  check_interval(iv);
  auto n = std::make_shared<Node>();
  n->kind = Kind::Always;
  n->interval = iv;
  n->children.push_back(std::move(child));
  return Formula(std::move(n));
}

Formula Formula::eventually(Interval iv, Formula child) {
  check_interval(iv);
  auto n = std::make_shared<Node>();
  n->kind = Kind::Eventually;
  n->interval = iv;
  n->children.push_back(std::move(child));
  return Formula(std::move(n));
}

Formula Formula::until(Interval iv, Formula left, Formula right) {
  check_interval(iv);
  auto n = std::make_shared<Node>();
  n->kind = Kind::Until;
  n->interval = iv;
  n->children.push_back(std::move(left));
  n->children.push_back(std::move(right));
  return Formula(std::move(n));
}

int Formula::minmax_depth() const {
  int d = 0;
  for (const auto& c : children()) d = std::max(d, c.minmax_depth());
  // Until nests a soft-max over soft-mins.
  if (kind() == Kind::Until) return d + 2;
  return d + (is_minmax(kind()) ? 1 : 0);
}

std::size_t Formula::max_arity(double dt) const {
  std::size_t a = 0;
  for (const auto& c : children()) a = std::max(a, c.max_arity(dt));
  const auto width = [&] {
    return static_cast<std::size_t>(std::llround(node_->interval.hi / dt) -
                                    std::llround(node_->interval.lo / dt) + 1);
  };
  switch (kind()) {
    case Kind::And:
    case Kind::Or:
      a = std::max(a, children().size());
      break;
    case Kind::Always:
    case Kind::Eventually:
      a = std::max(a, width());
      break;
    case Kind::Until:
      // outer max over the window, inner min over right[j] and up to hi/dt left samples
      a = std::max({a, width(), static_cast<std::size_t>(std::llround(node_->interval.hi / dt)) + 1});
      break;
    default:
      break;
  }
  return a;
}

std::size_t Formula::horizon_samples(double dt) const {
  std::size_t h = 0;
  for (const auto& c : children()) h = std::max(h, c.horizon_samples(dt));
  if (kind() == Kind::Always || kind() == Kind::Eventually || kind() == Kind::Until)
    h += static_cast<std::size_t>(std::llround(node_->interval.hi / dt));
  return h;
}

std::set<std::string> Formula::channels() const {
  std::set<std::string> out;
  if (kind() == Kind::Predicate) {
    for (const auto& t : node_->predicate.terms) out.insert(t.channel);
  }
  for (const auto& c : children()) {
    auto sub = c.channels();
    out.insert(sub.begin(), sub.end());
  }
  return out;
}

}  // namespace stlmpc::stl
