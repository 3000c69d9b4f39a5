#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>
#include <sstream>

#include "stlmpc/stl.hpp"

// Grammar (whitespace-insensitive):
//   formula  := and ('|' and)*
//   and      := until ('&' until)*
//   until    := unary ('U' interval unary)?
//   unary    := '!' unary | 'G' interval unary | 'F' interval unary | '(' formula ')' | atom
//   atom     := linexpr ('>=' | '<=') number | identifier
//   linexpr  := ['-'] term (('+' | '-') term)*
//   term     := number ['*' identifier] | identifier
//   interval := '[' number ',' number ']'
// A bare identifier c means c >= 0.

namespace stlmpc::stl {

ParseError::ParseError(const std::string& what, int line, int column)
    : std::runtime_error(what + " at line " + std::to_string(line) + ", column " +
                         std::to_string(column)),
      line_(line),
      column_(column) {}

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Formula parse() {
    Formula f = parse_or();
    skip_ws();
    if (pos_ < text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return f;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& msg) const { fail_at(msg, pos_); }

  [[noreturn]] void fail_at(const std::string& msg, std::size_t at) const {
    int line = 1;
    int col = 1;
    for (std::size_t i = 0; i < at && i < text_.size(); ++i) {
      if (text_[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError(msg, line, col);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  bool accept(std::string_view tok) {
    skip_ws();
    if (text_.substr(pos_, tok.size()) == tok) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }

  void expect(std::string_view tok) {
    if (!accept(tok)) fail("expected '" + std::string(tok) + "'");
  }

  static bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
  static bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

  // Temporal keyword: single letter G/F/U directly followed (modulo spaces) by '['.
  bool at_temporal(char letter) {
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != letter) return false;
    if (pos_ + 1 < text_.size() && ident_char(text_[pos_ + 1])) return false;
    std::size_t j = pos_ + 1;
    while (j < text_.size() && std::isspace(static_cast<unsigned char>(text_[j]))) ++j;
    return j < text_.size() && text_[j] == '[';
  }

  std::optional<double> try_number() {
    skip_ws();
    std::size_t start = pos_;
    std::size_t j = pos_;
    auto digits = [&] {
      std::size_t s = j;
      while (j < text_.size() && std::isdigit(static_cast<unsigned char>(text_[j]))) ++j;
      return j > s;
    };
    bool int_part = digits();
    bool frac_part = false;
    if (j < text_.size() && text_[j] == '.') {
      ++j;
      frac_part = digits();
    }
    if (!int_part && !frac_part) return std::nullopt;
    if (j < text_.size() && (text_[j] == 'e' || text_[j] == 'E')) {
      std::size_t k = j + 1;
      if (k < text_.size() && (text_[k] == '+' || text_[k] == '-')) ++k;
      std::size_t ds = k;
      while (k < text_.size() && std::isdigit(static_cast<unsigned char>(text_[k]))) ++k;
      if (k > ds) j = k;
    }
    double v = 0.0;
    auto res = std::from_chars(text_.data() + start, text_.data() + j, v);
    if (res.ec != std::errc()) fail("malformed number");
    pos_ = j;
    return v;
  }

  double number() {
    bool neg = false;
    if (accept("-")) neg = true;
    auto v = try_number();
    if (!v) fail("expected number");
    return neg ? -*v : *v;
  }

  std::string identifier() {
    skip_ws();
    if (pos_ >= text_.size() || !ident_start(text_[pos_])) fail("expected identifier");
    std::size_t s = pos_;
    while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
    return std::string(text_.substr(s, pos_ - s));
  }

  Interval interval() {
    std::size_t at = pos_;
    expect("[");
    double lo = number();
    expect(",");
    double hi = number();
    expect("]");
    if (!(lo >= 0.0) || !(hi >= lo) || !std::isfinite(hi))
      fail_at("malformed interval [" + std::to_string(lo) + "," + std::to_string(hi) + "]", at);
    return {lo, hi};
  }

  Formula parse_or() {
    std::vector<Formula> parts{parse_and()};
    while (accept("|")) parts.push_back(parse_and());
    return Formula::disjunction(std::move(parts));
  }

  Formula parse_and() {
    std::vector<Formula> parts{parse_until()};
    while (accept("&")) parts.push_back(parse_until());
    return Formula::conjunction(std::move(parts));
  }

  Formula parse_until() {
    Formula left = parse_unary();
    if (at_temporal('U')) {
      ++pos_;
      Interval iv = interval();
      Formula right = parse_unary();
      return Formula::until(iv, std::move(left), std::move(right));
    }
    return left;
  }

  Formula parse_unary() {
    char c = peek();
    if (c == '!') {
      ++pos_;
      return Formula::negation(parse_unary());
    }
    if (at_temporal('G')) {
      ++pos_;
      Interval iv = interval();
      return Formula::always(iv, parse_unary());
    }
    if (at_temporal('F')) {
      ++pos_;
      Interval iv = interval();
      return Formula::eventually(iv, parse_unary());
    }
    if (c == '(') {
      // Either a parenthesized formula or a parenthesized start of a linear expression is
      // not supported; parentheses always group formulas.
      ++pos_;
      Formula f = parse_or();
      expect(")");
      return f;
    }
    if (c == '\0') fail("unexpected end of input");
    return parse_atom();
  }

  Formula parse_atom() {
    std::size_t at = pos_;
    Predicate p;
    double constant = 0.0;
    bool first = true;
    while (true) {
      double sign = 1.0;
      if (accept("-")) {
        sign = -1.0;
      } else if (!first) {
        if (!accept("+")) {
          if (accept("-")) sign = -1.0;
        }
      }
      skip_ws();
      if (auto v = try_number()) {
        if (accept("*")) {
          p.terms.push_back({identifier(), sign * *v});
        } else {
          constant += sign * *v;
        }
      } else if (pos_ < text_.size() && ident_start(text_[pos_])) {
        p.terms.push_back({identifier(), sign});
      } else {
        fail("expected term");
      }
      first = false;
      char n = peek();
      if (n == '+' || n == '-') continue;
      break;
    }
    if (p.terms.empty()) fail_at("atom needs at least one channel", at);
    if (accept(">=")) {
      p.offset = constant - number();
    } else if (accept("<=")) {
      double rhs = number();
      for (auto& t : p.terms) t.coef = -t.coef;
      p.offset = rhs - constant;
    } else {
      // bare proposition: c >= 0
      if (p.terms.size() != 1 || p.terms.front().coef != 1.0 || constant != 0.0)
        fail("expected '>=' or '<='");
    }
    return Formula::atom(std::move(p));
  }
};

void check_channels(const Formula& f, const std::set<std::string>& names) {
  for (const auto& c : f.channels()) {
    if (!names.count(c)) throw UnknownChannelError("unknown channel: " + c);
  }
}

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void print(const Formula& f, std::ostringstream& os) {
  const Node& n = f.node();
  auto interval = [&] {
    os << '[' << format_number(n.interval.lo) << ',' << format_number(n.interval.hi) << ']';
  };
  switch (n.kind) {
    case Kind::Predicate: {
      bool first = true;
      for (const auto& t : n.predicate.terms) {
        double c = t.coef;
        if (first) {
          if (c < 0) os << '-';
        } else {
          os << (c < 0 ? " - " : " + ");
        }
        double a = std::abs(c);
        if (a != 1.0) os << format_number(a) << '*';
        os << t.channel;
        first = false;
      }
      // sum + offset >= 0  <=>  sum >= -offset
      os << " >= " << format_number(n.predicate.offset == 0.0 ? 0.0 : -n.predicate.offset);
      break;
    }
    case Kind::Not:
      os << "!(";
      print(n.children[0], os);
      os << ')';
      break;
    case Kind::And:
    case Kind::Or: {
      os << '(';
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        if (i) os << (n.kind == Kind::And ? " & " : " | ");
        print(n.children[i], os);
      }
      os << ')';
      break;
    }
    case Kind::Always:
    case Kind::Eventually:
      os << (n.kind == Kind::Always ? 'G' : 'F');
      interval();
      os << '(';
      print(n.children[0], os);
      os << ')';
      break;
    case Kind::Until:
      os << '(';
      print(n.children[0], os);
      os << " U";
      interval();
      os << ' ';
      print(n.children[1], os);
      os << ')';
      break;
  }
}

}  // namespace

Formula parse_formula(std::string_view text) { return Parser(text).parse(); }

Formula parse_formula(std::string_view text, const std::set<std::string>& channel_names) {
  Formula f = parse_formula(text);
  check_channels(f, channel_names);
  return f;
}

std::string to_string(const Formula& f) {
  std::ostringstream os;
  print(f, os);
  return os.str();
}

}  // namespace stlmpc::stl
