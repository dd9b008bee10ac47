#include "lvsp/semiring.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

namespace lvsp {

std::string rule_label(RuleId id) { return "r" + std::to_string(id + 1); }

bool values_equal(const Value& x, const Value& y) { return x == y; }

namespace {

std::string fmt_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  // Shortest decimal form that parses back to the same double, so dumping
  // and re-reading a grammar or chart is lossless.
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double_token(const std::string& tok, const std::string& ring) {
  const char* begin = tok.c_str();
  char* end = nullptr;
  errno = 0;
  double v = std::strtod(begin, &end);
  if (tok.empty() || end != begin + tok.size() || std::isnan(v)) {
    throw Error(ring + " semiring: bad value token '" + tok + "'");
  }
  return v;
}

// ---------------------------------------------------------------------------

class BooleanSemiring final : public Semiring {
 public:
  BooleanSemiring() : Semiring("boolean", true, true, true) {}

  Value add(const Value& x, const Value& y) const override {
    return std::get<bool>(x) || std::get<bool>(y);
  }
  Value mul(const Value& x, const Value& y) const override {
    return std::get<bool>(x) && std::get<bool>(y);
  }
  Value zero() const override { return false; }
  Value one() const override { return true; }

  bool approx_eq(const Value& x, const Value& y, double) const override {
    return std::get<bool>(x) == std::get<bool>(y);
  }
  bool leq(const Value& x, const Value& y) const override {
    return !std::get<bool>(x) || std::get<bool>(y);
  }

  Value parse_token(const std::string& tok) const override {
    if (tok == "T") return true;
    if (tok == "F") return false;
    throw Error("boolean semiring: bad value token '" + tok + "' (want T or F)");
  }
  std::string format_value(const Value& v) const override {
    return std::get<bool>(v) ? "T" : "F";
  }
};

class CountingSemiring final : public Semiring {
 public:
  CountingSemiring() : Semiring("counting", true, false, true) {}

  Value add(const Value& x, const Value& y) const override {
    return std::get<std::int64_t>(x) + std::get<std::int64_t>(y);
  }
  Value mul(const Value& x, const Value& y) const override {
    return std::get<std::int64_t>(x) * std::get<std::int64_t>(y);
  }
  Value zero() const override { return std::int64_t{0}; }
  Value one() const override { return std::int64_t{1}; }

  bool approx_eq(const Value& x, const Value& y, double) const override {
    return std::get<std::int64_t>(x) == std::get<std::int64_t>(y);
  }
  bool leq(const Value& x, const Value& y) const override {
    return std::get<std::int64_t>(x) <= std::get<std::int64_t>(y);
  }

  Value parse_token(const std::string& tok) const override {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size() || v < 0) {
      throw Error("counting semiring: bad value token '" + tok +
                  "' (want a non-negative integer)");
    }
    return v;
  }
  std::string format_value(const Value& v) const override {
    return std::to_string(std::get<std::int64_t>(v));
  }
};

class ProbabilitySemiring final : public Semiring {
 public:
  ProbabilitySemiring() : Semiring("probability", true, false, true) {}

  Value add(const Value& x, const Value& y) const override {
    return std::get<double>(x) + std::get<double>(y);
  }
  Value mul(const Value& x, const Value& y) const override {
    return std::get<double>(x) * std::get<double>(y);
  }
  Value zero() const override { return 0.0; }
  Value one() const override { return 1.0; }

  bool approx_eq(const Value& x, const Value& y, double tol) const override {
    return std::fabs(std::get<double>(x) - std::get<double>(y)) <= tol;
  }
  bool leq(const Value& x, const Value& y) const override {
    return std::get<double>(x) <= std::get<double>(y);
  }

  Value parse_token(const std::string& tok) const override {
    double v = parse_double_token(tok, name());
    if (v < 0.0 || std::isinf(v)) {
      throw Error("probability semiring: value must be a finite non-negative "
                  "real, got '" + tok + "'");
    }
    return v;
  }
  std::string format_value(const Value& v) const override {
    return fmt_double(std::get<double>(v));
  }
};

class ViterbiSemiring final : public Semiring {
 public:
  ViterbiSemiring() : Semiring("viterbi", true, true, true) {}

  Value add(const Value& x, const Value& y) const override {
    return std::max(std::get<double>(x), std::get<double>(y));
  }
  Value mul(const Value& x, const Value& y) const override {
    return std::get<double>(x) * std::get<double>(y);
  }
  Value zero() const override { return 0.0; }
  Value one() const override { return 1.0; }

  bool approx_eq(const Value& x, const Value& y, double tol) const override {
    return std::fabs(std::get<double>(x) - std::get<double>(y)) <= tol;
  }
  bool leq(const Value& x, const Value& y) const override {
    return std::get<double>(x) <= std::get<double>(y);
  }

  Value parse_token(const std::string& tok) const override {
    double v = parse_double_token(tok, name());
    if (v < 0.0 || v > 1.0) {
      throw Error("viterbi semiring: value must lie in [0,1], got '" + tok + "'");
    }
    return v;
  }
  std::string format_value(const Value& v) const override {
    return fmt_double(std::get<double>(v));
  }
};

class LogSemiring final : public Semiring {
 public:
  LogSemiring() : Semiring("log", true, false, true) {}

  // log-sum-exp, stable against the -inf additive identity
  Value add(const Value& x, const Value& y) const override {
    double a = std::get<double>(x);
    double b = std::get<double>(y);
    if (std::isinf(a) && a < 0) return b;
    if (std::isinf(b) && b < 0) return a;
    double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
  }
  Value mul(const Value& x, const Value& y) const override {
    double a = std::get<double>(x);
    double b = std::get<double>(y);
    // -inf + finite must stay -inf; only -inf + +inf would be nan and +inf
    // is not representable in this carrier.
    return a + b;
  }
  Value zero() const override { return -std::numeric_limits<double>::infinity(); }
  Value one() const override { return 0.0; }

  bool approx_eq(const Value& x, const Value& y, double tol) const override {
    double a = std::get<double>(x);
    double b = std::get<double>(y);
    if (std::isinf(a) || std::isinf(b)) return a == b;
    return std::fabs(a - b) <= tol;
  }
  bool leq(const Value& x, const Value& y) const override {
    return std::get<double>(x) <= std::get<double>(y);
  }

  Value parse_token(const std::string& tok) const override {
    double v = parse_double_token(tok, name());
    if (std::isinf(v) && v > 0) {
      throw Error("log semiring: +inf is not a valid value");
    }
    return v;
  }
  std::string format_value(const Value& v) const override {
    return fmt_double(std::get<double>(v));
  }
};

// Total order behind max on best derivations: none below everything, then by
// score, and on score ties the shortlex-smaller rule sequence is the greater
// element (it is the one max keeps).
int compare_for_max(const BestDerivation& a, const BestDerivation& b) {
  if (a.none || b.none) return int(!a.none) - int(!b.none);
  if (a.score != b.score) return a.score < b.score ? -1 : 1;
  if (a.rules.size() != b.rules.size()) {
    return a.rules.size() > b.rules.size() ? -1 : 1;
  }
  if (a.rules != b.rules) return a.rules > b.rules ? -1 : 1;
  return 0;
}

class ViterbiDerivationSemiring final : public Semiring {
 public:
  // Concatenation makes mul non-commutative; max keeps add idempotent.
  ViterbiDerivationSemiring()
      : Semiring("viterbi-derivation", false, true, true) {}

  Value add(const Value& x, const Value& y) const override {
    const auto& a = std::get<BestDerivation>(x);
    const auto& b = std::get<BestDerivation>(y);
    return compare_for_max(a, b) >= 0 ? a : b;
  }
  Value mul(const Value& x, const Value& y) const override {
    const auto& a = std::get<BestDerivation>(x);
    const auto& b = std::get<BestDerivation>(y);
    if (a.none || b.none) return BestDerivation{};
    BestDerivation out;
    out.none = false;
    out.score = a.score * b.score;
    out.rules = a.rules;
    out.rules.insert(out.rules.end(), b.rules.begin(), b.rules.end());
    return out;
  }
  Value zero() const override { return BestDerivation{}; }
  Value one() const override { return BestDerivation{1.0, {}, false}; }

  bool approx_eq(const Value& x, const Value& y, double tol) const override {
    const auto& a = std::get<BestDerivation>(x);
    const auto& b = std::get<BestDerivation>(y);
    if (a.none != b.none) return false;
    if (a.none) return true;
    return std::fabs(a.score - b.score) <= tol && a.rules == b.rules;
  }
  bool leq(const Value& x, const Value& y) const override {
    // x <= y in the natural order iff max(x, y) == y.
    const auto& a = std::get<BestDerivation>(x);
    const auto& b = std::get<BestDerivation>(y);
    return compare_for_max(a, b) <= 0;
  }

  // Grammar files store only the score; the rule sequence is attached by
  // attach_rule once the reader knows which rule the entry belongs to. A
  // zero score parses to the additive identity: keeping score-0 values out
  // of the carrier is what lets max tie-breaking coexist with
  // distributivity.
  Value parse_token(const std::string& tok) const override {
    double v = parse_double_token(tok, name());
    if (v < 0.0 || v > 1.0) {
      throw Error("viterbi-derivation semiring: value must lie in [0,1], got '" +
                  tok + "'");
    }
    if (v == 0.0) return BestDerivation{};
    return BestDerivation{v, {}, false};
  }
  Value attach_rule(const Value& parsed, RuleId id) const override {
    auto d = std::get<BestDerivation>(parsed);
    if (!d.none) d.rules = {id};
    return d;
  }
  std::string format_value(const Value& v) const override {
    const auto& d = std::get<BestDerivation>(v);
    if (d.none) return "nil";
    std::string out = fmt_double(d.score) + "[";
    for (std::size_t i = 0; i < d.rules.size(); ++i) {
      if (i) out += ",";
      out += rule_label(d.rules[i]);
    }
    return out + "]";
  }
};

}  // namespace

const Semiring& make_semiring(const std::string& name) {
  static const BooleanSemiring boolean;
  static const CountingSemiring counting;
  static const ProbabilitySemiring probability;
  static const ViterbiSemiring viterbi;
  static const LogSemiring log_ring;
  static const ViterbiDerivationSemiring viterbi_derivation;
  if (name == "boolean") return boolean;
  if (name == "counting") return counting;
  if (name == "probability") return probability;
  if (name == "viterbi") return viterbi;
  if (name == "log") return log_ring;
  if (name == "viterbi-derivation") return viterbi_derivation;
  std::string msg = "unknown semiring '" + name + "'; available:";
  for (const auto& n : semiring_names()) msg += " " + n;
  throw ConfigError(msg);
}

const std::vector<std::string>& semiring_names() {
  static const std::vector<std::string> names = {
      "boolean", "counting", "probability", "viterbi", "log",
      "viterbi-derivation"};
  return names;
}

bool natural_leq(const Semiring& s, const Value& x, const Value& y) {
  if (!s.is_omega_continuous()) {
    throw UnsupportedOperation("semiring '" + s.name() +
                               "' has no decidable natural order");
  }
  return s.leq(x, y);
}

}  // namespace lvsp
