#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "lvsp/errors.hpp"

namespace lvsp {

using RuleId = std::int32_t;

// Display label for a rule: rules are numbered from 1 in the order they
// appear in the grammar, so rule id 0 renders as "r1".
std::string rule_label(RuleId id);

// Element of the best-derivation semiring: the score of the best derivation
// seen so far together with its rule sequence. `none` is the additive
// identity (no derivation at all), distinct from a real derivation of score
// zero. Addition keeps the higher score; score ties are broken toward the
// shortlex-smaller rule sequence (shorter wins, then lexicographic). Plain
// lexicographic tie-breaking would violate distributivity when one sequence
// is a prefix of the other, shortlex does not.
struct BestDerivation {
  double score = 0.0;
  std::vector<RuleId> rules;
  bool none = true;

  bool operator==(const BestDerivation&) const = default;
};

// One scalar from whichever semiring is in play. The active alternative is
// fixed by the semiring: bool for boolean, int64 for counting, double for
// probability / viterbi / log, BestDerivation for viterbi-derivation.
using Value = std::variant<bool, std::int64_t, double, BestDerivation>;

bool values_equal(const Value& x, const Value& y);

// A semiring: carrier encoded in Value, operations as virtuals. Instances
// are stateless singletons obtained through make_semiring(); identity of the
// object doubles as identity of the semiring, so tensor code compares
// Semiring pointers to reject mixed-semiring operations.
class Semiring {
 public:
  virtual ~Semiring() = default;

  const std::string& name() const { return name_; }
  bool is_commutative() const { return commutative_; }
  bool is_idempotent() const { return idempotent_; }
  bool is_omega_continuous() const { return omega_continuous_; }

  virtual Value add(const Value& x, const Value& y) const = 0;
  virtual Value mul(const Value& x, const Value& y) const = 0;
  virtual Value zero() const = 0;
  virtual Value one() const = 0;

  // Equality up to tol for the real-valued semirings, exact for the rest.
  virtual bool approx_eq(const Value& x, const Value& y, double tol) const = 0;

  // x <= y in the natural order of the semiring: whether some z exists with
  // x + z == y. Decidable for all six shipped semirings.
  virtual bool leq(const Value& x, const Value& y) const = 0;

  // Reads one scalar token from a grammar file. Throws Error on bad input;
  // the grammar reader converts that into a ParseError with a line number.
  virtual Value parse_token(const std::string& token) const = 0;

  virtual std::string format_value(const Value& v) const = 0;

  // Hook for semirings whose values mention the rule they came from: the
  // grammar reader passes each parsed weight entry through this with the id
  // of the rule being read. Default: the value is returned unchanged.
  virtual Value attach_rule(const Value& parsed, RuleId id) const {
    (void)id;
    return parsed;
  }

 protected:
  Semiring(std::string name, bool commutative, bool idempotent, bool omega)
      : name_(std::move(name)),
        commutative_(commutative),
        idempotent_(idempotent),
        omega_continuous_(omega) {}

 private:
  std::string name_;
  bool commutative_;
  bool idempotent_;
  bool omega_continuous_;
};

// Looks up one of the built-in semirings by name: boolean, counting,
// probability, viterbi, log, viterbi-derivation. Throws ConfigError for
// anything else. The returned reference is to a process-wide singleton.
const Semiring& make_semiring(const std::string& name);

// Names accepted by make_semiring, for error messages and --help text.
const std::vector<std::string>& semiring_names();

// Natural order x <= y on an omega-continuous semiring. Throws
// UnsupportedOperation if s has no decidable natural order (none of the
// shipped semirings hit this, but the check is the documented contract).
bool natural_leq(const Semiring& s, const Value& x, const Value& y);

}  // namespace lvsp
