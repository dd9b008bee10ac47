#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lvsp/tensor.hpp"

namespace lvsp {

using SymbolId = std::int32_t;

// Sentence token names a symbol the grammar does not treat as a terminal.
class SentenceError : public Error {
 public:
  explicit SentenceError(const std::string& msg) : Error(msg) {}
};

struct Rule {
  RuleId id;
  SymbolId lhs;
  std::vector<SymbolId> rhs;  // never empty
};

// One rule whose weight tensor does not have the shape its symbols demand.
struct ShapeViolation {
  RuleId rule;
  Shape expected;
  Shape actual;
};

class WellDefinednessError : public Error {
 public:
  WellDefinednessError(std::string msg, std::vector<ShapeViolation> violations)
      : Error(std::move(msg)), violations_(std::move(violations)) {}
  const std::vector<ShapeViolation>& violations() const { return violations_; }

 private:
  std::vector<ShapeViolation> violations_;
};

// A CFG whose rules carry tensor weights over one semiring. Terminals and
// nonterminals share one symbol id space; nonterminals are the symbols with
// a declared latent dimension. The weight of a rule A -> x1 ... xn with
// nonterminals B1 ... Bk among the xi (left to right) has shape
// (dim B1, ..., dim Bk, dim A): right-hand side first, left-hand side last.
class WeightedCFG {
 public:
  const Semiring& ring() const { return *ring_; }
  SymbolId start() const { return start_; }

  int num_symbols() const { return static_cast<int>(names_.size()); }
  const std::string& symbol_name(SymbolId s) const;
  SymbolId find_symbol(const std::string& name) const;  // -1 when absent
  bool is_nonterminal(SymbolId s) const { return dims_[static_cast<std::size_t>(s)] > 0; }
  bool is_terminal(SymbolId s) const { return !is_nonterminal(s); }
  int dim(SymbolId nonterminal) const;

  const std::vector<Rule>& rules() const { return rules_; }
  const Rule& rule(RuleId r) const { return rules_[static_cast<std::size_t>(r)]; }
  const std::vector<RuleId>& rules_with_lhs(SymbolId nt) const;

  const Tensor& weight(RuleId r) const { return weights_[static_cast<std::size_t>(r)]; }
  // Replaces a weight without validation; check_well_defined reports the
  // damage afterwards. Exists for diagnostics and tests.
  void set_weight(RuleId r, Tensor w);

  // The shape the rule's weight must have to be well defined.
  Shape expected_weight_shape(const Rule& r) const;
  // Positions (0-based) of the nonterminals in the rule's right-hand side.
  std::vector<int> rhs_nonterminal_positions(const Rule& r) const;

  std::string render_rule(RuleId r) const;  // "S -> A A"

  // Maps sentence tokens to terminal symbol ids; throws SentenceError for
  // unknown names or names of nonterminals.
  std::vector<SymbolId> to_symbols(std::span<const std::string> tokens) const;

 private:
  friend class GrammarBuilder;
  const Semiring* ring_ = nullptr;
  SymbolId start_ = -1;
  std::vector<std::string> names_;
  std::vector<int> dims_;  // dim per symbol, -1 for terminals
  std::vector<Rule> rules_;
  std::vector<Tensor> weights_;
  std::vector<std::vector<RuleId>> by_lhs_;  // indexed by symbol id
};

// Assembles a WeightedCFG from code. Symbols spring into existence on first
// mention; a symbol is a nonterminal once dim() was called for it. Values
// are passed through the semiring's attach_rule hook exactly like grammar
// file entries.
class GrammarBuilder {
 public:
  explicit GrammarBuilder(const Semiring& ring) : ring_(&ring) {}

  GrammarBuilder& set_start(const std::string& name);
  GrammarBuilder& dim(const std::string& name, int d);
  GrammarBuilder& rule(const std::string& lhs, const std::vector<std::string>& rhs,
                       std::vector<Value> flat_values);

  // strict: throws WellDefinednessError when any weight shape is off.
  WeightedCFG build(bool strict = true) const;

 private:
  struct PendingRule {
    std::string lhs;
    std::vector<std::string> rhs;
    std::vector<Value> values;
  };
  SymbolId intern(WeightedCFG& g, const std::string& name) const;

  const Semiring* ring_;
  std::string start_;
  std::vector<std::pair<std::string, int>> dims_;
  std::vector<PendingRule> rules_;
};

// Compares every rule weight's shape against expected_weight_shape. Empty
// result = well defined.
std::vector<ShapeViolation> check_well_defined(const WeightedCFG& g);

std::string describe_violation(const WeightedCFG& g, const ShapeViolation& v);

// Reads the grammar text format:
//
//   # comment
//   start S
//   dim S 2
//   rule S -> A A : [ 0.5 0.25 ... ]    # values row-major, may span lines
//
// Symbols with a dim line are nonterminals, everything else on a right-hand
// side is a terminal. Declaration order is free. Epsilon rules and duplicate
// rules are rejected. Throws ParseError for syntax problems; the strict
// variant additionally throws WellDefinednessError when value counts do not
// match the declared dimensions.
WeightedCFG parse_grammar_file(const std::string& text, const Semiring& ring);

// Lenient variant for diagnostics: a rule whose value count does not match
// the expected shape is kept with its literal values as a flat rank-1 tensor
// (rank-0 when the list is empty) so check_well_defined can name it.
std::pair<WeightedCFG, std::vector<ShapeViolation>> parse_grammar_file_lenient(
    const std::string& text, const Semiring& ring);

// Derivation tree: a rule application with one subtree per nonterminal in
// the rule's right-hand side, in order. Terminals contribute no subtree.
struct GrammarDerivationTree {
  RuleId rule;
  std::vector<GrammarDerivationTree> children;
};

// Terminal sequence a derivation tree produces.
std::vector<SymbolId> tree_yield(const WeightedCFG& g, const GrammarDerivationTree& t);

// Root nonterminal of the tree (lhs of the root rule).
SymbolId tree_root(const WeightedCFG& g, const GrammarDerivationTree& t);

struct EnumerationResult {
  std::vector<GrammarDerivationTree> trees;
  bool truncated = false;  // cycle-cut or cap-clipped: list is not exhaustive
};

inline constexpr int kDefaultEnumerationCap = 100000;

// Exhaustively enumerates derivations of the sentence from the start symbol
// by recursive span splitting. Deterministic order: rules in declaration
// order, split points left to right, leftmost subtree varying slowest.
// Unary cycles are cut when an (nt, span) pair repeats on the current path;
// any cut or cap hit sets `truncated`.
EnumerationResult enumerate_derivations(const WeightedCFG& g,
                                        std::span<const SymbolId> sentence,
                                        int cap = kDefaultEnumerationCap);

}  // namespace lvsp
