#include "lvsp/derivation.hpp"

#include <fstream>
#include <sstream>

#include "doctest.h"
#include "support/generators.hpp"

using namespace lvsp;

namespace {

const Semiring& prob() { return make_semiring("probability"); }
const Semiring& count() { return make_semiring("counting"); }

WeightedCFG load(const char* file, const Semiring& ring) {
  std::ifstream in(std::string(TEST_DATA_DIR) + "/" + file);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_grammar_file(buf.str(), ring);
}

std::vector<Value> counts(std::vector<std::int64_t> v) {
  return std::vector<Value>(v.begin(), v.end());
}

}  // namespace

TEST_CASE("tree_value contracts child values into the rule weight") {
  // S -> A with weight M (shape A x S), A -> a with weight v (shape A):
  // value of (r1 (r2)) is the matrix-vector product sum_a v[a] * M[a, s].
  GrammarBuilder b(count());
  b.set_start("S");
  b.dim("S", 2);
  b.dim("A", 2);
  b.rule("S", {"A"}, counts({1, 2, 3, 4}));
  b.rule("A", {"a"}, counts({5, 7}));
  WeightedCFG g = b.build();

  GrammarDerivationTree t{0, {GrammarDerivationTree{1, {}}}};
  Tensor v = tree_value(g, t);
  REQUIRE(v.shape() == Shape{2});
  CHECK(values_equal(v[0], Value{std::int64_t{26}}));  // 5*1 + 7*3
  CHECK(values_equal(v[1], Value{std::int64_t{38}}));  // 5*2 + 7*4

  // Structural validation: wrong child count, wrong child lhs.
  GrammarDerivationTree no_child{0, {}};
  CHECK_THROWS_AS((void)tree_value(g, no_child), Error);
  GrammarDerivationTree wrong_child{0, {GrammarDerivationTree{0, {GrammarDerivationTree{1, {}}}}}};
  CHECK_THROWS_AS((void)tree_value(g, wrong_child), Error);
}

TEST_CASE("flatten is the preorder rule sequence; unflatten inverts it") {
  WeightedCFG g = load("latent.grammar", prob());
  auto sentence = g.to_symbols(std::vector<std::string>{"a", "a", "a"});
  auto res = enumerate_derivations(g, sentence);
  REQUIRE(res.trees.size() == 2);

  DerivationString s = flatten(res.trees[0]);  // (r1 (r3) (r2 (r3) (r3)))
  CHECK(s.rules == std::vector<RuleId>{0, 2, 1, 2, 2});

  for (const auto& t : res.trees) {
    GrammarDerivationTree back = unflatten(g, flatten(t));
    CHECK(tree_to_sexpr(back) == tree_to_sexpr(t));
  }
}

TEST_CASE("unflatten rejects sequences that are not a flattening") {
  WeightedCFG g = load("latent.grammar", prob());
  CHECK_THROWS_AS((void)unflatten(g, DerivationString{}), Error);
  // Truncated: r1 needs two A subtrees.
  CHECK_THROWS_AS((void)unflatten(g, DerivationString{{0, 2}}), Error);
  // Trailing garbage after a complete tree.
  CHECK_THROWS_AS((void)unflatten(g, DerivationString{{0, 2, 1, 2, 2, 2}}), Error);
  // Rule rewriting the wrong nonterminal mid-sequence.
  CHECK_THROWS_AS((void)unflatten(g, DerivationString{{0, 0, 2, 2}}), Error);
  // Unknown rule id.
  CHECK_THROWS_AS((void)unflatten(g, DerivationString{{7}}), Error);
}

TEST_CASE("string_value equals tree_value on every enumerated derivation") {
  // The left-fold over the flattened sequence must reproduce the recursive
  // tree contraction; checked per derivation, including under the
  // non-commutative semiring where operand order cannot be fudged.
  for (const char* ring_name : {"probability", "viterbi", "viterbi-derivation"}) {
    const Semiring& ring = make_semiring(ring_name);
    WeightedCFG g = load("latent.grammar", ring);
    auto sentence = g.to_symbols(std::vector<std::string>{"a", "a", "a"});
    for (const auto& t : enumerate_derivations(g, sentence).trees) {
      Tensor via_tree = tree_value(g, t);
      Tensor via_string = string_value(g, flatten(t));
      REQUIRE(via_tree.shape() == via_string.shape());
      CHECK(tensor_approx_eq(via_tree, via_string, 1e-12));
    }
  }
}

TEST_CASE("string_value equals tree_value on random general grammars") {
  testsup::Rng rng(67);
  for (const auto& name : semiring_names()) {
    const Semiring& ring = make_semiring(name);
    for (int i = 0; i < 15; ++i) {
      testsup::GrammarOptions opt;
      opt.cky_form = false;  // rhs length 1..3, terminals anywhere
      WeightedCFG g = testsup::random_grammar(rng, ring, opt);
      for (int j = 0; j < 5; ++j) {
        auto t = testsup::random_tree(rng, g, g.start(), 4);
        Tensor via_tree = tree_value(g, t);
        Tensor via_string = string_value(g, flatten(t));
        CHECK(tensor_approx_eq(via_tree, via_string, 1e-9));
        CHECK(via_tree.shape() == Shape{g.dim(g.start())});
      }
    }
  }
}

TEST_CASE("intermediate string product shapes follow the frontier chain") {
  // Prefix products of [r1 r3 r2 r3 r3]: (3x3x2) -> (3x2) -> (3x3x2) ->
  // (3x2) -> (2). The first rank always tracks the leftmost pending
  // nonterminal of the sentential form; each rule closes it by contracting
  // against the rule weight's lhs index and deposits its rhs nonterminal
  // ranks in front.
  WeightedCFG g = load("latent.grammar", prob());
  std::vector<RuleId> seq{0, 2, 1, 2, 2};
  std::vector<Shape> expect{{3, 3, 2}, {3, 2}, {3, 3, 2}, {3, 2}, {2}};
  Tensor acc = g.weight(seq[0]);
  CHECK(acc.shape() == expect[0]);
  for (std::size_t i = 1; i < seq.size(); ++i) {
    const Tensor& w = g.weight(seq[i]);
    acc = contract(acc, 1, w, w.rank());
    CHECK(acc.shape() == expect[i]);
  }
}

TEST_CASE("sentence oracle sums tree values; truncation is an error") {
  WeightedCFG gc = load("count.grammar", count());
  auto sentence = gc.to_symbols(std::vector<std::string>{"a", "a", "a"});
  Tensor total = sentence_value_oracle(gc, sentence);
  REQUIRE(total.shape() == Shape{1});
  CHECK(values_equal(total[0], Value{std::int64_t{2}}));

  // Unparseable sentence: zero, not an error.
  GrammarBuilder b(count());
  b.set_start("S");
  b.dim("S", 1);
  b.rule("S", {"a"}, counts({1}));
  b.rule("S", {"b"}, counts({1}));
  WeightedCFG g2 = b.build();
  auto bb = g2.to_symbols(std::vector<std::string>{"b", "b"});
  CHECK(values_equal(sentence_value_oracle(g2, bb)[0], Value{std::int64_t{0}}));

  // Cyclic grammar: enumeration is cut, so the oracle refuses.
  WeightedCFG gcyc = load("cycle.grammar", prob());
  auto one = gcyc.to_symbols(std::vector<std::string>{"a"});
  CHECK_THROWS_AS((void)sentence_value_oracle(gcyc, one), ConfigError);
  // Cap exhaustion refuses the same way.
  WeightedCFG glat = load("latent.grammar", prob());
  auto five = glat.to_symbols(std::vector<std::string>(5, "a"));
  CHECK_THROWS_AS((void)sentence_value_oracle(glat, five, 3), ConfigError);
}

TEST_CASE("tree_to_sexpr renders nested rule labels") {
  GrammarDerivationTree leaf{2, {}};
  GrammarDerivationTree inner{1, {leaf, leaf}};
  GrammarDerivationTree root{0, {leaf, inner}};
  CHECK(tree_to_sexpr(root) == "(r1 (r3) (r2 (r3) (r3)))");
}
