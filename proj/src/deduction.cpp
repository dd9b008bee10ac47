#include "lvsp/deduction.hpp"

#include <algorithm>
#include <map>

namespace lvsp {

std::string item_to_string(const WeightedCFG& g, const Item& x) {
  return std::to_string(x.start) + " " + g.symbol_name(x.nt) + " " +
         std::to_string(x.end);
}

namespace {

enum class RuleForm { lexical, unary_nt, binary_nt, other };

RuleForm rule_form(const WeightedCFG& g, const Rule& r) {
  if (r.rhs.size() == 1) {
    return g.is_terminal(r.rhs[0]) ? RuleForm::lexical : RuleForm::unary_nt;
  }
  if (r.rhs.size() == 2 && g.is_nonterminal(r.rhs[0]) && g.is_nonterminal(r.rhs[1])) {
    return RuleForm::binary_nt;
  }
  return RuleForm::other;
}

void reject_rule(const WeightedCFG& g, const Rule& r, const char* description) {
  throw DescriptionMismatch("rule " + rule_label(r.id) + " (" + g.render_rule(r.id) +
                            ") does not fit the " + description + " description");
}

Instantiation instantiate_impl(const WeightedCFG& g, std::span<const SymbolId> sentence,
                               bool allow_unary) {
  if (sentence.empty()) throw ConfigError("cannot instantiate an empty sentence");
  for (const Rule& r : g.rules()) {
    RuleForm f = rule_form(g, r);
    if (f == RuleForm::other || (f == RuleForm::unary_nt && !allow_unary)) {
      reject_rule(g, r, allow_unary ? "cky_unary" : "cky");
    }
  }

  const int n = static_cast<int>(sentence.size());
  Instantiation out;
  out.goal = Item{0, g.start(), n};

  for (int len = 1; len <= n; ++len) {
    for (int i = 0; i + len <= n; ++i) {
      const int j = i + len;
      for (const Rule& r : g.rules()) {
        switch (rule_form(g, r)) {
          case RuleForm::lexical:
            if (len == 1 && r.rhs[0] == sentence[static_cast<std::size_t>(i)]) {
              out.instances.push_back({r.id, {}, Item{i, r.lhs, j}});
            }
            break;
          case RuleForm::binary_nt:
            for (int k = i + 1; k < j; ++k) {
              out.instances.push_back({r.id,
                                       {Item{i, r.rhs[0], k}, Item{k, r.rhs[1], j}},
                                       Item{i, r.lhs, j}});
            }
            break;
          case RuleForm::unary_nt:
            out.instances.push_back({r.id, {Item{i, r.rhs[0], j}}, Item{i, r.lhs, j}});
            break;
          case RuleForm::other:
            break;  // rejected above
        }
      }
    }
  }
  return out;
}

}  // namespace

DescriptionId pick_description(const WeightedCFG& g) {
  bool unary = false;
  for (const Rule& r : g.rules()) {
    switch (rule_form(g, r)) {
      case RuleForm::unary_nt:
        unary = true;
        break;
      case RuleForm::other:
        reject_rule(g, r, "cky_unary");
        break;
      default:
        break;
    }
  }
  return unary ? DescriptionId::cky_unary : DescriptionId::cky;
}

Instantiation instantiate_cky(const WeightedCFG& g, std::span<const SymbolId> sentence) {
  return instantiate_impl(g, sentence, false);
}

Instantiation instantiate_cky_unary(const WeightedCFG& g,
                                    std::span<const SymbolId> sentence) {
  return instantiate_impl(g, sentence, true);
}

Instantiation instantiate(const WeightedCFG& g, DescriptionId description,
                          std::span<const SymbolId> sentence) {
  return description == DescriptionId::cky ? instantiate_cky(g, sentence)
                                           : instantiate_cky_unary(g, sentence);
}

// --- buckets -------------------------------------------------------------

namespace {

// Iterative Tarjan; emits components in reverse topological order.
class SccFinder {
 public:
  explicit SccFinder(const std::vector<std::vector<int>>& adj)
      : adj_(adj),
        n_(adj.size()),
        index_(n_, -1),
        lowlink_(n_, 0),
        on_stack_(n_, false) {}

  std::vector<std::vector<int>> run() {
    for (std::size_t v = 0; v < n_; ++v) {
      if (index_[v] < 0) visit(static_cast<int>(v));
    }
    return components_;
  }

 private:
  struct Frame {
    int v;
    std::size_t edge = 0;
  };

  void visit(int root) {
    std::vector<Frame> call_stack{{root}};
    open(root);
    while (!call_stack.empty()) {
      Frame& f = call_stack.back();
      auto v = static_cast<std::size_t>(f.v);
      if (f.edge < adj_[v].size()) {
        int w = adj_[v][f.edge++];
        if (index_[static_cast<std::size_t>(w)] < 0) {
          open(w);
          call_stack.push_back({w});
        } else if (on_stack_[static_cast<std::size_t>(w)]) {
          lowlink_[v] = std::min(lowlink_[v], index_[static_cast<std::size_t>(w)]);
        }
      } else {
        if (lowlink_[v] == index_[v]) {
          std::vector<int> comp;
          int w;
          do {
            w = stack_.back();
            stack_.pop_back();
            on_stack_[static_cast<std::size_t>(w)] = false;
            comp.push_back(w);
          } while (w != f.v);
          components_.push_back(std::move(comp));
        }
        int done = f.v;
        call_stack.pop_back();
        if (!call_stack.empty()) {
          auto p = static_cast<std::size_t>(call_stack.back().v);
          lowlink_[p] = std::min(lowlink_[p], lowlink_[static_cast<std::size_t>(done)]);
        }
      }
    }
  }

  void open(int v) {
    auto u = static_cast<std::size_t>(v);
    index_[u] = lowlink_[u] = counter_++;
    stack_.push_back(v);
    on_stack_[u] = true;
  }

  const std::vector<std::vector<int>>& adj_;
  std::size_t n_;
  int counter_ = 0;
  std::vector<int> index_, lowlink_, stack_;
  std::vector<bool> on_stack_;
  std::vector<std::vector<int>> components_;
};

std::vector<Item> collect_items(const std::vector<InferenceInstance>& instances) {
  std::vector<Item> items;
  for (const auto& inst : instances) {
    items.push_back(inst.conclusion);
    items.insert(items.end(), inst.items.begin(), inst.items.end());
  }
  std::sort(items.begin(), items.end());
  items.erase(std::unique(items.begin(), items.end()), items.end());
  return items;
}

}  // namespace

std::vector<Bucket> bucket_order(const std::vector<InferenceInstance>& instances) {
  std::vector<Item> items = collect_items(instances);
  auto id_of = [&](const Item& x) {
    return static_cast<int>(std::lower_bound(items.begin(), items.end(), x) -
                            items.begin());
  };

  std::vector<std::vector<int>> adj(items.size());
  std::vector<bool> self_edge(items.size(), false);
  for (const auto& inst : instances) {
    int to = id_of(inst.conclusion);
    for (const Item& a : inst.items) {
      int from = id_of(a);
      if (from == to) self_edge[static_cast<std::size_t>(from)] = true;
      adj[static_cast<std::size_t>(from)].push_back(to);
    }
  }

  auto components = SccFinder(adj).run();
  std::reverse(components.begin(), components.end());  // dependencies first

  std::vector<Bucket> buckets;
  buckets.reserve(components.size());
  for (auto& comp : components) {
    Bucket b;
    std::sort(comp.begin(), comp.end());
    for (int v : comp) b.items.push_back(items[static_cast<std::size_t>(v)]);
    b.looping = comp.size() > 1 ||
                self_edge[static_cast<std::size_t>(comp.front())];
    buckets.push_back(std::move(b));
  }
  return buckets;
}

// --- chart ---------------------------------------------------------------

Chart::Chart(const WeightedCFG& g, Instantiation inst)
    : g_(&g), instances_(std::move(inst.instances)), goal_(inst.goal) {
  items_ = collect_items(instances_);
  buckets_ = bucket_order(instances_);

  bool goal_known = std::binary_search(items_.begin(), items_.end(), goal_);
  if (!goal_known) {
    items_.insert(std::lower_bound(items_.begin(), items_.end(), goal_), goal_);
    buckets_.push_back(Bucket{{goal_}, false});
  }

  inner_.resize(items_.size());
  outer_.resize(items_.size());
  inner_state_.resize(buckets_.size());
  outer_state_.resize(buckets_.size());
  concluding_.resize(items_.size());
  uses_.resize(items_.size());
  bucket_of_.assign(items_.size(), -1);

  for (std::size_t b = 0; b < buckets_.size(); ++b) {
    for (const Item& x : buckets_[b].items) {
      bucket_of_[static_cast<std::size_t>(require(x))] = static_cast<int>(b);
    }
  }
  for (std::size_t i = 0; i < instances_.size(); ++i) {
    const auto& inst = instances_[i];
    concluding_[static_cast<std::size_t>(require(inst.conclusion))].push_back(
        static_cast<int>(i));
    for (std::size_t p = 0; p < inst.items.size(); ++p) {
      uses_[static_cast<std::size_t>(require(inst.items[p]))].push_back(
          {static_cast<int>(i), static_cast<int>(p)});
    }
  }
}

int Chart::index_of(const Item& x) const {
  auto it = std::lower_bound(items_.begin(), items_.end(), x);
  if (it == items_.end() || *it != x) return -1;
  return static_cast<int>(it - items_.begin());
}

int Chart::require(const Item& x) const {
  int i = index_of(x);
  if (i < 0) {
    throw InternalError("item " + item_to_string(*g_, x) + " is not in the chart");
  }
  return i;
}

int Chart::bucket_of(const Item& x) const {
  return bucket_of_[static_cast<std::size_t>(require(x))];
}

const std::vector<int>& Chart::concluding(const Item& x) const {
  return concluding_[static_cast<std::size_t>(require(x))];
}

const std::vector<std::pair<int, int>>& Chart::uses(const Item& x) const {
  return uses_[static_cast<std::size_t>(require(x))];
}

bool Chart::inner_computed(const Item& x) const {
  return inner_[static_cast<std::size_t>(require(x))].has_value();
}

const Tensor& Chart::inner(const Item& x) const {
  const auto& slot = inner_[static_cast<std::size_t>(require(x))];
  if (!slot) {
    throw InternalError("inner value of " + item_to_string(*g_, x) +
                        " read before it was computed (scheduling bug)");
  }
  return *slot;
}

void Chart::set_inner(const Item& x, Tensor v) {
  if (v.shape() != inner_shape(x)) {
    throw InternalError("inner value of " + item_to_string(*g_, x) +
                        " has shape " + shape_to_string(v.shape()) + ", want " +
                        shape_to_string(inner_shape(x)));
  }
  inner_[static_cast<std::size_t>(require(x))] = std::move(v);
}

bool Chart::outer_computed(const Item& x) const {
  return outer_[static_cast<std::size_t>(require(x))].has_value();
}

const Tensor& Chart::outer(const Item& x) const {
  const auto& slot = outer_[static_cast<std::size_t>(require(x))];
  if (!slot) {
    throw InternalError("outer value of " + item_to_string(*g_, x) +
                        " read before it was computed (scheduling bug)");
  }
  return *slot;
}

void Chart::set_outer(const Item& x, Tensor v) {
  Shape want = inner_shape(x);
  want.push_back(g_->dim(g_->start()));
  if (v.shape() != want) {
    throw InternalError("outer value of " + item_to_string(*g_, x) +
                        " has shape " + shape_to_string(v.shape()) + ", want " +
                        shape_to_string(want));
  }
  outer_[static_cast<std::size_t>(require(x))] = std::move(v);
}

void Chart::set_inner_state(int bucket, BucketState s) {
  inner_state_[static_cast<std::size_t>(bucket)] = s;
}

void Chart::set_outer_state(int bucket, BucketState s) {
  outer_state_[static_cast<std::size_t>(bucket)] = s;
}

bool Chart::all_converged() const {
  for (const auto& s : inner_state_) {
    if (!s.converged) return false;
  }
  for (const auto& s : outer_state_) {
    if (!s.converged) return false;
  }
  return true;
}

Shape Chart::inner_shape(const Item& x) const { return Shape{g_->dim(x.nt)}; }

// --- inner pass ------------------------------------------------------------

namespace {

// One instance's contribution to V(conclusion), with the antecedent item
// values supplied by the caller (the chart for the straight pass, the
// previous generation for looping buckets).
Tensor instance_inner(const WeightedCFG& g, const InferenceInstance& inst,
                      const std::vector<Tensor>& antecedent_values) {
  return contract_list(g.weight(inst.rule), antecedent_values);
}

bool generation_converged(const Semiring& ring, const Tensor& prev, const Tensor& next,
                          double tolerance) {
  if (ring.is_idempotent()) {
    for (std::size_t i = 0; i < prev.size(); ++i) {
      if (!values_equal(prev[i], next[i])) return false;
    }
    return true;
  }
  return tensor_approx_eq(prev, next, tolerance);
}

}  // namespace

Tensor inner_value(Chart& chart, const Item& x) {
  const WeightedCFG& g = chart.grammar();
  Tensor sum = zero_tensor(g.ring(), chart.inner_shape(x));
  for (int idx : chart.concluding(x)) {
    const auto& inst = chart.instances()[static_cast<std::size_t>(idx)];
    std::vector<Tensor> vals;
    vals.reserve(inst.items.size());
    for (const Item& a : inst.items) vals.push_back(chart.inner(a));
    sum = tensor_add(sum, instance_inner(g, inst, vals));
  }
  chart.set_inner(x, sum);
  return sum;
}

void inner_value_looping(Chart& chart, int bucket, const FixpointOptions& opts) {
  const WeightedCFG& g = chart.grammar();
  const Semiring& ring = g.ring();
  if (!ring.is_omega_continuous()) {
    throw UnsupportedOperation("looping bucket needs an omega-continuous semiring, '" +
                               ring.name() + "' is not flagged as one");
  }
  const Bucket& b = chart.buckets()[static_cast<std::size_t>(bucket)];

  std::map<Item, Tensor> cur;
  for (const Item& x : b.items) {
    cur.emplace(x, zero_tensor(ring, chart.inner_shape(x)));
  }

  BucketState state{opts.max_generations, false};
  for (int gen = 1; gen <= opts.max_generations; ++gen) {
    std::map<Item, Tensor> next;
    for (const Item& x : b.items) {
      Tensor sum = zero_tensor(ring, chart.inner_shape(x));
      for (int idx : chart.concluding(x)) {
        const auto& inst = chart.instances()[static_cast<std::size_t>(idx)];
        std::vector<Tensor> vals;
        vals.reserve(inst.items.size());
        for (const Item& a : inst.items) {
          auto in_bucket = cur.find(a);
          vals.push_back(in_bucket != cur.end() ? in_bucket->second : chart.inner(a));
        }
        sum = tensor_add(sum, instance_inner(g, inst, vals));
      }
      next.emplace(x, std::move(sum));
    }
    bool same = true;
    for (const Item& x : b.items) {
      if (!generation_converged(ring, cur.at(x), next.at(x), opts.tolerance)) {
        same = false;
        break;
      }
    }
    cur = std::move(next);
    if (same) {
      state = BucketState{gen, true};
      break;
    }
  }

  for (auto& [x, v] : cur) chart.set_inner(x, std::move(v));
  chart.set_inner_state(bucket, state);
}

void compute_inner(Chart& chart, const FixpointOptions& opts) {
  for (std::size_t b = 0; b < chart.buckets().size(); ++b) {
    if (chart.buckets()[b].looping) {
      inner_value_looping(chart, static_cast<int>(b), opts);
    } else {
      for (const Item& x : chart.buckets()[b].items) inner_value(chart, x);
    }
  }
}

Tensor sentence_value(const WeightedCFG& g, DescriptionId description,
                      std::span<const SymbolId> sentence, const FixpointOptions& opts) {
  Chart chart(g, instantiate(g, description, sentence));
  compute_inner(chart, opts);
  return chart.inner(chart.goal());
}

Tensor sentence_value(const WeightedCFG& g, std::span<const SymbolId> sentence,
                      const FixpointOptions& opts) {
  return sentence_value(g, pick_description(g), sentence, opts);
}

// --- item derivation trees ---------------------------------------------

namespace {

ItemDerivationTree item_tree_rec(const WeightedCFG& g, const GrammarDerivationTree& t,
                                 int start) {
  const Rule& r = g.rule(t.rule);
  auto nts = g.rhs_nonterminal_positions(r);
  if (t.children.size() != nts.size()) {
    throw Error("invalid derivation tree: rule '" + g.render_rule(t.rule) +
                "' expects " + std::to_string(nts.size()) + " subtrees, got " +
                std::to_string(t.children.size()));
  }
  ItemDerivationTree out;
  out.rule = t.rule;
  int pos = start;
  std::size_t child = 0;
  for (SymbolId s : r.rhs) {
    if (g.is_terminal(s)) {
      ++pos;
    } else {
      out.children.push_back(item_tree_rec(g, t.children[child++], pos));
      pos = out.children.back().head.end;
    }
  }
  out.head = Item{start, r.lhs, pos};
  return out;
}

}  // namespace

ItemDerivationTree item_tree_from_grammar_tree(const WeightedCFG& g,
                                               const GrammarDerivationTree& t,
                                               int start) {
  return item_tree_rec(g, t, start);
}

Tensor item_tree_value(const WeightedCFG& g, const ItemDerivationTree& t) {
  std::vector<Tensor> child_values;
  child_values.reserve(t.children.size());
  for (const auto& c : t.children) child_values.push_back(item_tree_value(g, c));
  return contract_list(g.weight(t.rule), child_values);
}

int count_item_occurrences(const ItemDerivationTree& t, const Item& x) {
  int n = t.head == x ? 1 : 0;
  for (const auto& c : t.children) n += count_item_occurrences(c, x);
  return n;
}

}  // namespace lvsp
