#include "lvsp/commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

namespace lvsp {

namespace {

using nlohmann::json;

std::string fmt_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_tokens(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

void validate(const RunConfig& cfg) {
  if (cfg.tolerance <= 0) throw ConfigError("--tolerance must be positive");
  if (cfg.max_generations < 1) throw ConfigError("--max-generations must be >= 1");
  if (cfg.cap < 1) throw ConfigError("--cap must be >= 1");
  if (cfg.grammar_path.empty()) throw ConfigError("--grammar is required");
}

WeightedCFG load_grammar(const RunConfig& cfg) {
  return parse_grammar_file(read_file(cfg.grammar_path), make_semiring(cfg.semiring));
}

std::vector<std::vector<std::string>> gather_sentences(const RunConfig& cfg,
                                                       bool allow_batch) {
  if (!cfg.sentence.empty() && !cfg.input_path.empty()) {
    throw ConfigError("--sentence and --input are mutually exclusive");
  }
  if (!cfg.sentence.empty()) return {cfg.sentence};
  if (!cfg.input_path.empty()) {
    if (!allow_batch) throw ConfigError("--input is only supported by 'parse'");
    std::istringstream in(read_file(cfg.input_path));
    std::vector<std::vector<std::string>> out;
    std::string line;
    while (std::getline(in, line)) {
      auto toks = split_tokens(line);
      if (!toks.empty()) out.push_back(std::move(toks));
    }
    if (out.empty()) throw ConfigError("no sentences in '" + cfg.input_path + "'");
    return out;
  }
  throw ConfigError("a sentence is required (--sentence \"tok tok ...\")");
}

std::string join(const std::vector<std::string>& toks) {
  std::string out;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (i) out += " ";
    out += toks[i];
  }
  return out;
}

json value_to_json(const Semiring& /*ring*/, const Value& v) {
  if (std::holds_alternative<bool>(v)) return std::get<bool>(v);
  if (std::holds_alternative<std::int64_t>(v)) return std::get<std::int64_t>(v);
  if (std::holds_alternative<double>(v)) {
    double d = std::get<double>(v);
    if (std::isinf(d)) return d < 0 ? json("-inf") : json("inf");
    return d;
  }
  const auto& bd = std::get<BestDerivation>(v);
  if (bd.none) return nullptr;
  json rules = json::array();
  for (RuleId r : bd.rules) rules.push_back(rule_label(r));
  return json{{"score", bd.score}, {"rules", rules}};
}

Value value_from_json(const Semiring& ring, const json& j) {
  const std::string& name = ring.name();
  if (name == "boolean") return j.get<bool>();
  if (name == "counting") return j.get<std::int64_t>();
  if (name == "viterbi-derivation") {
    if (j.is_null()) return BestDerivation{};
    BestDerivation bd;
    bd.none = false;
    bd.score = j.at("score").get<double>();
    for (const auto& r : j.at("rules")) {
      std::string label = r.get<std::string>();
      bd.rules.push_back(static_cast<RuleId>(std::stol(label.substr(1)) - 1));
    }
    return bd;
  }
  // real-valued semirings
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    throw ConfigError("bad tensor entry '" + s + "' in JSON");
  }
  return j.get<double>();
}

// --- chart rendering -----------------------------------------------------

void dump_pass(std::ostream& out, const Chart& chart, bool outer_pass) {
  const WeightedCFG& g = chart.grammar();
  const auto& buckets = chart.buckets();
  for (std::size_t b = 0; b < buckets.size(); ++b) {
    if (b) out << "---\n";
    BucketState st = outer_pass ? chart.outer_state(static_cast<int>(b))
                                : chart.inner_state(static_cast<int>(b));
    for (const Item& x : buckets[b].items) {
      const Tensor& v = outer_pass ? chart.outer(x) : chart.inner(x);
      out << item_to_string(g, x) << " : " << to_string(v);
      if (buckets[b].looping) out << " (loop, g=" << st.generations << ")";
      out << "\n";
    }
  }
}

void warn_nonconvergence(std::ostream& err, const Chart& chart) {
  if (!chart.all_converged()) {
    err << "warning: fixpoint iteration hit max generations before convergence; "
           "values are the last generation\n";
  }
}

// Best entry of a viterbi-derivation goal vector, for the human-readable
// parse report.
std::string best_derivation_line(const Tensor& goal) {
  Value best = goal.ring().zero();
  for (std::size_t i = 0; i < goal.size(); ++i) best = goal.ring().add(best, goal[i]);
  const auto& bd = std::get<BestDerivation>(best);
  if (bd.none) return "best: none";
  std::string out = "best:";
  for (RuleId r : bd.rules) out += " " + rule_label(r);
  out += " (score " + fmt_real(bd.score) + ")";
  return out;
}

}  // namespace

json tensor_to_json(const Tensor& t) {
  json value = json::array();
  for (std::size_t i = 0; i < t.size(); ++i) {
    value.push_back(value_to_json(t.ring(), t[i]));
  }
  json shape = json::array();
  for (int d : t.shape()) shape.push_back(d);
  return json{{"value", value}, {"shape", shape}};
}

Tensor tensor_from_json(const Semiring& ring, const json& j) {
  Shape shape;
  for (const auto& d : j.at("shape")) shape.push_back(d.get<int>());
  std::vector<Value> data;
  for (const auto& v : j.at("value")) data.push_back(value_from_json(ring, v));
  return Tensor(ring, std::move(shape), std::move(data));
}

int cmd_check(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  (void)err;
  auto [g, violations] =
      parse_grammar_file_lenient(read_file(cfg.grammar_path), make_semiring(cfg.semiring));

  if (cfg.json) {
    json report;
    report["well_defined"] = violations.empty();
    json vs = json::array();
    for (const auto& v : violations) {
      vs.push_back({{"rule", rule_label(v.rule)},
                    {"expected", v.expected},
                    {"actual", v.actual}});
    }
    report["violations"] = vs;
    out << report.dump() << "\n";
    return violations.empty() ? 0 : 1;
  }

  if (violations.empty()) {
    out << "well-defined: " << g.rules().size() << " rules, dims";
    for (SymbolId s = 0; s < g.num_symbols(); ++s) {
      if (g.is_nonterminal(s)) out << " " << g.symbol_name(s) << "=" << g.dim(s);
    }
    out << "\n";
    return 0;
  }
  for (const auto& v : violations) {
    out << describe_violation(g, v) << "\n";
  }
  out << "not well-defined: " << violations.size() << " violation(s)\n";
  return 1;
}

int cmd_parse(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  WeightedCFG g = load_grammar(cfg);
  auto sentences = gather_sentences(cfg, /*allow_batch=*/true);
  const bool batch = sentences.size() > 1;
  FixpointOptions opts{cfg.max_generations, cfg.tolerance};
  DescriptionId desc = pick_description(g);

  json batch_report = json::array();
  for (std::size_t si = 0; si < sentences.size(); ++si) {
    auto symbols = g.to_symbols(sentences[si]);
    Chart chart(g, instantiate(g, desc, symbols));
    compute_inner(chart, opts);
    warn_nonconvergence(err, chart);
    const Tensor& value = chart.inner(chart.goal());

    if (cfg.json) {
      json one = tensor_to_json(value);
      if (batch) one["sentence"] = join(sentences[si]);
      batch_report.push_back(std::move(one));
      continue;
    }
    if (batch) {
      if (si) out << "\n";
      out << "sentence: " << join(sentences[si]) << "\n";
    }
    out << "value: " << to_string(value) << "\n";
    out << "shape: " << shape_to_string(value.shape()) << "\n";
    if (g.ring().name() == "viterbi-derivation") {
      out << best_derivation_line(value) << "\n";
    }
    if (cfg.dump_chart) {
      out << "chart:\n";
      dump_pass(out, chart, /*outer_pass=*/false);
    }
  }
  if (cfg.json) {
    out << (batch ? batch_report : batch_report.front()).dump() << "\n";
  }
  return 0;
}

int cmd_inside_outside(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  WeightedCFG g = load_grammar(cfg);
  auto sentences = gather_sentences(cfg, /*allow_batch=*/false);
  FixpointOptions opts{cfg.max_generations, cfg.tolerance};

  auto symbols = g.to_symbols(sentences.front());
  Chart chart(g, instantiate(g, pick_description(g), symbols));
  compute_inner(chart, opts);
  compute_outer(chart, opts);
  warn_nonconvergence(err, chart);

  bool with_counts = g.ring().name() == "probability";
  std::map<RuleId, double> counts;
  if (with_counts) counts = expected_rule_counts(chart);

  if (cfg.json) {
    json items = json::array();
    for (const Item& x : chart.items()) {
      items.push_back({{"item", item_to_string(g, x)},
                       {"inner", tensor_to_json(chart.inner(x))},
                       {"outer", tensor_to_json(chart.outer(x))}});
    }
    json report{{"items", std::move(items)}};
    if (with_counts) {
      json jc;
      for (const auto& [rule, c] : counts) jc[rule_label(rule)] = c;
      report["counts"] = std::move(jc);
    }
    out << report.dump() << "\n";
    return 0;
  }

  out << "inner:\n";
  dump_pass(out, chart, /*outer_pass=*/false);
  out << "outer:\n";
  dump_pass(out, chart, /*outer_pass=*/true);
  if (with_counts) {
    out << "counts:\n";
    for (const auto& [rule, c] : counts) {
      out << rule_label(rule) << " " << fmt_real(c) << "\n";
    }
  }
  return 0;
}

int cmd_oracle(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  (void)err;
  WeightedCFG g = load_grammar(cfg);
  auto sentences = gather_sentences(cfg, /*allow_batch=*/false);
  auto symbols = g.to_symbols(sentences.front());

  EnumerationResult res = enumerate_derivations(g, symbols, cfg.cap);
  Tensor total = zero_tensor(g.ring(), Shape{g.dim(g.start())});
  int mismatches = 0;

  json jtrees = json::array();
  for (std::size_t i = 0; i < res.trees.size(); ++i) {
    const auto& t = res.trees[i];
    Tensor tv = tree_value(g, t);
    Tensor sv = string_value(g, flatten(t));
    bool match = tensor_approx_eq(tv, sv, cfg.tolerance);
    if (!match) ++mismatches;
    total = tensor_add(total, tv);

    if (cfg.json) {
      jtrees.push_back({{"tree", tree_to_sexpr(t)},
                        {"tree_value", tensor_to_json(tv)},
                        {"string_value", tensor_to_json(sv)},
                        {"match", match}});
    } else {
      out << "tree " << (i + 1) << ": " << tree_to_sexpr(t) << "\n";
      out << "  tree value:   " << to_string(tv) << "\n";
      out << "  string value: " << to_string(sv) << "\n";
      if (!match) out << "  MISMATCH: tree and string values differ\n";
    }
  }

  if (cfg.json) {
    json report{{"derivations", std::move(jtrees)},
                {"total", tensor_to_json(total)},
                {"count", res.trees.size()},
                {"truncated", res.truncated},
                {"mismatches", mismatches}};
    out << report.dump() << "\n";
  } else {
    out << res.trees.size() << " derivations\n";
    out << "total: " << to_string(total) << "\n";
    if (res.truncated) {
      out << "warning: enumeration truncated (cap " << cfg.cap
          << ", or infinitely many derivations); total covers the listed"
          << " derivations only\n";
    }
  }
  return mismatches == 0 ? 0 : 1;
}

int run_command(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    validate(cfg);
    if (cfg.command == "check") return cmd_check(cfg, out, err);
    if (cfg.command == "parse") return cmd_parse(cfg, out, err);
    if (cfg.command == "inside-outside") return cmd_inside_outside(cfg, out, err);
    if (cfg.command == "oracle") return cmd_oracle(cfg, out, err);
    throw ConfigError("unknown command '" + cfg.command + "'");
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const InternalError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    // WellDefinednessError, SentenceError, DescriptionMismatch,
    // UnsupportedOperation, UndefinedPosterior, PartialOpError: the run was
    // set up correctly but the domain said no.
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace lvsp
