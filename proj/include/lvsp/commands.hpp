#pragma once

#include <iosfwd>

#include "json.hpp"
#include "lvsp/outside.hpp"

namespace lvsp {

struct RunConfig {
  std::string command;  // check | parse | inside-outside | oracle
  std::string grammar_path;
  std::string semiring = "probability";
  std::vector<std::string> sentence;  // whitespace-split tokens
  std::string input_path;             // batch file for parse, one sentence per line
  double tolerance = 1e-9;
  int max_generations = 10000;
  bool json = false;
  bool dump_chart = false;
  int cap = kDefaultEnumerationCap;  // oracle enumeration cap
};

// Dispatches on cfg.command, writes the report to out and diagnostics to
// err, and maps errors to the exit-code contract: 0 success, 1 domain
// failure (ill-defined weights, incompatible semiring, unknown terminal,
// zero posterior), 2 usage/IO/syntax failure.
int run_command(const RunConfig& cfg, std::ostream& out, std::ostream& err);

int cmd_check(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_parse(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_inside_outside(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_oracle(const RunConfig& cfg, std::ostream& out, std::ostream& err);

// JSON encoding of tensors as {"value": [...], "shape": [...]}. Scalars
// encode per semiring: booleans as true/false, counts as integers, reals as
// numbers (-inf as the string "-inf"), best-derivations as {"score",
// "rules"} objects or null for the additive zero. from_json inverts it;
// round-trips are bit-exact for the discrete semirings.
nlohmann::json tensor_to_json(const Tensor& t);
Tensor tensor_from_json(const Semiring& ring, const nlohmann::json& j);

}  // namespace lvsp
