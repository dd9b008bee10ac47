#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "lvsp/commands.hpp"

namespace {

void add_common(CLI::App* cmd, lvsp::RunConfig& cfg, bool with_sentence) {
  cmd->add_option("--grammar", cfg.grammar_path, "grammar file")->required();
  cmd->add_option("--semiring", cfg.semiring,
                  "boolean|counting|probability|viterbi|log|viterbi-derivation");
  cmd->add_flag("--json", cfg.json, "emit JSON instead of text");
  if (with_sentence) {
    cmd->add_option_function<std::string>(
        "--sentence",
        [&cfg](const std::string& s) {
          std::istringstream ss(s);
          std::string tok;
          cfg.sentence.clear();
          while (ss >> tok) cfg.sentence.push_back(tok);
        },
        "sentence as one whitespace-separated string");
    cmd->add_option("--tolerance", cfg.tolerance, "fixpoint convergence tolerance");
    cmd->add_option("--max-generations", cfg.max_generations,
                    "fixpoint iteration limit for looping buckets");
  }
}

}  // namespace

int main(int argc, char** argv) {
  lvsp::RunConfig cfg;
  CLI::App app{"latent-variable semiring parser"};
  app.require_subcommand(1);

  auto* check = app.add_subcommand("check", "verify rule weight shapes");
  add_common(check, cfg, false);

  auto* parse = app.add_subcommand("parse", "compute the sentence value");
  add_common(parse, cfg, true);
  parse->add_option("--input", cfg.input_path, "batch file, one sentence per line");
  parse->add_flag("--dump-chart", cfg.dump_chart, "print every item's value");

  auto* io = app.add_subcommand("inside-outside",
                                "compute inner/outer values and expected rule counts");
  add_common(io, cfg, true);

  auto* oracle = app.add_subcommand("oracle",
                                    "enumerate derivations and value them by brute force");
  add_common(oracle, cfg, true);
  oracle->add_option("--cap", cfg.cap, "max derivations to enumerate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  cfg.command = app.get_subcommands().front()->get_name();
  return lvsp::run_command(cfg, std::cout, std::cerr);
}
