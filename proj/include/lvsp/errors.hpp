#pragma once

#include <stdexcept>
#include <string>

namespace lvsp {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad user-facing configuration: unknown semiring name, bad CLI arguments,
// unknown terminal in a sentence, and the like.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// A partial operation (tensor add / contraction) was applied to operands
// whose shapes are not compatible, so the result is simply not defined.
class PartialOpError : public Error {
 public:
  explicit PartialOpError(const std::string& msg) : Error(msg) {}
};

// The operation is meaningful for some semirings but not the one supplied
// (e.g. outside values over a non-commutative semiring).
class UnsupportedOperation : public Error {
 public:
  explicit UnsupportedOperation(const std::string& msg) : Error(msg) {}
};

// Syntax error while reading a grammar file. Carries the 1-based line.
class ParseError : public Error {
 public:
  ParseError(int line, const std::string& msg)
      : Error("line " + std::to_string(line) + ": " + msg), line_(line) {}
  // File-level problem with no single offending line (e.g. missing start).
  explicit ParseError(const std::string& msg) : Error(msg), line_(0) {}
  int line() const { return line_; }

 private:
  int line_;
};

// A sentence has no derivation with nonzero total mass, so posterior
// quantities (expected rule counts) are undefined.
class UndefinedPosterior : public Error {
 public:
  explicit UndefinedPosterior(const std::string& msg) : Error(msg) {}
};

// Invariant broken inside the engine itself; always a bug, never user error.
class InternalError : public Error {
 public:
  explicit InternalError(const std::string& msg) : Error("internal: " + msg) {}
};

}  // namespace lvsp
