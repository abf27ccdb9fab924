#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace repcrash {

// Base of every error the library raises. `stage()` names the pipeline step
// so the CLI can attribute failures.
class Error : public std::runtime_error {
 public:
  Error(std::string stage, const std::string& what)
      : std::runtime_error(what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("parse", "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class UnknownOperationKind : public Error {
 public:
  explicit UnknownOperationKind(const std::string& kind)
      : Error("parse", "unknown operation kind '" + kind + "'"), kind_(kind) {}
  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

class SequenceOrderError : public Error {
 public:
  SequenceOrderError(std::uint64_t prev, std::uint64_t next)
      : Error("parse", "sequence numbers must strictly increase: " +
                           std::to_string(prev) + " then " +
                           std::to_string(next)) {}
};

class DslError : public Error {
 public:
  DslError(std::size_t line, std::size_t column, const std::string& what)
      : Error("synth", "dsl " + std::to_string(line) + ":" +
                           std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class ModeMismatch : public Error {
 public:
  explicit ModeMismatch(const std::string& what) : Error("model", what) {}
};

class GraphBuildError : public Error {
 public:
  explicit GraphBuildError(const std::string& what) : Error("graph", what) {}
};

class NodeNotFound : public Error {
 public:
  explicit NodeNotFound(std::uint64_t seq)
      : Error("graph", "node " + std::to_string(seq) + " not in graph"),
        seq_(seq) {}
  std::uint64_t seq() const { return seq_; }

 private:
  std::uint64_t seq_;
};

class ReplayError : public Error {
 public:
  explicit ReplayError(const std::string& what) : Error("replay", what) {}
};

class ExplosionLimit : public Error {
 public:
  explicit ExplosionLimit(std::uint64_t budget)
      : Error("enumerate", "schedule budget of " + std::to_string(budget) +
                               " exceeded"),
        budget_(budget) {}
  std::uint64_t budget() const { return budget_; }

 private:
  std::uint64_t budget_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("config", what) {}
};

}  // namespace repcrash
