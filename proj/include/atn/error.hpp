#pragma once

#include <stdexcept>
#include <string>

namespace atn {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad argument: shape mismatch, span out of bounds, id out of range.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Malformed input file (XML, config, word vectors). Carries a line number
// when one is known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Character span that does not cover any token.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// API misuse that a correct caller never triggers, e.g. training a frozen
// model.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace atn
