#pragma once

#include <stdexcept>
#include <string>

namespace lyre {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes that cannot be combined.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A precondition of an operation was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

class TokenizationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed corpus file. Carries the 1-based line number.
class CorpusError : public Error {
 public:
  CorpusError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint or embedding blob could not be decoded.
class FormatError : public Error {
 public:
  enum class Fault { malformed, truncated, bad_magic, checksum, unsupported_version };

  explicit FormatError(const std::string& what, Fault fault = Fault::malformed)
      : Error(what), fault_(fault) {}
  Fault fault() const noexcept { return fault_; }

 private:
  Fault fault_;
};

/// Standard MIDI File that cannot be read.
class MidiError : public Error {
 public:
  enum class Fault { bad_magic, truncated, overlong_vlq, unsupported, malformed };

  MidiError(const std::string& what, Fault fault) : Error(what), fault_(fault) {}
  Fault fault() const noexcept { return fault_; }

 private:
  Fault fault_;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

/// Training produced a NaN or infinity.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

}  // namespace lyre
