#pragma once

#include <stdexcept>
#include <string>

namespace netdec {

/// Base class for every error raised by the library. `code()` is a short
/// machine-readable tag that the CLI prints and tests match on.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define NETDEC_DEFINE_ERROR(Name)                                      \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(#Name, what) {}     \
  };

// case ingest
class SyntaxError : public Error {
 public:
  SyntaxError(int line, const std::string& what)
      : Error("SyntaxError", "line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};
NETDEC_DEFINE_ERROR(SemanticError)
NETDEC_DEFINE_ERROR(ZeroImpedance)

// partitioning
NETDEC_DEFINE_ERROR(InvalidK)
class MissingBus : public Error {
 public:
  explicit MissingBus(int bus)
      : Error("MissingBus", "partition document has no entry for bus " + std::to_string(bus)),
        bus_(bus) {}
  int bus() const noexcept { return bus_; }

 private:
  int bus_;
};
class UnknownBus : public Error {
 public:
  explicit UnknownBus(int bus)
      : Error("UnknownBus", "partition document references unknown bus " + std::to_string(bus)),
        bus_(bus) {}
  int bus() const noexcept { return bus_; }

 private:
  int bus_;
};

// model building / conic layer
NETDEC_DEFINE_ERROR(InvalidCase)
NETDEC_DEFINE_ERROR(DimensionMismatch)
NETDEC_DEFINE_ERROR(BackendFailure)

// bounds and bundle
class SubproblemFailed : public Error {
 public:
  SubproblemFailed(int part, const std::string& status)
      : Error("SubproblemFailed",
              "subproblem " + std::to_string(part + 1) + " returned status " + status),
        part_(part) {}
  int part() const noexcept { return part_; }

 private:
  int part_;
};
NETDEC_DEFINE_ERROR(MasterFailed)
NETDEC_DEFINE_ERROR(TooLarge)

// orchestration
NETDEC_DEFINE_ERROR(ZeroReference)
NETDEC_DEFINE_ERROR(IoError)
NETDEC_DEFINE_ERROR(ConfigError)

#undef NETDEC_DEFINE_ERROR

}  // namespace netdec
