#pragma once

#include <stdexcept>
#include <string>

namespace regen {

// Error categories map one-to-one onto CLI exit codes (see tools/regen.cpp).
enum class ErrorKind {
  kPrecondition,
  kParse,
  kValidation,
  kOracleTransport,
  kOracleParse,
  kTranscriptMiss,
  kInfeasible,
  kIo,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool condition, const std::string& what) {
  if (!condition) throw Error(ErrorKind::kPrecondition, what);
}

}  // namespace regen
