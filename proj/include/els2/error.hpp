#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace els2 {

enum class ErrorKind {
  configuration,
  usage,
  input,
  domain,
  degeneracy,
  numerical_blowup,
  io,
  parse,
  not_converged,
  insufficient_data,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::configuration: return "configuration";
    case ErrorKind::usage: return "usage";
    case ErrorKind::input: return "input";
    case ErrorKind::domain: return "domain";
    case ErrorKind::degeneracy: return "degeneracy";
    case ErrorKind::numerical_blowup: return "numerical-blowup";
    case ErrorKind::io: return "io";
    case ErrorKind::parse: return "parse";
    case ErrorKind::not_converged: return "not-converged";
    case ErrorKind::insufficient_data: return "insufficient-data";
  }
  return "unknown";
}

/// Every failure in the library is reported through this one exception type;
/// `kind()` is what the CLI turns into its machine-readable reason prefix.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace els2
