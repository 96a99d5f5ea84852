#pragma once

#include <stdexcept>
#include <string>

namespace ddkit {

enum class ErrorKind {
  validation,         // bad parameters or inputs violating a precondition
  io,                 // filesystem or process failure
  missing_file,
  checksum_mismatch,
  shape_mismatch,
  normalization,      // probability rows off the simplex
  format,             // malformed manifest / CSV / JSON
  conflict,           // error-table key conflict
  numerical,          // degenerate math: fit divergence, zero norms, constant ranks
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

// Process exit code for an error kind: 1 validation, 2 IO, 3 numerical.
int exit_code_for(ErrorKind kind);

}  // namespace ddkit
