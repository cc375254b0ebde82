#pragma once

#include <stdexcept>
#include <string>

namespace dimer {

enum class Errc {
  invalid_argument = 1,
  normalization = 2,
  degenerate_projection = 3,
  non_convergence = 4,
  calibration_failure = 5,
  internal = 6,
};

const char* errc_name(Errc code) noexcept;

/// Base exception for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

inline void require(bool ok, const std::string& what, Errc code = Errc::invalid_argument) {
  if (!ok) throw Error(code, what);
}

}  // namespace dimer
