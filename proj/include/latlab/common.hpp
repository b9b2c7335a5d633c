#pragma once
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>

namespace latlab {

// All operation preconditions raise Error with a stable machine-checkable
// code ("OddPeriodicSide", "NotNeutral", ...) plus a human message.
struct Error : std::runtime_error {
  std::string code;
  Error(std::string c, const std::string& msg)
      : std::runtime_error(c + ": " + msg), code(std::move(c)) {}
};

template <class... A>
std::string cat(A&&... a) {
  std::ostringstream os;
  (os << ... << a);
  return os.str();
}

template <class... A>
[[noreturn]] void fail(const std::string& code, A&&... a) {
  throw Error(code, cat(std::forward<A>(a)...));
}

inline void require(bool ok, const std::string& code, const std::string& msg) {
  if (!ok) throw Error(code, msg);
}

constexpr double kPi = 3.14159265358979323846;

// Wrap to [-pi, pi).
inline double wrap_2pi(double a) {
  double b = std::remainder(a, 2.0 * kPi);  // (-pi, pi]
  if (b >= kPi) b -= 2.0 * kPi;             // remainder can return exactly pi
  return b;
}

}  // namespace latlab
