#ifndef PATCHHOPF_COMMON_HPP
#define PATCHHOPF_COMMON_HPP

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace patchhopf {

// Domain error carrying a short machine-readable code plus a human detail
// string. The CLI prints these as "error: <code>: <detail>" and exits 1.
class Error : public std::runtime_error {
public:
  Error(std::string code, const std::string& detail)
      : std::runtime_error(code + ": " + detail), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

private:
  std::string code_;
};

// Floating-point values in CSV output are written with 17 significant
// digits so that a reader recovers the exact double.
inline std::string format_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// Neumaier compensated summation. Used where a residual is the small
// difference of large terms and plain accumulation would drown it.
inline double compensated_sum(const std::vector<double>& terms) {
  double s = 0.0, c = 0.0;
  for (double x : terms) {
    double t = s + x;
    if (std::abs(s) >= std::abs(x))
      c += (s - t) + x;
    else
      c += (x - t) + s;
    s = t;
  }
  return s + c;
}

}  // namespace patchhopf

#endif
