#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace rmf {

using u8 = std::uint8_t;
using u16 = std::uint16_t;
using u32 = std::uint32_t;
using u64 = std::uint64_t;
using cplx = std::complex<double>;

// Errors beyond what <stdexcept> already names. The CLI maps these onto
// exit codes: validation -> 1, statistical violation -> 2, resource or
// convergence trouble -> 3.
struct resource_limit_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct format_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct corruption_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct convergence_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct insufficient_data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct bound_inapplicable_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Neumaier-compensated accumulator. All long sums in the library run
// through this in a fixed order, so results are bit-stable and the
// 1e-9 reconstruction tolerances stay honest for > 1e6 terms.
class KahanSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

class KahanCplx {
 public:
  void add(cplx z) {
    re_.add(z.real());
    im_.add(z.imag());
  }
  cplx value() const { return {re_.value(), im_.value()}; }

 private:
  KahanSum re_, im_;
};

// 64-bit FNV-1a, used for config hashes embedded in outputs.
inline u64 fnv1a64(const std::string& text) {
  u64 h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace rmf
