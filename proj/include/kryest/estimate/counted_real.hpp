#pragma once

/// \file kryest/estimate/counted_real.hpp
/// \brief A double that counts its floating-point operations, for
/// instrumenting the templated estimators.

#include <compare>
#include <cstdint>

namespace kryest {

class CountedReal {
 public:
  CountedReal() = default;
  CountedReal(double v) : v_(v) {}  // NOLINT: implicit on purpose
  explicit operator double() const noexcept { return v_; }
  double value() const noexcept { return v_; }

  /// Operations counted on this thread since the last reset.
  static std::uint64_t& flops() noexcept {
    thread_local std::uint64_t count = 0;
    return count;
  }
  static void reset() noexcept { flops() = 0; }

  friend CountedReal operator+(CountedReal a, CountedReal b) { return tick(a.v_ + b.v_); }
  friend CountedReal operator-(CountedReal a, CountedReal b) { return tick(a.v_ - b.v_); }
  friend CountedReal operator*(CountedReal a, CountedReal b) { return tick(a.v_ * b.v_); }
  friend CountedReal operator/(CountedReal a, CountedReal b) { return tick(a.v_ / b.v_); }
  friend CountedReal operator-(CountedReal a) { return CountedReal(-a.v_); }
  friend bool operator==(CountedReal a, CountedReal b) { return a.v_ == b.v_; }
  friend auto operator<=>(CountedReal a, CountedReal b) { return a.v_ <=> b.v_; }

 private:
  static CountedReal tick(double v) {
    ++flops();
    return CountedReal(v);
  }
  double v_ = 0.0;
};

}  // namespace kryest
