#pragma once

/// \file kryest/estimate/delay_window.hpp
/// \brief Ring buffer of the last d (alpha_j, p_j) pairs.

#include <cstddef>
#include <span>
#include <vector>

#include "kryest/error.hpp"

namespace kryest {

/// Holds at most `d` entries; the oldest is evicted first. Entry 0 is the
/// oldest. Each entry carries alpha_j, the vector p_j and one scalar.
template <class Real = double>
class DelayWindow {
 public:
  DelayWindow(std::size_t d, std::size_t n) : d_(d), n_(n), alpha_(d), scalar_(d), p_(d * n) {
    if (d == 0) throw DomainError("DelayWindow: d must be >= 1");
  }

  std::size_t capacity() const noexcept { return d_; }
  std::size_t size() const noexcept { return size_; }
  bool full() const noexcept { return size_ == d_; }
  std::size_t front_index() const noexcept { return first_; }  ///< iteration index of entry 0

  void push(std::size_t j, Real alpha, std::span<const Real> p, Real scalar = Real{0}) {
    if (size_ == 0) first_ = j;
    std::size_t slot;
    if (size_ < d_) {
      slot = (head_ + size_) % d_;
      ++size_;
    } else {
      slot = head_;
      head_ = (head_ + 1) % d_;
      ++first_;
    }
    alpha_[slot] = alpha;
    scalar_[slot] = scalar;
    for (std::size_t i = 0; i < n_; ++i) p_[slot * n_ + i] = p[i];
  }

  /// Drop the oldest entry.
  void pop_front() {
    if (size_ == 0) throw DomainError("DelayWindow: empty");
    head_ = (head_ + 1) % d_;
    --size_;
    ++first_;
  }

  Real alpha(std::size_t i) const { return alpha_[slot(i)]; }
  Real scalar(std::size_t i) const { return scalar_[slot(i)]; }
  std::span<const Real> p(std::size_t i) const { return {p_.data() + slot(i) * n_, n_}; }

 private:
  std::size_t slot(std::size_t i) const { return (head_ + i) % d_; }

  std::size_t d_, n_;
  std::size_t head_ = 0, size_ = 0, first_ = 0;
  std::vector<Real> alpha_, scalar_, p_;
};

}  // namespace kryest
