#pragma once

/// \file kryest/estimate/precision_trigger.hpp
/// \brief Flags exhausted numerical precision from jumps in ||s_k||.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <vector>

namespace kryest {

/// True when `current` exceeds `factor` times the median of `history`.
/// Histories shorter than `min_history` never trigger.
inline bool precision_trigger(std::span<const double> history, double current, double factor = 10.0,
                              std::size_t min_history = 5) {
  std::vector<double> h;
  h.reserve(history.size());
  for (double v : history)
    if (std::isfinite(v)) h.push_back(v);
  if (h.size() < min_history || !std::isfinite(current)) return false;
  const std::size_t mid = h.size() / 2;
  std::nth_element(h.begin(), h.begin() + static_cast<std::ptrdiff_t>(mid), h.end());
  double med = h[mid];
  if (h.size() % 2 == 0) {
    const double lo = *std::max_element(h.begin(), h.begin() + static_cast<std::ptrdiff_t>(mid));
    med = 0.5 * (med + lo);
  }
  return current > factor * med;
}

/// Streaming form over the trailing `window` values. Once raised, the flag
/// stays latched.
class PrecisionTrigger {
 public:
  explicit PrecisionTrigger(double factor = 10.0, std::size_t window = 20, std::size_t min_history = 5)
      : factor_(factor), window_(window), min_history_(min_history) {}

  /// Record ||s_k|| for step k; returns whether this value triggers.
  bool update(std::size_t k, double s_norm) {
    const std::vector<double> hist(history_.begin(), history_.end());
    const bool hit = precision_trigger(hist, s_norm, factor_, min_history_);
    if (hit && !first_) first_ = k;
    history_.push_back(s_norm);
    if (history_.size() > window_) history_.pop_front();
    return hit;
  }

  bool latched() const noexcept { return first_.has_value(); }
  std::optional<std::size_t> first_step() const noexcept { return first_; }

 private:
  double factor_;
  std::size_t window_, min_history_;
  std::deque<double> history_;
  std::optional<std::size_t> first_;
};

}  // namespace kryest
