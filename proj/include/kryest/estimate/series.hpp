#pragma once

/// \file kryest/estimate/series.hpp
/// \brief Estimate series produced by every estimator.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "kryest/error.hpp"
#include "kryest/krylov/trace.hpp"

namespace kryest {

enum class EstimatorKind {
  cgql_gauss,         ///< delay sum, lower bound of ||e_k||_A^2
  cgql_radau,         ///< Gauss-Radau upper bound (node lambda_min)
  cgql_radau_lower,   ///< Gauss-Radau lower bound (node lambda_max)
  bicgql_anorm,
  bicgql_l2,
  gmres_original,
  gmres_modified,
};

inline std::string to_string(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::cgql_gauss: return "cgql_gauss";
    case EstimatorKind::cgql_radau: return "cgql_radau";
    case EstimatorKind::cgql_radau_lower: return "cgql_radau_lower";
    case EstimatorKind::bicgql_anorm: return "bicgql_anorm";
    case EstimatorKind::bicgql_l2: return "bicgql_l2";
    case EstimatorKind::gmres_original: return "gmres_original";
    case EstimatorKind::gmres_modified: return "gmres_modified";
  }
  return "?";
}

/// True for estimators of the A-norm (A-measure) rather than the l2 norm.
inline bool is_anorm(EstimatorKind k) {
  return k == EstimatorKind::cgql_gauss || k == EstimatorKind::cgql_radau ||
         k == EstimatorKind::cgql_radau_lower || k == EstimatorKind::bicgql_anorm;
}

namespace flags {
inline constexpr std::uint32_t partial_window = 1u;  ///< tail estimate from a truncated window
inline constexpr std::uint32_t negative = 2u;        ///< raw value was negative
inline constexpr std::uint32_t singular = 4u;        ///< value withheld: singular block
inline constexpr std::uint32_t trigger = 8u;         ///< precision-exhaustion trigger latched
inline constexpr std::uint32_t offset_negative = 16u;  ///< modified GMRES operand was negative
}  // namespace flags

/// Estimate of ||e_k||^2 (or ||e_k||_A^2) for iteration k.
struct EstimatePoint {
  std::size_t k = 0;
  double raw = kNaN;       ///< value before absolute value / flooring
  double value_sq = kNaN;  ///< nonnegative squared estimate
  double chi = kNaN;       ///< sqrt(value_sq); NaN when withheld
  std::uint32_t flags = 0;

  bool valid() const noexcept { return !std::isnan(chi); }
  bool has(std::uint32_t f) const noexcept { return (flags & f) != 0; }
};

struct EstimateSeries {
  EstimatorKind kind = EstimatorKind::bicgql_l2;
  std::size_t d = 0;
  std::vector<EstimatePoint> points;  ///< strictly increasing k

  /// Append a point; `value_sq` is floored at 0 and flagged when negative.
  void push(std::size_t k, double raw, double value_sq, std::uint32_t f = 0) {
    if (!points.empty() && points.back().k >= k) throw DomainError("EstimateSeries: indices must increase");
    EstimatePoint p;
    p.k = k;
    p.raw = raw;
    p.flags = f;
    if (std::isnan(value_sq) || (f & flags::singular)) {
      p.flags |= flags::singular;
    } else {
      if (value_sq < 0.0) {
        p.flags |= flags::negative;
        value_sq = 0.0;
      }
      p.value_sq = value_sq;
      p.chi = std::sqrt(value_sq);
    }
    points.push_back(p);
  }

  void push_withheld(std::size_t k, std::uint32_t f = 0) { push(k, kNaN, kNaN, f | flags::singular); }

  /// Point for iteration k, or nullptr.
  const EstimatePoint* at(std::size_t k) const {
    auto it = std::lower_bound(points.begin(), points.end(), k,
                               [](const EstimatePoint& p, std::size_t key) { return p.k < key; });
    return (it != points.end() && it->k == k) ? &*it : nullptr;
  }

  bool anorm() const noexcept { return is_anorm(kind); }
};

}  // namespace kryest
