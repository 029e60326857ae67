#pragma once

#include <cstddef>
#include <span>

#include "hjnav/geometry.hpp"

namespace hjnav {

struct OutcomeTally {
  std::size_t n_total = 0;
  std::size_t n_success = 0;
  std::size_t n_stranded = 0;
  std::size_t n_timeout = 0;
  std::size_t n_left_region = 0;
  /// Missions stopped by a replanning failure.
  std::size_t n_aborted = 0;

  /// True when the outcome counts add up to n_total.
  bool consistent() const {
    return n_success + n_stranded + n_timeout + n_left_region + n_aborted == n_total;
  }
};

struct OutcomeRates {
  double stranding = 0.0;
  double success = 0.0;
  double timeout = 0.0;
  double left_region = 0.0;
  double aborted = 0.0;
};

/// Throws DegenerateError when n_total is zero.
OutcomeRates rates(const OutcomeTally& t);

struct TestResult {
  double z = 0.0;
  double p = 0.5;  // one-sided, H_A: base proportion > alt proportion
};

/// Standard normal upper tail 1 - Phi(z), accurate far into the tail.
double normal_sf(double z);

/// One-sided pooled two-sample z test of k_base/n_base > k_alt/n_alt.
/// Throws DegenerateError if the pooled proportion is 0 or 1, ParameterError
/// on empty samples or k > n.
TestResult z_prop_test(std::size_t k_base, std::size_t n_base, std::size_t k_alt,
                       std::size_t n_alt);

/// sqrt(mean |truth - forecast|^2). Throws DegenerateError on empty input.
double vector_rmse(std::span<const Vec2> truth, std::span<const Vec2> forecast);

/// Generalized vector correlation trace(S11^-1 S12 S22^-1 S21) in [0, 2].
/// Needs >= 3 pairs and nonsingular auto-covariances (DegenerateError).
double vector_correlation(std::span<const Vec2> a, std::span<const Vec2> b);

}  // namespace hjnav
