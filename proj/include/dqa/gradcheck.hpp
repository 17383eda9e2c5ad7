#pragma once

#include <cstddef>
#include <cstdint>

namespace dqa {

struct GradCheckResult {
  std::size_t draws = 0;
  double max_rel_error = 0;  // max over draws of |a - n| / (|a| + |n|), Euclidean norms
};

// Analytic SGNS gradient (double precision, dim 4, 1 to 3 negatives drawn
// from a 3-word vocabulary) against central differences with h = 1e-5.
GradCheckResult check_sgns_gradient(std::size_t draws, std::uint64_t seed);

// Weighted logistic objective with L2 over 20 random samples of a dim-3
// feature map, against central differences with h = 1e-6.
GradCheckResult check_classifier_gradient(std::size_t draws, std::uint64_t seed);

}  // namespace dqa
