#pragma once

#include <functional>

#include "zsar/tensor.hpp"

namespace zsar {

// Central-difference verification of a hand-derived gradient.
//
// For each coordinate i the numeric derivative
//   (loss(p + eps*e_i) - loss(p - eps*e_i)) / (2*eps)
// is compared against analytic_grad[i]; the return value is the maximum over
// coordinates of |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
//
// loss must be deterministic and smooth near params; kinked losses (ReLU or
// hinge terms sitting on their boundary) are outside the contract and the
// callers resample such instances.
double finite_difference_check(const std::function<double(const Tensor&)>& loss,
                               const Tensor& params,
                               const Tensor& analytic_grad, double eps);

}  // namespace zsar
