#include "zsar/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "zsar/error.hpp"

namespace zsar {

double finite_difference_check(const std::function<double(const Tensor&)>& loss,
                               const Tensor& params,
                               const Tensor& analytic_grad, double eps) {
  check_same_dims(params, analytic_grad, "finite_difference_check");
  if (eps < 1e-7 || eps > 1e-3) {
    throw ConfigError("finite_difference_check: eps must lie in [1e-7, 1e-3]");
  }
  Tensor probe = params;
  double worst = 0.0;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double original = probe[i];
    probe[i] = original + eps;
    const double plus = loss(probe);
    probe[i] = original - eps;
    const double minus = loss(probe);
    probe[i] = original;
    if (!std::isfinite(plus) || !std::isfinite(minus)) {
      throw NumericError("finite_difference_check: loss returned a non-finite "
                         "value near coordinate " +
                         std::to_string(i));
    }
    const double numeric = (plus - minus) / (2.0 * eps);
    const double analytic = analytic_grad[i];
    const double scale =
        std::max(1e-8, std::abs(analytic) + std::abs(numeric));
    worst = std::max(worst, std::abs(analytic - numeric) / scale);
  }
  return worst;
}

}  // namespace zsar
