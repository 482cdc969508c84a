#include "quadrature.hpp"

#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace raylap::detail {

double integrate(const std::function<double(double)>& f, const std::vector<double>& breaks, double rel_tol) {
  using boost::math::quadrature::gauss_kronrod;
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    total += gauss_kronrod<double, 61>::integrate(f, breaks[k], breaks[k + 1], 30, rel_tol);
  }
  return total;
}

}  // namespace raylap::detail
