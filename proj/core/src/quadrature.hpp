#pragma once

#include <functional>
#include <vector>

namespace raylap::detail {

// Adaptive Gauss-Kronrod over consecutive breakpoints; infinite end points are
// allowed. Each panel is refined to the requested relative tolerance.
double integrate(const std::function<double(double)>& f, const std::vector<double>& breaks, double rel_tol = 1e-12);

}  // namespace raylap::detail
