#pragma once

#include <functional>

namespace crnscope {

/// Adaptive 15-point Gauss-Kronrod on [a, b] (b < a allowed), relative
/// tolerance `tol` with a 1e-15 absolute floor, at most 2^12 subdivisions.
double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-10);

}  // namespace crnscope
