#include "crnscope/quadrature.hpp"

#include <algorithm>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace crnscope {

namespace {
using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
constexpr double kAbsFloor = 1e-15;
}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  if (a == b) return 0.0;
  if (b < a) return -integrate(f, b, a, tol);
  double err = 0.0, l1 = 0.0;
  const double coarse = GK::integrate(f, a, b, 0, tol, &err, &l1);
  if (err <= std::max(tol * l1, kAbsFloor)) return coarse;
  // near-zero integrals: a purely relative target would chase roundoff
  const double eff = l1 > 0.0 ? std::max(tol, kAbsFloor / l1) : tol;
  return GK::integrate(f, a, b, 12, eff, &err);
}

}  // namespace crnscope
