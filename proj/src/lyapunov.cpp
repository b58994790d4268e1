#include "crnscope/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "crnscope/netparse.hpp"
#include "crnscope/quadrature.hpp"

namespace crnscope {

double pseudo_helmholtz(std::span<const double> x, std::span<const double> x_star) {
  if (x.size() != x_star.size()) throw std::domain_error("state and reference differ in length");
  double g = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (!(x[j] > 0.0) || !(x_star[j] > 0.0)) throw std::domain_error("pseudo-Helmholtz needs positive entries");
    g += x_star[j] - x[j] - x[j] * std::log(x_star[j] / x[j]);
  }
  return g;
}

namespace {

double monomial(const Monomial& m, std::span<const double> y) {
  double r = m.k;
  for (std::size_t c = 0; c < m.v.size(); ++c)
    for (int e = 0; e < m.v[c]; ++e) r *= y[c];
  return r;
}

// d/dy_c of k y^v at positive y
double monomial_dx(const Monomial& m, std::span<const double> y, std::size_t c) {
  if (m.v[c] == 0) return 0.0;
  return m.v[c] * monomial(m, y) / y[c];
}

// sum_{j=0}^{beta-1} u^j for beta > 0, -sum_{j=beta}^{-1} u^j for beta < 0
double geometric(long long beta, double u) {
  double s = 0.0;
  if (beta > 0) {
    double p = 1.0;
    for (long long j = 0; j < beta; ++j, p *= u) s += p;
    return s;
  }
  double p = 1.0;
  for (long long j = -1; j >= beta; --j) {
    p /= u;
    s -= p;
  }
  return s;
}

double geometric_du(long long beta, double u) {
  double s = 0.0;
  if (beta > 0) {
    for (long long j = 1; j < beta; ++j) s += j * std::pow(u, static_cast<double>(j - 1));
    return s;
  }
  for (long long j = -1; j >= beta; --j) s -= j * std::pow(u, static_cast<double>(j - 1));
  return s;
}

double root_h(const RootU& r, std::span<const double> y, double u) {
  double h = 0.0;
  for (std::size_t i = 0; i < r.terms.size(); ++i) h += monomial(r.terms[i], y) * geometric(r.betas[i], u);
  return h;
}

double root_h_du(const RootU& r, std::span<const double> y, double u) {
  double h = 0.0;
  for (std::size_t i = 0; i < r.terms.size(); ++i) h += monomial(r.terms[i], y) * geometric_du(r.betas[i], u);
  return h;
}

std::vector<double> root_h_dx(const RootU& r, std::span<const double> y, double u) {
  std::vector<double> g(y.size(), 0.0);
  for (std::size_t i = 0; i < r.terms.size(); ++i) {
    const double q = geometric(r.betas[i], u);
    for (std::size_t c = 0; c < y.size(); ++c) g[c] += monomial_dx(r.terms[i], y, c) * q;
  }
  return g;
}

double root_solve(const RootU& r, std::span<const double> y) {
  bool pos = false, neg = false;
  for (auto b : r.betas) (b > 0 ? pos : neg) = true;
  if (!pos || !neg) throw LyapunovError("h(x, u) has no positive root: all reactions point the same way");
  for (double v : y)
    if (!(v > 0.0)) throw std::domain_error("u~ needs a positive state");
  double lo = 1.0, hi = 1.0;
  for (int k = 0; root_h(r, y, lo) > 0.0; ++k) {
    if (k > 1000) throw LyapunovError("cannot bracket the root of h(x, u)");
    lo *= 0.5;
  }
  for (int k = 0; root_h(r, y, hi) < 0.0; ++k) {
    if (k > 1000) throw LyapunovError("cannot bracket the root of h(x, u)");
    hi *= 2.0;
  }
  for (int k = 0; k < 400 && hi - lo > 1e-14 * hi; ++k) {
    const double mid = 0.5 * (lo + hi);
    (root_h(r, y, mid) > 0.0 ? hi : lo) = mid;
  }
  double u = 0.5 * (lo + hi);
  for (int k = 0; k < 3; ++k) {
    const double d = root_h_du(r, y, u);
    if (!(d > 0.0)) break;
    const double next = u - root_h(r, y, u) / d;
    if (!(next > 0.0) || !std::isfinite(next)) break;
    u = next;
  }
  return u;
}

RootU root_from(const MassActionSystem& mas, const OneDimGeometry& geo) {
  RootU r;
  for (const auto& rx : mas.reactions()) r.terms.push_back({rx.k, rx.reactant});
  r.betas = geo.betas;
  return r;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> restrict(std::span<const double> x, const std::vector<std::size_t>& idx) {
  std::vector<double> y;
  y.reserve(idx.size());
  for (auto i : idx) {
    if (i >= x.size()) throw std::out_of_range("certificate refers to a species beyond the state");
    y.push_back(x[i]);
  }
  return y;
}

void require_positive(std::span<const double> y) {
  for (double v : y)
    if (!(v > 0.0) || !std::isfinite(v)) throw std::domain_error("integration path leaves the positive orthant");
}

}  // namespace

// --- 1-D geometry -----------------------------------------------------------

double OneDimGeometry::gamma(std::span<const double> x) const {
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < omega.size(); ++j) {
    num += omega[j] * (x[j] - x_ref[j]);
    den += static_cast<double>(omega[j] * omega[j]);
  }
  return num / den;
}

std::vector<double> OneDimGeometry::y_dagger(std::span<const double> x) const {
  const double g = gamma(x);
  std::vector<double> y(x.begin(), x.end());
  for (std::size_t j = 0; j < y.size(); ++j) y[j] -= g * omega[j];
  return y;
}

OneDimGeometry one_dim_geometry(const MassActionSystem& mas, std::span<const double> x_ref, int orientation) {
  if (x_ref.size() != mas.num_species()) throw LyapunovError("reference point has wrong length");
  if (structure_report(mas).dim_S != 1) throw LyapunovError("network is not 1-dimensional");
  OneDimGeometry geo;
  geo.omega = canonical_direction(mas.reaction(0).vector());
  if (orientation < 0)
    for (auto& w : geo.omega) w = -w;
  std::size_t pivot = 0;
  while (geo.omega[pivot] == 0) ++pivot;
  for (const auto& r : mas.reactions()) {
    const auto v = r.vector();
    geo.betas.push_back(v[pivot] / geo.omega[pivot]);
  }
  geo.x_ref.assign(x_ref.begin(), x_ref.end());
  return geo;
}

double h_poly(const MassActionSystem& mas, const OneDimGeometry& geo, std::span<const double> x, double u) {
  return root_h(root_from(mas, geo), x, u);
}

double h_poly_du(const MassActionSystem& mas, const OneDimGeometry& geo, std::span<const double> x, double u) {
  return root_h_du(root_from(mas, geo), x, u);
}

std::vector<double> h_poly_dx(const MassActionSystem& mas, const OneDimGeometry& geo, std::span<const double> x,
                              double u) {
  return root_h_dx(root_from(mas, geo), x, u);
}

double solve_u_tilde(const MassActionSystem& mas, const OneDimGeometry& geo, std::span<const double> x) {
  return root_solve(root_from(mas, geo), x);
}

double one_dim_lyapunov(const MassActionSystem& mas, const OneDimGeometry& geo, std::span<const double> x) {
  std::vector<std::size_t> all(mas.num_species());
  std::iota(all.begin(), all.end(), 0);
  CertificatePiece p{"", one_dim_piece(mas, all, geo)};
  LyapunovCertificate c;
  c.pieces.push_back(std::move(p));
  return c.evaluate(x);
}

double one_dim_condition(const MassActionSystem& mas, const OneDimGeometry& geo) {
  const auto g = h_poly_dx(mas, geo, geo.x_ref, 1.0);
  double s = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) s += geo.omega[j] * g[j];
  return s;
}

// --- shared 1-D parts --------------------------------------------------------

std::optional<SharedSplit> classify_shared(const MassActionSystem& mas, const std::vector<std::size_t>& shared) {
  if (shared.empty()) return std::nullopt;
  SharedSplit s;
  s.shared = shared;
  std::vector<bool> is_shared(mas.num_species(), false);
  for (auto e : shared) is_shared.at(e) = true;
  for (std::size_t j = 0; j < mas.num_species(); ++j)
    if (!is_shared[j]) s.tilde.push_back(j);
  if (s.tilde.empty()) return std::nullopt;
  std::optional<std::vector<long long>> omega;
  for (std::size_t l = 0; l < mas.num_reactions(); ++l) {
    const auto v = mas.reaction(l).vector();
    const long long sign = v[shared[0]];
    if (sign != 1 && sign != -1) return std::nullopt;
    for (auto e : shared)
      if (v[e] != sign) return std::nullopt;
    std::vector<long long> t;
    for (auto j : s.tilde) t.push_back(sign * v[j]);
    if (!omega) omega = t;
    else if (*omega != t) return std::nullopt;
    (sign > 0 ? s.L : s.R).push_back(l);
  }
  if (std::all_of(omega->begin(), omega->end(), [](long long w) { return w == 0; })) return std::nullopt;
  s.omega_tilde = *omega;
  return s;
}

namespace {

RatioU ratio_from(const MassActionSystem& mas, const SharedSplit& s, std::span<const double> x_star) {
  RatioU u;
  u.prefactor = 1.0;
  for (auto e : s.shared) u.prefactor *= x_star[e];
  auto mono = [&](std::size_t l) {
    Monomial m{mas.reaction(l).k, {}};
    for (auto j : s.tilde) m.v.push_back(mas.reaction(l).reactant[j]);
    return m;
  };
  for (auto l : s.R) u.R.push_back(mono(l));
  for (auto l : s.L) u.L.push_back(mono(l));
  return u;
}

double ratio_value(const RatioU& u, std::span<const double> y) {
  double r = 0.0, l = 0.0;
  for (const auto& m : u.R) r += monomial(m, y);
  for (const auto& m : u.L) l += monomial(m, y);
  return u.prefactor * r / l;
}

std::vector<double> ratio_grad_log(const RatioU& u, std::span<const double> y) {
  double r = 0.0, l = 0.0;
  std::vector<double> dr(y.size(), 0.0), dl(y.size(), 0.0);
  for (const auto& m : u.R) {
    r += monomial(m, y);
    for (std::size_t c = 0; c < y.size(); ++c) dr[c] += monomial_dx(m, y, c);
  }
  for (const auto& m : u.L) {
    l += monomial(m, y);
    for (std::size_t c = 0; c < y.size(); ++c) dl[c] += monomial_dx(m, y, c);
  }
  std::vector<double> g(y.size());
  for (std::size_t c = 0; c < y.size(); ++c) g[c] = dr[c] / r - dl[c] / l;
  return g;
}

}  // namespace

double u_tilde_shared(const MassActionSystem& mas, const SharedSplit& s, std::span<const double> x_star,
                      std::span<const double> x) {
  return ratio_value(ratio_from(mas, s, x_star), restrict(x, s.tilde));
}

double shared_condition(const MassActionSystem& mas, const SharedSplit& s, std::span<const double> x_star) {
  const RatioU u = ratio_from(mas, s, x_star);
  const auto y = restrict(x_star, s.tilde);
  const double val = ratio_value(u, y);
  const auto g = ratio_grad_log(u, y);
  double d = 0.0;
  for (std::size_t c = 0; c < g.size(); ++c) d += s.omega_tilde[c] * g[c];
  return val * d;
}

bool shared_mirror_holds(const MassActionSystem& mas, const SharedSplit& s, std::string* detail) {
  for (auto e : s.shared) {
    std::multiset<std::pair<int, int>> from_r, from_l;
    for (auto l : s.R) from_r.insert({mas.reaction(l).reactant[e], mas.reaction(l).product[e]});
    for (auto l : s.L) from_l.insert({mas.reaction(l).product[e], mas.reaction(l).reactant[e]});
    if (from_r != from_l) {
      if (detail) *detail = "no one-to-one mirror for shared species " + mas.species()[e];
      return false;
    }
  }
  return true;
}

// --- two-species ---------------------------------------------------------------

namespace {

double side_sum(const MassActionSystem& mas, const std::vector<std::size_t>& idx, std::size_t sp, double t) {
  double s = 0.0;
  for (auto l : idx) s += mas.reaction(l).k * std::pow(t, mas.reaction(l).reactant[sp]);
  return s;
}

std::optional<TwoSpeciesShape> make_shape(const MassActionSystem& mas, std::span<const double> x_star, std::size_t i,
                                          const std::vector<long long>& w) {
  TwoSpeciesShape s;
  s.i = i;
  s.j = 1 - i;
  s.w_i = w[s.i];
  s.w_j = w[s.j];
  const std::vector<long long> neg{-w[0], -w[1]};
  for (std::size_t l = 0; l < mas.num_reactions(); ++l) {
    const auto v = mas.reaction(l).vector();
    if (v == w) s.L.push_back(l);
    else if (v == neg) s.R.push_back(l);
    else return std::nullopt;
  }
  if (s.L.empty() || s.R.empty()) return std::nullopt;
  s.a = mas.reaction(s.L[0]).reactant[s.i];
  for (auto l : s.L)
    if (mas.reaction(l).reactant[s.i] != s.a) return std::nullopt;
  s.b = mas.reaction(s.R[0]).reactant[s.j];
  for (auto l : s.R)
    if (mas.reaction(l).reactant[s.j] != s.b) return std::nullopt;
  s.c = std::pow(x_star[s.i], s.a) / side_sum(mas, s.R, s.i, x_star[s.i]);
  s.c_alt = std::pow(x_star[s.j], s.b) / side_sum(mas, s.L, s.j, x_star[s.j]);
  return s;
}

}  // namespace

std::vector<TwoSpeciesShape> two_species_shapes(const MassActionSystem& mas, std::span<const double> x_star,
                                                std::optional<std::size_t> preferred_i) {
  if (mas.num_species() != 2) return {};
  if (x_star.size() != 2) throw LyapunovError("two-species shape needs a 2-vector equilibrium");
  const auto omega = canonical_direction(mas.reaction(0).vector());
  std::vector<std::size_t> order;
  if (preferred_i && *preferred_i < 2) order.push_back(*preferred_i);
  for (std::size_t i : {0u, 1u})
    if (std::find(order.begin(), order.end(), i) == order.end()) order.push_back(i);
  std::vector<TwoSpeciesShape> out;
  for (auto i : order) {
    for (long long sign : {1LL, -1LL}) {
      if (auto s = make_shape(mas, x_star, i, {sign * omega[0], sign * omega[1]})) out.push_back(*s);
    }
  }
  return out;
}

std::optional<TwoSpeciesShape> autocatalytic_shape(const MassActionSystem& mas, std::span<const double> x_star,
                                                   std::size_t i, std::size_t j) {
  if (mas.num_species() != 2 || i == j || i > 1 || j > 1) return std::nullopt;
  std::vector<long long> w(2, 0);
  w[i] = -1;
  w[j] = 1;
  auto s = make_shape(mas, x_star, i, w);
  if (!s || s->a != 1 || s->b != 1) return std::nullopt;
  // S_i + (alpha - 1) S_j -> alpha S_j and back
  for (auto l : s->L)
    if (mas.reaction(l).product[i] != 0) return std::nullopt;
  for (auto l : s->R)
    if (mas.reaction(l).product[j] != 0) return std::nullopt;
  return s;
}

TwoSpeciesConditions two_species_conditions(const TwoSpeciesShape& s, const MassActionSystem& mas,
                                            std::span<const double> x_star) {
  TwoSpeciesConditions c;
  for (auto l : s.R) {
    const int v = mas.reaction(l).reactant[s.i];
    c.con1 += mas.reaction(l).k * (s.a - v) * std::pow(x_star[s.i], v - 1);
  }
  c.con1 /= static_cast<double>(s.w_i);
  for (auto l : s.L) {
    const int v = mas.reaction(l).reactant[s.j];
    c.con2 += mas.reaction(l).k * (s.b - v) * std::pow(x_star[s.j], v - 1);
  }
  c.con2 /= static_cast<double>(s.w_j);
  return c;
}

double two_species_integrand_i(const TwoSpeciesShape& s, const MassActionSystem& mas, double t) {
  return -std::log(std::pow(t, s.a) / (s.c * side_sum(mas, s.R, s.i, t))) / static_cast<double>(s.w_i);
}

double two_species_integrand_j(const TwoSpeciesShape& s, const MassActionSystem& mas, double t) {
  return std::log(std::pow(t, s.b) / (s.c_alt * side_sum(mas, s.L, s.j, t))) / static_cast<double>(s.w_j);
}

double two_species_lyapunov(const TwoSpeciesShape& s, const MassActionSystem& mas, std::span<const double> x,
                            std::span<const double> x_star) {
  require_positive(x);
  return integrate([&](double t) { return two_species_integrand_i(s, mas, t); }, x_star[s.i], x[s.i]) +
         integrate([&](double t) { return two_species_integrand_j(s, mas, t); }, x_star[s.j], x[s.j]);
}

AutocatalyticConditions autocat_two_species_conditions(const TwoSpeciesShape& s, const MassActionSystem& mas,
                                                       std::span<const double> x_star) {
  AutocatalyticConditions c;
  c.at_most_bimolecular = true;
  bool mono_l = false, mono_r = false;
  for (auto l : s.L) {
    const int alpha = mas.reaction(l).product[s.j];
    c.con1 += mas.reaction(l).k * (2 - alpha) * std::pow(x_star[s.j], alpha - 1);
    c.at_most_bimolecular = c.at_most_bimolecular && alpha <= 2;
    mono_l = mono_l || alpha == 1;
  }
  for (auto l : s.R) {
    const int alpha = mas.reaction(l).product[s.i];
    c.con2 += mas.reaction(l).k * (2 - alpha) * std::pow(x_star[s.i], alpha - 1);
    c.at_most_bimolecular = c.at_most_bimolecular && alpha <= 2;
    mono_r = mono_r || alpha == 1;
  }
  c.shortcut = c.at_most_bimolecular && mono_l && mono_r;
  return c;
}

// --- certificate pieces --------------------------------------------------------

double ScalarIntegralPiece::integrand(double t) const {
  double s = 0.0;
  for (const auto& [k, e] : terms) s += k * std::pow(t, e);
  return weight * std::log(std::pow(t, power) / (c * s));
}

double LinePiece::u_value(std::span<const double> y) const {
  require_positive(y);
  if (const auto* r = std::get_if<RootU>(&u)) return root_solve(*r, y);
  return ratio_value(std::get<RatioU>(u), y);
}

std::vector<double> LinePiece::grad_log_u(std::span<const double> y) const {
  require_positive(y);
  if (const auto* r = std::get_if<RootU>(&u)) {
    const double ut = root_solve(*r, y);
    auto g = root_h_dx(*r, y, ut);
    const double hu = root_h_du(*r, y, ut);
    for (auto& v : g) v = -v / (ut * hu);
    return g;
  }
  return ratio_grad_log(std::get<RatioU>(u), y);
}

namespace {

struct LineSplit {
  double gamma;
  std::vector<double> ydag;
  double ww;
};

LineSplit split(const LinePiece& p, std::span<const double> y) {
  LineSplit s;
  s.ww = dot(p.omega, p.omega);
  double num = 0.0;
  for (std::size_t c = 0; c < y.size(); ++c) num += p.omega[c] * (y[c] - p.anchor[c]);
  s.gamma = num / s.ww;
  s.ydag.assign(y.begin(), y.end());
  for (std::size_t c = 0; c < y.size(); ++c) s.ydag[c] -= s.gamma * p.omega[c];
  return s;
}

std::vector<double> along(const LinePiece& p, const LineSplit& s, double alpha) {
  std::vector<double> z = s.ydag;
  for (std::size_t c = 0; c < z.size(); ++c) z[c] += alpha * p.omega[c];
  return z;
}

double piece_value(const CertificatePiece& piece, std::span<const double> x) {
  if (const auto* h = std::get_if<HelmholtzPiece>(&piece.body)) return pseudo_helmholtz(restrict(x, h->species), h->x_star);
  if (const auto* s = std::get_if<ScalarIntegralPiece>(&piece.body)) {
    const double xv = restrict(x, {s->species})[0];
    if (!(xv > 0.0)) throw std::domain_error("integration path leaves the positive orthant");
    return integrate([s](double t) { return s->integrand(t); }, s->x_star, xv);
  }
  const auto& p = std::get<LinePiece>(piece.body);
  const auto y = restrict(x, p.species);
  require_positive(y);
  const LineSplit sp = split(p, y);
  return integrate([&](double a) { return std::log(p.u_value(along(p, sp, a))); }, 0.0, sp.gamma);
}

void piece_gradient(const CertificatePiece& piece, std::span<const double> x, std::vector<double>& g) {
  if (const auto* h = std::get_if<HelmholtzPiece>(&piece.body)) {
    for (std::size_t a = 0; a < h->species.size(); ++a) {
      const double xv = x[h->species[a]];
      if (!(xv > 0.0)) throw std::domain_error("pseudo-Helmholtz needs positive entries");
      g[h->species[a]] += std::log(xv / h->x_star[a]);
    }
    return;
  }
  if (const auto* s = std::get_if<ScalarIntegralPiece>(&piece.body)) {
    const double xv = x[s->species];
    if (!(xv > 0.0)) throw std::domain_error("integration path leaves the positive orthant");
    g[s->species] += s->integrand(xv);
    return;
  }
  const auto& p = std::get<LinePiece>(piece.body);
  const auto y = restrict(x, p.species);
  require_positive(y);
  const LineSplit sp = split(p, y);
  const std::size_t m = y.size();
  const double lu = std::log(p.u_value(y));
  std::vector<double> local(m);
  for (std::size_t c = 0; c < m; ++c) local[c] = lu * p.omega[c] / sp.ww;
  if (m > 1 && sp.gamma != 0.0) {
    // P * integral of grad ln u~ along the segment, P = I - omega omega^T / ww
    std::vector<double> q(m);
    for (std::size_t c = 0; c < m; ++c)
      q[c] = integrate([&](double a) { return p.grad_log_u(along(p, sp, a))[c]; }, 0.0, sp.gamma);
    const double proj = dot(p.omega, q) / sp.ww;
    for (std::size_t c = 0; c < m; ++c) local[c] += q[c] - proj * p.omega[c];
  }
  for (std::size_t c = 0; c < m; ++c) g[p.species[c]] += local[c];
}

}  // namespace

double LyapunovCertificate::evaluate(std::span<const double> x) const {
  double f = 0.0;
  for (const auto& p : pieces) f += piece_value(p, x);
  return f;
}

std::vector<double> LyapunovCertificate::gradient(std::span<const double> x) const {
  std::vector<double> g(x.size(), 0.0);
  for (const auto& p : pieces) piece_gradient(p, x, g);
  return g;
}

double dissipation_check(const LyapunovCertificate& cert, const MassActionSystem& mas, std::span<const double> x) {
  const auto g = cert.gradient(x);
  const auto dx = ode_rhs(mas, x);
  return dot(g, dx);
}

std::string network_fingerprint(const MassActionSystem& mas) {
  const std::string text = print_network(mas);
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

HelmholtzPiece helmholtz_piece(const std::vector<std::size_t>& species, std::span<const double> parent_x_star) {
  return HelmholtzPiece{species, restrict(parent_x_star, species)};
}

LinePiece one_dim_piece(const MassActionSystem& sub, const std::vector<std::size_t>& species_map,
                        const OneDimGeometry& geo) {
  LinePiece p;
  p.species = species_map;
  p.omega.assign(geo.omega.begin(), geo.omega.end());
  p.anchor = geo.x_ref;
  p.u = root_from(sub, geo);
  return p;
}

LinePiece shared_piece(const MassActionSystem& sub, const std::vector<std::size_t>& species_map,
                       const SharedSplit& s, std::span<const double> local_x_star) {
  LinePiece p;
  for (auto j : s.tilde) p.species.push_back(species_map[j]);
  p.omega.assign(s.omega_tilde.begin(), s.omega_tilde.end());
  p.anchor = restrict(local_x_star, s.tilde);
  p.u = ratio_from(sub, s, local_x_star);
  return p;
}

ScalarIntegralPiece two_species_piece_i(const TwoSpeciesShape& s, const MassActionSystem& sub,
                                        const std::vector<std::size_t>& species_map,
                                        std::span<const double> local_x_star) {
  ScalarIntegralPiece p;
  p.species = species_map[s.i];
  p.x_star = local_x_star[s.i];
  p.weight = -1.0 / static_cast<double>(s.w_i);
  p.power = s.a;
  p.c = s.c;
  for (auto l : s.R) p.terms.emplace_back(sub.reaction(l).k, sub.reaction(l).reactant[s.i]);
  return p;
}

ScalarIntegralPiece two_species_piece_j(const TwoSpeciesShape& s, const MassActionSystem& sub,
                                        const std::vector<std::size_t>& species_map,
                                        std::span<const double> local_x_star) {
  ScalarIntegralPiece p;
  p.species = species_map[s.j];
  p.x_star = local_x_star[s.j];
  p.weight = 1.0 / static_cast<double>(s.w_j);
  p.power = s.b;
  p.c = s.c_alt;
  for (auto l : s.L) p.terms.emplace_back(sub.reaction(l).k, sub.reaction(l).reactant[s.j]);
  return p;
}

// --- serialization ---------------------------------------------------------------

namespace {

const std::pair<CertificateKind, const char*> kKindNames[] = {
    {CertificateKind::pseudo_helmholtz, "pseudo_helmholtz"},
    {CertificateKind::one_dim, "one_dim"},
    {CertificateKind::two_species, "two_species"},
    {CertificateKind::autocat_two_species, "autocat_two_species"},
    {CertificateKind::composite_thm33, "composite_thm33"},
    {CertificateKind::composite_thm34, "composite_thm34"},
    {CertificateKind::composite_thm46, "composite_thm46"},
    {CertificateKind::composite_cor47, "composite_cor47"},
    {CertificateKind::composite_thm52, "composite_thm52"},
};

nlohmann::json monomials_json(const std::vector<Monomial>& ms) {
  auto a = nlohmann::json::array();
  for (const auto& m : ms) a.push_back({{"k", m.k}, {"v", m.v}});
  return a;
}

std::vector<Monomial> monomials_from(const nlohmann::json& a) {
  std::vector<Monomial> out;
  for (const auto& m : a) out.push_back({m.at("k").get<double>(), m.at("v").get<std::vector<int>>()});
  return out;
}

nlohmann::json piece_json(const CertificatePiece& p) {
  nlohmann::json j;
  j["label"] = p.label;
  if (const auto* h = std::get_if<HelmholtzPiece>(&p.body)) {
    j["type"] = "helmholtz";
    j["species"] = h->species;
    j["x_star"] = h->x_star;
  } else if (const auto* s = std::get_if<ScalarIntegralPiece>(&p.body)) {
    j["type"] = "scalar_integral";
    j["species"] = s->species;
    j["x_star"] = s->x_star;
    j["weight"] = s->weight;
    j["power"] = s->power;
    j["c"] = s->c;
    auto t = nlohmann::json::array();
    for (const auto& [k, e] : s->terms) t.push_back({{"k", k}, {"e", e}});
    j["terms"] = std::move(t);
  } else {
    const auto& l = std::get<LinePiece>(p.body);
    j["type"] = "line_integral";
    j["species"] = l.species;
    j["omega"] = l.omega;
    j["anchor"] = l.anchor;
    if (const auto* r = std::get_if<RootU>(&l.u)) {
      j["u"] = {{"form", "root"}, {"terms", monomials_json(r->terms)}, {"betas", r->betas}};
    } else {
      const auto& q = std::get<RatioU>(l.u);
      j["u"] = {{"form", "ratio"}, {"prefactor", q.prefactor}, {"R", monomials_json(q.R)}, {"L", monomials_json(q.L)}};
    }
  }
  return j;
}

CertificatePiece piece_from(const nlohmann::json& j) {
  CertificatePiece p;
  p.label = j.value("label", "");
  const std::string type = j.at("type").get<std::string>();
  if (type == "helmholtz") {
    p.body = HelmholtzPiece{j.at("species").get<std::vector<std::size_t>>(), j.at("x_star").get<std::vector<double>>()};
  } else if (type == "scalar_integral") {
    ScalarIntegralPiece s;
    s.species = j.at("species").get<std::size_t>();
    s.x_star = j.at("x_star").get<double>();
    s.weight = j.at("weight").get<double>();
    s.power = j.at("power").get<int>();
    s.c = j.at("c").get<double>();
    for (const auto& t : j.at("terms")) s.terms.emplace_back(t.at("k").get<double>(), t.at("e").get<int>());
    p.body = s;
  } else if (type == "line_integral") {
    LinePiece l;
    l.species = j.at("species").get<std::vector<std::size_t>>();
    l.omega = j.at("omega").get<std::vector<double>>();
    l.anchor = j.at("anchor").get<std::vector<double>>();
    const auto& u = j.at("u");
    if (u.at("form") == "root") {
      l.u = RootU{monomials_from(u.at("terms")), u.at("betas").get<std::vector<long long>>()};
    } else {
      l.u = RatioU{u.at("prefactor").get<double>(), monomials_from(u.at("R")), monomials_from(u.at("L"))};
    }
    p.body = std::move(l);
  } else {
    throw std::invalid_argument("unknown piece type '" + type + "'");
  }
  return p;
}

}  // namespace

std::string to_string(CertificateKind k) {
  for (const auto& [kind, name] : kKindNames)
    if (kind == k) return name;
  return "pseudo_helmholtz";
}

CertificateKind certificate_kind_from_string(const std::string& s) {
  for (const auto& [kind, name] : kKindNames)
    if (s == name) return kind;
  throw std::invalid_argument("unknown certificate kind '" + s + "'");
}

void to_json(nlohmann::json& j, const Condition& c) {
  j = {{"id", c.id}, {"description", c.description}, {"required", c.required}, {"pass", c.pass}};
  j["value"] = c.value ? nlohmann::json(*c.value) : nlohmann::json(nullptr);
}

void to_json(nlohmann::json& j, const LyapunovCertificate& c) {
  j = nlohmann::json::object();
  j["kind"] = to_string(c.kind);
  j["theorem"] = c.theorem;
  j["species"] = c.species;
  j["network_fingerprint"] = c.network_fingerprint;
  j["x_star"] = c.x_star;
  j["radius"] = c.radius;
  auto pieces = nlohmann::json::array();
  for (const auto& p : c.pieces) pieces.push_back(piece_json(p));
  j["pieces"] = std::move(pieces);
  j["side_conditions"] = c.side_conditions;
}

LyapunovCertificate certificate_from_json(const nlohmann::json& j) {
  try {
    const auto& body = j.contains("certificate") && j["certificate"].is_object() ? j["certificate"] : j;
    LyapunovCertificate c;
    c.kind = certificate_kind_from_string(body.at("kind").get<std::string>());
    c.theorem = body.value("theorem", "");
    c.species = body.at("species").get<std::vector<std::string>>();
    c.network_fingerprint = body.at("network_fingerprint").get<std::string>();
    c.x_star = body.at("x_star").get<std::vector<double>>();
    c.radius = body.value("radius", 0.1);
    for (const auto& p : body.at("pieces")) c.pieces.push_back(piece_from(p));
    for (const auto& s : body.value("side_conditions", nlohmann::json::array())) {
      Condition cond;
      cond.id = s.at("id").get<std::string>();
      cond.description = s.value("description", "");
      if (s.contains("value") && s["value"].is_number()) cond.value = s["value"].get<double>();
      cond.required = s.value("required", "");
      cond.pass = s.value("pass", false);
      c.side_conditions.push_back(std::move(cond));
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed certificate: ") + e.what());
  }
}

}  // namespace crnscope
