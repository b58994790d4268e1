#include "crnscope/balance.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "crnscope/netparse.hpp"

namespace crnscope {

bool Tolerance::equal(double a, double b) const {
  return std::abs(a - b) <= abs + rel * std::max(std::abs(a), std::abs(b));
}

EquilibriumPoint evaluate_point(const MassActionSystem& mas, std::span<const double> x) {
  EquilibriumPoint p;
  p.x_star.assign(x.begin(), x.end());
  const auto dx = ode_rhs(mas, x);
  for (double d : dx) p.residual_inf = std::max(p.residual_inf, std::abs(d));
  for (const auto& w : conservation_laws(mas)) {
    double level = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) level += to_double(w[j]) * x[j];
    p.compatibility_levels.push_back(level);
  }
  return p;
}

bool is_equilibrium(const MassActionSystem& mas, std::span<const double> x, const Tolerance& tol) {
  const auto rates = reaction_rates(mas, x);
  const std::size_t n = mas.num_species();
  std::vector<double> net(n, 0.0), gross(n, 0.0);
  for (std::size_t i = 0; i < rates.size(); ++i) {
    const auto v = mas.reaction(i).vector();
    for (std::size_t j = 0; j < n; ++j) {
      net[j] += static_cast<double>(v[j]) * rates[i];
      gross[j] += std::abs(static_cast<double>(v[j])) * rates[i];
    }
  }
  for (std::size_t j = 0; j < n; ++j)
    if (std::abs(net[j]) > tol.abs + tol.rel * gross[j]) return false;
  return true;
}

namespace {

constexpr double kNewtonTol = 1e-10;
constexpr std::size_t kNewtonMaxIter = 200;
const double kDampingFloor = std::ldexp(1.0, -40);

// Rows of Gamma that span its row space, lowest indices first.
std::vector<std::size_t> independent_rows(const MassActionSystem& mas) {
  const auto g = stoichiometric_matrix(mas);
  RationalMatrix gt(g.cols, RationalVector(g.rows));
  for (std::size_t i = 0; i < g.cols; ++i)
    for (std::size_t j = 0; j < g.rows; ++j) gt[i][j] = g(j, i);
  return reduced_row_echelon(std::move(gt)).pivot_cols;
}

struct NewtonSystem {
  const MassActionSystem& mas;
  std::vector<std::size_t> rows;
  Eigen::MatrixXd constraints;
  Eigen::VectorXd levels;

  Eigen::VectorXd residual(const Eigen::VectorXd& x) const {
    std::vector<double> dx(mas.num_species());
    ode_rhs_unchecked(mas, std::span<const double>(x.data(), x.size()), dx);
    Eigen::VectorXd f(rows.size() + constraints.rows());
    for (std::size_t a = 0; a < rows.size(); ++a) f[a] = dx[rows[a]];
    f.tail(constraints.rows()) = constraints * x - levels;
    return f;
  }

  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const {
    const std::size_t n = mas.num_species();
    const auto jac = ode_jacobian(mas, std::span<const double>(x.data(), x.size()));
    Eigen::MatrixXd j(rows.size() + constraints.rows(), n);
    for (std::size_t a = 0; a < rows.size(); ++a)
      for (std::size_t m = 0; m < n; ++m) j(a, m) = jac[rows[a] * n + m];
    j.bottomRows(constraints.rows()) = constraints;
    return j;
  }
};

}  // namespace

constexpr double kBoundaryRatio = 1e-8;

EquilibriumPoint find_equilibrium(const MassActionSystem& mas, std::span<const double> guess,
                                  const std::optional<std::vector<double>>& class_levels) {
  const std::size_t n = mas.num_species();
  if (guess.size() != n) throw EquilibriumError("initial guess has wrong length");
  for (double g : guess)
    if (!(g > 0.0) || !std::isfinite(g)) throw EquilibriumError("initial guess must be positive");

  NewtonSystem sys{mas, independent_rows(mas), {}, {}};
  Eigen::VectorXd x0 = Eigen::Map<const Eigen::VectorXd>(guess.data(), n);
  if (!mas.hints().empty()) {
    const auto& hints = mas.hints();
    sys.constraints.resize(hints.size(), n);
    sys.levels.resize(hints.size());
    for (std::size_t a = 0; a < hints.size(); ++a) {
      for (std::size_t j = 0; j < n; ++j) sys.constraints(a, j) = hints[a].weights[j];
      sys.levels[a] = hints[a].level;
    }
  } else {
    const auto laws = conservation_laws(mas);
    sys.constraints.resize(laws.size(), n);
    for (std::size_t a = 0; a < laws.size(); ++a)
      for (std::size_t j = 0; j < n; ++j) sys.constraints(a, j) = to_double(laws[a][j]);
    sys.levels = sys.constraints * x0;
  }
  if (class_levels) {
    if (class_levels->size() != static_cast<std::size_t>(sys.constraints.rows()))
      throw EquilibriumError("expected " + std::to_string(sys.constraints.rows()) + " class levels, got " +
                             std::to_string(class_levels->size()));
    sys.levels = Eigen::Map<const Eigen::VectorXd>(class_levels->data(), class_levels->size());
  }

  Eigen::VectorXd x = x0;
  Eigen::VectorXd f = sys.residual(x);
  for (std::size_t it = 0; it <= kNewtonMaxIter; ++it) {
    if (f.lpNorm<Eigen::Infinity>() <= kNewtonTol) {
      // tiny residual from a vanishing coordinate is a boundary point, not an equilibrium
      if (x.minCoeff() < kBoundaryRatio * std::max(1.0, x.maxCoeff()))
        throw EquilibriumError("damped Newton drifted to the boundary of the positive orthant");
      EquilibriumPoint p = evaluate_point(mas, std::span<const double>(x.data(), n));
      p.iterations = it;
      return p;
    }
    if (it == kNewtonMaxIter) break;
    const Eigen::VectorXd d = sys.jacobian(x).colPivHouseholderQr().solve(-f);
    const double norm = f.norm();
    double lambda = 1.0;
    while (true) {
      const Eigen::VectorXd xn = x + lambda * d;
      if ((xn.array() > 0.0).all()) {
        const Eigen::VectorXd fn = sys.residual(xn);
        if (fn.allFinite() && fn.norm() < norm) {
          x = xn;
          f = fn;
          break;
        }
      }
      lambda *= 0.5;
      if (lambda < kDampingFloor)
        throw EquilibriumError("damped Newton stalled after " + std::to_string(it) +
                               " iterations (residual " + std::to_string(f.lpNorm<Eigen::Infinity>()) + ")");
    }
  }
  throw EquilibriumError("damped Newton did not converge in " + std::to_string(kNewtonMaxIter) + " iterations");
}

std::vector<DirectionGroup> reaction_vector_groups(const MassActionSystem& mas) {
  std::vector<DirectionGroup> groups;
  std::map<std::vector<long long>, std::size_t> index;
  for (std::size_t i = 0; i < mas.num_reactions(); ++i) {
    auto v = mas.reaction(i).vector();
    bool negated = false;
    for (auto e : v) {
      if (e != 0) {
        negated = e < 0;
        break;
      }
    }
    if (negated)
      for (auto& e : v) e = -e;
    auto [it, inserted] = index.emplace(v, groups.size());
    if (inserted) groups.push_back(DirectionGroup{v, {}, {}});
    auto& g = groups[it->second];
    (negated ? g.backward : g.forward).push_back(i);
  }
  return groups;
}

namespace {

double flux(const std::vector<double>& rates, const std::vector<std::size_t>& idx) {
  double s = 0.0;
  for (auto i : idx) s += rates[i];
  return s;
}

BalanceResult evaluate_groups(const MassActionSystem& mas, std::span<const double> x, std::vector<FluxGroup> groups,
                              const Tolerance& tol) {
  const auto rates = reaction_rates(mas, x);
  BalanceResult out;
  out.holds = true;
  for (auto& g : groups) {
    g.left_flux = flux(rates, g.left);
    g.right_flux = flux(rates, g.right);
    g.balanced = tol.equal(g.left_flux, g.right_flux);
    out.holds = out.holds && g.balanced;
  }
  out.groups = std::move(groups);
  return out;
}

std::string vector_label(const std::vector<long long>& v, const std::vector<std::string>& species) {
  std::string s;
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (v[j] == 0) continue;
    if (!s.empty()) s += v[j] > 0 ? " + " : " - ";
    else if (v[j] < 0) s += "-";
    const long long a = v[j] < 0 ? -v[j] : v[j];
    if (a != 1) s += std::to_string(a) + " ";
    s += species[j];
  }
  return s;
}

}  // namespace

Partition complex_partition(const MassActionSystem& mas) {
  const auto cs = complexes(mas);
  Partition p(cs.size());
  std::map<Stoich, std::size_t> idx;
  for (std::size_t c = 0; c < cs.size(); ++c) idx[cs[c]] = c;
  for (std::size_t i = 0; i < mas.num_reactions(); ++i) {
    p[idx[mas.reaction(i).reactant]].first.push_back(i);
    p[idx[mas.reaction(i).product]].second.push_back(i);
  }
  return p;
}

Partition reaction_vector_partition(const MassActionSystem& mas) {
  Partition p;
  // both orientations, so every reaction sits on each side once
  for (auto& g : reaction_vector_groups(mas)) {
    p.emplace_back(g.forward, g.backward);
    p.emplace_back(g.backward, g.forward);
  }
  return p;
}

Partition detailed_partition(const MassActionSystem& mas) {
  std::map<std::pair<Stoich, Stoich>, std::size_t> by_edge;
  for (std::size_t i = 0; i < mas.num_reactions(); ++i)
    by_edge[{mas.reaction(i).reactant, mas.reaction(i).product}] = i;
  Partition p;
  for (std::size_t i = 0; i < mas.num_reactions(); ++i) {
    auto it = by_edge.find({mas.reaction(i).product, mas.reaction(i).reactant});
    if (it == by_edge.end()) return {};
    p.push_back({{i}, {it->second}});
  }
  return p;
}

BalanceResult check_complex_balanced(const MassActionSystem& mas, std::span<const double> x, const Tolerance& tol) {
  const auto cs = complexes(mas);
  const auto part = complex_partition(mas);
  std::vector<FluxGroup> groups;
  for (std::size_t c = 0; c < cs.size(); ++c)
    groups.push_back({format_complex(cs[c], mas.species()), part[c].first, part[c].second});
  return evaluate_groups(mas, x, std::move(groups), tol);
}

BalanceResult check_detailed_balanced(const MassActionSystem& mas, std::span<const double> x, const Tolerance& tol) {
  const auto part = detailed_partition(mas);
  if (part.empty()) {
    BalanceResult r;
    r.reason = "network is not reversible";
    return r;
  }
  std::vector<FluxGroup> groups;
  for (const auto& [l, r] : part)
    if (l[0] < r[0]) groups.push_back({format_reaction(mas.reaction(l[0]), mas.species()), l, r});
  return evaluate_groups(mas, x, std::move(groups), tol);
}

BalanceResult check_reaction_vector_balanced(const MassActionSystem& mas, std::span<const double> x,
                                             const Tolerance& tol) {
  std::vector<FluxGroup> groups;
  for (const auto& g : reaction_vector_groups(mas))
    groups.push_back({vector_label(g.eta, mas.species()), g.forward, g.backward});
  return evaluate_groups(mas, x, std::move(groups), tol);
}

BalanceResult check_generalized_balanced(const MassActionSystem& mas, std::span<const double> x,
                                         const Partition& partition, const Tolerance& tol) {
  const std::size_t r = mas.num_reactions();
  std::vector<bool> left(r, false), right(r, false);
  for (const auto& [l, rr] : partition) {
    for (auto i : l) {
      if (i >= r) throw std::invalid_argument("partition index out of range");
      left[i] = true;
    }
    for (auto i : rr) {
      if (i >= r) throw std::invalid_argument("partition index out of range");
      right[i] = true;
    }
  }
  for (std::size_t i = 0; i < r; ++i)
    if (!left[i] || !right[i])
      throw std::invalid_argument("partition does not cover reaction " + std::to_string(i) + " on both sides");
  std::vector<FluxGroup> groups;
  for (std::size_t t = 0; t < partition.size(); ++t)
    groups.push_back({"tuple " + std::to_string(t), partition[t].first, partition[t].second});
  return evaluate_groups(mas, x, std::move(groups), tol);
}

BalanceCertificate certify_balance(const MassActionSystem& mas, std::span<const double> x, const Tolerance& tol) {
  BalanceCertificate c;
  c.point = evaluate_point(mas, x);
  c.equilibrium = is_equilibrium(mas, x, tol);
  c.detailed_result = check_detailed_balanced(mas, x, tol);
  c.complex_result = check_complex_balanced(mas, x, tol);
  c.reaction_vector_result = check_reaction_vector_balanced(mas, x, tol);
  c.detailed = c.detailed_result.holds;
  c.complex_balanced = c.complex_result.holds;
  c.reaction_vector_balanced = c.reaction_vector_result.holds;
  if (c.detailed) c.generalized_partition = detailed_partition(mas);
  else if (c.complex_balanced) c.generalized_partition = complex_partition(mas);
  else if (c.reaction_vector_balanced) c.generalized_partition = reaction_vector_partition(mas);
  return c;
}

void to_json(nlohmann::json& j, const EquilibriumPoint& p) {
  j = {{"x_star", p.x_star},
       {"residual_inf", p.residual_inf},
       {"compatibility_levels", p.compatibility_levels},
       {"iterations", p.iterations}};
}

void to_json(nlohmann::json& j, const BalanceResult& r) {
  j = nlohmann::json::object();
  j["holds"] = r.holds;
  if (!r.reason.empty()) j["reason"] = r.reason;
  auto groups = nlohmann::json::array();
  for (const auto& g : r.groups) {
    groups.push_back({{"label", g.label},
                      {"left", g.left},
                      {"right", g.right},
                      {"left_flux", g.left_flux},
                      {"right_flux", g.right_flux},
                      {"residual", g.residual()},
                      {"balanced", g.balanced}});
  }
  j["groups"] = std::move(groups);
}

void to_json(nlohmann::json& j, const BalanceCertificate& c) {
  j = nlohmann::json::object();
  j["point"] = c.point;
  j["equilibrium"] = c.equilibrium;
  j["detailed"] = c.detailed;
  j["complex_balanced"] = c.complex_balanced;
  j["reaction_vector_balanced"] = c.reaction_vector_balanced;
  j["generalized"] = c.generalized_partition.has_value();
  if (c.generalized_partition) {
    auto p = nlohmann::json::array();
    for (const auto& [l, r] : *c.generalized_partition) p.push_back({{"left", l}, {"right", r}});
    j["generalized_partition"] = std::move(p);
  }
  j["detailed_groups"] = c.detailed_result;
  j["complex_groups"] = c.complex_result;
  j["reaction_vector_groups"] = c.reaction_vector_result;
}

}  // namespace crnscope
