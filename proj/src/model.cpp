#include "crnscope/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <stack>

namespace crnscope {

std::vector<long long> Reaction::vector() const {
  std::vector<long long> v(product.size());
  for (std::size_t j = 0; j < v.size(); ++j)
    v[j] = static_cast<long long>(product[j]) - reactant[j];
  return v;
}

MassActionSystem::MassActionSystem(std::vector<std::string> species, std::vector<Reaction> reactions,
                                   std::vector<ConservationHint> hints)
    : species_(std::move(species)), reactions_(std::move(reactions)), hints_(std::move(hints)) {
  const std::size_t n = species_.size();
  if (n == 0) throw ModelError("network has no species");
  if (reactions_.empty()) throw ModelError("network has no reactions");
  std::set<std::string> seen;
  for (const auto& s : species_) {
    if (s.empty()) throw ModelError("empty species name");
    if (!seen.insert(s).second) throw ModelError("duplicate species name '" + s + "'");
  }
  std::vector<bool> used(n, false);
  for (std::size_t i = 0; i < reactions_.size(); ++i) {
    const auto& r = reactions_[i];
    const std::string where = "reaction " + std::to_string(i);
    if (r.reactant.size() != n || r.product.size() != n)
      throw ModelError(where + ": stoichiometry length does not match species count");
    for (std::size_t j = 0; j < n; ++j) {
      if (r.reactant[j] < 0 || r.product[j] < 0)
        throw ModelError(where + ": negative stoichiometric coefficient");
      if (r.reactant[j] > 0 || r.product[j] > 0) used[j] = true;
    }
    if (r.reactant == r.product) throw ModelError(where + ": reactant equals product");
    if (!(r.k > 0.0) || !std::isfinite(r.k)) throw ModelError(where + ": rate constant must be positive");
  }
  for (std::size_t j = 0; j < n; ++j)
    if (!used[j]) throw ModelError("species '" + species_[j] + "' appears in no complex");
  for (const auto& h : hints_)
    if (h.weights.size() != n) throw ModelError("conservation hint has wrong length");
}

std::optional<std::size_t> MassActionSystem::species_index(const std::string& name) const {
  auto it = std::find(species_.begin(), species_.end(), name);
  if (it == species_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - species_.begin());
}

MassActionSystem MassActionSystem::subsystem(std::span<const std::size_t> reaction_indices,
                                             std::vector<std::size_t>* species_map) const {
  const std::size_t n = species_.size();
  std::vector<bool> used(n, false);
  for (auto i : reaction_indices) {
    const auto& r = reactions_.at(i);
    for (std::size_t j = 0; j < n; ++j)
      if (r.reactant[j] > 0 || r.product[j] > 0) used[j] = true;
  }
  std::vector<std::size_t> map;
  std::vector<std::string> names;
  for (std::size_t j = 0; j < n; ++j) {
    if (!used[j]) continue;
    map.push_back(j);
    names.push_back(species_[j]);
  }
  std::vector<Reaction> rs;
  for (auto i : reaction_indices) {
    const auto& r = reactions_[i];
    Reaction sub;
    sub.k = r.k;
    for (auto j : map) {
      sub.reactant.push_back(r.reactant[j]);
      sub.product.push_back(r.product[j]);
    }
    rs.push_back(std::move(sub));
  }
  if (species_map) *species_map = map;
  return MassActionSystem(std::move(names), std::move(rs));
}

MassActionSystem MassActionSystem::with_rates(std::span<const double> k) const {
  if (k.size() != reactions_.size()) throw ModelError("rate vector has wrong length");
  auto rs = reactions_;
  for (std::size_t i = 0; i < rs.size(); ++i) rs[i].k = k[i];
  return MassActionSystem(species_, std::move(rs), hints_);
}

IntMatrix stoichiometric_matrix(const MassActionSystem& mas) {
  IntMatrix g(mas.num_species(), mas.num_reactions());
  for (std::size_t i = 0; i < mas.num_reactions(); ++i) {
    const auto v = mas.reaction(i).vector();
    for (std::size_t j = 0; j < v.size(); ++j) g(j, i) = v[j];
  }
  return g;
}

std::vector<Stoich> complexes(const MassActionSystem& mas) {
  std::vector<Stoich> out;
  std::set<Stoich> seen;
  for (const auto& r : mas.reactions()) {
    for (const Stoich* c : {&r.reactant, &r.product})
      if (seen.insert(*c).second) out.push_back(*c);
  }
  return out;
}

std::vector<RationalVector> conservation_laws(const MassActionSystem& mas) {
  // w^T Gamma = 0  <=>  Gamma^T w = 0
  const auto g = stoichiometric_matrix(mas);
  RationalMatrix gt(g.cols, RationalVector(g.rows));
  for (std::size_t i = 0; i < g.cols; ++i)
    for (std::size_t j = 0; j < g.rows; ++j) gt[i][j] = g(j, i);
  return null_space(gt, g.rows);
}

namespace {

std::size_t exact_rank(const IntMatrix& g) {
  std::vector<std::vector<BigInt>> m(g.rows, std::vector<BigInt>(g.cols));
  for (std::size_t i = 0; i < g.rows; ++i)
    for (std::size_t j = 0; j < g.cols; ++j) m[i][j] = g(i, j);
  return bareiss_rank(std::move(m));
}

// Tarjan's strongly connected components; returns component id per vertex.
std::vector<std::size_t> strong_components(const std::vector<std::vector<std::size_t>>& adj) {
  const std::size_t n = adj.size();
  constexpr std::size_t unset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> index(n, unset), low(n, 0), comp(n, unset);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::size_t counter = 0, ncomp = 0;

  struct Frame {
    std::size_t v;
    std::size_t edge;
  };
  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != unset) continue;
    std::vector<Frame> calls{{root, 0}};
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!calls.empty()) {
      auto& f = calls.back();
      if (f.edge < adj[f.v].size()) {
        const std::size_t w = adj[f.v][f.edge++];
        if (index[w] == unset) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          calls.push_back({w, 0});
        } else if (on_stack[w]) {
          low[f.v] = std::min(low[f.v], index[w]);
        }
        continue;
      }
      const std::size_t v = f.v;
      if (low[v] == index[v]) {
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp[w] = ncomp;
        } while (w != v);
        ++ncomp;
      }
      calls.pop_back();
      if (!calls.empty()) low[calls.back().v] = std::min(low[calls.back().v], low[v]);
    }
  }
  return comp;
}

}  // namespace

StructureReport structure_report(const MassActionSystem& mas) {
  StructureReport rep;
  rep.num_species = mas.num_species();
  rep.num_reactions = mas.num_reactions();
  rep.gamma = stoichiometric_matrix(mas);
  rep.dim_S = exact_rank(rep.gamma);
  rep.complexes = complexes(mas);
  rep.num_complexes = rep.complexes.size();

  std::map<Stoich, std::size_t> id;
  for (std::size_t c = 0; c < rep.complexes.size(); ++c) id[rep.complexes[c]] = c;

  // linkage classes: union-find over the undirected complex graph
  std::vector<std::size_t> parent(rep.num_complexes);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  std::vector<std::vector<std::size_t>> adj(rep.num_complexes);
  std::set<std::pair<std::size_t, std::size_t>> edges;
  for (const auto& r : mas.reactions()) {
    const auto a = id.at(r.reactant), b = id.at(r.product);
    adj[a].push_back(b);
    edges.insert({a, b});
    parent[find(a)] = find(b);
  }
  std::map<std::size_t, std::size_t> class_of_root;
  rep.linkage_class.resize(rep.num_complexes);
  for (std::size_t c = 0; c < rep.num_complexes; ++c) {
    auto [it, inserted] = class_of_root.try_emplace(find(c), class_of_root.size());
    rep.linkage_class[c] = it->second;
  }
  rep.num_linkage_classes = class_of_root.size();
  rep.deficiency = static_cast<long long>(rep.num_complexes) -
                   static_cast<long long>(rep.num_linkage_classes) - static_cast<long long>(rep.dim_S);

  const auto scc = strong_components(adj);
  rep.weakly_reversible = std::all_of(edges.begin(), edges.end(),
                                      [&](const auto& e) { return scc[e.first] == scc[e.second]; });
  rep.reversible = std::all_of(edges.begin(), edges.end(),
                               [&](const auto& e) { return edges.count({e.second, e.first}) > 0; });
  rep.conservation_basis = conservation_laws(mas);
  return rep;
}

double mass_action_rate(double k, const Stoich& v, std::span<const double> x) {
  double rate = k;
  for (std::size_t j = 0; j < v.size(); ++j) {
    for (int e = 0; e < v[j]; ++e) rate *= x[j];
  }
  return rate;
}

namespace {
void check_state(const MassActionSystem& mas, std::span<const double> x) {
  if (x.size() != mas.num_species()) throw std::domain_error("state has wrong length");
  for (double xi : x)
    if (!(xi >= 0.0) || !std::isfinite(xi)) throw std::domain_error("state entries must be finite and non-negative");
}
}  // namespace

std::vector<double> reaction_rates(const MassActionSystem& mas, std::span<const double> x) {
  check_state(mas, x);
  std::vector<double> rates(mas.num_reactions());
  for (std::size_t i = 0; i < rates.size(); ++i) {
    const auto& r = mas.reaction(i);
    rates[i] = mass_action_rate(r.k, r.reactant, x);
  }
  return rates;
}

std::vector<double> ode_rhs(const MassActionSystem& mas, std::span<const double> x) {
  check_state(mas, x);
  std::vector<double> dx(mas.num_species(), 0.0);
  ode_rhs_unchecked(mas, x, dx);
  return dx;
}

void ode_rhs_unchecked(const MassActionSystem& mas, std::span<const double> x, std::span<double> dxdt) {
  std::fill(dxdt.begin(), dxdt.end(), 0.0);
  for (const auto& r : mas.reactions()) {
    const double rate = mass_action_rate(r.k, r.reactant, x);
    for (std::size_t j = 0; j < dxdt.size(); ++j) {
      const int d = r.product[j] - r.reactant[j];
      if (d != 0) dxdt[j] += d * rate;
    }
  }
}

std::vector<double> ode_jacobian(const MassActionSystem& mas, std::span<const double> x) {
  const std::size_t n = mas.num_species();
  std::vector<double> jac(n * n, 0.0);
  for (const auto& r : mas.reactions()) {
    for (std::size_t m = 0; m < n; ++m) {
      if (r.reactant[m] == 0) continue;
      // d/dx_m of k x^v
      double d = r.k * r.reactant[m];
      for (std::size_t j = 0; j < n; ++j) {
        const int e = r.reactant[j] - (j == m ? 1 : 0);
        for (int p = 0; p < e; ++p) d *= x[j];
      }
      for (std::size_t j = 0; j < n; ++j) {
        const int s = r.product[j] - r.reactant[j];
        if (s != 0) jac[j * n + m] += s * d;
      }
    }
  }
  return jac;
}

std::vector<long long> canonical_direction(const std::vector<long long>& v) {
  long long g = 0;
  for (auto e : v) g = std::gcd(g, e < 0 ? -e : e);
  if (g == 0) return v;
  std::vector<long long> out(v.size());
  long long sign = 1;
  for (auto e : v) {
    if (e != 0) {
      sign = e > 0 ? 1 : -1;
      break;
    }
  }
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = sign * v[i] / g;
  return out;
}

}  // namespace crnscope
