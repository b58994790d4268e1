#pragma once

// Shared networks and brute-force oracles for the test binaries.

#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "crnscope/balance.hpp"
#include "crnscope/netparse.hpp"
#include "crnscope/pipeline.hpp"
#include "crnscope/report.hpp"

namespace fx {

using namespace crnscope;

inline MassActionSystem net(const std::string& text) { return parse_network(text).network; }

inline std::string network_path(const std::string& name) { return std::string(CRNSCOPE_NETWORK_DIR) + "/" + name; }

inline NetworkDocument load(const std::string& name) { return parse_network(read_file(network_path(name))); }

inline std::vector<double> ones(std::size_t n) { return std::vector<double>(n, 1.0); }

/// S_i <-> S_{i+1} (kf, kr) and S_i + S_{i+1} -> 2 S_{i+1} (kc), cyclic.
inline std::string cycle_text(std::size_t n, double kf = 1, double kr = 2, double kc = 1) {
  std::string s = "@species ";
  for (std::size_t i = 0; i < n; ++i) s += (i ? ", S" : "S") + std::to_string(i + 1);
  s += "\n";
  for (std::size_t i = 0; i < n; ++i) {
    const std::string a = "S" + std::to_string(i + 1), b = "S" + std::to_string((i + 1) % n + 1);
    s += a + " <-> " + b + " ; kf = " + format_double(kf) + ", kr = " + format_double(kr) + "\n";
    s += a + " + " + b + " -> 2 " + b + " ; k = " + format_double(kc) + "\n";
  }
  return s;
}

inline MassActionSystem cycle(std::size_t n) { return net(cycle_text(n)); }

inline double flux(const MassActionSystem& mas, std::size_t l, std::span<const double> x) {
  const auto& r = mas.reaction(l);
  double v = r.k;
  for (std::size_t i = 0; i < x.size(); ++i) v *= std::pow(x[i], r.reactant[i]);
  return v;
}

inline bool close(double a, double b, double abs = 1e-12, double rel = 1e-9) {
  return std::abs(a - b) <= abs + rel * std::max(std::abs(a), std::abs(b));
}

// --- brute-force oracles: direct sums, no shared code with balance.cpp ----

inline std::vector<long long> primitive(std::vector<long long> v) {
  long long g = 0;
  for (auto e : v) g = std::gcd(g, std::llabs(e));
  for (auto& e : v) e /= g;
  for (auto e : v) {
    if (e == 0) continue;
    if (e < 0)
      for (auto& f : v) f = -f;
    break;
  }
  return v;
}

inline std::vector<long long> diff(const Reaction& r) {
  std::vector<long long> v;
  for (std::size_t i = 0; i < r.reactant.size(); ++i) v.push_back(r.product[i] - r.reactant[i]);
  return v;
}

/// Reactions with exactly opposite vectors compared per direction.
inline bool oracle_rv_balanced(const MassActionSystem& mas, std::span<const double> x) {
  std::map<std::vector<long long>, std::pair<double, double>> sums;
  for (std::size_t l = 0; l < mas.num_reactions(); ++l) {
    auto v = diff(mas.reaction(l));
    auto neg = v;
    for (auto& e : neg) e = -e;
    // canonical side: lexicographically larger of v, -v
    if (v > neg) sums[v].first += flux(mas, l, x);
    else sums[neg].second += flux(mas, l, x);
  }
  for (const auto& [v, lr] : sums)
    if (!close(lr.first, lr.second)) return false;
  return true;
}

inline bool oracle_complex_balanced(const MassActionSystem& mas, std::span<const double> x) {
  std::map<Stoich, double> net;
  for (std::size_t l = 0; l < mas.num_reactions(); ++l) {
    const double f = flux(mas, l, x);
    net[mas.reaction(l).reactant] -= f;
    net[mas.reaction(l).product] += f;
  }
  std::map<Stoich, double> gross;
  for (std::size_t l = 0; l < mas.num_reactions(); ++l) gross[mas.reaction(l).reactant] += flux(mas, l, x);
  for (const auto& [c, v] : net)
    if (std::abs(v) > 1e-12 + 1e-9 * gross[c]) return false;
  return true;
}

inline bool oracle_detailed_balanced(const MassActionSystem& mas, std::span<const double> x) {
  for (std::size_t l = 0; l < mas.num_reactions(); ++l) {
    bool found = false;
    for (std::size_t m = 0; m < mas.num_reactions(); ++m) {
      if (mas.reaction(m).reactant != mas.reaction(l).product || mas.reaction(m).product != mas.reaction(l).reactant)
        continue;
      found = true;
      if (!close(flux(mas, l, x), flux(mas, m, x))) return false;
    }
    if (!found) return false;
  }
  return true;
}

inline bool oracle_equilibrium(const MassActionSystem& mas, std::span<const double> x) {
  const std::size_t n = mas.num_species();
  std::vector<double> net(n, 0.0), gross(n, 0.0);
  for (std::size_t l = 0; l < mas.num_reactions(); ++l) {
    const auto v = diff(mas.reaction(l));
    const double f = flux(mas, l, x);
    for (std::size_t i = 0; i < n; ++i) {
      net[i] += v[i] * f;
      gross[i] += std::llabs(v[i]) * f;
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (std::abs(net[i]) > 1e-12 + 1e-9 * gross[i]) return false;
  return true;
}

// --- random networks ---------------------------------------------------------

struct RandomNetwork {
  MassActionSystem mas;
  std::vector<double> x_star;
};

/// Small random reversible network. Reverse rates are chosen so x* is
/// detailed balanced with probability `p_balanced`, else drawn freely.
inline RandomNetwork random_network(std::mt19937_64& rng, double p_balanced = 0.5) {
  std::uniform_int_distribution<int> nsp(2, 4), coef(0, 2), npairs(1, 4);
  std::uniform_real_distribution<double> kd(0.5, 3.0), xd(0.5, 2.0), coin(0.0, 1.0);
  const int n = nsp(rng);
  std::vector<std::string> names;
  for (int i = 0; i < n; ++i) names.push_back("X" + std::to_string(i));
  std::vector<double> x(n);
  for (auto& v : x) v = xd(rng);
  const bool balanced = coin(rng) < p_balanced;
  std::vector<Reaction> rs;
  const int pairs = npairs(rng);
  for (int attempt = 0; static_cast<int>(rs.size()) < 2 * pairs && attempt < 100; ++attempt) {
    Stoich a(n), b(n);
    for (auto& c : a) c = coef(rng);
    for (auto& c : b) c = coef(rng);
    if (a == b) continue;
    bool dup = false;
    for (const auto& r : rs) dup = dup || (r.reactant == a && r.product == b) || (r.reactant == b && r.product == a);
    if (dup) continue;
    Reaction f{a, b, kd(rng)};
    Reaction g{b, a, kd(rng)};
    if (balanced) {
      double fa = f.k, fb = 1.0;
      for (int i = 0; i < n; ++i) {
        fa *= std::pow(x[i], a[i]);
        fb *= std::pow(x[i], b[i]);
      }
      g.k = fa / fb;
    }
    rs.push_back(f);
    rs.push_back(g);
  }
  // every species must appear somewhere
  for (int i = 0; i < n; ++i) {
    bool seen = false;
    for (const auto& r : rs) seen = seen || r.reactant[i] || r.product[i];
    if (!seen) {
      Stoich a(n), b(n);
      a[i] = 1;
      b[(i + 1) % n] = 1;
      bool dup = false;
      for (const auto& r : rs) dup = dup || (r.reactant == a && r.product == b) || (r.reactant == b && r.product == a);
      if (dup) continue;
      const double k = kd(rng);
      rs.push_back({a, b, k});
      rs.push_back({b, a, balanced ? k * x[i] / x[(i + 1) % n] : kd(rng)});
    }
  }
  return {MassActionSystem(names, rs), x};
}

/// Autocatalytic network on n <= 5 species satisfying the proportionality
/// condition by construction: rates into target j from source i are
/// s_ij * base_j[alpha]. With `balanced`, every pair is balanced at x*;
/// otherwise one pair's reverse scale is off by a factor.
inline RandomNetwork random_autocatalytic(std::mt19937_64& rng, bool balanced) {
  std::uniform_int_distribution<int> nsp(2, 5);
  std::uniform_real_distribution<double> kd(0.5, 2.0), xd(0.5, 2.0), coin(0.0, 1.0);
  const int n = nsp(rng);
  std::vector<std::string> names;
  for (int i = 0; i < n; ++i) names.push_back("A" + std::to_string(i));
  std::vector<double> x(n);
  for (auto& v : x) v = xd(rng);
  std::vector<std::vector<double>> base(n, std::vector<double>(4));
  for (auto& b : base)
    for (auto& v : b) v = kd(rng);
  // spanning chain plus random extra edges
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  for (int i = 0; i < n; ++i)
    for (int j = i + 2; j < n; ++j)
      if (coin(rng) < 0.3) edges.emplace_back(i, j);
  std::uniform_int_distribution<std::size_t> pick(0, edges.size() - 1);
  const std::size_t broken = balanced ? edges.size() : pick(rng);
  std::vector<Reaction> rs;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto [i, j] = edges[e];
    // molecularities used in each direction; alpha = 1 always present
    std::vector<int> fw{1}, bw{1};
    for (int a = 2; a <= 3; ++a) {
      if (coin(rng) < 0.5) fw.push_back(a);
      if (coin(rng) < 0.5) bw.push_back(a);
    }
    auto sum = [&](int src, int tgt, const std::vector<int>& alphas) {
      double s = 0.0;
      for (int a : alphas) s += base[tgt][a] * x[src] * std::pow(x[tgt], a - 1);
      return s;
    };
    const double s_ij = kd(rng);
    double s_ji = s_ij * sum(i, j, fw) / sum(j, i, bw);
    if (e == broken) s_ji *= 1.5;
    auto emit = [&](int src, int tgt, const std::vector<int>& alphas, double scale) {
      for (int a : alphas) {
        Stoich r(n), p(n);
        r[src] = 1;
        r[tgt] += a - 1;
        p[tgt] = a;
        rs.push_back({r, p, scale * base[tgt][a]});
      }
    };
    emit(i, j, fw, s_ij);
    emit(j, i, bw, s_ji);
  }
  return {MassActionSystem(names, rs), x};
}

}  // namespace fx
