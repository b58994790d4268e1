#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <random>
#include <set>

#include "crnscope/model.hpp"
#include "fixtures.hpp"

using namespace crnscope;

namespace {

// dense double rank, independent of the exact code path
std::size_t float_rank(const MassActionSystem& mas) {
  Eigen::MatrixXd g(mas.num_species(), mas.num_reactions());
  for (std::size_t l = 0; l < mas.num_reactions(); ++l) {
    auto v = mas.reaction(l).vector();
    for (std::size_t i = 0; i < v.size(); ++i) g(i, l) = static_cast<double>(v[i]);
  }
  return static_cast<std::size_t>(Eigen::FullPivLU<Eigen::MatrixXd>(g).rank());
}

// union-find over complexes
std::size_t count_linkage(const MassActionSystem& mas) {
  std::map<Stoich, int> id;
  for (const auto& r : mas.reactions()) {
    id.emplace(r.reactant, static_cast<int>(id.size()));
    id.emplace(r.product, static_cast<int>(id.size()));
  }
  std::vector<int> parent(id.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int a) { return parent[a] == a ? a : parent[a] = find(parent[a]); };
  for (const auto& r : mas.reactions()) parent[find(id[r.reactant])] = find(id[r.product]);
  std::set<int> roots;
  for (std::size_t a = 0; a < parent.size(); ++a) roots.insert(find(static_cast<int>(a)));
  return roots.size();
}

}  // namespace

TEST_CASE("stoichiometric matrix columns") {
  const auto one = fx::net("S1 -> S2 ; k = 1\n");
  const auto g = stoichiometric_matrix(one);
  CHECK(g.rows == 2);
  CHECK(g.cols == 1);
  CHECK(g(0, 0) == -1);
  CHECK(g(1, 0) == 1);

  const auto aurora = fx::load("aurora.crn").network;
  const auto ga = stoichiometric_matrix(aurora);
  const long long want[2][3] = {{-1, 1, -1}, {1, -1, 1}};
  for (int i = 0; i < 2; ++i)
    for (int l = 0; l < 3; ++l) CHECK(ga(i, l) == want[i][l]);
}

TEST_CASE("structure of the kinase network") {
  const auto rep = structure_report(fx::load("aurora.crn").network);
  CHECK(rep.num_complexes == 4);
  CHECK(rep.num_linkage_classes == 2);
  CHECK(rep.dim_S == 1);
  CHECK(rep.deficiency == 1);
  CHECK_FALSE(rep.weakly_reversible);
  REQUIRE(rep.conservation_basis.size() == 1);
  CHECK(rep.conservation_basis[0] == RationalVector{1, 1});
}

TEST_CASE("reversible pair") {
  const auto rep = structure_report(fx::net("S1 <-> S2 ; kf = 1, kr = 2\n"));
  CHECK(rep.num_complexes == 2);
  CHECK(rep.num_linkage_classes == 1);
  CHECK(rep.dim_S == 1);
  CHECK(rep.deficiency == 0);
  CHECK(rep.reversible);
  CHECK(rep.weakly_reversible);
  CHECK(conservation_laws(fx::net("S1 <-> S2 ; kf = 1, kr = 2\n")) == std::vector<RationalVector>{{1, 1}});
}

TEST_CASE("fifteen-reaction five-species network") {
  const auto mas = fx::load("example2_1.crn").network;
  const auto rep = structure_report(mas);
  CHECK(mas.num_reactions() == 15);
  CHECK(rep.num_complexes == 14);
  CHECK(rep.num_linkage_classes == 5);
  CHECK(rep.num_linkage_classes == count_linkage(mas));
  CHECK(rep.dim_S == float_rank(mas));
  CHECK(rep.dim_S == 4);
  CHECK(rep.deficiency == 14 - 5 - 4);
  CHECK_FALSE(rep.weakly_reversible);
  CHECK(rep.conservation_basis == std::vector<RationalVector>{{1, 1, 1, 1, 1}});
}

TEST_CASE("weak reversibility without reversibility") {
  const auto rep = structure_report(fx::net("A -> B ; k = 1\nB -> C ; k = 1\nC -> A ; k = 1\n"));
  CHECK(rep.weakly_reversible);
  CHECK_FALSE(rep.reversible);
  CHECK(rep.deficiency == 0);
}

TEST_CASE("complex identity is by stoichiometry") {
  const auto mas = fx::net("A + B -> C ; k = 1\nC -> B + A ; k = 2\n");
  const auto rep = structure_report(mas);
  CHECK(rep.num_complexes == 2);
  CHECK(rep.reversible);
}

TEST_CASE("zero complex") {
  const auto mas = fx::net("0 -> A ; k = 1\nA -> 0 ; k = 2\n");
  const auto rep = structure_report(mas);
  CHECK(rep.num_complexes == 2);
  CHECK(rep.dim_S == 1);
  CHECK(rep.conservation_basis.empty());
  CHECK(ode_rhs(mas, std::vector<double>{0.5})[0] == doctest::Approx(0.0));
}

TEST_CASE("reaction rates") {
  const auto mas = fx::net("S1 + S2 -> 2 S2 ; k = 1\n");
  CHECK(reaction_rates(mas, std::vector<double>{2, 3})[0] == 6.0);
  CHECK(reaction_rates(mas, std::vector<double>{0, 3})[0] == 0.0);
  CHECK_THROWS_AS(reaction_rates(mas, std::vector<double>{-1, 3}), std::domain_error);
  CHECK_THROWS_AS(reaction_rates(mas, std::vector<double>{NAN, 3}), std::domain_error);
  CHECK(mass_action_rate(2.0, {0, 0}, std::vector<double>{0, 0}) == 2.0);  // 0^0 = 1

  const auto aurora = fx::load("aurora.crn").network.with_rates(std::vector<double>{1, 1, 1});
  CHECK(reaction_rates(aurora, std::vector<double>{1, 1}) == std::vector<double>{1, 1, 1});
}

TEST_CASE("ode right-hand side at equilibria") {
  for (double v : ode_rhs(fx::load("eg7.crn").network, fx::ones(5))) CHECK(std::abs(v) <= 1e-12);
  const auto pair = fx::net("S1 <-> S2 ; kf = 1, kr = 2\n");
  for (double v : ode_rhs(pair, std::vector<double>{2, 1})) CHECK(std::abs(v) <= 1e-12);
  const auto away = ode_rhs(pair, std::vector<double>{1, 1});
  CHECK(away[0] == 1.0);
  CHECK(away[1] == -1.0);
}

TEST_CASE("jacobian matches finite differences") {
  const auto mas = fx::load("eg7.crn").network;
  const std::vector<double> x{1.2, 0.7, 1.1, 0.9, 1.3};
  const auto jac = ode_jacobian(mas, x);
  for (std::size_t m = 0; m < 5; ++m) {
    auto xp = x, xm = x;
    xp[m] += 1e-6;
    xm[m] -= 1e-6;
    const auto fp = ode_rhs(mas, xp), fm = ode_rhs(mas, xm);
    for (std::size_t j = 0; j < 5; ++j) CHECK(jac[j * 5 + m] == doctest::Approx((fp[j] - fm[j]) / 2e-6).epsilon(1e-6));
  }
}

TEST_CASE("structural invariants on random networks") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const auto rn = fx::random_network(rng);
    const auto& mas = rn.mas;
    const auto rep = structure_report(mas);
    CHECK(rep.deficiency == static_cast<long long>(rep.num_complexes) -
                                static_cast<long long>(rep.num_linkage_classes) - static_cast<long long>(rep.dim_S));
    CHECK(rep.deficiency >= 0);
    CHECK(rep.dim_S + rep.conservation_basis.size() == mas.num_species());
    CHECK(rep.dim_S == float_rank(mas));
    CHECK(rep.num_linkage_classes == count_linkage(mas));
    if (rep.reversible) CHECK(rep.weakly_reversible);

    // w . Gamma = 0 exactly
    for (const auto& w : rep.conservation_basis)
      for (const auto& r : mas.reactions()) {
        Rational s = 0;
        const auto v = r.vector();
        for (std::size_t i = 0; i < v.size(); ++i) s += w[i] * v[i];
        CHECK(s == 0);
      }
    const auto rhs = ode_rhs(mas, rn.x_star);
    for (const auto& w : rep.conservation_basis) {
      double s = 0.0, scale = 0.0;
      for (std::size_t i = 0; i < rhs.size(); ++i) {
        s += to_double(w[i]) * rhs[i];
        scale += std::abs(to_double(w[i]) * rhs[i]);
      }
      CHECK(std::abs(s) <= 1e-12 * std::max(1.0, scale));
    }

    // permuting reactions leaves the vector field alone
    std::vector<Reaction> rs = mas.reactions();
    std::shuffle(rs.begin(), rs.end(), rng);
    const MassActionSystem perm(mas.species(), rs);
    const auto rhs2 = ode_rhs(perm, rn.x_star);
    for (std::size_t i = 0; i < rhs.size(); ++i) CHECK(rhs2[i] == doctest::Approx(rhs[i]).epsilon(1e-12));
    CHECK(structure_report(perm).deficiency == rep.deficiency);
  }
}

TEST_CASE("construction rejects malformed networks") {
  CHECK_THROWS_AS(MassActionSystem({}, {}), ModelError);
  CHECK_THROWS_AS(MassActionSystem({"A"}, {}), ModelError);
  CHECK_THROWS_AS(MassActionSystem({"A", "B"}, {{{1, 0}, {1, 0}, 1.0}}), ModelError);
  CHECK_THROWS_AS(MassActionSystem({"A", "B"}, {{{1, 0}, {0, 1}, 0.0}}), ModelError);
  CHECK_THROWS_AS(MassActionSystem({"A", "B"}, {{{1, 0}, {0, 1}, -1.0}}), ModelError);
  CHECK_THROWS_AS(MassActionSystem({"A", "B", "C"}, {{{1, 0, 0}, {0, 1, 0}, 1.0}}), ModelError);
  CHECK_THROWS_AS(MassActionSystem({"A", "A"}, {{{1, 0}, {0, 1}, 1.0}}), ModelError);
  CHECK_THROWS_AS(MassActionSystem({"A", "B"}, {{{1}, {0, 1}, 1.0}}), ModelError);
}

TEST_CASE("subsystems keep parent order") {
  const auto mas = fx::load("eg7.crn").network;
  std::vector<std::size_t> map;
  const std::vector<std::size_t> n3{11, 12, 13, 14};
  const auto sub = mas.subsystem(n3, &map);
  CHECK(map == std::vector<std::size_t>{2, 3});
  CHECK(sub.species() == std::vector<std::string>{"S3", "S4"});
  CHECK(sub.num_reactions() == 4);
  CHECK(sub.hints().empty());
}

TEST_CASE("canonical direction") {
  CHECK(canonical_direction({0, -3, 3}) == std::vector<long long>{0, 1, -1});
  CHECK(canonical_direction({2, 4}) == std::vector<long long>{1, 2});
  CHECK(canonical_direction({-1, 0}) == std::vector<long long>{1, 0});
}
