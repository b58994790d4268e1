#include <doctest.h>

#include <algorithm>
#include <random>

#include <nlohmann/json.hpp>

#include "crnscope/decompose.hpp"
#include "crnscope/simulate.hpp"
#include "fixtures.hpp"

using namespace crnscope;

namespace {

MassActionSystem eg7() { return fx::load("eg7.crn").network; }

DecompositionDocument eg7_doc() {
  return parse_decomposition(read_file(fx::network_path("eg7.dcmp.json")), eg7(), true);
}

DecompositionDocument doc_of(std::vector<PartDeclaration> parts) { return {std::move(parts), std::nullopt}; }

const Condition* find(const TheoremVerdict& v, const std::string& id) {
  for (const auto& c : v.conditions)
    if (c.id == id) return &c;
  return nullptr;
}

bool has_failing(const TheoremVerdict& v) {
  return std::any_of(v.conditions.begin(), v.conditions.end(), [](const Condition& c) { return !c.pass; });
}

std::vector<std::size_t> iota(std::size_t a, std::size_t b) {
  std::vector<std::size_t> v;
  for (auto i = a; i < b; ++i) v.push_back(i);
  return v;
}

// N0 and N3 of the five-species example as their own network
const char* kN0N3 = R"(@species S1, S3, S4, S5
3 S3 <-> 3 S5 ; kf = 1, kr = 1
2 S1 -> 2 S3 ; k = 1
2 S3 -> S1 + S3 ; k = 1
S1 + S3 -> 2 S1 ; k = 1
S3 <-> S4 ; kf = 2, kr = 3
2 S4 <-> S3 + S4 ; kf = 1, kr = 2
)";

bool same_split(const Decomposition& d, const std::vector<std::vector<std::size_t>>& parts) {
  if (d.parts.size() != parts.size()) return false;
  for (const auto& want : parts)
    if (std::none_of(d.parts.begin(), d.parts.end(), [&](const Part& p) { return p.reactions == want; }))
      return false;
  return true;
}

}  // namespace

TEST_CASE("validate the five-species split") {
  const auto d = validate_decomposition(eg7(), fx::ones(5), eg7_doc());
  REQUIRE(d.parts.size() == 4);
  REQUIRE(d.cb_part.has_value());
  CHECK(d.parts[*d.cb_part].species == std::vector<std::size_t>{0, 2, 4});
  CHECK(d.shared_union == std::vector<std::size_t>{0, 2});
  CHECK(d.parts[1].species == std::vector<std::size_t>{0, 1});
  CHECK(d.shared[1] == std::vector<std::size_t>{0});
  CHECK(d.shared[3] == std::vector<std::size_t>{2});
  for (const auto& p : d.parts) {
    CHECK(p.x_star == fx::ones(p.species.size()));
    if (p.tag != PartTag::complex_balanced) CHECK(p.dim == 1);
  }
  CHECK(d.document().parts.size() == 4);
}

TEST_CASE("validation failures") {
  const auto mas = eg7();
  // N0 no longer complex balanced at (1,1,1)
  auto k = std::vector<double>{};
  for (const auto& r : mas.reactions()) k.push_back(r.k);
  k[2] = 1.5;
  CHECK_THROWS_AS(validate_decomposition(mas.with_rates(k), fx::ones(5), eg7_doc()), DecompositionError);

  auto overlap = eg7_doc();
  overlap.parts[1].reaction_indices.push_back(8);
  CHECK_THROWS_AS(validate_decomposition(mas, fx::ones(5), overlap), DecompositionError);

  auto missing = eg7_doc();
  missing.parts[3].reaction_indices.pop_back();
  CHECK_THROWS_AS(validate_decomposition(mas, fx::ones(5), missing), DecompositionError);

  // not an equilibrium of the parts
  CHECK_THROWS_AS(validate_decomposition(mas, std::vector<double>{1, 2, 1, 1, 1}, eg7_doc()), DecompositionError);

  // wrong tags
  auto tagged = eg7_doc();
  tagged.parts[1].tag = PartTag::complex_balanced;
  CHECK_THROWS_AS(validate_decomposition(mas, fx::ones(5), tagged), DecompositionError);
  tagged = eg7_doc();
  tagged.parts[0].tag = PartTag::one_dim;
  CHECK_THROWS_AS(validate_decomposition(mas, fx::ones(5), tagged), DecompositionError);
}

TEST_CASE("search finds the known split") {
  const auto mas = eg7();
  const auto found = search_decomposition(mas, fx::ones(5));
  REQUIRE_FALSE(found.empty());
  const bool present = std::any_of(found.begin(), found.end(), [](const Decomposition& d) {
    return same_split(d, {iota(0, 5), iota(5, 8), iota(8, 11), iota(11, 15)});
  });
  CHECK(present);
  for (const auto& d : found) CHECK_NOTHROW(validate_decomposition(mas, fx::ones(5), d.document()));
}

TEST_CASE("search on cycles and balanced networks") {
  for (std::size_t n = 3; n <= 8; ++n) {
    CAPTURE(n);
    const auto mas = fx::cycle(n);
    const auto found = search_decomposition(mas, fx::ones(n));
    std::vector<std::vector<std::size_t>> pairs;
    for (std::size_t p = 0; p < n; ++p) pairs.push_back(iota(3 * p, 3 * p + 3));
    CHECK(std::any_of(found.begin(), found.end(), [&](const Decomposition& d) { return same_split(d, pairs); }));
    for (const auto& d : found) CHECK_NOTHROW(validate_decomposition(mas, fx::ones(n), d.document()));
  }
  const auto cb = fx::net("A + B <-> C ; kf = 1, kr = 1\nC <-> 2 D ; kf = 1, kr = 1\n");
  const auto found = search_decomposition(cb, fx::ones(4));
  REQUIRE_FALSE(found.empty());
  CHECK(found[0].parts.size() == 1);
  CHECK(found[0].parts[0].tag == PartTag::complex_balanced);
}

TEST_CASE("disjoint blocks") {
  const auto mas = fx::net("S1 <-> S2 ; kf = 1, kr = 1\nS3 <-> S4 ; kf = 1, kr = 2\n");
  const std::vector<double> xs{1, 1, 2, 1};
  const auto d = validate_decomposition(
      mas, xs, doc_of({{PartTag::complex_balanced, {0, 1}, "N0"}, {PartTag::one_dim, {2, 3}, "N1"}}));
  const auto v = check_thm_disjoint(d);
  CHECK(v.applicable);
  CHECK(v.overall == Overall::pass);
  REQUIRE(v.certificate.has_value());
  CHECK(v.certificate->kind == CertificateKind::composite_thm33);
  const auto* c = find(v, "N1:omega_grad_h");
  REQUIRE(c);
  CHECK(*c->value == doctest::Approx(-3.0));

  const auto bad = fx::net("S1 <-> S2 ; kf = 1, kr = 1\nS3 + 3 S4 -> 4 S4 ; k = 1\nS4 -> S3 ; k = 1\n");
  const auto db = validate_decomposition(
      bad, fx::ones(4), doc_of({{PartTag::complex_balanced, {0, 1}, "N0"}, {PartTag::one_dim, {2, 3}, "N1"}}));
  const auto vb = check_thm_disjoint(db);
  CHECK(vb.applicable);
  CHECK(vb.overall == Overall::fail);
  CHECK_FALSE(vb.certificate.has_value());

  const auto shared = check_thm_disjoint(validate_decomposition(eg7(), fx::ones(5), eg7_doc()));
  CHECK_FALSE(shared.applicable);
  CHECK(shared.overall == Overall::not_applicable);
}

TEST_CASE("shared 1-D parts") {
  const auto mas = fx::net(kN0N3);
  const auto d = validate_decomposition(
      mas, fx::ones(4), doc_of({{PartTag::complex_balanced, iota(0, 5), "N0"}, {PartTag::one_dim, iota(5, 9), "N3"}}));
  const auto v = check_thm_shared_1d(d);
  CHECK(v.overall == Overall::pass);
  REQUIRE(find(v, "N3:omega_grad_u"));
  CHECK(*find(v, "N3:omega_grad_u")->value == doctest::Approx(0.75).epsilon(1e-9));
  REQUIRE(find(v, "N3:mirror"));
  CHECK(find(v, "N3:mirror")->pass);
  REQUIRE(v.certificate.has_value());
  CHECK(v.certificate->kind == CertificateKind::composite_thm34);

  // drop S4 -> S3; 2 S4 -> S3 + S4 at rate 4 keeps x* balanced
  const auto nomirror = fx::net(R"(@species S1, S3, S4, S5
3 S3 <-> 3 S5 ; kf = 1, kr = 1
2 S1 -> 2 S3 ; k = 1
2 S3 -> S1 + S3 ; k = 1
S1 + S3 -> 2 S1 ; k = 1
S3 -> S4 ; k = 2
2 S4 -> S3 + S4 ; k = 4
S3 + S4 -> 2 S4 ; k = 2
)");
  const auto dm = validate_decomposition(nomirror, fx::ones(4),
                                         doc_of({{PartTag::complex_balanced, iota(0, 5), "N0"},
                                                 {PartTag::one_dim, iota(5, 8), "N3"}}));
  const auto vm = check_thm_shared_1d(dm);
  CHECK(vm.overall == Overall::fail);
  REQUIRE(find(vm, "N3:mirror"));
  CHECK_FALSE(find(vm, "N3:mirror")->pass);

  const auto shift2 = fx::net(R"(@species S1, S3, S4, S5
3 S3 <-> 3 S5 ; kf = 1, kr = 1
2 S1 -> 2 S3 ; k = 1
2 S3 -> S1 + S3 ; k = 1
S1 + S3 -> 2 S1 ; k = 1
2 S3 <-> S4 ; kf = 1, kr = 1
)");
  const auto ds = validate_decomposition(shift2, fx::ones(4),
                                         doc_of({{PartTag::complex_balanced, iota(0, 5), "N0"},
                                                 {PartTag::one_dim, iota(5, 7), "N3"}}));
  CHECK(check_thm_shared_1d(ds).overall == Overall::not_applicable);

  // the full split has two-species parts sharing S2 outside the balanced part
  CHECK(check_thm_shared_1d(validate_decomposition(eg7(), fx::ones(5), eg7_doc())).overall != Overall::pass);
}

TEST_CASE("shared two-species parts") {
  // N3: reactant coefficient of S4 is 1 on one reaction and 2 on the other
  auto doc = eg7_doc();
  doc.parts[3].tag = PartTag::two_species;
  CHECK_THROWS_AS(validate_decomposition(eg7(), fx::ones(5), doc), DecompositionError);

  const auto d = validate_decomposition(eg7(), fx::ones(5), eg7_doc());
  const auto v = check_thm_shared_two_species(d);
  CHECK_FALSE(v.applicable);
  CHECK(v.overall == Overall::not_applicable);
  CHECK(std::any_of(v.notes.begin(), v.notes.end(), [](const std::string& n) { return n.rfind("N3", 0) == 0; }));
  CHECK_FALSE(v.certificate.has_value());
  REQUIRE(find(v, "N1~N2:S2"));
  CHECK(find(v, "N1~N2:S2")->pass);
  REQUIRE(find(v, "N2~N3:S3"));
  CHECK_FALSE(find(v, "N2~N3:S3")->pass);

  // N0, N1, N2 only: the S2 pair is proportional with c = 1
  const auto sub = eg7().subsystem(iota(0, 11));  // S4 drops out
  REQUIRE(sub.num_species() == 4);
  const auto d3 = validate_decomposition(sub, fx::ones(4),
                                         doc_of({{PartTag::complex_balanced, iota(0, 5), "N0"},
                                                 {PartTag::two_species, iota(5, 8), "N1"},
                                                 {PartTag::two_species, iota(8, 11), "N2"}}));
  const auto v3 = check_thm_shared_two_species(d3);
  CHECK(v3.overall == Overall::pass);
  REQUIRE(v3.certificate.has_value());
  CHECK(v3.certificate->kind == CertificateKind::composite_thm46);

  // break proportionality while staying balanced: kf + k = kr
  std::vector<double> k;
  for (const auto& r : sub.reactions()) k.push_back(r.k);
  k[5] = 0.5, k[6] = 2, k[7] = 1.5;
  const auto broken = validate_decomposition(sub.with_rates(k), fx::ones(4), d3.document());
  const auto vb = check_thm_shared_two_species(broken);
  CHECK(vb.overall == Overall::fail);
  REQUIRE(find(vb, "N1~N2:S2"));
  CHECK_FALSE(find(vb, "N1~N2:S2")->pass);
}

TEST_CASE("mixed corollary") {
  const auto d = validate_decomposition(eg7(), fx::ones(5), eg7_doc());
  const auto v = check_corollary_mixed(d);
  CHECK(v.overall == Overall::pass);
  REQUIRE(v.certificate.has_value());
  CHECK(v.certificate->kind == CertificateKind::composite_cor47);
  REQUIRE(find(v, "N3:omega_grad_u"));
  CHECK(*find(v, "N3:omega_grad_u")->value == doctest::Approx(0.75).epsilon(1e-9));

  std::vector<double> k;
  for (const auto& r : eg7().reactions()) k.push_back(r.k);
  k[5] = 0.5, k[6] = 2, k[7] = 1.5;
  const auto broken = validate_decomposition(eg7().with_rates(k), fx::ones(5), eg7_doc());
  const auto vb = check_corollary_mixed(broken);
  CHECK(vb.overall == Overall::not_applicable);
  CHECK_FALSE(vb.certificate.has_value());

  const auto cb = fx::net("A + B <-> C ; kf = 1, kr = 1\n");
  const auto dc = validate_decomposition(cb, fx::ones(3), doc_of({{PartTag::complex_balanced, {0, 1}, "N0"}}));
  const auto vc = check_corollary_mixed(dc);
  CHECK(vc.overall == Overall::pass);
  CHECK(vc.certificate.has_value());
}

TEST_CASE("autocatalytic structure") {
  const auto a4 = is_autocatalytic(fx::load("auto4.crn").network);
  CHECK(a4.autocatalytic);
  CHECK(a4.pairs.size() == 3);
  CHECK_FALSE(is_autocatalytic(eg7()).autocatalytic);
  for (std::size_t n = 3; n <= 8; ++n) {
    const auto c = is_autocatalytic(fx::cycle(n));
    CHECK(c.autocatalytic);
    CHECK(c.pairs.size() == n);
  }
  // no monomolecular reversible pair
  const auto nomono = is_autocatalytic(fx::net("S1 + S2 -> 2 S2 ; k = 1\nS1 + S2 -> 2 S1 ; k = 1\n"));
  CHECK_FALSE(nomono.autocatalytic);
  CHECK(nomono.pairs.size() == 1);
  // 2 S1 -> 2 S2 is not of the autocatalytic form
  CHECK_FALSE(is_autocatalytic(fx::net("S1 <-> S2 ; kf = 1, kr = 1\n2 S1 -> 2 S2 ; k = 1\n")).autocatalytic);
}

TEST_CASE("autocatalytic theorem") {
  const auto doc = fx::load("auto4.crn");
  const auto v = check_thm_auto(doc.network, *doc.equilibrium_guess);
  CHECK(v.overall == Overall::pass);
  REQUIRE(v.certificate.has_value());
  CHECK(v.certificate->kind == CertificateKind::composite_thm52);
  const double s = (std::sqrt(3.0) - 1) / 2;
  CHECK((*doc.equilibrium_guess)[0] == doctest::Approx(s).epsilon(1e-15));

  for (std::size_t n = 3; n <= 8; ++n) {
    CAPTURE(n);
    const auto vc = check_thm_auto(fx::cycle(n), fx::ones(n));
    CHECK(vc.overall == Overall::pass);
    REQUIRE(find(vc, "pair_balance_equivalence"));
    CHECK(find(vc, "pair_balance_equivalence")->pass);
  }

  const auto broken = fx::net(fx::cycle_text(4));
  std::vector<double> k;
  for (const auto& r : broken.reactions()) k.push_back(r.k);
  k[0] = 1.5;
  const auto vb = check_thm_auto(broken.with_rates(k), fx::ones(4));
  CHECK(vb.overall == Overall::fail);
  REQUIRE(find(vb, "(S1,S2):balanced"));
  CHECK_FALSE(find(vb, "(S1,S2):balanced")->pass);
  for (const char* other : {"(S2,S3):balanced", "(S3,S4):balanced", "(S1,S4):balanced"}) {
    REQUIRE(find(vb, other));
    CHECK(find(vb, other)->pass);
  }

  CHECK(check_thm_auto(eg7(), fx::ones(5)).overall == Overall::not_applicable);
}

TEST_CASE("pair balance matches the full network") {
  std::mt19937_64 rng(77);
  std::size_t agree_true = 0, agree_false = 0;
  for (int t = 0; t < 200; ++t) {
    const auto rn = fx::random_autocatalytic(rng, t % 2 == 0);
    const auto cmp = compare_pair_balance(rn.mas, rn.x_star);
    CHECK(cmp.agree());
    CHECK(cmp.full_network == fx::oracle_rv_balanced(rn.mas, rn.x_star));
    (cmp.full_network ? agree_true : agree_false)++;
  }
  CHECK(agree_true > 20);
  CHECK(agree_false > 20);
}

TEST_CASE("verdicts do not depend on order or names") {
  const auto mas = eg7();
  std::mt19937_64 rng(4);
  std::vector<std::size_t> perm = iota(0, mas.num_reactions());
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::size_t> where(perm.size());
  std::vector<Reaction> rs;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    rs.push_back(mas.reaction(perm[i]));
    where[perm[i]] = i;
  }
  std::vector<std::string> names;
  for (const auto& s : mas.species()) names.push_back("X_" + s);
  const MassActionSystem other(names, rs);
  auto doc = eg7_doc();
  for (auto& p : doc.parts) {
    for (auto& i : p.reaction_indices) i = where[i];
    std::sort(p.reaction_indices.begin(), p.reaction_indices.end());
  }
  const auto a = validate_decomposition(mas, fx::ones(5), eg7_doc());
  const auto b = validate_decomposition(other, fx::ones(5), doc);
  for (auto fn : {check_thm_disjoint, check_thm_shared_1d, check_thm_shared_two_species, check_corollary_mixed}) {
    const auto va = fn(a), vb = fn(b);
    CHECK(va.overall == vb.overall);
    REQUIRE(va.conditions.size() == vb.conditions.size());
    for (std::size_t i = 0; i < va.conditions.size(); ++i) {
      CHECK(va.conditions[i].pass == vb.conditions[i].pass);
      if (va.conditions[i].value && std::isfinite(*va.conditions[i].value))
        CHECK(*va.conditions[i].value == doctest::Approx(*vb.conditions[i].value));
      else
        CHECK(va.conditions[i].value == vb.conditions[i].value);
    }
    if (va.certificate) {
      const std::vector<double> x{1.05, 0.95, 1.0, 1.02, 0.97};
      CHECK(va.certificate->evaluate(x) == doctest::Approx(vb.certificate->evaluate(x)).epsilon(1e-10));
    }
  }

  const auto auto4 = fx::load("auto4.crn");
  auto ars = auto4.network.reactions();
  std::reverse(ars.begin(), ars.end());
  const MassActionSystem rev(auto4.network.species(), ars);
  CHECK(check_thm_auto(rev, *auto4.equilibrium_guess).overall == Overall::pass);
}

TEST_CASE("passing verdicts are dissipative nearby") {
  const auto mas = eg7();
  const auto v = check_corollary_mixed(validate_decomposition(mas, fx::ones(5), eg7_doc()));
  REQUIRE(v.certificate.has_value());
  for (const auto& x : sample_perturbations(fx::ones(5), stoichiometric_basis(mas), 0.1, 50, 9))
    CHECK(dissipation_check(*v.certificate, mas, x) <= 0.0);
  const auto a4 = fx::load("auto4.crn");
  const auto va = check_thm_auto(a4.network, *a4.equilibrium_guess);
  REQUIRE(va.certificate.has_value());
  for (const auto& x : sample_perturbations(*a4.equilibrium_guess, stoichiometric_basis(a4.network), 0.1, 50, 9))
    CHECK(dissipation_check(*va.certificate, a4.network, x) <= 0.0);
}

TEST_CASE("verdict json") {
  const auto v = check_corollary_mixed(validate_decomposition(eg7(), fx::ones(5), eg7_doc()));
  const nlohmann::json j = v;
  CHECK(j["theorem"] == "cor_mixed");
  CHECK(j["overall"] == "pass");
  CHECK(j["conditions"].is_array());
  CHECK_FALSE(has_failing(v));
}
