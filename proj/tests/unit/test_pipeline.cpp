#include <doctest.h>

#include <filesystem>

#include "crnscope/pipeline.hpp"
#include "fixtures.hpp"

using namespace crnscope;

namespace {

DecompositionDocument eg7_doc(const MassActionSystem& mas) {
  return parse_decomposition(read_file(fx::network_path("eg7.dcmp.json")), mas, true);
}

}  // namespace

TEST_CASE("structure reports") {
  auto j = structure_json(fx::load("aurora.crn").network);
  CHECK(j["deficiency"] == 1);
  CHECK(j["species"] == nlohmann::json({"E", "EP"}));
  j = structure_json(fx::load("example2_1.crn").network);
  CHECK(j["dimension"] == 4);
  CHECK(j["deficiency"] == 5);
  CHECK(nlohmann::json::parse(emit_canonical(j))["schema_version"] == 1);
  const auto text = structure_text(fx::load("aurora.crn").network);
  CHECK(text.find("deficiency") != std::string::npos);
  CHECK(text == structure_text(fx::load("aurora.crn").network));
}

TEST_CASE("equilibrium resolution") {
  const auto doc = fx::load("eg7.crn");
  const Tolerance tol;
  CHECK(resolve_equilibrium(doc, {}, std::nullopt, tol) == fx::ones(5));

  auto dcmp = eg7_doc(doc.network);
  dcmp.equilibrium = fx::ones(5);
  CHECK(resolve_equilibrium(doc, {}, dcmp, tol) == fx::ones(5));

  EquilibriumRequest bad;
  bad.explicit_x = std::vector<double>{1, 2, 1, 1, 1};
  CHECK_THROWS_AS(resolve_equilibrium(doc, bad, std::nullopt, tol), InputError);
  bad.explicit_x = std::vector<double>{1, 1};
  CHECK_THROWS_AS(resolve_equilibrium(doc, bad, std::nullopt, tol), InputError);

  const auto bare = fx::load("example2_1.crn");
  CHECK_THROWS_AS(resolve_equilibrium(bare, {}, std::nullopt, tol), InputError);

  EquilibriumRequest solve;
  solve.solve = true;
  solve.levels = std::vector<double>{3, 2, 2};
  solve.explicit_x = std::vector<double>{1.2, 0.8, 1.1, 0.9, 1.0};
  const auto x = resolve_equilibrium(doc, solve, std::nullopt, tol);
  for (double v : x) CHECK(v == doctest::Approx(1.0).epsilon(1e-9));

  EquilibriumRequest levels_only;
  levels_only.levels = std::vector<double>{3, 2, 2};
  CHECK_THROWS_AS(resolve_equilibrium(doc, levels_only, std::nullopt, tol), InputError);
}

TEST_CASE("certify order and outcomes") {
  const auto doc = fx::load("eg7.crn");
  const auto out = certify(doc.network, fx::ones(5), eg7_doc(doc.network), RunConfig{});
  CHECK(out.exit_code == kExitOk);
  REQUIRE(out.certificate.has_value());
  CHECK(out.certificate->kind == CertificateKind::composite_cor47);
  REQUIRE(out.self_check.has_value());
  CHECK(out.self_check->pass);
  // thm_auto on the whole network, then the four decomposition theorems in order
  REQUIRE(out.trail.size() == 5);
  CHECK(out.trail[0].first == -1);
  for (std::size_t i = 0; i < 5; ++i) CHECK(out.trail[i].second.theorem_id == kCertifyOrder[i]);
  for (std::size_t i = 0; i < 4; ++i) CHECK(out.trail[i].second.overall != Overall::pass);
  CHECK(out.certificate->side_conditions.size() == out.trail.back().second.conditions.size());

  const auto autod = certify(doc.network, fx::ones(5), std::nullopt, RunConfig{});
  CHECK(autod.exit_code == kExitOk);
  CHECK(autod.candidates > 0);
  REQUIRE(autod.decomposition.has_value());

  const auto cyc = certify(fx::cycle(5), fx::ones(5), std::nullopt, RunConfig{});
  CHECK(cyc.exit_code == kExitOk);
  CHECK(cyc.certificate->kind == CertificateKind::composite_thm52);
  CHECK(cyc.trail.size() == 1);

  // balanced at (1,1) but the 1-D condition has the wrong sign
  const auto bad = fx::net("S1 + 3 S2 -> 4 S2 ; k = 1\nS2 -> S1 ; k = 1\n");
  const auto none = certify(bad, fx::ones(2), std::nullopt, RunConfig{});
  CHECK(none.exit_code == kExitNone);
  CHECK_FALSE(none.certificate.has_value());
  CHECK_FALSE(none.trail.empty());
  const auto j = certify_json(bad, none);
  CHECK(j["result"] == "no_certificate");
  CHECK(j["exit_code"] == 1);
  CHECK(j["certificate"].is_null());

  CHECK_THROWS_AS(certify(bad, std::vector<double>{1, 2}, std::nullopt, RunConfig{}), InputError);
}

TEST_CASE("reports are deterministic") {
  const auto doc = fx::load("eg7.crn");
  const auto a = emit_canonical(certify_json(doc.network, certify(doc.network, fx::ones(5), std::nullopt, RunConfig{})));
  const auto b = emit_canonical(certify_json(doc.network, certify(doc.network, fx::ones(5), std::nullopt, RunConfig{})));
  CHECK(a == b);
  const auto j = nlohmann::json::parse(a);
  CHECK(j["schema_version"] == 1);
  CHECK(j["search_order"] == nlohmann::json(kCertifyOrder));
  CHECK(j["network_fingerprint"] == network_fingerprint(doc.network));
  CHECK(j["result"] == "pass");
  CHECK(certify_text(certify(doc.network, fx::ones(5), std::nullopt, RunConfig{})).find("composite_cor47") !=
        std::string::npos);

  RunConfig cfg;
  cfg.t_end = 20;
  const auto x0s = sample_perturbations(fx::ones(5), stoichiometric_basis(doc.network), 0.1, 4, 3);
  const auto s1 = simulate_json(doc.network, simulate(doc.network, x0s, fx::ones(5), nullptr, cfg)).dump();
  const auto s2 = simulate_json(doc.network, simulate(doc.network, x0s, fx::ones(5), nullptr, cfg)).dump();
  CHECK(s1 == s2);
}

TEST_CASE("simulate refuses a foreign certificate") {
  const auto eg7 = fx::load("eg7.crn").network;
  const auto cyc = certify(fx::cycle(3), fx::ones(3), std::nullopt, RunConfig{});
  REQUIRE(cyc.certificate.has_value());
  CHECK_THROWS_AS(simulate(eg7, {fx::ones(5)}, fx::ones(5), &*cyc.certificate, RunConfig{}), InputError);

  const auto out = certify(eg7, fx::ones(5), eg7_doc(eg7), RunConfig{});
  RunConfig cfg;
  const auto x0s = sample_perturbations(fx::ones(5), stoichiometric_basis(eg7), 0.1, 5, 1);
  const auto sim = simulate(eg7, x0s, fx::ones(5), &*out.certificate, cfg);
  CHECK(sim.exit_code == kExitOk);
  REQUIRE(sim.convergence.has_value());
  CHECK(sim.convergence->all_converged());
  CHECK(sim.dissipation.size() == 5);
}

TEST_CASE("decompose and batch") {
  const auto eg7 = fx::load("eg7.crn").network;
  CHECK_FALSE(decompose(eg7, fx::ones(5), RunConfig{}).empty());

  const auto entries = certify_all(CRNSCOPE_NETWORK_DIR, RunConfig{}, 1);
  REQUIRE(entries.size() >= 10);
  for (std::size_t i = 1; i < entries.size(); ++i) CHECK(entries[i - 1].file < entries[i].file);
  for (const auto& e : entries) {
    CAPTURE(e.file);
    if (e.file == "example2_1.crn") {
      CHECK(e.exit_code == kExitInput);
      CHECK_FALSE(e.error.empty());
    } else {
      CHECK(e.exit_code == kExitOk);
      CHECK_FALSE(e.kind.empty());
    }
  }
  CHECK(certify_all_json(entries).dump() == certify_all_json(certify_all(CRNSCOPE_NETWORK_DIR, RunConfig{}, 3)).dump());
  CHECK_THROWS(certify_all("/nonexistent/dir", RunConfig{}, 1));
}
