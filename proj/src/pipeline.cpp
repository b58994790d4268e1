#include "crnscope/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "crnscope/report.hpp"

namespace crnscope {

namespace {

std::string join_doubles(std::span<const double> v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
  return s;
}

std::string row(const std::string& key, const std::string& value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-21s ", key.c_str());
  return buf + value + "\n";
}

void check_equilibrium(const MassActionSystem& mas, std::span<const double> x, const Tolerance& tol) {
  if (x.size() != mas.num_species())
    throw InputError("equilibrium has " + std::to_string(x.size()) + " entries, network has " +
                     std::to_string(mas.num_species()) + " species");
  for (double v : x)
    if (!(v > 0.0) || !std::isfinite(v)) throw InputError("equilibrium entries must be positive");
  if (!is_equilibrium(mas, x, tol)) {
    const auto p = evaluate_point(mas, x);
    throw InputError("given point is not an equilibrium (residual " + format_double(p.residual_inf) +
                     "); use --solve to locate one");
  }
}

}  // namespace

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw InputError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json structure_json(const MassActionSystem& mas) {
  const auto rep = structure_report(mas);
  nlohmann::json j;
  j["species"] = mas.species();
  j["num_species"] = rep.num_species;
  j["num_reactions"] = rep.num_reactions;
  j["num_complexes"] = rep.num_complexes;
  j["num_linkage_classes"] = rep.num_linkage_classes;
  j["dimension"] = rep.dim_S;
  j["deficiency"] = rep.deficiency;
  j["weakly_reversible"] = rep.weakly_reversible;
  j["reversible"] = rep.reversible;
  auto gamma = nlohmann::json::array();
  for (std::size_t i = 0; i < rep.gamma.rows; ++i) {
    std::vector<long long> r;
    for (std::size_t c = 0; c < rep.gamma.cols; ++c) r.push_back(rep.gamma(i, c));
    gamma.push_back(r);
  }
  j["stoichiometric_matrix"] = std::move(gamma);
  auto laws = nlohmann::json::array();
  for (const auto& w : rep.conservation_basis) {
    std::vector<std::string> r;
    for (const auto& q : w) r.push_back(to_string(q));
    laws.push_back(r);
  }
  j["conservation_laws"] = std::move(laws);
  std::vector<std::string> cs;
  for (const auto& c : rep.complexes) cs.push_back(format_complex(c, mas.species()));
  j["complexes"] = cs;
  j["linkage_class_of_complex"] = rep.linkage_class;
  j["network_fingerprint"] = network_fingerprint(mas);
  return j;
}

std::string structure_text(const MassActionSystem& mas) {
  const auto rep = structure_report(mas);
  std::string s;
  std::string names;
  for (std::size_t i = 0; i < mas.num_species(); ++i) names += (i ? ", " : "") + mas.species()[i];
  s += row("species", std::to_string(rep.num_species) + "  (" + names + ")");
  s += row("reactions", std::to_string(rep.num_reactions));
  s += row("complexes", std::to_string(rep.num_complexes));
  s += row("linkage classes", std::to_string(rep.num_linkage_classes));
  s += row("dimension", std::to_string(rep.dim_S));
  s += row("deficiency", std::to_string(rep.deficiency));
  s += row("weakly reversible", rep.weakly_reversible ? "yes" : "no");
  s += row("reversible", rep.reversible ? "yes" : "no");
  if (rep.conservation_basis.empty()) s += row("conservation laws", "none");
  for (std::size_t a = 0; a < rep.conservation_basis.size(); ++a) {
    std::string w;
    for (std::size_t i = 0; i < rep.conservation_basis[a].size(); ++i)
      w += (i ? " " : "") + to_string(rep.conservation_basis[a][i]);
    s += row(a == 0 ? "conservation laws" : "", "(" + w + ")");
  }
  return s;
}

std::vector<double> resolve_equilibrium(const NetworkDocument& doc, const EquilibriumRequest& req,
                                        const std::optional<DecompositionDocument>& dcmp, const Tolerance& tol) {
  const auto& mas = doc.network;
  std::optional<std::vector<double>> x = req.explicit_x;
  if (!x && dcmp && dcmp->equilibrium) x = dcmp->equilibrium;
  if (!x && doc.equilibrium_guess) x = doc.equilibrium_guess;
  if (req.solve) {
    std::vector<double> guess = x.value_or(std::vector<double>(mas.num_species(), 1.0));
    if (guess.size() != mas.num_species()) throw InputError("initial guess has the wrong number of entries");
    try {
      auto p = find_equilibrium(mas, guess, req.levels);
      return p.x_star;
    } catch (const EquilibriumError& e) {
      throw InputError(std::string("equilibrium solve failed: ") + e.what());
    }
  }
  if (req.levels) throw InputError("--levels requires --solve");
  if (!x) throw InputError("no equilibrium given; pass --equilibrium, add an @equilibrium line, or use --solve");
  check_equilibrium(mas, *x, tol);
  return *x;
}

CertifyOutcome certify(const MassActionSystem& mas, std::span<const double> x_star,
                       const std::optional<DecompositionDocument>& dcmp, const RunConfig& cfg) {
  check_equilibrium(mas, x_star, cfg.flux);
  CertifyOutcome out;
  out.x_star.assign(x_star.begin(), x_star.end());
  auto accept = [&](int cand, TheoremVerdict v) {
    const bool pass = v.overall == Overall::pass && v.certificate;
    if (pass) {
      out.certificate = v.certificate;
      out.exit_code = kExitOk;
    }
    out.trail.emplace_back(cand, std::move(v));
    return pass;
  };

  auto finish = [&] {
    if (out.certificate)
      out.self_check = check_certificate(*out.certificate, mas, cfg.self_check_samples, cfg.seed);
    return out;
  };
  if (accept(-1, check_thm_auto(mas, x_star, cfg.flux, cfg.radius))) return finish();

  std::vector<Decomposition> cands;
  if (dcmp) {
    try {
      cands.push_back(validate_decomposition(mas, x_star, *dcmp, cfg.flux));
    } catch (const DecompositionError& e) {
      throw InputError(std::string("invalid decomposition: ") + e.what());
    }
  } else {
    cands = search_decomposition(mas, x_star, {cfg.budget, cfg.flux});
  }
  out.candidates = cands.size();
  using Check = TheoremVerdict (*)(const Decomposition&);
  const Check checks[] = {check_thm_disjoint, check_thm_shared_two_species, check_thm_shared_1d,
                          check_corollary_mixed};
  for (std::size_t c = 0; c < cands.size() && out.exit_code != kExitOk; ++c) {
    cands[c].radius = cfg.radius;
    for (auto check : checks)
      if (accept(static_cast<int>(c), check(cands[c]))) {
        out.decomposition = cands[c].document();
        break;
      }
  }
  return finish();
}

nlohmann::json certify_json(const MassActionSystem& mas, const CertifyOutcome& out) {
  nlohmann::json j;
  j["command"] = "certify";
  j["species"] = mas.species();
  j["network_fingerprint"] = network_fingerprint(mas);
  j["x_star"] = out.x_star;
  j["search_order"] = kCertifyOrder;
  j["candidates"] = out.candidates;
  auto trail = nlohmann::json::array();
  for (const auto& [cand, v] : out.trail) {
    nlohmann::json e = v;
    e["candidate"] = cand < 0 ? nlohmann::json(nullptr) : nlohmann::json(cand);
    trail.push_back(std::move(e));
  }
  j["verdicts"] = std::move(trail);
  j["result"] = out.certificate ? "pass" : "no_certificate";
  j["exit_code"] = out.exit_code;
  j["certificate"] = out.certificate ? nlohmann::json(*out.certificate) : nlohmann::json(nullptr);
  j["self_check"] = out.self_check ? nlohmann::json(*out.self_check) : nlohmann::json(nullptr);
  if (out.decomposition) j["decomposition"] = nlohmann::json::parse(print_decomposition(*out.decomposition, mas));
  return j;
}

std::string certify_text(const CertifyOutcome& out) {
  std::string s;
  s += row("x*", "(" + join_doubles(out.x_star) + ")");
  for (const auto& [cand, v] : out.trail) {
    std::string head = v.theorem_id + (cand < 0 ? "" : " [candidate " + std::to_string(cand) + "]");
    s += row(head, to_string(v.overall));
    for (const auto& c : v.conditions)
      s += row("", (c.pass ? "ok   " : "FAIL ") + c.id + (c.value ? " = " + format_double(*c.value) : ""));
    for (const auto& n : v.notes) s += row("", "note: " + n);
  }
  if (out.certificate) {
    s += row("certificate", to_string(out.certificate->kind) + " via " + out.certificate->theorem);
    if (out.self_check) s += row("self-check", out.self_check->pass ? "pass" : "FAIL");
  } else {
    s += row("certificate", "none");
  }
  return s;
}

SimulateOutcome simulate(const MassActionSystem& mas, const std::vector<std::vector<double>>& x0s,
                         const std::optional<std::vector<double>>& x_star, const LyapunovCertificate* cert,
                         const RunConfig& cfg) {
  if (cert) {
    if (cert->network_fingerprint != network_fingerprint(mas))
      throw InputError("certificate was issued for a different network (fingerprint " + cert->network_fingerprint +
                       ", network " + network_fingerprint(mas) + ")");
    if (cert->x_star.size() != mas.num_species()) throw InputError("certificate has the wrong number of species");
  }
  SimulateOutcome out;
  out.x0s = x0s;
  try {
    out.trajectories = integrate_batch(mas, x0s, cfg.t_end, cfg.ode, cert);
  } catch (const SimulationError& e) {
    throw InputError(e.what());
  }
  bool ok = true;
  for (const auto& t : out.trajectories) ok = ok && !t.halted;
  if (x_star) {
    out.convergence = verify_convergence(out.trajectories, *x_star, cfg.eps);
    ok = ok && out.convergence->all_converged();
  }
  if (cert) {
    for (const auto& t : out.trajectories) {
      out.dissipation.push_back(verify_dissipation(*cert, mas, t));
      ok = ok && out.dissipation.back().pass();
    }
  }
  out.exit_code = ok ? kExitOk : kExitNone;
  return out;
}

nlohmann::json simulate_json(const MassActionSystem& mas, const SimulateOutcome& out) {
  nlohmann::json j;
  j["command"] = "simulate";
  j["species"] = mas.species();
  j["network_fingerprint"] = network_fingerprint(mas);
  auto arr = nlohmann::json::array();
  for (std::size_t i = 0; i < out.trajectories.size(); ++i) {
    nlohmann::json t = out.trajectories[i];
    t["x0"] = out.x0s[i];
    if (i < out.dissipation.size()) t["dissipation"] = out.dissipation[i];
    arr.push_back(std::move(t));
  }
  j["trajectories"] = std::move(arr);
  if (out.convergence) j["convergence"] = *out.convergence;
  j["exit_code"] = out.exit_code;
  return j;
}

std::vector<Decomposition> decompose(const MassActionSystem& mas, std::span<const double> x_star,
                                     const RunConfig& cfg) {
  check_equilibrium(mas, x_star, cfg.flux);
  auto cands = search_decomposition(mas, x_star, {cfg.budget, cfg.flux});
  for (auto& c : cands) c.radius = cfg.radius;
  return cands;
}

std::vector<BatchEntry> certify_all(const std::filesystem::path& dir, const RunConfig& cfg, unsigned threads) {
  if (!std::filesystem::is_directory(dir)) throw InputError(dir.string() + " is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".crn") files.push_back(e.path());
  std::sort(files.begin(), files.end());

  std::vector<BatchEntry> out(files.size());
  std::atomic<std::size_t> cursor{0};
  auto work = [&] {
    for (std::size_t i; (i = cursor++) < files.size();) {
      BatchEntry& e = out[i];
      e.file = files[i].filename().string();
      try {
        const auto doc = parse_network(read_file(files[i]));
        const auto x = resolve_equilibrium(doc, {}, std::nullopt, cfg.flux);
        const auto res = certify(doc.network, x, std::nullopt, cfg);
        e.exit_code = res.exit_code;
        if (res.certificate) e.kind = to_string(res.certificate->kind);
      } catch (const ParseError& err) {
        e.exit_code = kExitInput;
        e.error = std::to_string(err.line()) + ":" + std::to_string(err.column()) + ": " + err.message();
      } catch (const std::exception& err) {
        e.exit_code = kExitInput;
        e.error = err.what();
      }
    }
  };
  if (threads == 0) threads = default_thread_count();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(files.size())));
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  return out;
}

nlohmann::json certify_all_json(const std::vector<BatchEntry>& entries) {
  nlohmann::json j;
  j["command"] = "certify-all";
  j["search_order"] = kCertifyOrder;
  auto arr = nlohmann::json::array();
  for (const auto& e : entries) {
    nlohmann::json r{{"file", e.file}, {"exit_code", e.exit_code}};
    if (!e.kind.empty()) r["certificate_kind"] = e.kind;
    if (!e.error.empty()) r["error"] = e.error;
    arr.push_back(std::move(r));
  }
  j["results"] = std::move(arr);
  return j;
}

}  // namespace crnscope
