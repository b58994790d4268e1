// crnscope: structural analysis, Lyapunov certificates and simulation for
// mass-action reaction networks.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "crnscope/pipeline.hpp"
#include "crnscope/report.hpp"

using namespace crnscope;
namespace fs = std::filesystem;

namespace {

struct Globals {
  double tol_flux = 1e-12;
  double tol_ode = 1e-9;
  double radius = 0.1;
  std::uint64_t seed = 1;
  double t_end = 50.0;
  double eps = 1e-4;
  std::string format = "json";
  std::string out;
};

std::vector<double> parse_list(const std::string& s, const char* what) {
  std::vector<double> v;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t comma = std::min(s.find(',', pos), s.size());
    const std::string item = s.substr(pos, comma - pos);
    std::size_t used = 0;
    double d = 0.0;
    try {
      d = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
    if (item.empty() || used != item.size()) throw InputError(std::string("bad number in ") + what + ": '" + item + "'");
    v.push_back(d);
    pos = comma + 1;
  }
  return v;
}

RunConfig config(const Globals& g) {
  if (!(g.tol_flux > 0) || !(g.tol_ode > 0)) throw InputError("tolerances must be positive");
  if (!(g.radius > 0) || !(g.radius < 1)) throw InputError("--radius must lie in (0, 1)");
  if (!(g.t_end > 0)) throw InputError("--t-end must be positive");
  RunConfig cfg;
  cfg.flux.abs = g.tol_flux;
  cfg.ode.abs_tol = cfg.ode.rel_tol = g.tol_ode;
  cfg.radius = g.radius;
  cfg.seed = g.seed;
  cfg.t_end = g.t_end;
  cfg.eps = g.eps;
  return cfg;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write " + path);
  f << text;
}

void emit(const Globals& g, const nlohmann::json& j, const std::string& text) {
  write_text(g.out, g.format == "text" ? text : emit_canonical(j));
}

NetworkDocument load_network(const std::string& path) { return parse_network(read_file(path)); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stability analysis for mass-action reaction networks"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--tol-flux", g.tol_flux, "absolute flux tolerance for balance checks")->capture_default_str();
  app.add_option("--tol-ode", g.tol_ode, "absolute and relative integrator tolerance")->capture_default_str();
  app.add_option("--radius", g.radius, "relative neighborhood radius")->capture_default_str();
  app.add_option("--seed", g.seed, "seed for perturbation sampling")->capture_default_str();
  app.add_option("--t-end", g.t_end, "integration horizon")->capture_default_str();
  app.add_option("--format", g.format, "output format")->check(CLI::IsMember({"json", "text"}))->capture_default_str();
  app.add_option("--out", g.out, "output file (decompose: output directory)");

  std::string network;
  std::string equilibrium, levels, decomposition_file, certificate_file, csv_path, dir;
  bool solve = false, auto_search = false;
  std::vector<std::string> x0_list;
  std::vector<double> perturb;

  auto* analyze = app.add_subcommand("analyze", "structural report");
  analyze->add_option("network", network)->required();

  auto add_equilibrium = [&](CLI::App* sub) {
    sub->add_option("--equilibrium", equilibrium, "comma-separated x*");
    sub->add_flag("--solve", solve, "locate x* by Newton from the given point or all ones");
    sub->add_option("--levels", levels, "comma-separated conservation levels for --solve");
  };

  auto* cert = app.add_subcommand("certify", "search for a Lyapunov certificate");
  cert->add_option("network", network)->required();
  auto* dopt = cert->add_option("--decomposition", decomposition_file, ".dcmp.json file");
  cert->add_flag("--auto", auto_search, "search decompositions automatically (default)")->excludes(dopt);
  add_equilibrium(cert);

  auto* sim = app.add_subcommand("simulate", "integrate the mass-action ODE");
  sim->add_option("network", network)->required();
  auto* xo = sim->add_option("--x0", x0_list, "comma-separated initial state (repeatable)");
  sim->add_option("--perturb", perturb, "RADIUS COUNT: seeded perturbations of x*")->expected(2)->excludes(xo);
  sim->add_option("--certificate", certificate_file, "certificate JSON to check along trajectories");
  sim->add_option("--csv", csv_path, "CSV output (a prefix when there are several trajectories)");
  sim->add_option("--eps", g.eps, "convergence threshold")->capture_default_str();
  add_equilibrium(sim);

  auto* dec = app.add_subcommand("decompose", "search decompositions");
  dec->add_option("network", network)->required();
  add_equilibrium(dec);

  auto* all = app.add_subcommand("certify-all", "certify every .crn file in a directory");
  all->add_option("dir", dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInput;
  }

  try {
    const RunConfig cfg = config(g);
    EquilibriumRequest req;
    if (!equilibrium.empty()) req.explicit_x = parse_list(equilibrium, "--equilibrium");
    if (!levels.empty()) req.levels = parse_list(levels, "--levels");
    req.solve = solve;

    if (analyze->parsed()) {
      const auto doc = load_network(network);
      nlohmann::json j = structure_json(doc.network);
      j["command"] = "analyze";
      emit(g, j, structure_text(doc.network));
      return kExitOk;
    }
    if (cert->parsed()) {
      const auto doc = load_network(network);
      std::optional<DecompositionDocument> dcmp;
      if (!decomposition_file.empty()) dcmp = parse_decomposition(read_file(decomposition_file), doc.network, true);
      const auto x = resolve_equilibrium(doc, req, dcmp, cfg.flux);
      const auto res = certify(doc.network, x, dcmp, cfg);
      emit(g, certify_json(doc.network, res), certify_text(res));
      return res.exit_code;
    }
    if (sim->parsed()) {
      const auto doc = load_network(network);
      std::optional<LyapunovCertificate> certificate;
      if (!certificate_file.empty()) {
        try {
          auto j = nlohmann::json::parse(read_file(certificate_file));
          // the full output of `certify` works too
          if (j.is_object() && j.contains("command") && j["command"] == "certify") {
            if (j["certificate"].is_null()) throw InputError("certify output holds no certificate");
            j = j["certificate"];
          }
          certificate = certificate_from_json(j);
        } catch (const std::exception& e) {
          throw InputError(std::string("bad certificate file: ") + e.what());
        }
      }
      std::vector<std::vector<double>> x0s;
      std::optional<std::vector<double>> x_star;
      if (!perturb.empty()) {
        x_star = resolve_equilibrium(doc, req, std::nullopt, cfg.flux);
        if (!(perturb[1] >= 1) || perturb[1] != static_cast<double>(static_cast<std::size_t>(perturb[1])))
          throw InputError("--perturb COUNT must be a positive integer");
        try {
          x0s = sample_perturbations(*x_star, stoichiometric_basis(doc.network), perturb[0],
                                     static_cast<std::size_t>(perturb[1]), cfg.seed);
        } catch (const SimulationError& e) {
          throw InputError(e.what());
        }
      } else {
        if (x0_list.empty()) throw InputError("simulate needs --x0 or --perturb");
        for (const auto& s : x0_list) x0s.push_back(parse_list(s, "--x0"));
        if (req.explicit_x || req.solve) x_star = resolve_equilibrium(doc, req, std::nullopt, cfg.flux);
      }
      if (certificate && !x_star) x_star = certificate->x_star;
      const auto res = simulate(doc.network, x0s, x_star, certificate ? &*certificate : nullptr, cfg);
      if (!csv_path.empty()) {
        if (res.trajectories.size() == 1) {
          write_text(csv_path, trajectory_csv(res.trajectories[0]));
        } else {
          for (std::size_t i = 0; i < res.trajectories.size(); ++i) {
            char suffix[32];
            std::snprintf(suffix, sizeof suffix, "_%03zu.csv", i);
            write_text(csv_path + suffix, trajectory_csv(res.trajectories[i]));
          }
        }
      }
      std::string text;
      for (std::size_t i = 0; i < res.trajectories.size(); ++i) {
        const auto& t = res.trajectories[i];
        text += "trajectory " + std::to_string(i) + ": t = " + format_double(t.times.back()) +
                (t.halted ? " (halted: " + t.halt_reason + ")" : "");
        if (res.convergence) {
          const auto& e = res.convergence->entries[i];
          text += e.converged ? ", converged" : ", not converged";
          text += ", |x - x*| = " + format_double(e.final_distance);
        }
        if (i < res.dissipation.size()) text += res.dissipation[i].pass() ? ", f decreasing" : ", f NOT decreasing";
        text += "\n";
      }
      emit(g, simulate_json(doc.network, res), text);
      return res.exit_code;
    }
    if (dec->parsed()) {
      const auto doc = load_network(network);
      const auto x = resolve_equilibrium(doc, req, std::nullopt, cfg.flux);
      const auto cands = decompose(doc.network, x, cfg);
      nlohmann::json j;
      j["command"] = "decompose";
      j["x_star"] = x;
      auto arr = nlohmann::json::array();
      std::string text;
      const std::string stem = fs::path(network).stem().string();
      for (std::size_t i = 0; i < cands.size(); ++i) {
        auto body = print_decomposition(cands[i].document(), doc.network);
        nlohmann::json e = cands[i];
        if (!g.out.empty()) {
          fs::create_directories(g.out);
          const auto path = fs::path(g.out) / (stem + "." + std::to_string(i) + ".dcmp.json");
          std::ofstream f(path, std::ios::binary);
          if (!f) throw InputError("cannot write " + path.string());
          f << body;
          e["file"] = path.filename().string();
        }
        arr.push_back(std::move(e));
        text += "candidate " + std::to_string(i) + ":";
        for (const auto& p : cands[i].parts) text += " " + p.label + "[" + to_string(p.tag) + "]";
        text += "\n";
      }
      j["candidates"] = std::move(arr);
      if (cands.empty()) text = "no decomposition found\n";
      std::cout << (g.format == "text" ? text : emit_canonical(j));
      return cands.empty() ? kExitNone : kExitOk;
    }
    if (all->parsed()) {
      const auto entries = certify_all(dir, cfg);
      std::string text;
      int rc = kExitOk;
      for (const auto& e : entries) {
        text += e.file + ": " +
                (e.exit_code == kExitOk ? e.kind : e.exit_code == kExitNone ? "no certificate" : "error: " + e.error) +
                "\n";
        rc = std::max(rc, e.exit_code);
      }
      emit(g, certify_all_json(entries), text);
      return rc;
    }
  } catch (const ParseError& e) {
    std::cerr << network << ":" << e.line() << ":" << e.column() << ": error: " << e.message() << "\n";
    return kExitInput;
  } catch (const DecompositionFormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}
