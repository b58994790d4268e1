#pragma once

// Orchestration shared by the command-line tool and the Python module.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crnscope/balance.hpp"
#include "crnscope/decompose.hpp"
#include "crnscope/lyapunov.hpp"
#include "crnscope/netparse.hpp"
#include "crnscope/simulate.hpp"

namespace crnscope {

/// Bad user input (missing equilibrium, inconsistent files, ...): exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum ExitCode : int { kExitOk = 0, kExitNone = 1, kExitInput = 2 };

struct RunConfig {
  Tolerance flux;
  IntegrateOptions ode;
  double radius = 0.1;
  std::uint64_t seed = 1;
  double t_end = 50.0;
  double eps = 1e-4;
  std::size_t budget = 512;
  std::size_t self_check_samples = 100;
};

nlohmann::json structure_json(const MassActionSystem& mas);
std::string structure_text(const MassActionSystem& mas);

struct EquilibriumRequest {
  std::optional<std::vector<double>> explicit_x;  // --equilibrium
  bool solve = false;                             // --solve
  std::optional<std::vector<double>> levels;      // --levels
};

/// Picks x*: an explicit value, else the decomposition's, else the network
/// file's. With `solve` the chosen value (or all ones) seeds Newton instead.
std::vector<double> resolve_equilibrium(const NetworkDocument& doc, const EquilibriumRequest& req,
                                        const std::optional<DecompositionDocument>& dcmp, const Tolerance& tol);

inline const std::vector<std::string> kCertifyOrder = {"thm_auto", "thm_disjoint", "thm_com_tw", "thm_com_1",
                                                       "cor_mixed"};

struct CertifyOutcome {
  std::vector<double> x_star;
  /// (candidate index or -1 for whole-network checks, verdict)
  std::vector<std::pair<int, TheoremVerdict>> trail;
  std::optional<LyapunovCertificate> certificate;
  std::optional<CertificateCheck> self_check;
  std::size_t candidates = 0;
  std::optional<DecompositionDocument> decomposition;  // the winning split
  int exit_code = kExitNone;
};

/// Tries the theorems in kCertifyOrder; for each decomposition candidate in
/// turn the four decomposition theorems are tried. First pass wins.
CertifyOutcome certify(const MassActionSystem& mas, std::span<const double> x_star,
                       const std::optional<DecompositionDocument>& dcmp, const RunConfig& cfg);

nlohmann::json certify_json(const MassActionSystem& mas, const CertifyOutcome& out);
std::string certify_text(const CertifyOutcome& out);

struct SimulateOutcome {
  std::vector<std::vector<double>> x0s;
  std::vector<Trajectory> trajectories;
  std::optional<ConvergenceReport> convergence;
  std::vector<DissipationReport> dissipation;
  int exit_code = kExitOk;
};

/// Integrates from every x0. Convergence is judged against `x_star` when
/// given; dissipation against `cert` when given (its fingerprint must match).
SimulateOutcome simulate(const MassActionSystem& mas, const std::vector<std::vector<double>>& x0s,
                         const std::optional<std::vector<double>>& x_star, const LyapunovCertificate* cert,
                         const RunConfig& cfg);

nlohmann::json simulate_json(const MassActionSystem& mas, const SimulateOutcome& out);

std::vector<Decomposition> decompose(const MassActionSystem& mas, std::span<const double> x_star,
                                     const RunConfig& cfg);

struct BatchEntry {
  std::string file;
  int exit_code = kExitNone;
  std::string kind;  // certificate kind when passing
  std::string error;
};

/// Certifies every `*.crn` file in `dir` (sorted by name) with automatic
/// decomposition search. Files need an `@equilibrium` line.
std::vector<BatchEntry> certify_all(const std::filesystem::path& dir, const RunConfig& cfg, unsigned threads = 0);
nlohmann::json certify_all_json(const std::vector<BatchEntry>& entries);

std::string read_file(const std::filesystem::path& p);

}  // namespace crnscope
