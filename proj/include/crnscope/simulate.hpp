#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "crnscope/lyapunov.hpp"
#include "crnscope/model.hpp"

namespace crnscope {

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct IntegrateOptions {
  double abs_tol = 1e-9;
  double rel_tol = 1e-9;
  std::size_t intervals = 200;  // samples = intervals + 1
  double positivity_floor = 1e-12;
  std::size_t max_steps = 2'000'000;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> states;
  /// conserved[s][c] = w_c . states[s]
  std::vector<std::vector<double>> conserved;
  std::optional<std::vector<double>> lyapunov_values;
  bool halted = false;
  std::string halt_reason;
  double conservation_drift = 0.0;  // max relative
  std::size_t steps = 0;
};

/// Adaptive Dormand-Prince 4(5) with dense output at `intervals + 1`
/// uniformly spaced times. Stops early (halted = true) on a positivity
/// breach or step-size failure; the samples reached so far are kept.
Trajectory integrate(const MassActionSystem& mas, std::span<const double> x0, double t_end,
                     const IntegrateOptions& opts = {}, const LyapunovCertificate* cert = nullptr);

/// Runs independent trajectories on up to `threads` workers (0 = use
/// CRNSCOPE_THREADS or the hardware count). Output order matches input.
std::vector<Trajectory> integrate_batch(const MassActionSystem& mas, const std::vector<std::vector<double>>& x0s,
                                        double t_end, const IntegrateOptions& opts = {},
                                        const LyapunovCertificate* cert = nullptr, unsigned threads = 0);

unsigned default_thread_count();

/// Orthonormal basis of the stoichiometric subspace, one vector per entry.
std::vector<std::vector<double>> stoichiometric_basis(const MassActionSystem& mas);

/// x* + d with d in the stoichiometric subspace and max_i |d_i| / x*_i in
/// [0.1 radius, radius]. Directions come from a shifted Halton sequence, so a
/// fixed seed gives bit-identical points. radius must lie in [0, 1).
std::vector<std::vector<double>> sample_perturbations(std::span<const double> x_star,
                                                      const std::vector<std::vector<double>>& basis, double radius,
                                                      std::size_t count, std::uint64_t seed);

struct ConvergenceEntry {
  bool converged = false;
  double final_distance = 0.0;
  double tail_distance = 0.0;
  bool halted = false;
};

struct ConvergenceReport {
  double eps = 0.0;
  std::vector<ConvergenceEntry> entries;
  std::size_t converged_count() const;
  bool all_converged() const { return converged_count() == entries.size(); }
};

ConvergenceReport verify_convergence(const std::vector<Trajectory>& trajectories, std::span<const double> x_star,
                                     double eps);

struct DissipationReport {
  bool monotone = true;
  double max_increase = 0.0;  // largest f(t_{s+1}) - f(t_s)
  std::size_t violations = 0;
  double max_fdot = -INFINITY;
  bool fdot_ok = true;
  std::vector<std::size_t> violating_samples;
  bool pass() const { return monotone && fdot_ok; }
};

inline constexpr double kMonotoneSlack = 1e-8;
inline constexpr double kFdotSlack = 1e-9;

DissipationReport verify_dissipation(const LyapunovCertificate& cert, const MassActionSystem& mas,
                                     const Trajectory& traj);

struct CertificateCheck {
  double f_at_x_star = 0.0;
  double gradient_inf = 0.0;  // central differences at x*
  double min_hessian_eigenvalue = 0.0;  // restricted to the stoichiometric subspace
  double max_fdot = -INFINITY;
  std::size_t samples = 0;
  bool pass = false;
};

/// Numeric sanity checks of a certificate around its x*: f(x*) = 0, a
/// vanishing gradient, a positive definite Hessian on the stoichiometric
/// subspace and f' <= 1e-9 on `samples` points of the certified neighborhood.
CertificateCheck check_certificate(const LyapunovCertificate& cert, const MassActionSystem& mas,
                                   std::size_t samples = 100, std::uint64_t seed = 1);

/// Header `t,x_1,...,x_n[,f]`; one row per sample, 17 significant digits.
std::string trajectory_csv(const Trajectory& traj);

void to_json(nlohmann::json& j, const Trajectory& t);  // summary only
void to_json(nlohmann::json& j, const ConvergenceReport& r);
void to_json(nlohmann::json& j, const DissipationReport& r);
void to_json(nlohmann::json& j, const CertificateCheck& c);

}  // namespace crnscope
