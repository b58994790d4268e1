#include "crnscope/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <random>
#include <thread>

#include <Eigen/Dense>
#include <boost/numeric/odeint/stepper/generation.hpp>
#include <boost/numeric/odeint/stepper/runge_kutta_dopri5.hpp>
#include <nlohmann/json.hpp>

#include "crnscope/exact.hpp"
#include "crnscope/report.hpp"

namespace crnscope {

namespace odeint = boost::numeric::odeint;

namespace {

using State = std::vector<double>;

std::vector<std::vector<double>> conservation_doubles(const MassActionSystem& mas) {
  std::vector<std::vector<double>> out;
  for (const auto& w : conservation_laws(mas)) {
    std::vector<double> d;
    for (const auto& q : w) d.push_back(to_double(q));
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<double> dot_all(const std::vector<std::vector<double>>& ws, const State& x) {
  std::vector<double> out;
  for (const auto& w : ws) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * x[i];
    out.push_back(s);
  }
  return out;
}

double radical_inverse(std::uint64_t index, unsigned base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (index > 0) {
    r += f * static_cast<double>(index % base);
    index /= base;
    f *= inv;
  }
  return r;
}

unsigned nth_prime(std::size_t n) {
  unsigned p = 1;
  for (std::size_t found = 0; found <= n;) {
    ++p;
    bool prime = true;
    for (unsigned d = 2; d * d <= p && prime; ++d) prime = p % d != 0;
    if (prime) ++found;
  }
  return p;
}

double to_unit(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

double inf_norm_diff(const std::vector<double>& a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

Trajectory integrate(const MassActionSystem& mas, std::span<const double> x0, double t_end,
                     const IntegrateOptions& opts, const LyapunovCertificate* cert) {
  const std::size_t n = mas.num_species();
  if (x0.size() != n) throw SimulationError("initial state has " + std::to_string(x0.size()) + " entries, expected " +
                                            std::to_string(n));
  for (double v : x0)
    if (!(v > 0.0) || !std::isfinite(v)) throw SimulationError("initial state must be strictly positive");
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw SimulationError("t_end must be positive");
  if (opts.intervals == 0) throw SimulationError("need at least one sample interval");

  const auto laws = conservation_doubles(mas);
  Trajectory traj;
  auto record = [&](double t, const State& x) {
    traj.times.push_back(t);
    traj.states.push_back(x);
    traj.conserved.push_back(dot_all(laws, x));
  };

  auto rhs = [&mas](const State& x, State& dx, double) { ode_rhs_unchecked(mas, x, dx); };
  auto stepper = odeint::make_dense_output(opts.abs_tol, opts.rel_tol, odeint::runge_kutta_dopri5<State>());

  State x(x0.begin(), x0.end());
  const double dt_sample = t_end / static_cast<double>(opts.intervals);
  stepper.initialize(x, 0.0, std::min(dt_sample, 1e-3));
  record(0.0, x);
  std::size_t next = 1;
  State buf(n);
  while (next <= opts.intervals) {
    if (traj.steps >= opts.max_steps) {
      traj.halted = true;
      traj.halt_reason = "step limit reached";
      break;
    }
    std::pair<double, double> span;
    try {
      span = stepper.do_step(rhs);
    } catch (const std::exception& e) {
      traj.halted = true;
      traj.halt_reason = std::string("step size underflow: ") + e.what();
      break;
    }
    ++traj.steps;
    bool breach = false;
    while (next <= opts.intervals) {
      const double ts = next == opts.intervals ? t_end : dt_sample * static_cast<double>(next);
      if (ts > span.second) break;
      stepper.calc_state(ts, buf);
      if (*std::min_element(buf.begin(), buf.end()) < opts.positivity_floor) {
        breach = true;
        break;
      }
      record(ts, buf);
      ++next;
    }
    const auto& cur = stepper.current_state();
    if (breach || *std::min_element(cur.begin(), cur.end()) < opts.positivity_floor) {
      traj.halted = true;
      traj.halt_reason = "state left the positive orthant at t = " + format_double(stepper.current_time());
      break;
    }
    if (stepper.current_time_step() < 1e-14 * std::max(1.0, stepper.current_time())) {
      traj.halted = true;
      traj.halt_reason = "step size underflow at t = " + format_double(stepper.current_time());
      break;
    }
  }

  for (std::size_t c = 0; c < laws.size(); ++c) {
    const double c0 = traj.conserved.front()[c];
    for (const auto& row : traj.conserved)
      traj.conservation_drift =
          std::max(traj.conservation_drift, std::abs(row[c] - c0) / std::max(std::abs(c0), 1e-300));
  }
  if (cert) {
    std::vector<double> f;
    for (const auto& s : traj.states) f.push_back(cert->evaluate(s));
    traj.lyapunov_values = std::move(f);
  }
  return traj;
}

unsigned default_thread_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CRNSCOPE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return std::min<unsigned>(hw, static_cast<unsigned>(v));
  }
  return hw;
}

std::vector<Trajectory> integrate_batch(const MassActionSystem& mas, const std::vector<std::vector<double>>& x0s,
                                        double t_end, const IntegrateOptions& opts, const LyapunovCertificate* cert,
                                        unsigned threads) {
  std::vector<Trajectory> out(x0s.size());
  if (threads == 0) threads = default_thread_count();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(x0s.size())));
  std::atomic<std::size_t> cursor{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&] {
    for (std::size_t i; (i = cursor++) < x0s.size();) {
      try {
        out[i] = integrate(mas, x0s[i], t_end, opts, cert);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::vector<std::vector<double>> stoichiometric_basis(const MassActionSystem& mas) {
  const std::size_t n = mas.num_species();
  RationalMatrix rows;
  for (const auto& r : mas.reactions()) {
    RationalVector v;
    for (auto c : r.vector()) v.emplace_back(c);
    rows.push_back(std::move(v));
  }
  const auto ech = reduced_row_echelon(std::move(rows));
  const std::size_t d = ech.rref.size();
  if (d == 0) return {};
  Eigen::MatrixXd m(n, d);
  for (std::size_t k = 0; k < d; ++k)
    for (std::size_t i = 0; i < n; ++i) m(i, k) = to_double(ech.rref[k][i]);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, d);
  std::vector<std::vector<double>> out(d, std::vector<double>(n));
  for (std::size_t k = 0; k < d; ++k)
    for (std::size_t i = 0; i < n; ++i) out[k][i] = q(i, k);
  return out;
}

std::vector<std::vector<double>> sample_perturbations(std::span<const double> x_star,
                                                      const std::vector<std::vector<double>>& basis, double radius,
                                                      std::size_t count, std::uint64_t seed) {
  if (!(radius >= 0.0) || !(radius < 1.0))
    throw SimulationError("radius must lie in [0, 1) so perturbed states stay positive");
  for (double v : x_star)
    if (!(v > 0.0)) throw SimulationError("x* must be strictly positive");
  const std::size_t n = x_star.size(), d = basis.size();
  std::vector<std::vector<double>> out(count, std::vector<double>(x_star.begin(), x_star.end()));
  if (radius == 0.0 || d == 0) return out;

  std::mt19937_64 rng(seed);
  std::vector<double> shift(d + 1);
  std::vector<unsigned> primes(d + 1);
  for (std::size_t k = 0; k <= d; ++k) {
    shift[k] = to_unit(rng());
    primes[k] = nth_prime(k);
  }
  for (std::size_t s = 0; s < count; ++s) {
    std::vector<double> u(d + 1);
    for (std::size_t k = 0; k <= d; ++k) {
      const double h = radical_inverse(s + 1, primes[k]) + shift[k];
      u[k] = h - std::floor(h);
    }
    std::vector<double> dir(n, 0.0);
    for (std::size_t k = 0; k < d; ++k)
      for (std::size_t i = 0; i < n; ++i) dir[i] += (2.0 * u[k] - 1.0) * basis[k][i];
    double rel = 0.0;
    for (std::size_t i = 0; i < n; ++i) rel = std::max(rel, std::abs(dir[i]) / x_star[i]);
    if (rel < 1e-8) {
      dir = basis[0];
      rel = 0.0;
      for (std::size_t i = 0; i < n; ++i) rel = std::max(rel, std::abs(dir[i]) / x_star[i]);
    }
    const double scale = radius * (0.1 + 0.9 * u[d]) / rel;
    for (std::size_t i = 0; i < n; ++i) out[s][i] = x_star[i] + scale * dir[i];
  }
  return out;
}

std::size_t ConvergenceReport::converged_count() const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [](const ConvergenceEntry& e) { return e.converged; }));
}

ConvergenceReport verify_convergence(const std::vector<Trajectory>& trajectories, std::span<const double> x_star,
                                     double eps) {
  ConvergenceReport rep;
  rep.eps = eps;
  for (const auto& t : trajectories) {
    ConvergenceEntry e;
    e.halted = t.halted;
    if (t.states.empty()) {
      e.final_distance = e.tail_distance = INFINITY;
      rep.entries.push_back(e);
      continue;
    }
    e.final_distance = inf_norm_diff(t.states.back(), x_star);
    const std::size_t tail = std::max<std::size_t>(1, t.states.size() / 10);
    for (std::size_t s = t.states.size() - tail; s < t.states.size(); ++s)
      e.tail_distance = std::max(e.tail_distance, inf_norm_diff(t.states[s], x_star));
    e.converged = !t.halted && e.final_distance < eps && e.tail_distance < 2.0 * eps;
    rep.entries.push_back(e);
  }
  return rep;
}

DissipationReport verify_dissipation(const LyapunovCertificate& cert, const MassActionSystem& mas,
                                     const Trajectory& traj) {
  DissipationReport rep;
  std::vector<double> f;
  if (traj.lyapunov_values) {
    f = *traj.lyapunov_values;
  } else {
    for (const auto& s : traj.states) f.push_back(cert.evaluate(s));
  }
  for (std::size_t s = 0; s + 1 < f.size(); ++s) {
    const double inc = f[s + 1] - f[s];
    rep.max_increase = s == 0 ? inc : std::max(rep.max_increase, inc);
    if (!(inc <= kMonotoneSlack)) {
      rep.monotone = false;
      ++rep.violations;
      rep.violating_samples.push_back(s + 1);
    }
  }
  for (const auto& s : traj.states) {
    const double fd = dissipation_check(cert, mas, s);
    rep.max_fdot = std::max(rep.max_fdot, fd);
    if (!(fd <= kFdotSlack)) rep.fdot_ok = false;
  }
  return rep;
}

CertificateCheck check_certificate(const LyapunovCertificate& cert, const MassActionSystem& mas, std::size_t samples,
                                   std::uint64_t seed) {
  CertificateCheck c;
  const auto& xs = cert.x_star;
  const std::size_t n = xs.size();
  c.f_at_x_star = cert.evaluate(xs);

  std::vector<double> x = xs;
  for (std::size_t i = 0; i < n; ++i) {
    const double h = 1e-5 * xs[i];
    x[i] = xs[i] + h;
    const double fp = cert.evaluate(x);
    x[i] = xs[i] - h;
    const double fm = cert.evaluate(x);
    x[i] = xs[i];
    c.gradient_inf = std::max(c.gradient_inf, std::abs(fp - fm) / (2.0 * h));
  }

  const auto basis = stoichiometric_basis(mas);
  const std::size_t d = basis.size();
  if (d == 0) {
    c.min_hessian_eigenvalue = INFINITY;
  } else {
    Eigen::MatrixXd hess(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      const double h = 1e-5 * xs[i];
      x[i] = xs[i] + h;
      const auto gp = cert.gradient(x);
      x[i] = xs[i] - h;
      const auto gm = cert.gradient(x);
      x[i] = xs[i];
      for (std::size_t r = 0; r < n; ++r) hess(r, i) = (gp[r] - gm[r]) / (2.0 * h);
    }
    hess = 0.5 * (hess + hess.transpose()).eval();
    Eigen::MatrixXd q(n, d);
    for (std::size_t k = 0; k < d; ++k)
      for (std::size_t i = 0; i < n; ++i) q(i, k) = basis[k][i];
    const Eigen::MatrixXd hs = q.transpose() * hess * q;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hs, Eigen::EigenvaluesOnly);
    c.min_hessian_eigenvalue = es.eigenvalues().minCoeff();
  }

  const double radius = std::min(cert.radius, 0.1);
  for (const auto& p : sample_perturbations(xs, basis, radius, samples, seed)) {
    c.max_fdot = std::max(c.max_fdot, dissipation_check(cert, mas, p));
    ++c.samples;
  }
  c.pass = std::abs(c.f_at_x_star) <= 1e-12 && c.gradient_inf <= 1e-6 && c.min_hessian_eigenvalue > 0.0 &&
           (c.samples == 0 || c.max_fdot <= kFdotSlack);
  return c;
}

std::string trajectory_csv(const Trajectory& traj) {
  std::string out = "t";
  const std::size_t n = traj.states.empty() ? 0 : traj.states.front().size();
  for (std::size_t i = 0; i < n; ++i) out += ",x_" + std::to_string(i + 1);
  if (traj.lyapunov_values) out += ",f";
  out += '\n';
  for (std::size_t s = 0; s < traj.times.size(); ++s) {
    out += format_double(traj.times[s]);
    for (double v : traj.states[s]) out += ',' + format_double(v);
    if (traj.lyapunov_values) out += ',' + format_double((*traj.lyapunov_values)[s]);
    out += '\n';
  }
  return out;
}

void to_json(nlohmann::json& j, const Trajectory& t) {
  j = nlohmann::json::object();
  j["samples"] = t.times.size();
  j["t_final"] = t.times.empty() ? 0.0 : t.times.back();
  j["final_state"] = t.states.empty() ? std::vector<double>{} : t.states.back();
  j["halted"] = t.halted;
  if (t.halted) j["halt_reason"] = t.halt_reason;
  j["conservation_drift"] = t.conservation_drift;
  j["steps"] = t.steps;
}

void to_json(nlohmann::json& j, const ConvergenceReport& r) {
  j = nlohmann::json::object();
  j["eps"] = r.eps;
  j["converged"] = r.converged_count();
  j["total"] = r.entries.size();
  auto arr = nlohmann::json::array();
  for (const auto& e : r.entries)
    arr.push_back({{"converged", e.converged},
                   {"final_distance", e.final_distance},
                   {"tail_distance", e.tail_distance},
                   {"halted", e.halted}});
  j["trajectories"] = std::move(arr);
}

void to_json(nlohmann::json& j, const DissipationReport& r) {
  j = nlohmann::json::object();
  j["monotone"] = r.monotone;
  j["max_increase"] = r.max_increase;
  j["violations"] = r.violations;
  j["violating_samples"] = r.violating_samples;
  j["max_fdot"] = r.max_fdot;
  j["fdot_ok"] = r.fdot_ok;
  j["pass"] = r.pass();
}

void to_json(nlohmann::json& j, const CertificateCheck& c) {
  j = nlohmann::json::object();
  j["f_at_x_star"] = c.f_at_x_star;
  j["gradient_inf"] = c.gradient_inf;
  j["min_hessian_eigenvalue"] = c.min_hessian_eigenvalue;
  j["max_fdot"] = c.max_fdot;
  j["samples"] = c.samples;
  j["pass"] = c.pass;
}

}  // namespace crnscope
