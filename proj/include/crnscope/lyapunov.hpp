#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "crnscope/model.hpp"

namespace crnscope {

class LyapunovError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// sum_j (x*_j - x_j - x_j ln(x*_j / x_j)). Throws std::domain_error on
/// non-positive entries.
double pseudo_helmholtz(std::span<const double> x, std::span<const double> x_star);

// ---------------------------------------------------------------------------
// 1-dimensional networks

struct OneDimGeometry {
  std::vector<long long> omega;  // primitive; canonical sign unless flipped
  std::vector<long long> betas;  // reaction i has vector betas[i] * omega
  std::vector<double> x_ref;

  double gamma(std::span<const double> x) const;
  std::vector<double> y_dagger(std::span<const double> x) const;
};

/// Throws LyapunovError if the network is not 1-dimensional. `orientation`
/// -1 flips omega (and every beta).
OneDimGeometry one_dim_geometry(const MassActionSystem& mas, std::span<const double> x_ref, int orientation = 1);

double h_poly(const MassActionSystem& mas, const OneDimGeometry& geo, std::span<const double> x, double u);
double h_poly_du(const MassActionSystem& mas, const OneDimGeometry& geo, std::span<const double> x, double u);
std::vector<double> h_poly_dx(const MassActionSystem& mas, const OneDimGeometry& geo, std::span<const double> x,
                              double u);

/// Positive root of h(x, .). Throws LyapunovError when all betas share a sign.
double solve_u_tilde(const MassActionSystem& mas, const OneDimGeometry& geo, std::span<const double> x);

/// Line integral of ln u~ from x_ref's projection to x.
double one_dim_lyapunov(const MassActionSystem& mas, const OneDimGeometry& geo, std::span<const double> x);

/// omega . grad_x h(x_ref, 1); negative means the condition holds.
double one_dim_condition(const MassActionSystem& mas, const OneDimGeometry& geo);

// ---------------------------------------------------------------------------
// 1-dimensional parts whose shared species shift by exactly one

/// Reactions split as L (vector (1_E, omega~)) and R (vector -(1_E, omega~)),
/// local indices throughout.
struct SharedSplit {
  std::vector<std::size_t> shared;
  std::vector<std::size_t> tilde;
  std::vector<long long> omega_tilde;
  std::vector<std::size_t> L;
  std::vector<std::size_t> R;
};

/// nullopt when some reaction does not shift every shared species by the
/// same +-1, or the remaining coordinates do not form one direction.
std::optional<SharedSplit> classify_shared(const MassActionSystem& mas, const std::vector<std::size_t>& shared);

/// prod_E x*_i * sum_R k x~^v / sum_L k x~^v, evaluated on a full local state.
double u_tilde_shared(const MassActionSystem& mas, const SharedSplit& s, std::span<const double> x_star,
                      std::span<const double> x);

/// omega~ . grad u~(x~*); positive means the condition holds.
double shared_condition(const MassActionSystem& mas, const SharedSplit& s, std::span<const double> x_star);

/// For every shared species, the (reactant, product) coefficient pairs of R
/// equal the swapped pairs of L as multisets.
bool shared_mirror_holds(const MassActionSystem& mas, const SharedSplit& s, std::string* detail = nullptr);

// ---------------------------------------------------------------------------
// Two-species networks

struct TwoSpeciesShape {
  std::size_t i = 0;  // local species indices
  std::size_t j = 1;
  long long w_i = 0;
  long long w_j = 0;
  int a = 0;  // reactant coefficient of S_i on every L reaction
  int b = 0;  // reactant coefficient of S_j on every R reaction
  std::vector<std::size_t> L;
  std::vector<std::size_t> R;
  double c = 0.0;      // from the S_i side
  double c_alt = 0.0;  // from the S_j side; equals c iff reaction-vector balanced
};

/// Every (i, omega-sign) assignment that gives constant a and b, with
/// `preferred_i` (if any) first, then i = 0 before 1, canonical sign first.
std::vector<TwoSpeciesShape> two_species_shapes(const MassActionSystem& mas, std::span<const double> x_star,
                                                std::optional<std::size_t> preferred_i = std::nullopt);

/// Shape with L = R_{i,j}, R = R_{j,i}, w = (-1, 1), a = b = 1.
std::optional<TwoSpeciesShape> autocatalytic_shape(const MassActionSystem& mas, std::span<const double> x_star,
                                                   std::size_t i, std::size_t j);

struct TwoSpeciesConditions {
  double con1 = 0.0;  // needs < 0
  double con2 = 0.0;  // needs > 0
  bool pass() const { return con1 < 0.0 && con2 > 0.0; }
};

TwoSpeciesConditions two_species_conditions(const TwoSpeciesShape& s, const MassActionSystem& mas,
                                            std::span<const double> x_star);

double two_species_integrand_i(const TwoSpeciesShape& s, const MassActionSystem& mas, double t);
double two_species_integrand_j(const TwoSpeciesShape& s, const MassActionSystem& mas, double t);
double two_species_lyapunov(const TwoSpeciesShape& s, const MassActionSystem& mas, std::span<const double> x,
                            std::span<const double> x_star);

struct AutocatalyticConditions {
  double con1 = 0.0;  // over R_{i,j}; needs > 0
  double con2 = 0.0;  // over R_{j,i}; needs > 0
  bool at_most_bimolecular = false;
  bool shortcut = false;  // at most bimolecular with a monomolecular step each way
  bool pass() const { return con1 > 0.0 && con2 > 0.0; }
};

AutocatalyticConditions autocat_two_species_conditions(const TwoSpeciesShape& s, const MassActionSystem& mas,
                                                       std::span<const double> x_star);

// ---------------------------------------------------------------------------
// Certificates

struct Condition {
  std::string id;
  std::string description;
  std::optional<double> value;
  std::string required;  // "<0", ">0" or "holds"
  bool pass = false;
};

/// k * prod x^v over the coordinates of the owning piece.
struct Monomial {
  double k = 0.0;
  std::vector<int> v;
};

struct HelmholtzPiece {
  std::vector<std::size_t> species;
  std::vector<double> x_star;
};

/// weight * integral from x* to x of ln(t^power / (c * sum k t^e)).
struct ScalarIntegralPiece {
  std::size_t species = 0;
  double x_star = 1.0;
  double weight = 1.0;
  int power = 1;
  double c = 1.0;
  std::vector<std::pair<double, int>> terms;

  double integrand(double t) const;
};

/// u~ as the positive root of h(x, u) = sum_{beta>0} k x^v (1 + ... + u^(beta-1))
/// - sum_{beta<0} k x^v (u^beta + ... + u^-1).
struct RootU {
  std::vector<Monomial> terms;
  std::vector<long long> betas;
};

/// u~ = prefactor * sum_R k x^v / sum_L k x^v.
struct RatioU {
  double prefactor = 1.0;
  std::vector<Monomial> R;
  std::vector<Monomial> L;
};

/// integral over alpha in [0, gamma(x)] of ln u~(y(x) + alpha omega), with
/// gamma and y the orthogonal split of x - anchor along omega.
struct LinePiece {
  std::vector<std::size_t> species;
  std::vector<double> omega;
  std::vector<double> anchor;
  std::variant<RootU, RatioU> u;

  double u_value(std::span<const double> y) const;
  std::vector<double> grad_log_u(std::span<const double> y) const;
};

struct CertificatePiece {
  std::string label;
  std::variant<HelmholtzPiece, ScalarIntegralPiece, LinePiece> body;
};

enum class CertificateKind {
  pseudo_helmholtz,
  one_dim,
  two_species,
  autocat_two_species,
  composite_thm33,
  composite_thm34,
  composite_thm46,
  composite_cor47,
  composite_thm52,
};

std::string to_string(CertificateKind k);
CertificateKind certificate_kind_from_string(const std::string& s);

struct LyapunovCertificate {
  CertificateKind kind = CertificateKind::pseudo_helmholtz;
  std::string theorem;
  std::vector<std::string> species;
  std::string network_fingerprint;
  std::vector<double> x_star;
  std::vector<CertificatePiece> pieces;
  std::vector<Condition> side_conditions;
  double radius = 0.1;

  double evaluate(std::span<const double> x) const;
  std::vector<double> gradient(std::span<const double> x) const;
};

/// grad f(x) . dx/dt.
double dissipation_check(const LyapunovCertificate& cert, const MassActionSystem& mas, std::span<const double> x);

/// Hex digest of the printed network; certificates carry it so they cannot
/// be applied to a different network by mistake.
std::string network_fingerprint(const MassActionSystem& mas);

// piece builders; `species_map` takes local indices of `sub` to parent indices
HelmholtzPiece helmholtz_piece(const std::vector<std::size_t>& species, std::span<const double> parent_x_star);
LinePiece one_dim_piece(const MassActionSystem& sub, const std::vector<std::size_t>& species_map,
                        const OneDimGeometry& geo);
LinePiece shared_piece(const MassActionSystem& sub, const std::vector<std::size_t>& species_map,
                       const SharedSplit& s, std::span<const double> local_x_star);
ScalarIntegralPiece two_species_piece_i(const TwoSpeciesShape& s, const MassActionSystem& sub,
                                        const std::vector<std::size_t>& species_map,
                                        std::span<const double> local_x_star);
ScalarIntegralPiece two_species_piece_j(const TwoSpeciesShape& s, const MassActionSystem& sub,
                                        const std::vector<std::size_t>& species_map,
                                        std::span<const double> local_x_star);

void to_json(nlohmann::json& j, const Condition& c);
void to_json(nlohmann::json& j, const LyapunovCertificate& c);
/// Throws std::invalid_argument on malformed input.
LyapunovCertificate certificate_from_json(const nlohmann::json& j);

}  // namespace crnscope
