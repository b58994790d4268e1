#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "crnscope/exact.hpp"

namespace crnscope {

/// Stoichiometric coefficients of a complex, one entry per species.
using Stoich = std::vector<int>;

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Reaction {
  Stoich reactant;
  Stoich product;
  double k = 0.0;

  /// product - reactant
  std::vector<long long> vector() const;
};

/// A user-declared linear constraint `weights . x = level` read from the
/// network file. It need not be a conservation law of the network.
struct ConservationHint {
  std::vector<double> weights;
  double level = 0.0;
};

/// Species, reactions and rate constants of a mass-action network.
///
/// Species are identified by their position in `species()`. The constructor
/// validates every structural invariant; a constructed object is always a
/// well-formed network.
class MassActionSystem {
 public:
  MassActionSystem(std::vector<std::string> species, std::vector<Reaction> reactions,
                   std::vector<ConservationHint> hints = {});

  std::size_t num_species() const { return species_.size(); }
  std::size_t num_reactions() const { return reactions_.size(); }
  const std::vector<std::string>& species() const { return species_; }
  const std::vector<Reaction>& reactions() const { return reactions_; }
  const Reaction& reaction(std::size_t i) const { return reactions_.at(i); }
  const std::vector<ConservationHint>& hints() const { return hints_; }

  std::optional<std::size_t> species_index(const std::string& name) const;

  /// Network made of the selected reactions over the species they touch.
  /// Species keep the parent order; `species_map[q]` is the parent index of
  /// the subsystem's species q.
  MassActionSystem subsystem(std::span<const std::size_t> reaction_indices,
                             std::vector<std::size_t>* species_map = nullptr) const;

  /// Same network with every rate constant replaced.
  MassActionSystem with_rates(std::span<const double> k) const;

  friend bool operator==(const MassActionSystem&, const MassActionSystem&) = default;

 private:
  std::vector<std::string> species_;
  std::vector<Reaction> reactions_;
  std::vector<ConservationHint> hints_;
};

inline bool operator==(const Reaction& a, const Reaction& b) {
  return a.reactant == b.reactant && a.product == b.product && a.k == b.k;
}
inline bool operator==(const ConservationHint& a, const ConservationHint& b) {
  return a.weights == b.weights && a.level == b.level;
}

/// Dense n x r integer matrix, row-major.
struct IntMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<long long> data;

  IntMatrix() = default;
  IntMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0) {}
  long long& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  long long operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

struct StructureReport {
  std::size_t num_species = 0;
  std::size_t num_reactions = 0;
  IntMatrix gamma;
  std::size_t dim_S = 0;
  std::size_t num_complexes = 0;
  std::size_t num_linkage_classes = 0;
  long long deficiency = 0;
  bool weakly_reversible = false;
  bool reversible = false;
  std::vector<RationalVector> conservation_basis;
  std::vector<Stoich> complexes;
  /// linkage_class[c] is the linkage class of complexes[c]
  std::vector<std::size_t> linkage_class;
};

IntMatrix stoichiometric_matrix(const MassActionSystem& mas);
StructureReport structure_report(const MassActionSystem& mas);

/// Basis of the left null space of the stoichiometric matrix, in reduced
/// row echelon form.
std::vector<RationalVector> conservation_laws(const MassActionSystem& mas);

/// Distinct complexes in order of first appearance (reactant before product).
std::vector<Stoich> complexes(const MassActionSystem& mas);

/// k * x^v with 0^0 = 1. No domain checks.
double mass_action_rate(double k, const Stoich& v, std::span<const double> x);

/// Throws std::domain_error for negative or non-finite entries.
std::vector<double> reaction_rates(const MassActionSystem& mas, std::span<const double> x);
std::vector<double> ode_rhs(const MassActionSystem& mas, std::span<const double> x);

/// ode_rhs without the domain checks, for integrator stages that may dip
/// slightly below zero.
void ode_rhs_unchecked(const MassActionSystem& mas, std::span<const double> x,
                       std::span<double> dxdt);

/// Jacobian of ode_rhs at a positive state, row-major n x n.
std::vector<double> ode_jacobian(const MassActionSystem& mas, std::span<const double> x);

/// Primitive integer vector spanning the line through v, first nonzero entry
/// positive.
std::vector<long long> canonical_direction(const std::vector<long long>& v);

}  // namespace crnscope
