#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "crnscope/model.hpp"

namespace crnscope {

/// Two flux sums a, b count as equal when |a - b| <= abs + rel * max(|a|, |b|).
struct Tolerance {
  double abs = 1e-12;
  double rel = 1e-9;

  bool equal(double a, double b) const;
};

class EquilibriumError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EquilibriumPoint {
  std::vector<double> x_star;
  double residual_inf = 0.0;  // max |(Gamma Xi(x*))_j|
  std::vector<double> compatibility_levels;  // w . x* per conservation law
  std::size_t iterations = 0;
};

/// Residual and conservation levels of a given positive point.
EquilibriumPoint evaluate_point(const MassActionSystem& mas, std::span<const double> x);

/// Per-species equilibrium test, scaled by the gross flux through each species.
bool is_equilibrium(const MassActionSystem& mas, std::span<const double> x, const Tolerance& tol = {});

/// Damped Gauss-Newton on [independent rows of Gamma Xi(x); c . x - level].
///
/// The constraints are the network's `@conserve` hints when it has any,
/// otherwise its conservation laws. `class_levels` overrides the levels;
/// without it hint levels are used, or c . guess for computed laws.
EquilibriumPoint find_equilibrium(const MassActionSystem& mas, std::span<const double> guess,
                                  const std::optional<std::vector<double>>& class_levels = std::nullopt);

/// One flux-sum comparison: reactions in `left` against reactions in `right`.
struct FluxGroup {
  std::string label;
  std::vector<std::size_t> left;
  std::vector<std::size_t> right;
  double left_flux = 0.0;
  double right_flux = 0.0;
  bool balanced = false;

  double residual() const { return left_flux - right_flux; }
};

struct BalanceResult {
  bool holds = false;
  std::vector<FluxGroup> groups;
  std::string reason;  // set when `holds` is false for a structural reason
};

using Partition = std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>>;

/// Reactions sharing one exact reaction vector up to sign. `eta` has its
/// first nonzero entry positive; `forward` holds the reactions with vector
/// eta, `backward` those with -eta.
struct DirectionGroup {
  std::vector<long long> eta;
  std::vector<std::size_t> forward;
  std::vector<std::size_t> backward;
};

std::vector<DirectionGroup> reaction_vector_groups(const MassActionSystem& mas);

BalanceResult check_complex_balanced(const MassActionSystem& mas, std::span<const double> x,
                                     const Tolerance& tol = {});
BalanceResult check_detailed_balanced(const MassActionSystem& mas, std::span<const double> x,
                                      const Tolerance& tol = {});
BalanceResult check_reaction_vector_balanced(const MassActionSystem& mas, std::span<const double> x,
                                             const Tolerance& tol = {});

/// Throws std::invalid_argument unless both sides of the partition cover
/// every reaction.
BalanceResult check_generalized_balanced(const MassActionSystem& mas, std::span<const double> x,
                                         const Partition& partition, const Tolerance& tol = {});

Partition complex_partition(const MassActionSystem& mas);
Partition reaction_vector_partition(const MassActionSystem& mas);
/// Empty when the network is not reversible.
Partition detailed_partition(const MassActionSystem& mas);

struct BalanceCertificate {
  EquilibriumPoint point;
  bool equilibrium = false;
  bool detailed = false;
  bool complex_balanced = false;
  bool reaction_vector_balanced = false;
  std::optional<Partition> generalized_partition;
  BalanceResult detailed_result;
  BalanceResult complex_result;
  BalanceResult reaction_vector_result;
};

BalanceCertificate certify_balance(const MassActionSystem& mas, std::span<const double> x,
                                   const Tolerance& tol = {});

void to_json(nlohmann::json& j, const EquilibriumPoint& p);
void to_json(nlohmann::json& j, const BalanceResult& r);
void to_json(nlohmann::json& j, const BalanceCertificate& c);

}  // namespace crnscope
