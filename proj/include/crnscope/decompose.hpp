#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "crnscope/balance.hpp"
#include "crnscope/lyapunov.hpp"
#include "crnscope/model.hpp"
#include "crnscope/netparse.hpp"

namespace crnscope {

class DecompositionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Part {
  PartTag tag = PartTag::one_dim;
  std::string label;
  std::vector<std::size_t> reactions;  // parent indices
  std::vector<std::size_t> species;    // parent indices, ascending
  MassActionSystem subsystem;
  std::vector<double> x_star;  // restricted to `species`
  std::size_t dim = 0;
  bool reaction_vector_balanced = false;
};

struct Decomposition {
  MassActionSystem parent;
  std::vector<double> x_star;
  std::vector<Part> parts;
  std::optional<std::size_t> cb_part;
  /// shared[p] = species of part p that also belong to the complex-balanced
  /// part (parent indices); empty for the complex-balanced part itself.
  std::vector<std::vector<std::size_t>> shared;
  std::vector<std::size_t> shared_union;
  double radius = 0.1;

  DecompositionDocument document() const;
};

/// Checks the partition, the per-part equilibria and every declared tag.
Decomposition validate_decomposition(const MassActionSystem& parent, std::span<const double> x_star,
                                     const DecompositionDocument& doc, const Tolerance& tol = {});

struct SearchOptions {
  std::size_t budget = 512;
  Tolerance tol;
};

/// Peels reaction-vector-balanced direction classes off the network and
/// keeps the splits whose remainder is complex balanced (or empty). Ordered
/// by part count, then shared species, then number of 1-D parts.
std::vector<Decomposition> search_decomposition(const MassActionSystem& parent, std::span<const double> x_star,
                                                const SearchOptions& opts = {});

enum class Overall { pass, fail, not_applicable };
std::string to_string(Overall o);

struct TheoremVerdict {
  std::string theorem_id;
  bool applicable = false;
  std::vector<Condition> conditions;
  Overall overall = Overall::not_applicable;
  std::vector<std::string> notes;
  std::optional<LyapunovCertificate> certificate;
};

TheoremVerdict check_thm_disjoint(const Decomposition& dec);
TheoremVerdict check_thm_shared_1d(const Decomposition& dec);
TheoremVerdict check_thm_shared_two_species(const Decomposition& dec);
TheoremVerdict check_corollary_mixed(const Decomposition& dec);

/// R_{i,j} together with R_{j,i}, i < j.
struct AutocatalyticPair {
  std::size_t i = 0;
  std::size_t j = 0;
  std::vector<std::size_t> forward;   // e_j - e_i
  std::vector<std::size_t> backward;  // e_i - e_j
};

struct AutocatalyticStructure {
  bool autocatalytic = false;
  std::string reason;
  /// filled whenever every reaction has the autocatalytic form, even if a
  /// later condition fails
  std::vector<AutocatalyticPair> pairs;
};

AutocatalyticStructure is_autocatalytic(const MassActionSystem& mas);

TheoremVerdict check_thm_auto(const MassActionSystem& mas, std::span<const double> x_star, const Tolerance& tol = {},
                              double radius = 0.1);

/// Full-network reaction-vector balance against balance of every pair.
struct PairBalanceComparison {
  bool full_network = false;
  bool all_pairs = false;
  bool agree() const { return full_network == all_pairs; }
};
PairBalanceComparison compare_pair_balance(const MassActionSystem& mas, std::span<const double> x_star,
                                           const Tolerance& tol = {});

void to_json(nlohmann::json& j, const Decomposition& d);
void to_json(nlohmann::json& j, const TheoremVerdict& v);

}  // namespace crnscope
