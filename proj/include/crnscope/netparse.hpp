#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "crnscope/model.hpp"

namespace crnscope {

/// Structured parse failure; line and column are 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& message);
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }
  const std::string& message() const { return message_; }

 private:
  std::size_t line_;
  std::size_t column_;
  std::string message_;
};

struct NetworkDocument {
  std::string source;
  MassActionSystem network;
  /// From an `@equilibrium S1 = 1, ...` line, in species order.
  std::optional<std::vector<double>> equilibrium_guess;
};

/// Parses the `.crn` network DSL:
///
///     # comment
///     @species S1, S2            (optional; pins species order)
///     S1 + S2 -> 2 S2 ; k = 1.0
///     S1 <-> S2 ; kf = 1, kr = 2
///     @conserve 1*S1 + 1*S2 = 2
///     @equilibrium S1 = 1, S2 = 1
///
/// `<->` expands to a forward and a reverse reaction. Species are ordered by
/// first appearance unless `@species` is given.
NetworkDocument parse_network(std::string_view text);

/// DSL text that parses back to an identical network.
std::string print_network(const MassActionSystem& mas,
                          const std::optional<std::vector<double>>& equilibrium = std::nullopt);

std::string format_complex(const Stoich& c, const std::vector<std::string>& species);
std::string format_reaction(const Reaction& r, const std::vector<std::string>& species);

enum class PartTag { complex_balanced, one_dim, two_species, autocatalytic_pair };

std::string to_string(PartTag tag);
PartTag part_tag_from_string(const std::string& s);

struct PartDeclaration {
  PartTag tag = PartTag::one_dim;
  std::vector<std::size_t> reaction_indices;
  std::string label;
};

struct DecompositionDocument {
  std::vector<PartDeclaration> parts;
  std::optional<std::vector<double>> equilibrium;
};

class DecompositionFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses a `.dcmp.json` document against its parent network. With
/// `require_total`, every parent reaction must belong to some part.
DecompositionDocument parse_decomposition(std::string_view text, const MassActionSystem& parent,
                                          bool require_total = false);

std::string print_decomposition(const DecompositionDocument& doc, const MassActionSystem& parent);

}  // namespace crnscope
