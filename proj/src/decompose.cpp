#include "crnscope/decompose.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

namespace crnscope {

namespace {

std::vector<double> restrict(std::span<const double> x, const std::vector<std::size_t>& idx) {
  std::vector<double> y;
  for (auto i : idx) y.push_back(x[i]);
  return y;
}

std::string part_name(const Decomposition& d, std::size_t p) {
  const auto& label = d.parts[p].label;
  return label.empty() ? "part " + std::to_string(p) : label;
}

std::string species_list(const MassActionSystem& mas, const std::vector<std::size_t>& idx) {
  std::string s = "{";
  for (std::size_t a = 0; a < idx.size(); ++a) s += (a ? "," : "") + mas.species()[idx[a]];
  return s + "}";
}

std::vector<std::size_t> intersect(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  std::vector<std::size_t> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

bool subset_of(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

std::size_t local_index(const Part& part, std::size_t parent_species) {
  return static_cast<std::size_t>(std::find(part.species.begin(), part.species.end(), parent_species) -
                                  part.species.begin());
}

void finish(TheoremVerdict& v) {
  if (!v.applicable) {
    v.overall = Overall::not_applicable;
    v.certificate.reset();
    return;
  }
  const bool ok = std::all_of(v.conditions.begin(), v.conditions.end(), [](const Condition& c) { return c.pass; });
  v.overall = ok ? Overall::pass : Overall::fail;
  if (!ok) v.certificate.reset();
  else if (v.certificate) v.certificate->side_conditions = v.conditions;
}

Condition signed_condition(std::string id, std::string description, double value, bool want_negative) {
  Condition c;
  c.id = std::move(id);
  c.description = std::move(description);
  c.value = value;
  c.required = want_negative ? "<0" : ">0";
  c.pass = want_negative ? value < 0.0 : value > 0.0;
  return c;
}

Condition holds_condition(std::string id, std::string description, bool pass, std::optional<double> value = {}) {
  Condition c;
  c.id = std::move(id);
  c.description = std::move(description);
  c.value = value;
  c.required = "holds";
  c.pass = pass;
  return c;
}

LyapunovCertificate base_certificate(const Decomposition& d, CertificateKind kind, const std::string& theorem) {
  LyapunovCertificate c;
  c.kind = kind;
  c.theorem = theorem;
  c.species = d.parent.species();
  c.network_fingerprint = network_fingerprint(d.parent);
  c.x_star = d.x_star;
  c.radius = d.radius;
  if (d.cb_part) {
    const auto& p = d.parts[*d.cb_part];
    c.pieces.push_back({part_name(d, *d.cb_part), helmholtz_piece(p.species, d.x_star)});
  }
  return c;
}

std::vector<std::size_t> non_cb(const Decomposition& d) {
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < d.parts.size(); ++p)
    if (!d.cb_part || *d.cb_part != p) out.push_back(p);
  return out;
}

// Rate agreement on one shared species: reactions matched by the species'
// (reactant, product) coefficients, rate constants proportional.
struct ProportionalCheck {
  bool pass = false;
  double deviation = 0.0;
  std::string detail;
};

ProportionalCheck proportional_rates(const Part& p, const Part& q, std::size_t species) {
  auto keyed = [&](const Part& part) {
    const std::size_t s = local_index(part, species);
    std::vector<std::pair<std::pair<int, int>, double>> out;
    for (const auto& r : part.subsystem.reactions()) out.push_back({{r.reactant[s], r.product[s]}, r.k});
    std::sort(out.begin(), out.end());
    return out;
  };
  const auto a = keyed(p), b = keyed(q);
  ProportionalCheck res;
  if (a.size() != b.size()) {
    res.detail = "different reaction counts";
    res.deviation = INFINITY;
    return res;
  }
  for (std::size_t m = 0; m < a.size(); ++m) {
    if (a[m].first != b[m].first) {
      res.detail = "stoichiometric coefficients do not match";
      res.deviation = INFINITY;
      return res;
    }
  }
  const double c = a[0].second / b[0].second;
  for (std::size_t m = 0; m < a.size(); ++m) {
    const double dev = std::abs(a[m].second - c * b[m].second) / std::max(a[m].second, c * b[m].second);
    res.deviation = std::max(res.deviation, dev);
  }
  res.pass = res.deviation <= 1e-9;
  if (!res.pass) res.detail = "rate constants are not proportional";
  return res;
}

// Two-species shape for a part: S_i is its single shared species. Prefers an
// orientation whose R reactions all consume a + w_i of S_i.
struct ShapeChoice {
  TwoSpeciesShape shape;
  bool cond1 = false;
};

bool shape_cond1(const Part& part, const TwoSpeciesShape& s) {
  for (auto l : s.R)
    if (part.subsystem.reaction(l).reactant[s.i] - s.a != s.w_i) return false;
  return true;
}

std::optional<ShapeChoice> shared_shape(const Decomposition& d, std::size_t p) {
  const Part& part = d.parts[p];
  if (part.species.size() != 2 || d.shared[p].size() != 1) return std::nullopt;
  const std::size_t i = local_index(part, d.shared[p][0]);
  std::optional<ShapeChoice> first;
  for (const auto& s : two_species_shapes(part.subsystem, part.x_star, i)) {
    if (s.i != i) continue;
    ShapeChoice c{s, shape_cond1(part, s)};
    if (c.cond1) return c;
    if (!first) first = c;
  }
  return first;
}

// Hypotheses shared by the three "shared species" theorems.
bool require_shared_setup(const Decomposition& d, TheoremVerdict& v, bool need_rv) {
  bool ok = true;
  const auto parts = non_cb(d);
  if (!d.cb_part && !parts.empty()) {
    v.notes.push_back("no complex-balanced part");
    ok = false;
  }
  for (auto p : parts) {
    if (d.parts[p].dim != 1) {
      v.notes.push_back(part_name(d, p) + " is not 1-dimensional");
      ok = false;
    }
    if (need_rv && !d.parts[p].reaction_vector_balanced) {
      v.notes.push_back(part_name(d, p) + " is not reaction-vector balanced at x*");
      ok = false;
    }
    if (d.shared[p].empty()) {
      v.notes.push_back(part_name(d, p) + " shares no species with the complex-balanced part");
      ok = false;
    }
  }
  return ok;
}

bool intersection_rule(const Decomposition& d, std::size_t p, std::size_t q, TheoremVerdict& v) {
  const auto common = intersect(d.parts[p].species, d.parts[q].species);
  if (common.empty() || subset_of(common, d.shared_union)) return true;
  v.notes.push_back(part_name(d, p) + " and " + part_name(d, q) + " share " +
                    species_list(d.parent, common) + ", which is not inside the union of shared sets");
  return false;
}

// Shared 1-D part: mirror rule and the u~ direction sign. false when the
// L/R split is impossible.
bool add_shared_1d(const Decomposition& d, std::size_t p, TheoremVerdict& v, LyapunovCertificate& cert) {
  const Part& part = d.parts[p];
  std::vector<std::size_t> local_e;
  for (auto s : d.shared[p]) local_e.push_back(local_index(part, s));
  const auto split = classify_shared(part.subsystem, local_e);
  if (!split) {
    v.notes.push_back(part_name(d, p) + ": shared species do not all shift by exactly +-1");
    return false;
  }
  std::string detail;
  const bool mirror = shared_mirror_holds(part.subsystem, *split, &detail);
  v.conditions.push_back(holds_condition(part_name(d, p) + ":mirror",
                                         "every reaction moving a shared species has its mirrored reaction" +
                                             (detail.empty() ? std::string() : " (" + detail + ")"),
                                         mirror));
  const double val = shared_condition(part.subsystem, *split, part.x_star);
  v.conditions.push_back(signed_condition(part_name(d, p) + ":omega_grad_u",
                                          "omega . grad u~ at the restricted equilibrium", val, false));
  cert.pieces.push_back({part_name(d, p), shared_piece(part.subsystem, part.species, *split, part.x_star)});
  return true;
}

// Two-species part: orientation and positivity conditions.
void add_two_species(const Decomposition& d, std::size_t p, const ShapeChoice& sc, TheoremVerdict& v,
                     LyapunovCertificate& cert, std::set<std::size_t>& integrated) {
  const Part& part = d.parts[p];
  const auto& s = sc.shape;
  v.conditions.push_back(holds_condition(part_name(d, p) + ":shared_shift",
                                         "every R reaction has v_il - a = w_i for the shared species", sc.cond1));
  const auto cond = two_species_conditions(s, part.subsystem, part.x_star);
  v.conditions.push_back(signed_condition(part_name(d, p) + ":positivity",
                                          "w_j^-1 sum_L k (b - v_jl) x_j*^(v_jl - 1) for " +
                                              part.subsystem.species()[s.j],
                                          cond.con2, false));
  if (integrated.insert(part.species[s.j]).second)
    cert.pieces.push_back({part_name(d, p), two_species_piece_j(s, part.subsystem, part.species, part.x_star)});
}

std::vector<std::pair<std::size_t, std::size_t>> part_pairs(const std::vector<std::size_t>& parts) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t a = 0; a < parts.size(); ++a)
    for (std::size_t b = a + 1; b < parts.size(); ++b) out.emplace_back(parts[a], parts[b]);
  return out;
}

}  // namespace

std::string to_string(Overall o) {
  switch (o) {
    case Overall::pass: return "pass";
    case Overall::fail: return "fail";
    case Overall::not_applicable: return "not_applicable";
  }
  return "not_applicable";
}

DecompositionDocument Decomposition::document() const {
  DecompositionDocument doc;
  for (const auto& p : parts) doc.parts.push_back({p.tag, p.reactions, p.label});
  doc.equilibrium = x_star;
  return doc;
}

Decomposition validate_decomposition(const MassActionSystem& parent, std::span<const double> x_star,
                                     const DecompositionDocument& doc, const Tolerance& tol) {
  const std::size_t n = parent.num_species();
  if (x_star.size() != n) throw DecompositionError("equilibrium has wrong length");
  for (double v : x_star)
    if (!(v > 0.0) || !std::isfinite(v)) throw DecompositionError("equilibrium must be positive");
  if (doc.parts.empty()) throw DecompositionError("decomposition has no parts");
  std::vector<int> owner(parent.num_reactions(), -1);
  for (std::size_t p = 0; p < doc.parts.size(); ++p) {
    if (doc.parts[p].reaction_indices.empty()) throw DecompositionError("part " + std::to_string(p) + " is empty");
    for (auto i : doc.parts[p].reaction_indices) {
      if (i >= owner.size()) throw DecompositionError("reaction index " + std::to_string(i) + " out of range");
      if (owner[i] != -1)
        throw DecompositionError("reaction " + std::to_string(i) + " belongs to more than one part");
      owner[i] = static_cast<int>(p);
    }
  }
  for (std::size_t i = 0; i < owner.size(); ++i)
    if (owner[i] == -1) throw DecompositionError("reaction " + std::to_string(i) + " belongs to no part");
  if (!is_equilibrium(parent, x_star, tol)) throw DecompositionError("x* is not an equilibrium of the network");

  Decomposition d{parent, std::vector<double>(x_star.begin(), x_star.end()), {}, std::nullopt, {}, {}};
  for (std::size_t p = 0; p < doc.parts.size(); ++p) {
    const auto& decl = doc.parts[p];
    std::vector<std::size_t> map;
    auto sub = parent.subsystem(decl.reaction_indices, &map);
    Part part{decl.tag, decl.label, decl.reaction_indices, map, sub, restrict(x_star, map), 0, false};
    const std::string name = decl.label.empty() ? "part " + std::to_string(p) : decl.label;
    if (!is_equilibrium(part.subsystem, part.x_star, tol))
      throw DecompositionError(name + ": restricted x* is not an equilibrium of the part");
    part.dim = structure_report(part.subsystem).dim_S;
    part.reaction_vector_balanced = check_reaction_vector_balanced(part.subsystem, part.x_star, tol).holds;
    switch (decl.tag) {
      case PartTag::complex_balanced:
        if (d.cb_part) throw DecompositionError("more than one complex-balanced part");
        if (!check_complex_balanced(part.subsystem, part.x_star, tol).holds)
          throw DecompositionError(name + ": tagged complex_balanced but x* is not complex balanced");
        d.cb_part = p;
        break;
      case PartTag::one_dim:
        if (part.dim != 1) throw DecompositionError(name + ": tagged one_dim but has dimension " + std::to_string(part.dim));
        break;
      case PartTag::two_species:
        if (part.species.size() != 2 || part.dim != 1 || two_species_shapes(part.subsystem, part.x_star).empty())
          throw DecompositionError(name + ": tagged two_species but has no two-species shape");
        break;
      case PartTag::autocatalytic_pair:
        if (part.species.size() != 2 || !is_autocatalytic(part.subsystem).autocatalytic)
          throw DecompositionError(name + ": tagged autocatalytic_pair but is not a two-species autocatalytic network");
        break;
    }
    d.parts.push_back(std::move(part));
  }
  d.shared.resize(d.parts.size());
  std::set<std::size_t> uni;
  if (d.cb_part) {
    const auto& s0 = d.parts[*d.cb_part].species;
    for (std::size_t p = 0; p < d.parts.size(); ++p) {
      if (p == *d.cb_part) continue;
      d.shared[p] = intersect(s0, d.parts[p].species);
      uni.insert(d.shared[p].begin(), d.shared[p].end());
    }
  }
  d.shared_union.assign(uni.begin(), uni.end());
  return d;
}

std::vector<Decomposition> search_decomposition(const MassActionSystem& parent, std::span<const double> x_star,
                                                const SearchOptions& opts) {
  // direction classes in order of first reaction
  std::vector<std::vector<std::size_t>> classes;
  std::map<std::vector<long long>, std::size_t> cls;
  for (std::size_t i = 0; i < parent.num_reactions(); ++i) {
    auto [it, inserted] = cls.emplace(canonical_direction(parent.reaction(i).vector()), classes.size());
    if (inserted) classes.emplace_back();
    classes[it->second].push_back(i);
  }
  std::vector<std::size_t> peelable;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    std::vector<std::size_t> map;
    auto sub = parent.subsystem(classes[c], &map);
    if (check_reaction_vector_balanced(sub, restrict(x_star, map), opts.tol).holds) peelable.push_back(c);
  }

  // subsets of peelable classes, largest first
  const std::size_t m = peelable.size();
  std::vector<std::vector<std::size_t>> subsets;
  for (std::size_t size = m + 1; size-- > 0 && subsets.size() < opts.budget;) {
    std::vector<bool> pick(m, false);
    std::fill(pick.begin(), pick.begin() + static_cast<long>(size), true);
    do {
      std::vector<std::size_t> s;
      for (std::size_t a = 0; a < m; ++a)
        if (pick[a]) s.push_back(peelable[a]);
      subsets.push_back(std::move(s));
    } while (subsets.size() < opts.budget && std::prev_permutation(pick.begin(), pick.end()));
  }

  struct Scored {
    Decomposition dec;
    std::size_t parts, shared, one_dim, order;
  };
  std::vector<Scored> found;
  for (const auto& subset : subsets) {
    DecompositionDocument doc;
    std::vector<bool> taken(parent.num_reactions(), false);
    for (auto c : subset) {
      std::vector<std::size_t> map;
      auto sub = parent.subsystem(classes[c], &map);
      PartTag tag = PartTag::one_dim;
      if (sub.num_species() == 2 && is_autocatalytic(sub).autocatalytic) tag = PartTag::autocatalytic_pair;
      else if (sub.num_species() == 2 && !two_species_shapes(sub, restrict(x_star, map)).empty())
        tag = PartTag::two_species;
      doc.parts.push_back({tag, classes[c], "N" + std::to_string(doc.parts.size() + 1)});
      for (auto i : classes[c]) taken[i] = true;
    }
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < taken.size(); ++i)
      if (!taken[i]) rest.push_back(i);
    if (!rest.empty()) {
      std::vector<std::size_t> map;
      auto sub = parent.subsystem(rest, &map);
      if (!check_complex_balanced(sub, restrict(x_star, map), opts.tol).holds) continue;
      doc.parts.insert(doc.parts.begin(), PartDeclaration{PartTag::complex_balanced, rest, "N0"});
    }
    try {
      Decomposition dec = validate_decomposition(parent, x_star, doc, opts.tol);
      std::map<std::size_t, int> count;
      for (const auto& p : dec.parts)
        for (auto s : p.species) ++count[s];
      std::size_t shared = 0;
      for (const auto& [s, k] : count) shared += k > 1;
      std::size_t one_dim = dec.parts.size() - (dec.cb_part ? 1 : 0);
      found.push_back({std::move(dec), doc.parts.size(), shared, one_dim, found.size()});
    } catch (const DecompositionError&) {
    }
  }
  std::stable_sort(found.begin(), found.end(), [](const Scored& a, const Scored& b) {
    return std::tie(a.parts, a.shared, a.one_dim, a.order) < std::tie(b.parts, b.shared, b.one_dim, b.order);
  });
  std::vector<Decomposition> out;
  for (auto& s : found) out.push_back(std::move(s.dec));
  return out;
}

TheoremVerdict check_thm_disjoint(const Decomposition& d) {
  TheoremVerdict v;
  v.theorem_id = "thm_disjoint";
  v.applicable = true;
  for (std::size_t p = 0; p < d.parts.size(); ++p)
    for (std::size_t q = p + 1; q < d.parts.size(); ++q) {
      const auto common = intersect(d.parts[p].species, d.parts[q].species);
      if (!common.empty()) {
        v.notes.push_back(part_name(d, p) + " and " + part_name(d, q) + " share " + species_list(d.parent, common));
        v.applicable = false;
      }
    }
  const auto parts = non_cb(d);
  for (auto p : parts)
    if (d.parts[p].dim != 1) {
      v.notes.push_back(part_name(d, p) + " is not 1-dimensional");
      v.applicable = false;
    }
  if (!v.applicable) {
    finish(v);
    return v;
  }
  CertificateKind kind = CertificateKind::composite_thm33;
  if (parts.empty()) kind = CertificateKind::pseudo_helmholtz;
  else if (parts.size() == 1 && !d.cb_part) kind = CertificateKind::one_dim;
  LyapunovCertificate cert = base_certificate(d, kind, v.theorem_id);
  for (auto p : parts) {
    const Part& part = d.parts[p];
    OneDimGeometry geo = one_dim_geometry(part.subsystem, part.x_star);
    bool pos = false, neg = false;
    for (auto b : geo.betas) (b > 0 ? pos : neg) = true;
    if (!pos || !neg) {
      v.notes.push_back(part_name(d, p) + " has reactions in one direction only");
      v.applicable = false;
      continue;
    }
    const double val = one_dim_condition(part.subsystem, geo);
    v.conditions.push_back(
        signed_condition(part_name(d, p) + ":omega_grad_h", "omega . grad h(x*, 1) of the 1-D part", val, true));
    cert.pieces.push_back({part_name(d, p), one_dim_piece(part.subsystem, part.species, geo)});
  }
  v.certificate = std::move(cert);
  finish(v);
  return v;
}

TheoremVerdict check_thm_shared_1d(const Decomposition& d) {
  TheoremVerdict v;
  v.theorem_id = "thm_com_1";
  v.applicable = require_shared_setup(d, v, true);
  const auto parts = non_cb(d);
  for (auto [p, q] : part_pairs(parts)) v.applicable = intersection_rule(d, p, q, v) && v.applicable;
  LyapunovCertificate cert = base_certificate(d, CertificateKind::composite_thm34, v.theorem_id);
  if (v.applicable)
    for (auto p : parts) v.applicable = add_shared_1d(d, p, v, cert) && v.applicable;
  v.certificate = std::move(cert);
  finish(v);
  return v;
}

TheoremVerdict check_thm_shared_two_species(const Decomposition& d) {
  TheoremVerdict v;
  v.theorem_id = "thm_com_tw";
  v.applicable = require_shared_setup(d, v, true);
  const auto parts = non_cb(d);
  std::map<std::size_t, ShapeChoice> shapes;
  for (auto p : parts) {
    if (d.parts[p].species.size() != 2) {
      v.notes.push_back(part_name(d, p) + " is not a two-species network");
      v.applicable = false;
      continue;
    }
    if (d.shared[p].size() != 1) {
      v.notes.push_back(part_name(d, p) + " does not share exactly one species with the complex-balanced part");
      v.applicable = false;
      continue;
    }
    auto sc = shared_shape(d, p);
    if (!sc) {
      v.notes.push_back(part_name(d, p) + " has no two-species shape with the shared species as S_i");
      v.applicable = false;
      continue;
    }
    shapes.emplace(p, *sc);
  }
  for (auto [p, q] : part_pairs(parts)) {
    for (auto s : intersect(d.parts[p].species, d.parts[q].species)) {
      const auto pr = proportional_rates(d.parts[p], d.parts[q], s);
      v.conditions.push_back(holds_condition(part_name(d, p) + "~" + part_name(d, q) + ":" + d.parent.species()[s],
                                             "rate constants proportional after matching on " +
                                                 d.parent.species()[s] +
                                                 (pr.detail.empty() ? std::string() : " (" + pr.detail + ")"),
                                             pr.pass, pr.deviation));
    }
  }
  LyapunovCertificate cert = base_certificate(d, CertificateKind::composite_thm46, v.theorem_id);
  std::set<std::size_t> integrated;
  for (auto& [p, sc] : shapes) add_two_species(d, p, sc, v, cert, integrated);
  v.certificate = std::move(cert);
  finish(v);
  return v;
}

TheoremVerdict check_corollary_mixed(const Decomposition& d) {
  TheoremVerdict v;
  v.theorem_id = "cor_mixed";
  v.applicable = require_shared_setup(d, v, true);
  const auto parts = non_cb(d);
  LyapunovCertificate cert = base_certificate(d, CertificateKind::composite_cor47, v.theorem_id);
  if (!v.applicable) {
    finish(v);
    return v;
  }
  std::map<std::size_t, ShapeChoice> shapes;
  for (auto p : parts)
    if (auto sc = shared_shape(d, p)) shapes.emplace(p, *sc);

  // a two-species part takes the two-species path when it agrees on rates
  // with every part it shares an unshared-with-N0 species with
  std::map<std::size_t, bool> route46;
  for (auto p : parts) {
    bool ok = shapes.count(p) > 0;
    for (auto q : parts) {
      if (!ok || q == p) continue;
      for (auto s : intersect(d.parts[p].species, d.parts[q].species)) {
        if (std::binary_search(d.shared_union.begin(), d.shared_union.end(), s)) continue;
        ok = ok && shapes.count(q) > 0 && proportional_rates(d.parts[p], d.parts[q], s).pass;
      }
    }
    route46[p] = ok;
    v.notes.push_back(part_name(d, p) + " routed to the " + (ok ? "thm_com_tw" : "thm_com_1") + " conditions");
  }
  for (auto [p, q] : part_pairs(parts)) {
    if (route46[p] && route46[q]) {
      for (auto s : intersect(d.parts[p].species, d.parts[q].species)) {
        if (std::binary_search(d.shared_union.begin(), d.shared_union.end(), s)) continue;
        const auto pr = proportional_rates(d.parts[p], d.parts[q], s);
        v.conditions.push_back(holds_condition(part_name(d, p) + "~" + part_name(d, q) + ":" + d.parent.species()[s],
                                               "rate constants proportional after matching on " +
                                                   d.parent.species()[s],
                                               pr.pass, pr.deviation));
      }
    } else {
      v.applicable = intersection_rule(d, p, q, v) && v.applicable;
    }
  }
  std::set<std::size_t> integrated;
  for (auto p : parts) {
    if (route46[p]) add_two_species(d, p, shapes.at(p), v, cert, integrated);
    else v.applicable = add_shared_1d(d, p, v, cert) && v.applicable;
  }
  v.certificate = std::move(cert);
  finish(v);
  return v;
}

AutocatalyticStructure is_autocatalytic(const MassActionSystem& mas) {
  AutocatalyticStructure out;
  const std::size_t n = mas.num_species();
  // (i, j) -> reactions S_i + (alpha - 1) S_j -> alpha S_j
  std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> groups;
  for (std::size_t l = 0; l < mas.num_reactions(); ++l) {
    const auto& r = mas.reaction(l);
    std::optional<std::size_t> i, j;
    for (std::size_t s = 0; s < n; ++s) {
      const int d = r.product[s] - r.reactant[s];
      if (d == -1 && !i) i = s;
      else if (d == 1 && !j) j = s;
      else if (d != 0) i = j = std::nullopt, s = n;
    }
    bool form = i && j;
    if (form) {
      const int alpha = r.product[*j];
      for (std::size_t s = 0; s < n && form; ++s) {
        const int want_r = s == *i ? 1 : s == *j ? alpha - 1 : 0;
        const int want_p = s == *j ? alpha : 0;
        form = r.reactant[s] == want_r && r.product[s] == want_p;
      }
    }
    if (!form) {
      out.reason = "reaction " + std::to_string(l) + " (" + format_reaction(r, mas.species()) +
                   ") is not of the form S_i + (a-1) S_j -> a S_j";
      return out;
    }
    groups[{*i, *j}].push_back(l);
  }
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& [key, ls] : groups) {
    const auto lo = std::min(key.first, key.second), hi = std::max(key.first, key.second);
    if (!seen.insert({lo, hi}).second) continue;
    AutocatalyticPair p{lo, hi, {}, {}};
    if (auto it = groups.find({lo, hi}); it != groups.end()) p.forward = it->second;
    if (auto it = groups.find({hi, lo}); it != groups.end()) p.backward = it->second;
    out.pairs.push_back(std::move(p));
  }
  auto alpha_of = [&](std::size_t l, std::size_t j) { return mas.reaction(l).product[j]; };
  auto mono = [&](std::size_t i, std::size_t j) -> std::optional<std::size_t> {
    auto it = groups.find({i, j});
    if (it == groups.end()) return std::nullopt;
    for (auto l : it->second)
      if (alpha_of(l, j) == 1) return l;
    return std::nullopt;
  };
  bool reversible_pair = false;
  for (const auto& [key, ls] : groups)
    if (mono(key.first, key.second) && mono(key.second, key.first)) reversible_pair = true;
  if (!reversible_pair) {
    out.reason = "no pair of monomolecular reversible reactions";
    return out;
  }
  // proportional rates over shared molecularities into a common target
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<std::size_t> sources;
    for (std::size_t i = 0; i < n; ++i)
      if (i != j && mono(i, j)) sources.push_back(i);
    for (std::size_t a = 0; a < sources.size(); ++a) {
      for (std::size_t b = a + 1; b < sources.size(); ++b) {
        std::map<int, std::vector<double>> ka, kb;
        for (auto l : groups[{sources[a], j}]) ka[alpha_of(l, j)].push_back(mas.reaction(l).k);
        for (auto l : groups[{sources[b], j}]) kb[alpha_of(l, j)].push_back(mas.reaction(l).k);
        std::optional<double> c;
        for (const auto& [alpha, ks] : ka) {
          auto it = kb.find(alpha);
          if (it == kb.end()) continue;
          if (ks.size() != 1 || it->second.size() != 1) continue;
          const double ratio = it->second[0] / ks[0];
          if (!c) c = ratio;
          else if (std::abs(ratio - *c) > 1e-9 * std::max(ratio, *c)) {
            out.reason = "rate constants into " + mas.species()[j] + " from " + mas.species()[sources[a]] +
                         " and " + mas.species()[sources[b]] + " are not proportional";
            return out;
          }
        }
      }
    }
  }
  out.autocatalytic = true;
  return out;
}

PairBalanceComparison compare_pair_balance(const MassActionSystem& mas, std::span<const double> x_star,
                                           const Tolerance& tol) {
  PairBalanceComparison c;
  c.full_network = check_reaction_vector_balanced(mas, x_star, tol).holds;
  const auto st = is_autocatalytic(mas);
  c.all_pairs = true;
  for (const auto& p : st.pairs) {
    std::vector<std::size_t> rs = p.forward;
    rs.insert(rs.end(), p.backward.begin(), p.backward.end());
    std::vector<std::size_t> map;
    auto sub = mas.subsystem(rs, &map);
    c.all_pairs = c.all_pairs && check_reaction_vector_balanced(sub, restrict(x_star, map), tol).holds;
  }
  return c;
}

TheoremVerdict check_thm_auto(const MassActionSystem& mas, std::span<const double> x_star, const Tolerance& tol,
                              double radius) {
  TheoremVerdict v;
  v.theorem_id = "thm_auto";
  const auto st = is_autocatalytic(mas);
  if (!st.autocatalytic) {
    v.notes.push_back("not autocatalytic: " + st.reason);
    finish(v);
    return v;
  }
  v.applicable = true;
  LyapunovCertificate cert;
  cert.kind = st.pairs.size() == 1 ? CertificateKind::autocat_two_species : CertificateKind::composite_thm52;
  cert.theorem = v.theorem_id;
  cert.species = mas.species();
  cert.network_fingerprint = network_fingerprint(mas);
  cert.x_star.assign(x_star.begin(), x_star.end());
  cert.radius = radius;

  std::map<std::size_t, int> multiplicity;
  for (const auto& p : st.pairs) ++multiplicity[p.i], ++multiplicity[p.j];

  for (const auto& p : st.pairs) {
    const std::string name = "(" + mas.species()[p.i] + "," + mas.species()[p.j] + ")";
    std::vector<std::size_t> rs = p.forward;
    rs.insert(rs.end(), p.backward.begin(), p.backward.end());
    std::vector<std::size_t> map;
    auto sub = mas.subsystem(rs, &map);
    const auto xs = restrict(x_star, map);
    const auto bal = check_reaction_vector_balanced(sub, xs, tol);
    double resid = 0.0;
    for (const auto& g : bal.groups) resid = std::max(resid, std::abs(g.residual()));
    v.conditions.push_back(holds_condition(name + ":balanced", "pair " + name + " reaction-vector balanced at x*",
                                           bal.holds, resid));
    const auto shape = autocatalytic_shape(sub, xs, 0, 1);
    if (!shape) {
      v.conditions.push_back(holds_condition(name + ":both_directions", "pair " + name + " has reactions both ways",
                                             false));
      continue;
    }
    const auto ac = autocat_two_species_conditions(*shape, sub, xs);
    v.conditions.push_back(signed_condition(name + ":con1", "sum over R_{i,j} of k (2 - alpha_j) x_j*^(alpha_j - 1)",
                                            ac.con1, false));
    v.conditions.push_back(signed_condition(name + ":con2", "sum over R_{j,i} of k (2 - alpha_i) x_i*^(alpha_i - 1)",
                                            ac.con2, false));
    if (ac.shortcut) v.notes.push_back("pair " + name + " is at most bimolecular; stability follows directly");
    auto pi = two_species_piece_i(*shape, sub, map, xs);
    auto pj = two_species_piece_j(*shape, sub, map, xs);
    pi.weight /= multiplicity[pi.species];
    pj.weight /= multiplicity[pj.species];
    cert.pieces.push_back({name, pi});
    cert.pieces.push_back({name, pj});
  }
  const auto cmp = compare_pair_balance(mas, x_star, tol);
  v.conditions.push_back(holds_condition("pair_balance_equivalence",
                                         "full-network reaction-vector balance agrees with balance of every pair",
                                         cmp.agree()));
  v.certificate = std::move(cert);
  finish(v);
  return v;
}

void to_json(nlohmann::json& j, const Decomposition& d) {
  j = nlohmann::json::object();
  j["species"] = d.parent.species();
  j["x_star"] = d.x_star;
  auto parts = nlohmann::json::array();
  for (std::size_t p = 0; p < d.parts.size(); ++p) {
    const auto& part = d.parts[p];
    nlohmann::json pj;
    pj["label"] = part.label;
    pj["tag"] = to_string(part.tag);
    pj["reactions"] = part.reactions;
    std::vector<std::string> names;
    for (auto s : part.species) names.push_back(d.parent.species()[s]);
    pj["species"] = names;
    std::vector<std::string> shared;
    for (auto s : d.shared[p]) shared.push_back(d.parent.species()[s]);
    pj["shared_with_complex_balanced"] = shared;
    pj["dimension"] = part.dim;
    pj["reaction_vector_balanced"] = part.reaction_vector_balanced;
    parts.push_back(std::move(pj));
  }
  j["parts"] = std::move(parts);
}

void to_json(nlohmann::json& j, const TheoremVerdict& v) {
  j = nlohmann::json::object();
  j["theorem"] = v.theorem_id;
  j["applicable"] = v.applicable;
  j["overall"] = to_string(v.overall);
  j["conditions"] = v.conditions;
  j["notes"] = v.notes;
}

}  // namespace crnscope
