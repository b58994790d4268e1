#include "crnscope/netparse.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "crnscope/report.hpp"

namespace crnscope {

ParseError::ParseError(std::size_t line, std::size_t column, const std::string& message)
    : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " +
                         message),
      line_(line),
      column_(column),
      message_(message) {}

namespace {

constexpr int kMaxCoefficient = 1000;

enum class Tok { ident, number, plus, minus, arrow, rev_arrow, semicolon, equals, comma, star, directive, end };

struct Token {
  Tok kind = Tok::end;
  std::string text;
  std::size_t col = 0;
};

class LineLexer {
 public:
  LineLexer(std::string_view line, std::size_t line_no) : line_(line), line_no_(line_no) {}

  std::vector<Token> tokens() {
    std::vector<Token> out;
    while (true) {
      Token t = next();
      out.push_back(t);
      if (t.kind == Tok::end) break;
    }
    return out;
  }

 private:
  static bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
  static bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
  static bool digit(char c) { return c >= '0' && c <= '9'; }

  Token next() {
    while (pos_ < line_.size() && (line_[pos_] == ' ' || line_[pos_] == '\t' || line_[pos_] == '\r')) ++pos_;
    Token t;
    t.col = pos_ + 1;
    if (pos_ >= line_.size() || line_[pos_] == '#') {
      t.kind = Tok::end;
      return t;
    }
    const char c = line_[pos_];
    if (ident_start(c)) {
      const std::size_t start = pos_;
      while (pos_ < line_.size() && ident_char(line_[pos_])) ++pos_;
      t.kind = Tok::ident;
      t.text = std::string(line_.substr(start, pos_ - start));
      return t;
    }
    if (c == '@') {
      const std::size_t start = ++pos_;
      while (pos_ < line_.size() && ident_char(line_[pos_])) ++pos_;
      t.kind = Tok::directive;
      t.text = std::string(line_.substr(start, pos_ - start));
      return t;
    }
    if (digit(c) || (c == '.' && pos_ + 1 < line_.size() && digit(line_[pos_ + 1]))) {
      const std::size_t start = pos_;
      while (pos_ < line_.size() && digit(line_[pos_])) ++pos_;
      if (pos_ < line_.size() && line_[pos_] == '.') {
        ++pos_;
        while (pos_ < line_.size() && digit(line_[pos_])) ++pos_;
      }
      if (pos_ < line_.size() && (line_[pos_] == 'e' || line_[pos_] == 'E')) {
        std::size_t p = pos_ + 1;
        if (p < line_.size() && (line_[p] == '+' || line_[p] == '-')) ++p;
        if (p < line_.size() && digit(line_[p])) {
          pos_ = p;
          while (pos_ < line_.size() && digit(line_[pos_])) ++pos_;
        }
      }
      t.kind = Tok::number;
      t.text = std::string(line_.substr(start, pos_ - start));
      return t;
    }
    auto rest = line_.substr(pos_);
    if (rest.starts_with("<->")) {
      pos_ += 3;
      t.kind = Tok::rev_arrow;
      return t;
    }
    if (rest.starts_with("->")) {
      pos_ += 2;
      t.kind = Tok::arrow;
      return t;
    }
    ++pos_;
    switch (c) {
      case '+': t.kind = Tok::plus; return t;
      case '-': t.kind = Tok::minus; return t;
      case ';': t.kind = Tok::semicolon; return t;
      case '=': t.kind = Tok::equals; return t;
      case ',': t.kind = Tok::comma; return t;
      case '*': t.kind = Tok::star; return t;
      default: break;
    }
    std::string shown = std::isprint(static_cast<unsigned char>(c)) ? std::string(1, c) : "\\x" + hex(c);
    throw ParseError(line_no_, t.col, "unexpected character '" + shown + "'");
  }

  static std::string hex(char c) {
    static const char* digits = "0123456789abcdef";
    const auto u = static_cast<unsigned char>(c);
    return {digits[u >> 4], digits[u & 15]};
  }

  std::string_view line_;
  std::size_t line_no_;
  std::size_t pos_ = 0;
};

struct RawComplex {
  std::vector<std::pair<std::string, int>> terms;  // merged per species
};

struct RawReaction {
  RawComplex reactant, product;
  double k = 0.0;
  std::size_t line = 0;
};

struct RawHint {
  std::vector<std::pair<std::string, double>> terms;
  double level = 0.0;
  std::size_t line = 0;
  std::size_t col = 0;
};

class Parser {
 public:
  Parser(std::vector<Token> toks, std::size_t line_no) : toks_(std::move(toks)), line_(line_no) {}

  const Token& peek() const { return toks_[i_]; }
  const Token& take() { return toks_[i_ < toks_.size() - 1 ? i_++ : i_]; }
  bool at(Tok k) const { return peek().kind == k; }

  [[noreturn]] void fail(const Token& t, const std::string& msg) const { throw ParseError(line_, t.col, msg); }

  const Token& expect(Tok k, const char* what) {
    if (!at(k)) fail(peek(), std::string("expected ") + what);
    return take();
  }

  double number(const Token& t) const {
    double v = 0.0;
    const char* b = t.text.data();
    const char* e = b + t.text.size();
    auto [ptr, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || ptr != e || !std::isfinite(v)) fail(t, "invalid number '" + t.text + "'");
    return v;
  }

  int coefficient(const Token& t) const {
    if (t.text.find_first_not_of("0123456789") != std::string::npos)
      fail(t, "stoichiometric coefficient must be a non-negative integer");
    if (t.text.size() > 4) fail(t, "stoichiometric coefficient too large");
    const int v = std::stoi(t.text);
    if (v > kMaxCoefficient) fail(t, "stoichiometric coefficient too large");
    return v;
  }

  RawComplex complex(std::vector<std::string>& order) {
    RawComplex c;
    if (at(Tok::number) && peek().text == "0" && toks_[i_ + 1].kind != Tok::ident) {
      take();
      return c;
    }
    while (true) {
      int coef = 1;
      if (at(Tok::number)) {
        const Token& t = take();
        coef = coefficient(t);
        if (coef == 0) fail(t, "zero coefficient");
      }
      const Token& name = expect(Tok::ident, "species name");
      if (name.text == "k" || name.text == "kf" || name.text == "kr")
        fail(name, "'" + name.text + "' is reserved for rate constants");
      if (std::find(order.begin(), order.end(), name.text) == order.end()) order.push_back(name.text);
      auto it = std::find_if(c.terms.begin(), c.terms.end(), [&](auto& p) { return p.first == name.text; });
      if (it == c.terms.end()) {
        c.terms.emplace_back(name.text, coef);
      } else {
        it->second += coef;
        if (it->second > kMaxCoefficient) fail(name, "stoichiometric coefficient too large");
      }
      if (!at(Tok::plus)) break;
      take();
    }
    return c;
  }

  // k = v | kf = v , kr = v
  std::map<std::string, double> rates() {
    std::map<std::string, double> out;
    while (true) {
      const Token& key = expect(Tok::ident, "rate name (k, kf or kr)");
      if (key.text != "k" && key.text != "kf" && key.text != "kr") fail(key, "unknown rate name '" + key.text + "'");
      expect(Tok::equals, "'='");
      const Token& val = expect(Tok::number, "rate constant");
      const double v = number(val);
      if (!(v > 0.0)) fail(val, "rate constant must be positive");
      if (!out.emplace(key.text, v).second) fail(key, "rate '" + key.text + "' given twice");
      if (!at(Tok::comma)) break;
      take();
    }
    return out;
  }

  std::size_t line() const { return line_; }

 private:
  std::vector<Token> toks_;
  std::size_t i_ = 0;
  std::size_t line_;
};

Stoich to_stoich(const RawComplex& c, const std::map<std::string, std::size_t>& index, std::size_t n) {
  Stoich s(n, 0);
  for (const auto& [name, coef] : c.terms) s[index.at(name)] = coef;
  return s;
}

}  // namespace

NetworkDocument parse_network(std::string_view text) {
  std::vector<std::string> order;
  std::vector<std::string> declared;
  std::size_t declared_line = 0;
  std::vector<RawReaction> raw;
  std::vector<RawHint> hints;
  std::vector<std::pair<std::string, double>> eq_terms;
  std::size_t eq_line = 0, eq_col = 0;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;

    Parser p(LineLexer(line, line_no).tokens(), line_no);
    if (p.at(Tok::end)) continue;

    if (p.at(Tok::directive)) {
      const Token dir = p.take();
      if (dir.text == "species") {
        if (!declared.empty()) p.fail(dir, "@species given twice");
        declared_line = line_no;
        while (true) {
          const Token& t = p.expect(Tok::ident, "species name");
          if (std::find(declared.begin(), declared.end(), t.text) != declared.end())
            p.fail(t, "species '" + t.text + "' declared twice");
          declared.push_back(t.text);
          if (!p.at(Tok::comma)) break;
          p.take();
        }
      } else if (dir.text == "conserve") {
        RawHint h;
        h.line = line_no;
        h.col = dir.col;
        bool negate = false;
        if (p.at(Tok::minus)) {
          p.take();
          negate = true;
        }
        while (true) {
          double w = 1.0;
          if (p.at(Tok::number)) {
            w = p.number(p.take());
            p.expect(Tok::star, "'*'");
          }
          const Token& name = p.expect(Tok::ident, "species name");
          h.terms.emplace_back(name.text, negate ? -w : w);
          if (p.at(Tok::plus)) {
            negate = false;
          } else if (p.at(Tok::minus)) {
            negate = true;
          } else {
            break;
          }
          p.take();
        }
        p.expect(Tok::equals, "'='");
        bool neg_level = false;
        if (p.at(Tok::minus)) {
          p.take();
          neg_level = true;
        }
        h.level = p.number(p.expect(Tok::number, "conserved level"));
        if (neg_level) h.level = -h.level;
        hints.push_back(std::move(h));
      } else if (dir.text == "equilibrium") {
        if (eq_line != 0) p.fail(dir, "@equilibrium given twice");
        eq_line = line_no;
        eq_col = dir.col;
        while (true) {
          const Token& name = p.expect(Tok::ident, "species name");
          p.expect(Tok::equals, "'='");
          const Token& val = p.expect(Tok::number, "concentration");
          const double v = p.number(val);
          if (!(v > 0.0)) p.fail(val, "equilibrium concentrations must be positive");
          eq_terms.emplace_back(name.text, v);
          if (!p.at(Tok::comma)) break;
          p.take();
        }
      } else {
        p.fail(dir, "unknown directive '@" + dir.text + "'");
      }
      if (!p.at(Tok::end)) p.fail(p.peek(), "unexpected trailing input");
      continue;
    }

    RawReaction r;
    r.line = line_no;
    r.reactant = p.complex(order);
    bool reversible = false;
    if (p.at(Tok::rev_arrow)) {
      reversible = true;
      p.take();
    } else {
      p.expect(Tok::arrow, "'->' or '<->'");
    }
    r.product = p.complex(order);
    const Token& semi = p.expect(Tok::semicolon, "';' before rate constants");
    const auto rates = p.rates();
    if (!p.at(Tok::end)) p.fail(p.peek(), "unexpected trailing input");
    if (reversible) {
      if (!rates.count("kf") || !rates.count("kr") || rates.count("k"))
        p.fail(semi, "'<->' needs 'kf = ..., kr = ...'");
      RawReaction rev;
      rev.line = line_no;
      rev.reactant = r.product;
      rev.product = r.reactant;
      r.k = rates.at("kf");
      rev.k = rates.at("kr");
      raw.push_back(r);
      raw.push_back(rev);
    } else {
      if (!rates.count("k") || rates.size() != 1) p.fail(semi, "'->' needs 'k = ...'");
      r.k = rates.at("k");
      raw.push_back(r);
    }
  }

  if (raw.empty()) throw ParseError(line_no, 1, "network has no reactions");

  std::vector<std::string> species = declared;
  for (const auto& s : order) {
    if (std::find(species.begin(), species.end(), s) == species.end()) species.push_back(s);
  }
  for (const auto& s : declared) {
    if (std::find(order.begin(), order.end(), s) == order.end())
      throw ParseError(declared_line, 1, "declared species '" + s + "' appears in no reaction");
  }
  std::map<std::string, std::size_t> index;
  for (std::size_t j = 0; j < species.size(); ++j) index[species[j]] = j;
  const std::size_t n = species.size();

  std::vector<Reaction> reactions;
  std::map<std::pair<Stoich, Stoich>, std::size_t> seen;
  for (const auto& rr : raw) {
    Reaction r{to_stoich(rr.reactant, index, n), to_stoich(rr.product, index, n), rr.k};
    if (r.reactant == r.product) throw ParseError(rr.line, 1, "reaction has identical reactant and product");
    auto [it, inserted] = seen.emplace(std::make_pair(r.reactant, r.product), rr.line);
    if (!inserted)
      throw ParseError(rr.line, 1, "duplicate reaction (first given on line " + std::to_string(it->second) + ")");
    reactions.push_back(std::move(r));
  }

  std::vector<ConservationHint> chints;
  for (const auto& h : hints) {
    ConservationHint c;
    c.weights.assign(n, 0.0);
    c.level = h.level;
    for (const auto& [name, w] : h.terms) {
      auto it = index.find(name);
      if (it == index.end()) throw ParseError(h.line, h.col, "unknown species '" + name + "' in @conserve");
      c.weights[it->second] += w;
    }
    chints.push_back(std::move(c));
  }

  std::optional<std::vector<double>> eq;
  if (eq_line != 0) {
    std::vector<double> v(n, 0.0);
    std::vector<bool> set(n, false);
    for (const auto& [name, val] : eq_terms) {
      auto it = index.find(name);
      if (it == index.end()) throw ParseError(eq_line, eq_col, "unknown species '" + name + "' in @equilibrium");
      if (set[it->second]) throw ParseError(eq_line, eq_col, "species '" + name + "' given twice in @equilibrium");
      v[it->second] = val;
      set[it->second] = true;
    }
    for (std::size_t j = 0; j < n; ++j)
      if (!set[j]) throw ParseError(eq_line, eq_col, "@equilibrium misses species '" + species[j] + "'");
    eq = std::move(v);
  }

  try {
    MassActionSystem mas(std::move(species), std::move(reactions), std::move(chints));
    return NetworkDocument{std::string(text), std::move(mas), std::move(eq)};
  } catch (const ModelError& e) {
    throw ParseError(1, 1, e.what());
  }
}

std::string format_complex(const Stoich& c, const std::vector<std::string>& species) {
  std::string out;
  for (std::size_t j = 0; j < c.size(); ++j) {
    if (c[j] == 0) continue;
    if (!out.empty()) out += " + ";
    if (c[j] != 1) out += std::to_string(c[j]) + " ";
    out += species[j];
  }
  return out.empty() ? "0" : out;
}

std::string format_reaction(const Reaction& r, const std::vector<std::string>& species) {
  return format_complex(r.reactant, species) + " -> " + format_complex(r.product, species);
}

std::string print_network(const MassActionSystem& mas, const std::optional<std::vector<double>>& equilibrium) {
  const auto& sp = mas.species();
  std::string out = "@species ";
  for (std::size_t j = 0; j < sp.size(); ++j) out += (j ? ", " : "") + sp[j];
  out += "\n";
  for (const auto& r : mas.reactions()) out += format_reaction(r, sp) + " ; k = " + format_double(r.k) + "\n";
  for (const auto& h : mas.hints()) {
    out += "@conserve ";
    bool first = true;
    for (std::size_t j = 0; j < sp.size(); ++j) {
      if (h.weights[j] == 0.0) continue;
      if (!first) out += h.weights[j] < 0 ? " - " : " + ";
      else if (h.weights[j] < 0) out += "-";
      out += format_double(std::abs(h.weights[j])) + "*" + sp[j];
      first = false;
    }
    if (first) out += "0*" + sp[0];
    out += " = " + format_double(h.level) + "\n";
  }
  if (equilibrium) {
    out += "@equilibrium ";
    for (std::size_t j = 0; j < sp.size(); ++j) out += (j ? ", " : "") + sp[j] + " = " + format_double((*equilibrium)[j]);
    out += "\n";
  }
  return out;
}

std::string to_string(PartTag tag) {
  switch (tag) {
    case PartTag::complex_balanced: return "complex_balanced";
    case PartTag::one_dim: return "one_dim";
    case PartTag::two_species: return "two_species";
    case PartTag::autocatalytic_pair: return "autocatalytic_pair";
  }
  return "one_dim";
}

PartTag part_tag_from_string(const std::string& s) {
  if (s == "complex_balanced") return PartTag::complex_balanced;
  if (s == "one_dim") return PartTag::one_dim;
  if (s == "two_species") return PartTag::two_species;
  if (s == "autocatalytic_pair") return PartTag::autocatalytic_pair;
  throw DecompositionFormatError("unknown part tag '" + s + "'");
}

DecompositionDocument parse_decomposition(std::string_view text, const MassActionSystem& parent,
                                          bool require_total) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DecompositionFormatError(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("parts") || !j["parts"].is_array())
    throw DecompositionFormatError("decomposition document needs a \"parts\" array");
  DecompositionDocument doc;
  const std::size_t r = parent.num_reactions();
  std::vector<int> owner(r, -1);
  for (const auto& pj : j["parts"]) {
    if (!pj.is_object() || !pj.contains("tag") || !pj.contains("reactions") || !pj["tag"].is_string() ||
        !pj["reactions"].is_array())
      throw DecompositionFormatError("each part needs \"tag\" and \"reactions\"");
    PartDeclaration part;
    part.tag = part_tag_from_string(pj["tag"].get<std::string>());
    if (pj.contains("label") && pj["label"].is_string()) part.label = pj["label"].get<std::string>();
    if (pj["reactions"].empty()) throw DecompositionFormatError("part with no reactions");
    for (const auto& ij : pj["reactions"]) {
      if (!ij.is_number_integer() || ij.get<long long>() < 0 || ij.get<long long>() >= static_cast<long long>(r))
        throw DecompositionFormatError("reaction index out of range: " + ij.dump());
      const auto idx = ij.get<std::size_t>();
      if (owner[idx] != -1)
        throw DecompositionFormatError("reaction " + std::to_string(idx) + " assigned to more than one part");
      owner[idx] = static_cast<int>(doc.parts.size());
      part.reaction_indices.push_back(idx);
    }
    doc.parts.push_back(std::move(part));
  }
  if (doc.parts.empty()) throw DecompositionFormatError("decomposition has no parts");
  if (require_total) {
    for (std::size_t i = 0; i < r; ++i)
      if (owner[i] == -1) throw DecompositionFormatError("reaction " + std::to_string(i) + " is in no part");
  }
  if (j.contains("equilibrium")) {
    const auto& ej = j["equilibrium"];
    if (!ej.is_array() || ej.size() != parent.num_species())
      throw DecompositionFormatError("equilibrium must list one value per species");
    std::vector<double> v;
    for (const auto& e : ej) {
      if (!e.is_number() || !(e.get<double>() > 0.0))
        throw DecompositionFormatError("equilibrium values must be positive numbers");
      v.push_back(e.get<double>());
    }
    doc.equilibrium = std::move(v);
  }
  return doc;
}

std::string print_decomposition(const DecompositionDocument& doc, const MassActionSystem& parent) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["species"] = parent.species();
  nlohmann::json parts = nlohmann::json::array();
  for (const auto& p : doc.parts) {
    nlohmann::json pj;
    pj["tag"] = to_string(p.tag);
    pj["reactions"] = p.reaction_indices;
    if (!p.label.empty()) pj["label"] = p.label;
    std::vector<std::string> text;
    for (auto i : p.reaction_indices) text.push_back(format_reaction(parent.reaction(i), parent.species()));
    pj["reaction_text"] = text;
    parts.push_back(std::move(pj));
  }
  j["parts"] = std::move(parts);
  if (doc.equilibrium) j["equilibrium"] = *doc.equilibrium;
  return emit_canonical(j);
}

}  // namespace crnscope
