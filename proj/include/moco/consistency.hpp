#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "moco/interval.hpp"
#include "moco/model.hpp"

namespace moco {

class EmptySubsystemError : public Error {
 public:
  using Error::Error;
};

class NotASubsetError : public Error {
 public:
  using Error::Error;
};

class EnumerationCapError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Constraint graph

enum class FunctionRole { ConstraintLhs, ConstraintRhs, Objective };

inline std::string lhs_id(std::string_view constraint_name) { return "L:" + std::string(constraint_name); }
inline std::string rhs_id(std::string_view constraint_name) { return "R:" + std::string(constraint_name); }
inline std::string objective_id(std::string_view objective_name) { return "obj:" + std::string(objective_name); }

/// Bipartite multigraph between variables and the functions touching their
/// properties: one function node per constraint side and per objective, one
/// edge per syntactic PropertyRef occurrence (parallel edges mean a function
/// uses several properties of the same variable, or one property repeatedly).
struct ConstraintGraph {
  struct Function {
    std::string id;
    FunctionRole role;
    int index;  // constraint or objective index in the model
    Expression expr;
  };

  std::vector<std::string> variables;
  std::vector<Function> functions;
  std::vector<std::pair<std::string, PropertyKey>> edges;

  const Function* find(std::string_view id) const {
    for (const Function& f : functions)
      if (f.id == id) return &f;
    return nullptr;
  }
};

inline ConstraintGraph build_graph(const SystemModel& m) {
  m.validate();
  ConstraintGraph g;
  for (const Catalog& c : m.catalogs()) g.variables.push_back(c.variable_name());
  auto add = [&](std::string id, FunctionRole role, int index, const Expression& e) {
    e.for_each_property([&](const PropertyKey& k) { g.edges.emplace_back(id, k); });
    g.functions.push_back({std::move(id), role, index, e});
  };
  for (std::size_t i = 0; i < m.constraints().size(); ++i) {
    const Constraint& c = m.constraints()[i];
    add(lhs_id(c.name), FunctionRole::ConstraintLhs, static_cast<int>(i), c.lhs);
    add(rhs_id(c.name), FunctionRole::ConstraintRhs, static_cast<int>(i), c.rhs);
  }
  for (std::size_t i = 0; i < m.objectives().size(); ++i) {
    const Objective& o = m.objectives()[i];
    add(objective_id(o.name), FunctionRole::Objective, static_cast<int>(i), o.expr);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Polarity by interval sign propagation

enum class Polarity { Monotone, Antitone, Constant, Mixed };

inline std::string_view to_string(Polarity p) {
  switch (p) {
    case Polarity::Monotone: return "monotone";
    case Polarity::Antitone: return "antitone";
    case Polarity::Constant: return "constant";
    case Polarity::Mixed: return "mixed";
  }
  return "?";
}

struct ValueRange {
  PropertyKey property;
  double lo = 0.0;
  double hi = 0.0;
};

inline std::vector<ValueRange> value_ranges(const SystemModel& m) {
  std::vector<ValueRange> out;
  for (const Catalog& c : m.catalogs()) {
    for (std::size_t col = 0; col < c.property_count(); ++col) {
      double lo = c.value(0, static_cast<int>(col)), hi = lo;
      for (std::size_t row = 1; row < c.size(); ++row) {
        const double v = c.value(static_cast<int>(row), static_cast<int>(col));
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      out.push_back({{c.variable_name(), c.property_names()[col]}, lo, hi});
    }
  }
  return out;
}

namespace detail {

inline Polarity flip(Polarity p) {
  if (p == Polarity::Monotone) return Polarity::Antitone;
  if (p == Polarity::Antitone) return Polarity::Monotone;
  return p;
}

inline Polarity join(Polarity a, Polarity b) {
  if (a == Polarity::Mixed || b == Polarity::Mixed) return Polarity::Mixed;
  if (a == Polarity::Constant) return b;
  if (b == Polarity::Constant) return a;
  return a == b ? a : Polarity::Mixed;
}

struct PolState {
  Polarity pol;
  Interval range;
};

inline PolState polarity_rec(const Expression& e, const PropertyKey& p,
                             const std::map<PropertyKey, Interval>& ranges) {
  using Kind = Expression::Kind;
  switch (e.kind()) {
    case Kind::Constant:
      return {Polarity::Constant, Interval::point(e.constant_value())};
    case Kind::PropertyRef: {
      auto it = ranges.find(e.key());
      if (it == ranges.end())
        throw ModelError("no value range for property '" + to_string(e.key()) + "'");
      return {e.key() == p ? Polarity::Monotone : Polarity::Constant, it->second};
    }
    case Kind::Neg: {
      PolState c = polarity_rec(e.children()[0], p, ranges);
      return {flip(c.pol), -c.range};
    }
    case Kind::Add: {
      PolState l = polarity_rec(e.children()[0], p, ranges);
      PolState r = polarity_rec(e.children()[1], p, ranges);
      return {join(l.pol, r.pol), l.range + r.range};
    }
    case Kind::Sub: {
      PolState l = polarity_rec(e.children()[0], p, ranges);
      PolState r = polarity_rec(e.children()[1], p, ranges);
      return {join(l.pol, flip(r.pol)), l.range - r.range};
    }
    case Kind::Mul: {
      PolState l = polarity_rec(e.children()[0], p, ranges);
      PolState r = polarity_rec(e.children()[1], p, ranges);
      const Interval range = l.range * r.range;
      Polarity pol;
      if (l.pol == Polarity::Constant && r.pol == Polarity::Constant) {
        pol = Polarity::Constant;
      } else if (l.pol == Polarity::Constant || r.pol == Polarity::Constant) {
        // One side is a cofactor: its certified sign decides the direction.
        const PolState& varying = l.pol == Polarity::Constant ? r : l;
        const PolState& cofactor = l.pol == Polarity::Constant ? l : r;
        if (cofactor.range.nonnegative()) pol = varying.pol;
        else if (cofactor.range.nonpositive()) pol = flip(varying.pol);
        else pol = Polarity::Mixed;
      } else if (l.pol == Polarity::Mixed || r.pol == Polarity::Mixed || l.pol != r.pol) {
        pol = Polarity::Mixed;
      } else if (l.range.nonnegative() && r.range.nonnegative()) {
        pol = l.pol;  // product of same-direction nonnegative factors
      } else if (l.range.nonpositive() && r.range.nonpositive()) {
        pol = flip(l.pol);
      } else {
        pol = Polarity::Mixed;
      }
      return {pol, range};
    }
    case Kind::Div: {
      PolState l = polarity_rec(e.children()[0], p, ranges);
      PolState r = polarity_rec(e.children()[1], p, ranges);
      const Interval range = l.range / r.range;
      if (l.pol == Polarity::Constant && r.pol == Polarity::Constant)
        return {Polarity::Constant, range};
      if (r.range.contains_zero()) return {Polarity::Mixed, range};
      // Treat as multiplication by the reciprocal, which flips r's direction.
      PolState inv{flip(r.pol), reciprocal(r.range)};
      Polarity pol;
      if (inv.pol == Polarity::Constant) {
        if (inv.range.nonnegative()) pol = l.pol;
        else if (inv.range.nonpositive()) pol = flip(l.pol);
        else pol = Polarity::Mixed;
      } else if (l.pol == Polarity::Constant) {
        if (l.range.nonnegative()) pol = inv.pol;
        else if (l.range.nonpositive()) pol = flip(inv.pol);
        else pol = Polarity::Mixed;
      } else if (l.pol == Polarity::Mixed || inv.pol == Polarity::Mixed || l.pol != inv.pol) {
        pol = Polarity::Mixed;
      } else if (l.range.nonnegative() && inv.range.nonnegative()) {
        pol = l.pol;
      } else if (l.range.nonpositive() && inv.range.nonpositive()) {
        pol = flip(l.pol);
      } else {
        pol = Polarity::Mixed;
      }
      return {pol, range};
    }
    case Kind::Min:
    case Kind::Max: {
      PolState acc = polarity_rec(e.children()[0], p, ranges);
      for (std::size_t i = 1; i < e.children().size(); ++i) {
        PolState c = polarity_rec(e.children()[i], p, ranges);
        acc.pol = join(acc.pol, c.pol);
        acc.range = e.kind() == Kind::Min ? interval_min(acc.range, c.range)
                                          : interval_max(acc.range, c.range);
      }
      return acc;
    }
  }
  throw ModelError("corrupt expression node");
}

}  // namespace detail

/// Sound, conservative monotonicity classification of expr with respect to
/// property p. Monotone/Antitone are only returned when certifiable by sign
/// propagation over the given ranges; Constant when p does not occur.
inline Polarity polarity(const Expression& e, const PropertyKey& p,
                         const std::vector<ValueRange>& ranges) {
  std::map<PropertyKey, Interval> lookup;
  for (const ValueRange& r : ranges) lookup.emplace(r.property, Interval{r.lo, r.hi});
  return detail::polarity_rec(e, p, lookup).pol;
}

// ---------------------------------------------------------------------------
// Property classification

enum class PropertyKind { ConsistentMax, ConsistentMin, Inconsistent };

inline std::string_view to_string(PropertyKind k) {
  switch (k) {
    case PropertyKind::ConsistentMax: return "consistent-max";
    case PropertyKind::ConsistentMin: return "consistent-min";
    case PropertyKind::Inconsistent: return "inconsistent";
  }
  return "?";
}

struct PolarityWitness {
  std::string function_id;
  Polarity polarity;
};

struct PropertyClassification {
  PropertyKey property;
  PropertyKind kind;
  std::vector<PolarityWitness> witnesses;
};

/// Declared polarity for one (function, property) pair; overrides the
/// conservative syntactic analysis and can be audited exhaustively.
struct PolarityOverride {
  std::string function_id;
  PropertyKey property;
  Polarity polarity;
};

namespace detail {

inline bool satisfies_max(FunctionRole role, Direction dir, Relation rel, Polarity pol) {
  if (rel == Relation::Equal) return false;
  if (pol == Polarity::Constant) return true;
  const bool wants_antitone =
      role == FunctionRole::ConstraintLhs ||
      (role == FunctionRole::Objective && dir == Direction::Minimize);
  return wants_antitone ? pol == Polarity::Antitone : pol == Polarity::Monotone;
}

inline bool satisfies_min(FunctionRole role, Direction dir, Relation rel, Polarity pol) {
  if (rel == Relation::Equal) return false;
  if (pol == Polarity::Constant) return true;
  const bool wants_monotone =
      role == FunctionRole::ConstraintLhs ||
      (role == FunctionRole::Objective && dir == Direction::Minimize);
  return wants_monotone ? pol == Polarity::Monotone : pol == Polarity::Antitone;
}

inline const PolarityOverride* find_override(const std::vector<PolarityOverride>& overrides,
                                             std::string_view function_id,
                                             const PropertyKey& p) {
  for (const PolarityOverride& o : overrides)
    if (o.function_id == function_id && o.property == p) return &o;
  return nullptr;
}

}  // namespace detail

/// Applies the consistency rules: a consistent-max property is antitone in
/// every constraint lhs and minimized objective containing it and monotone in
/// every constraint rhs and maximized objective; consistent-min is the dual.
/// Any occurrence in an Equal constraint, or any Mixed occurrence, makes it
/// inconsistent. A property with only Constant occurrences (or none at all)
/// classifies consistent-max vacuously.
inline PropertyClassification classify_property(const SystemModel& m, const PropertyKey& p,
                                                const std::vector<PolarityOverride>& overrides = {}) {
  const ConstraintGraph g = build_graph(m);
  const std::vector<ValueRange> ranges = value_ranges(m);
  std::map<PropertyKey, Interval> lookup;
  for (const ValueRange& r : ranges) lookup.emplace(r.property, Interval{r.lo, r.hi});

  PropertyClassification out{p, PropertyKind::ConsistentMax, {}};
  bool ok_max = true, ok_min = true;
  for (const ConstraintGraph::Function& f : g.functions) {
    if (!f.expr.contains_property(p)) continue;
    Polarity pol;
    if (const PolarityOverride* o = detail::find_override(overrides, f.id, p)) pol = o->polarity;
    else pol = detail::polarity_rec(f.expr, p, lookup).pol;
    out.witnesses.push_back({f.id, pol});

    Relation rel = Relation::LessOrEqual;
    Direction dir = Direction::Minimize;
    if (f.role == FunctionRole::Objective) dir = m.objectives()[static_cast<std::size_t>(f.index)].direction;
    else rel = m.constraints()[static_cast<std::size_t>(f.index)].relation;

    ok_max = ok_max && detail::satisfies_max(f.role, dir, rel, pol);
    ok_min = ok_min && detail::satisfies_min(f.role, dir, rel, pol);
  }
  out.kind = ok_max   ? PropertyKind::ConsistentMax
             : ok_min ? PropertyKind::ConsistentMin
                      : PropertyKind::Inconsistent;
  return out;
}

// ---------------------------------------------------------------------------
// Subsystem sharing

namespace detail {

inline void check_subsystem(const SystemModel& m, const std::set<std::string>& x) {
  if (x.empty()) throw EmptySubsystemError("subsystem has no variables");
  for (const std::string& v : x)
    if (m.variable_index(v) < 0)
      throw NotASubsetError("subsystem variable '" + v + "' not in the model");
}

inline bool spans(const std::set<std::string>& vars, const std::set<std::string>& x,
                  bool& touches_x, bool& touches_y) {
  touches_x = touches_y = false;
  for (const std::string& v : vars) {
    if (x.count(v)) touches_x = true;
    else touches_y = true;
  }
  return touches_x && touches_y;
}

}  // namespace detail

/// Function nodes shared between x and the rest of the model. A constraint is
/// shared when the union of its two sides touches both x and its complement
/// (both side nodes are then reported, since the inequality couples them); an
/// objective is shared only when its own domain spans both.
inline std::set<std::string> shared_functions(const SystemModel& m,
                                              const std::set<std::string>& x) {
  detail::check_subsystem(m, x);
  std::set<std::string> out;
  bool tx, ty;
  for (const Constraint& c : m.constraints()) {
    std::set<std::string> vars = c.lhs.referenced_variables();
    for (const std::string& v : c.rhs.referenced_variables()) vars.insert(v);
    if (detail::spans(vars, x, tx, ty)) {
      out.insert(lhs_id(c.name));
      out.insert(rhs_id(c.name));
    }
  }
  for (const Objective& o : m.objectives()) {
    std::set<std::string> vars = o.expr.referenced_variables();
    if (detail::spans(vars, x, tx, ty)) out.insert(objective_id(o.name));
  }
  return out;
}

struct ConsistencyViolation {
  std::string function_id;
  PropertyKey property;
  Polarity polarity;
};

struct ConsistencyReport {
  bool fully_consistent = true;
  std::vector<ConsistencyViolation> violations;
};

/// A subsystem is fully consistent when every property (from either side) in
/// the domain of every shared function classifies consistent-max or
/// consistent-min.
inline ConsistencyReport is_fully_consistent(const SystemModel& m, const std::set<std::string>& x,
                                             const std::vector<PolarityOverride>& overrides = {}) {
  const std::set<std::string> shared = shared_functions(m, x);
  const ConstraintGraph g = build_graph(m);
  ConsistencyReport report;
  std::map<PropertyKey, PropertyKind> cache;
  for (const ConstraintGraph::Function& f : g.functions) {
    if (!shared.count(f.id)) continue;
    std::set<PropertyKey> props;
    f.expr.for_each_property([&](const PropertyKey& k) { props.insert(k); });
    for (const PropertyKey& p : props) {
      auto it = cache.find(p);
      if (it == cache.end())
        it = cache.emplace(p, classify_property(m, p, overrides).kind).first;
      if (it->second != PropertyKind::Inconsistent) continue;
      Polarity pol = Polarity::Mixed;
      if (const PolarityOverride* o = detail::find_override(overrides, f.id, p)) {
        pol = o->polarity;
      } else {
        const std::vector<ValueRange> ranges = value_ranges(m);
        pol = polarity(f.expr, p, ranges);
      }
      report.violations.push_back({f.id, p, pol});
    }
  }
  report.fully_consistent = report.violations.empty();
  return report;
}

// ---------------------------------------------------------------------------
// Exhaustive polarity oracle

namespace detail {

inline double eval_with_override(const Expression& e, const SystemModel& m,
                                 std::span<const std::int32_t> choice, const PropertyKey& p,
                                 double override_value) {
  using Kind = Expression::Kind;
  switch (e.kind()) {
    case Kind::Constant:
      return e.constant_value();
    case Kind::PropertyRef: {
      if (e.key() == p) return override_value;
      auto [v, col] = m.resolve(e.key());
      if (v < 0) throw ModelError("unresolved property '" + to_string(e.key()) + "'");
      return m.catalog_at(v).value(choice[static_cast<std::size_t>(v)], col);
    }
    case Kind::Neg:
      return -eval_with_override(e.children()[0], m, choice, p, override_value);
    case Kind::Add:
      return eval_with_override(e.children()[0], m, choice, p, override_value) +
             eval_with_override(e.children()[1], m, choice, p, override_value);
    case Kind::Sub:
      return eval_with_override(e.children()[0], m, choice, p, override_value) -
             eval_with_override(e.children()[1], m, choice, p, override_value);
    case Kind::Mul:
      return eval_with_override(e.children()[0], m, choice, p, override_value) *
             eval_with_override(e.children()[1], m, choice, p, override_value);
    case Kind::Div: {
      const double num = eval_with_override(e.children()[0], m, choice, p, override_value);
      const double den = eval_with_override(e.children()[1], m, choice, p, override_value);
      if (den == 0.0) throw DivisionByZeroError("division by zero");
      return num / den;
    }
    case Kind::Min: {
      double v = eval_with_override(e.children()[0], m, choice, p, override_value);
      for (std::size_t i = 1; i < e.children().size(); ++i)
        v = std::min(v, eval_with_override(e.children()[i], m, choice, p, override_value));
      return v;
    }
    case Kind::Max: {
      double v = eval_with_override(e.children()[0], m, choice, p, override_value);
      for (std::size_t i = 1; i < e.children().size(); ++i)
        v = std::max(v, eval_with_override(e.children()[i], m, choice, p, override_value));
      return v;
    }
  }
  throw ModelError("corrupt expression node");
}

}  // namespace detail

/// Brute-force polarity: for every combination of other-property values drawn
/// from catalog tuples and every consecutive pair of sorted values of p, check
/// the direction of the function value. Returns the strongest certified label
/// (Constant beats Monotone/Antitone beats Mixed).
inline Polarity verify_polarity_exhaustive(const SystemModel& m, const Expression& e,
                                           const PropertyKey& p,
                                           std::uint64_t cap = 10'000'000) {
  m.validate();
  if (m.resolve(p).first < 0)
    throw ModelError("unresolved property '" + to_string(p) + "'");

  std::vector<int> vars;
  for (const std::string& name : e.referenced_variables()) vars.push_back(m.variable_index(name));
  // p's variable must participate even if only p itself occurs, so that its
  // sibling properties come from real tuples.
  if (std::find(vars.begin(), vars.end(), m.variable_index(p.variable)) == vars.end() &&
      e.contains_property(p))
    vars.push_back(m.variable_index(p.variable));
  std::sort(vars.begin(), vars.end());

  const Catalog& pcat = m.catalog(p.variable);
  const int pcol = pcat.property_index(p.property);
  std::vector<double> pvalues;
  for (std::size_t r = 0; r < pcat.size(); ++r) pvalues.push_back(pcat.value(static_cast<int>(r), pcol));
  std::sort(pvalues.begin(), pvalues.end());
  pvalues.erase(std::unique(pvalues.begin(), pvalues.end()), pvalues.end());

  double combos = static_cast<double>(pvalues.size());
  for (int v : vars) combos *= static_cast<double>(m.catalog_at(v).size());
  if (combos > static_cast<double>(cap))
    throw EnumerationCapError("exhaustive polarity check needs " + format_double(combos) +
                              " evaluations, cap is " + std::to_string(cap));

  bool monotone = true, antitone = true, constant = true;
  std::vector<std::int32_t> choice(m.variable_count(), 0);
  // Odometer over the participating variables' tuples.
  std::vector<int> sizes;
  for (int v : vars) sizes.push_back(static_cast<int>(m.catalog_at(v).size()));
  std::vector<int> idx(vars.size(), 0);
  while (true) {
    for (std::size_t i = 0; i < vars.size(); ++i)
      choice[static_cast<std::size_t>(vars[i])] = idx[i];
    for (std::size_t k = 0; k + 1 < pvalues.size(); ++k) {
      const double f1 = detail::eval_with_override(e, m, choice, p, pvalues[k]);
      const double f2 = detail::eval_with_override(e, m, choice, p, pvalues[k + 1]);
      if (f2 < f1) monotone = false;
      if (f2 > f1) antitone = false;
      if (f2 != f1) constant = false;
      if (!monotone && !antitone) return Polarity::Mixed;
    }
    if (pvalues.size() == 1) {
      // p takes a single value; direction is vacuous.
      break;
    }
    std::size_t d = 0;
    while (d < idx.size()) {
      if (++idx[d] < sizes[d]) break;
      idx[d] = 0;
      ++d;
    }
    if (d == idx.size()) break;
    if (idx.empty()) break;
  }
  if (constant) return Polarity::Constant;
  if (monotone) return Polarity::Monotone;
  return Polarity::Antitone;
}

/// Same oracle addressed by constraint-graph function id.
inline Polarity verify_polarity_exhaustive(const SystemModel& m, std::string_view function_id,
                                           const PropertyKey& p,
                                           std::uint64_t cap = 10'000'000) {
  const ConstraintGraph g = build_graph(m);
  const ConstraintGraph::Function* f = g.find(function_id);
  if (!f) throw ModelError("unknown function '" + std::string(function_id) + "'");
  return verify_polarity_exhaustive(m, f->expr, p, cap);
}

}  // namespace moco
