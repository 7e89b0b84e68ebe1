#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace moco {

// ---------------------------------------------------------------------------
// Errors

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Structural problems: unknown names, ragged catalogs, unresolvable refs.
class ModelError : public Error {
 public:
  using Error::Error;
};

/// A property reference could not be evaluated because its variable has no
/// assigned component.
class UnresolvedPropertyError : public Error {
 public:
  using Error::Error;
};

/// Exact zero denominator during point evaluation. Never folded into a
/// non-finite value: dominance comparisons must not see NaN/inf.
class DivisionByZeroError : public Error {
 public:
  using Error::Error;
};

class LengthMismatchError : public Error {
 public:
  using Error::Error;
};

/// Absolute tolerance for Equal constraints. Catalogs carrying categorical
/// levels (logic voltages and the like) should store exact representable
/// values so equality behaves as value matching.
inline constexpr double kEqualTolerance = 1e-9;

// ---------------------------------------------------------------------------
// Names and catalogs

struct PropertyKey {
  std::string variable;
  std::string property;

  friend bool operator==(const PropertyKey&, const PropertyKey&) = default;
  friend auto operator<=>(const PropertyKey&, const PropertyKey&) = default;
};

inline std::string to_string(const PropertyKey& k) {
  return k.variable + "." + k.property;
}

struct ComponentTuple {
  std::string component_id;
  std::vector<double> values;
};

/// Finite domain of one variable: a rectangular table of component property
/// tuples. Immutable after construction apart from the variable binding.
class Catalog {
 public:
  Catalog() = default;

  Catalog(std::string variable_name, std::vector<std::string> property_names,
          std::vector<ComponentTuple> components)
      : variable_name_(std::move(variable_name)),
        property_names_(std::move(property_names)),
        components_(std::move(components)) {
    for (std::size_t i = 0; i < property_names_.size(); ++i) {
      if (property_names_[i].empty())
        throw ModelError("catalog '" + variable_name_ + "': empty property name");
      if (!property_index_.emplace(property_names_[i], static_cast<int>(i)).second)
        throw ModelError("catalog '" + variable_name_ + "': duplicate property '" +
                         property_names_[i] + "'");
    }
    for (std::size_t r = 0; r < components_.size(); ++r) {
      const ComponentTuple& c = components_[r];
      if (c.values.size() != property_names_.size())
        throw ModelError("catalog '" + variable_name_ + "': tuple '" + c.component_id +
                         "' has " + std::to_string(c.values.size()) + " values, expected " +
                         std::to_string(property_names_.size()));
      for (double v : c.values)
        if (!std::isfinite(v))
          throw ModelError("catalog '" + variable_name_ + "': tuple '" + c.component_id +
                           "' has a non-finite value");
      if (!component_index_.emplace(c.component_id, static_cast<int>(r)).second)
        throw ModelError("catalog '" + variable_name_ + "': duplicate component id '" +
                         c.component_id + "'");
    }
  }

  const std::string& variable_name() const { return variable_name_; }
  void bind_variable(std::string name) { variable_name_ = std::move(name); }

  const std::vector<std::string>& property_names() const { return property_names_; }
  const std::vector<ComponentTuple>& components() const { return components_; }
  const ComponentTuple& component(int row) const { return components_[static_cast<std::size_t>(row)]; }

  std::size_t size() const { return components_.size(); }
  std::size_t property_count() const { return property_names_.size(); }

  /// -1 when absent.
  int property_index(std::string_view name) const {
    auto it = property_index_.find(name);
    return it == property_index_.end() ? -1 : it->second;
  }

  /// -1 when absent.
  int component_index(std::string_view id) const {
    auto it = component_index_.find(id);
    return it == component_index_.end() ? -1 : it->second;
  }

  double value(int row, int col) const {
    return components_[static_cast<std::size_t>(row)].values[static_cast<std::size_t>(col)];
  }

 private:
  std::string variable_name_;
  std::vector<std::string> property_names_;
  std::vector<ComponentTuple> components_;
  std::map<std::string, int, std::less<>> property_index_;
  std::map<std::string, int, std::less<>> component_index_;
};

// ---------------------------------------------------------------------------
// Expressions

/// Immutable arithmetic tree over property references. Sharing subtrees is
/// fine; nodes are never mutated after construction.
class Expression {
 public:
  enum class Kind { Constant, PropertyRef, Neg, Add, Sub, Mul, Div, Min, Max };

  static Expression constant(double v) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Constant;
    n->value = v;
    return Expression(std::move(n));
  }

  static Expression property(PropertyKey key) {
    if (key.variable.empty() || key.property.empty())
      throw ModelError("property reference with empty name");
    auto n = std::make_shared<Node>();
    n->kind = Kind::PropertyRef;
    n->key = std::move(key);
    return Expression(std::move(n));
  }

  static Expression property(std::string variable, std::string property_name) {
    return property(PropertyKey{std::move(variable), std::move(property_name)});
  }

  static Expression min_of(std::vector<Expression> children) {
    return make_nary(Kind::Min, std::move(children));
  }

  static Expression max_of(std::vector<Expression> children) {
    return make_nary(Kind::Max, std::move(children));
  }

  Kind kind() const { return node_->kind; }
  double constant_value() const { return node_->value; }
  const PropertyKey& key() const { return node_->key; }
  const std::vector<Expression>& children() const { return node_->children; }

  /// Visits every syntactic PropertyRef occurrence, left to right.
  template <class F>
  void for_each_property(F&& f) const {
    if (node_->kind == Kind::PropertyRef) {
      f(node_->key);
      return;
    }
    for (const Expression& c : node_->children) c.for_each_property(f);
  }

  bool contains_property(const PropertyKey& key) const {
    bool found = false;
    for_each_property([&](const PropertyKey& k) { found = found || k == key; });
    return found;
  }

  std::set<std::string> referenced_variables() const {
    std::set<std::string> out;
    for_each_property([&](const PropertyKey& k) { out.insert(k.variable); });
    return out;
  }

  Expression operator-() const {
    return make(Kind::Neg, {*this});
  }

  friend Expression operator+(Expression l, Expression r) {
    return make(Kind::Add, {std::move(l), std::move(r)});
  }
  friend Expression operator-(Expression l, Expression r) {
    return make(Kind::Sub, {std::move(l), std::move(r)});
  }
  friend Expression operator*(Expression l, Expression r) {
    return make(Kind::Mul, {std::move(l), std::move(r)});
  }
  friend Expression operator/(Expression l, Expression r) {
    return make(Kind::Div, {std::move(l), std::move(r)});
  }

 private:
  struct Node {
    Kind kind = Kind::Constant;
    double value = 0.0;
    PropertyKey key;
    std::vector<Expression> children;
  };

  explicit Expression(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

  static Expression make(Kind k, std::vector<Expression> children) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->children = std::move(children);
    return Expression(std::move(n));
  }

  static Expression make_nary(Kind k, std::vector<Expression> children) {
    if (children.empty()) throw ModelError("min/max needs at least one operand");
    if (children.size() == 1) return children.front();
    return make(k, std::move(children));
  }

  std::shared_ptr<const Node> node_;
};

inline bool structurally_equal(const Expression& a, const Expression& b) {
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case Expression::Kind::Constant:
      return a.constant_value() == b.constant_value();
    case Expression::Kind::PropertyRef:
      return a.key() == b.key();
    default: {
      const auto& ca = a.children();
      const auto& cb = b.children();
      if (ca.size() != cb.size()) return false;
      for (std::size_t i = 0; i < ca.size(); ++i)
        if (!structurally_equal(ca[i], cb[i])) return false;
      return true;
    }
  }
}

/// Shortest decimal string that parses back to the same double.
inline std::string format_double(double v) {
  char buf[40];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

namespace detail {
// Precedence levels for printing: 1 additive, 2 multiplicative, 3 unary.
inline void print_expr(const Expression& e, int parent_level, std::string& out) {
  using Kind = Expression::Kind;
  auto binary = [&](const char* op, int level) {
    const bool parens = level < parent_level;
    if (parens) out += '(';
    print_expr(e.children()[0], level, out);
    out += ' ';
    out += op;
    out += ' ';
    // Right operands print one level tighter so the exact tree shape
    // survives a round-trip through the parser.
    print_expr(e.children()[1], level + 1, out);
    if (parens) out += ')';
  };
  switch (e.kind()) {
    case Kind::Constant: {
      const double v = e.constant_value();
      if (v < 0 || (v == 0 && std::signbit(v))) {
        out += '(';
        out += format_double(v);
        out += ')';
      } else {
        out += format_double(v);
      }
      break;
    }
    case Kind::PropertyRef:
      out += e.key().variable;
      out += '.';
      out += e.key().property;
      break;
    case Kind::Neg: {
      const bool parens = 3 < parent_level;
      if (parens) out += '(';
      out += '-';
      print_expr(e.children()[0], 4, out);
      if (parens) out += ')';
      break;
    }
    case Kind::Add: binary("+", 1); break;
    case Kind::Sub: binary("-", 1); break;
    case Kind::Mul: binary("*", 2); break;
    case Kind::Div: binary("/", 2); break;
    case Kind::Min:
    case Kind::Max: {
      out += e.kind() == Kind::Min ? "min(" : "max(";
      for (std::size_t i = 0; i < e.children().size(); ++i) {
        if (i) out += ", ";
        print_expr(e.children()[i], 0, out);
      }
      out += ')';
      break;
    }
  }
}
}  // namespace detail

/// Infix text in the model-file grammar; reparsing yields the same tree.
inline std::string to_text(const Expression& e) {
  std::string out;
  detail::print_expr(e, 0, out);
  return out;
}

// ---------------------------------------------------------------------------
// Constraints, objectives, model

enum class Relation { LessOrEqual, Equal };

struct Constraint {
  std::string name;
  Expression lhs;
  Expression rhs;
  Relation relation = Relation::LessOrEqual;
};

enum class Direction { Minimize, Maximize };

struct Objective {
  std::string name;
  Expression expr;
  Direction direction = Direction::Minimize;
};

/// One chosen component per variable. Solver-internal partial assignments use
/// the dense representation below instead.
class Assignment {
 public:
  Assignment() = default;

  void set(std::string variable, std::string component_id) {
    chosen_[std::move(variable)] = std::move(component_id);
  }

  const std::string* find(std::string_view variable) const {
    auto it = chosen_.find(variable);
    return it == chosen_.end() ? nullptr : &it->second;
  }

  const std::string& at(std::string_view variable) const {
    const std::string* id = find(variable);
    if (!id)
      throw UnresolvedPropertyError("no component assigned to variable '" +
                                    std::string(variable) + "'");
    return *id;
  }

  bool contains(std::string_view variable) const { return find(variable) != nullptr; }
  void erase(std::string_view variable) {
    auto it = chosen_.find(variable);
    if (it != chosen_.end()) chosen_.erase(it);
  }

  std::size_t size() const { return chosen_.size(); }
  bool empty() const { return chosen_.empty(); }
  auto begin() const { return chosen_.begin(); }
  auto end() const { return chosen_.end(); }

  friend bool operator==(const Assignment&, const Assignment&) = default;

 private:
  std::map<std::string, std::string, std::less<>> chosen_;
};

/// The whole constrained optimization problem: variables with catalog
/// domains, inequality/equality constraints, and ordered objectives.
class SystemModel {
 public:
  void add_catalog(Catalog c) {
    if (c.variable_name().empty()) throw ModelError("catalog without a variable name");
    if (variable_index_.count(c.variable_name()))
      throw ModelError("duplicate variable '" + c.variable_name() + "'");
    variable_index_.emplace(c.variable_name(), static_cast<int>(catalogs_.size()));
    catalogs_.push_back(std::move(c));
  }

  void add_constraint(Constraint c) { constraints_.push_back(std::move(c)); }
  void add_objective(Objective o) { objectives_.push_back(std::move(o)); }

  std::size_t variable_count() const { return catalogs_.size(); }
  const std::vector<Catalog>& catalogs() const { return catalogs_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const std::vector<Objective>& objectives() const { return objectives_; }

  /// -1 when absent.
  int variable_index(std::string_view name) const {
    auto it = variable_index_.find(name);
    return it == variable_index_.end() ? -1 : it->second;
  }

  const Catalog& catalog(std::string_view name) const {
    int v = variable_index(name);
    if (v < 0) throw ModelError("unknown variable '" + std::string(name) + "'");
    return catalogs_[static_cast<std::size_t>(v)];
  }

  const Catalog& catalog_at(int v) const { return catalogs_[static_cast<std::size_t>(v)]; }

  /// (variable index, property column), or (-1, -1).
  std::pair<int, int> resolve(const PropertyKey& key) const {
    int v = variable_index(key.variable);
    if (v < 0) return {-1, -1};
    int c = catalogs_[static_cast<std::size_t>(v)].property_index(key.property);
    if (c < 0) return {-1, -1};
    return {v, c};
  }

  double total_combinations() const {
    double n = 1.0;
    for (const Catalog& c : catalogs_) n *= static_cast<double>(c.size());
    return n;
  }

  void validate() const {
    if (catalogs_.empty()) throw ModelError("model has no variables");
    if (objectives_.empty()) throw ModelError("model has no objectives");
    for (const Catalog& c : catalogs_)
      if (c.size() == 0)
        throw ModelError("catalog '" + c.variable_name() + "' is empty");
    std::set<std::string> names;
    for (const Constraint& c : constraints_) {
      if (c.name.empty()) throw ModelError("constraint without a name");
      if (!names.insert(c.name).second)
        throw ModelError("duplicate constraint name '" + c.name + "'");
      check_resolves(c.lhs, "constraint '" + c.name + "'");
      check_resolves(c.rhs, "constraint '" + c.name + "'");
    }
    std::set<std::string> onames;
    for (const Objective& o : objectives_) {
      if (o.name.empty()) throw ModelError("objective without a name");
      if (!onames.insert(o.name).second)
        throw ModelError("duplicate objective name '" + o.name + "'");
      check_resolves(o.expr, "objective '" + o.name + "'");
    }
  }

 private:
  void check_resolves(const Expression& e, const std::string& where) const {
    e.for_each_property([&](const PropertyKey& k) {
      if (variable_index(k.variable) < 0)
        throw ModelError(where + ": unknown variable '" + k.variable + "'");
      if (catalog(k.variable).property_index(k.property) < 0)
        throw ModelError(where + ": variable '" + k.variable + "' has no property '" +
                         k.property + "'");
    });
  }

  std::vector<Catalog> catalogs_;
  std::map<std::string, int, std::less<>> variable_index_;
  std::vector<Constraint> constraints_;
  std::vector<Objective> objectives_;
};

// ---------------------------------------------------------------------------
// Evaluation

inline double evaluate(const Expression& e, const Assignment& a, const SystemModel& m) {
  using Kind = Expression::Kind;
  switch (e.kind()) {
    case Kind::Constant:
      return e.constant_value();
    case Kind::PropertyRef: {
      const PropertyKey& k = e.key();
      const Catalog& cat = m.catalog(k.variable);
      int col = cat.property_index(k.property);
      if (col < 0)
        throw ModelError("variable '" + k.variable + "' has no property '" + k.property + "'");
      const std::string& id = a.at(k.variable);
      int row = cat.component_index(id);
      if (row < 0)
        throw UnresolvedPropertyError("component '" + id + "' not in catalog '" +
                                      k.variable + "'");
      return cat.value(row, col);
    }
    case Kind::Neg:
      return -evaluate(e.children()[0], a, m);
    case Kind::Add:
      return evaluate(e.children()[0], a, m) + evaluate(e.children()[1], a, m);
    case Kind::Sub:
      return evaluate(e.children()[0], a, m) - evaluate(e.children()[1], a, m);
    case Kind::Mul:
      return evaluate(e.children()[0], a, m) * evaluate(e.children()[1], a, m);
    case Kind::Div: {
      const double num = evaluate(e.children()[0], a, m);
      const double den = evaluate(e.children()[1], a, m);
      if (den == 0.0) throw DivisionByZeroError("division by zero");
      return num / den;
    }
    case Kind::Min: {
      double v = evaluate(e.children()[0], a, m);
      for (std::size_t i = 1; i < e.children().size(); ++i)
        v = std::min(v, evaluate(e.children()[i], a, m));
      return v;
    }
    case Kind::Max: {
      double v = evaluate(e.children()[0], a, m);
      for (std::size_t i = 1; i < e.children().size(); ++i)
        v = std::max(v, evaluate(e.children()[i], a, m));
      return v;
    }
  }
  throw ModelError("corrupt expression node");
}

inline bool check_constraint(const Constraint& c, const Assignment& a, const SystemModel& m) {
  const double l = evaluate(c.lhs, a, m);
  const double r = evaluate(c.rhs, a, m);
  if (c.relation == Relation::LessOrEqual) return l <= r;
  return std::fabs(l - r) <= kEqualTolerance;
}

/// Canonical minimization-space objective values: Minimize objectives as-is,
/// Maximize objectives negated. Reporting layers un-negate.
inline std::vector<double> objective_vector(const SystemModel& m, const Assignment& a) {
  std::vector<double> out;
  out.reserve(m.objectives().size());
  for (const Objective& o : m.objectives()) {
    const double v = evaluate(o.expr, a, m);
    out.push_back(o.direction == Direction::Maximize ? -v : v);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dense views and compiled expressions
//
// The public API above works on names; search and enumeration need something
// cheaper. DenseModel holds column-major copies of every catalog plus column
// ranges, and compiles expressions into flat postfix programs over
// (variable, column) slots evaluated against a dense choice vector
// (tuple index per variable, -1 = unassigned).

class DenseModel;

class CompiledExpression {
 public:
  struct Op {
    enum class Code : std::uint8_t { PushConst, PushProp, Neg, Add, Sub, Mul, Div, Min, Max };
    Code code = Code::PushConst;
    std::int32_t var = -1;
    std::int32_t col = -1;
    std::int32_t arity = 0;
    double value = 0.0;
  };

  CompiledExpression() = default;

  const std::vector<Op>& ops() const { return ops_; }
  int stack_need() const { return stack_need_; }
  const std::vector<int>& variables() const { return vars_; }

  bool uses_variable(int v) const {
    const std::size_t w = static_cast<std::size_t>(v) / 64;
    return w < mask_.size() && (mask_[w] >> (static_cast<std::size_t>(v) % 64)) & 1u;
  }

  double eval(const DenseModel& dm, std::span<const std::int32_t> choice) const;

 private:
  friend class DenseModel;
  std::vector<Op> ops_;
  int stack_need_ = 0;
  std::vector<int> vars_;
  std::vector<std::uint64_t> mask_;
};

class DenseModel {
 public:
  explicit DenseModel(const SystemModel& m) : model_(&m) {
    m.validate();
    vars_.reserve(m.variable_count());
    for (const Catalog& c : m.catalogs()) {
      VarData d;
      d.rows = static_cast<int>(c.size());
      d.cols = static_cast<int>(c.property_count());
      d.values.resize(static_cast<std::size_t>(d.rows) * static_cast<std::size_t>(d.cols));
      d.cmin.resize(static_cast<std::size_t>(d.cols));
      d.cmax.resize(static_cast<std::size_t>(d.cols));
      for (int col = 0; col < d.cols; ++col) {
        double lo = c.value(0, col), hi = lo;
        for (int row = 0; row < d.rows; ++row) {
          const double v = c.value(row, col);
          d.values[static_cast<std::size_t>(col) * d.rows + row] = v;
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
        d.cmin[static_cast<std::size_t>(col)] = lo;
        d.cmax[static_cast<std::size_t>(col)] = hi;
      }
      vars_.push_back(std::move(d));
    }
  }

  const SystemModel& model() const { return *model_; }
  int variable_count() const { return static_cast<int>(vars_.size()); }
  int rows(int v) const { return vars_[static_cast<std::size_t>(v)].rows; }
  int cols(int v) const { return vars_[static_cast<std::size_t>(v)].cols; }

  double value(int v, int col, int row) const {
    const VarData& d = vars_[static_cast<std::size_t>(v)];
    return d.values[static_cast<std::size_t>(col) * d.rows + row];
  }

  double col_min(int v, int col) const { return vars_[static_cast<std::size_t>(v)].cmin[static_cast<std::size_t>(col)]; }
  double col_max(int v, int col) const { return vars_[static_cast<std::size_t>(v)].cmax[static_cast<std::size_t>(col)]; }

  CompiledExpression compile(const Expression& e) const {
    CompiledExpression out;
    int cur = 0;
    compile_rec(e, out, cur);
    std::sort(out.vars_.begin(), out.vars_.end());
    return out;
  }

  std::vector<std::int32_t> dense(const Assignment& a) const {
    std::vector<std::int32_t> out(vars_.size(), -1);
    for (const auto& [var, id] : a) {
      int v = model_->variable_index(var);
      if (v < 0) continue;  // assignments may cover more than this model
      int row = model_->catalog_at(v).component_index(id);
      if (row < 0)
        throw UnresolvedPropertyError("component '" + id + "' not in catalog '" + var + "'");
      out[static_cast<std::size_t>(v)] = row;
    }
    return out;
  }

  Assignment assignment(std::span<const std::int32_t> choice) const {
    Assignment a;
    for (std::size_t v = 0; v < vars_.size(); ++v) {
      if (choice[v] < 0) continue;
      const Catalog& c = model_->catalog_at(static_cast<int>(v));
      a.set(c.variable_name(), c.component(choice[v]).component_id);
    }
    return a;
  }

 private:
  friend class CompiledExpression;

  void compile_rec(const Expression& e, CompiledExpression& out, int& cur) const {
    using Kind = Expression::Kind;
    using Code = CompiledExpression::Op::Code;
    auto push = [&](CompiledExpression::Op op, int delta) {
      out.ops_.push_back(op);
      cur += delta;
      out.stack_need_ = std::max(out.stack_need_, cur);
    };
    switch (e.kind()) {
      case Kind::Constant:
        push({.code = Code::PushConst, .value = e.constant_value()}, 1);
        break;
      case Kind::PropertyRef: {
        auto [v, col] = model_->resolve(e.key());
        if (v < 0)
          throw ModelError("unresolved property '" + to_string(e.key()) + "'");
        if (std::find(out.vars_.begin(), out.vars_.end(), v) == out.vars_.end())
          out.vars_.push_back(v);
        const std::size_t w = static_cast<std::size_t>(v) / 64;
        if (out.mask_.size() <= w) out.mask_.resize(w + 1, 0);
        out.mask_[w] |= std::uint64_t{1} << (static_cast<std::size_t>(v) % 64);
        push({.code = Code::PushProp, .var = v, .col = col}, 1);
        break;
      }
      case Kind::Neg:
        compile_rec(e.children()[0], out, cur);
        push({.code = Code::Neg}, 0);
        break;
      case Kind::Add:
      case Kind::Sub:
      case Kind::Mul:
      case Kind::Div: {
        compile_rec(e.children()[0], out, cur);
        compile_rec(e.children()[1], out, cur);
        Code c = e.kind() == Kind::Add   ? Code::Add
                 : e.kind() == Kind::Sub ? Code::Sub
                 : e.kind() == Kind::Mul ? Code::Mul
                                         : Code::Div;
        push({.code = c}, -1);
        break;
      }
      case Kind::Min:
      case Kind::Max: {
        for (const Expression& c : e.children()) compile_rec(c, out, cur);
        const int n = static_cast<int>(e.children().size());
        push({.code = e.kind() == Kind::Min ? Code::Min : Code::Max, .arity = n}, -(n - 1));
        break;
      }
    }
  }

  struct VarData {
    int rows = 0;
    int cols = 0;
    std::vector<double> values;  // column-major
    std::vector<double> cmin, cmax;
  };

  const SystemModel* model_;
  std::vector<VarData> vars_;
};

inline double CompiledExpression::eval(const DenseModel& dm,
                                       std::span<const std::int32_t> choice) const {
  thread_local std::vector<double> stack;
  if (static_cast<int>(stack.size()) < stack_need_) stack.resize(static_cast<std::size_t>(stack_need_));
  using Code = Op::Code;
  int top = 0;
  for (const Op& op : ops_) {
    switch (op.code) {
      case Code::PushConst:
        stack[top++] = op.value;
        break;
      case Code::PushProp: {
        const std::int32_t row = choice[static_cast<std::size_t>(op.var)];
        if (row < 0)
          throw UnresolvedPropertyError(
              "no component assigned to variable '" +
              dm.model().catalog_at(op.var).variable_name() + "'");
        stack[top++] = dm.value(op.var, op.col, row);
        break;
      }
      case Code::Neg:
        stack[top - 1] = -stack[top - 1];
        break;
      case Code::Add:
        --top;
        stack[top - 1] += stack[top];
        break;
      case Code::Sub:
        --top;
        stack[top - 1] -= stack[top];
        break;
      case Code::Mul:
        --top;
        stack[top - 1] *= stack[top];
        break;
      case Code::Div: {
        --top;
        if (stack[top] == 0.0) throw DivisionByZeroError("division by zero");
        stack[top - 1] /= stack[top];
        break;
      }
      case Code::Min: {
        double v = stack[top - op.arity];
        for (int i = 1; i < op.arity; ++i) v = std::min(v, stack[top - op.arity + i]);
        top -= op.arity - 1;
        stack[top - 1] = v;
        break;
      }
      case Code::Max: {
        double v = stack[top - op.arity];
        for (int i = 1; i < op.arity; ++i) v = std::max(v, stack[top - op.arity + i]);
        top -= op.arity - 1;
        stack[top - 1] = v;
        break;
      }
    }
  }
  return stack[0];
}

}  // namespace moco
