#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "moco/interval.hpp"
#include "moco/model.hpp"

namespace moco {

class NodeLimitExceededError : public Error {
 public:
  using Error::Error;
};

/// A denominator interval spans zero, so no finite bound exists.
class IntervalDivisionByZeroError : public Error {
 public:
  using Error::Error;
};

enum class VariableOrder { ModelOrder, SmallestDomainFirst };
enum class ValueOrder { BestObjectiveFirst, CatalogOrder };
enum class Propagation { None, BoundsOnly, BoundsPlusUnary };

struct SolverConfig {
  VariableOrder variable_order = VariableOrder::ModelOrder;
  ValueOrder value_order = ValueOrder::BestObjectiveFirst;
  Propagation propagation = Propagation::BoundsPlusUnary;
  std::optional<std::uint64_t> node_limit;
  std::uint64_t seed = 0;  // reserved for randomized strategies; unused by the
                           // deterministic search
};

struct SearchStatistics {
  std::uint64_t nodes_expanded = 0;
  std::uint64_t backtracks = 0;
  double wall_time = 0.0;  // seconds
};

/// Non-domination cut in canonical minimization space: a feasible assignment
/// must satisfy f_i < point[i] for at least one i. This both forbids being
/// dominated by `point` and excludes exact ties with it.
struct Cut {
  std::vector<double> point;
};

struct LexSolution {
  Assignment assignment;
  std::vector<double> objectives;  // canonical minimization space
  SearchStatistics stats;
};

namespace detail {

/// Interval evaluation of a compiled program; unassigned variables contribute
/// their catalog column ranges. A denominator spanning zero yields whole()
/// and sets *div_unbounded instead of failing, which simply disables any
/// prune that depended on the bound.
inline Interval eval_interval(const CompiledExpression& ce, const DenseModel& dm,
                              std::span<const std::int32_t> choice,
                              bool* div_unbounded = nullptr) {
  thread_local std::vector<Interval> stack;
  if (static_cast<int>(stack.size()) < ce.stack_need())
    stack.resize(static_cast<std::size_t>(ce.stack_need()));
  using Code = CompiledExpression::Op::Code;
  int top = 0;
  for (const CompiledExpression::Op& op : ce.ops()) {
    switch (op.code) {
      case Code::PushConst:
        stack[top++] = Interval::point(op.value);
        break;
      case Code::PushProp: {
        const std::int32_t row = choice[static_cast<std::size_t>(op.var)];
        stack[top++] = row >= 0 ? Interval::point(dm.value(op.var, op.col, row))
                                : Interval{dm.col_min(op.var, op.col), dm.col_max(op.var, op.col)};
        break;
      }
      case Code::Neg:
        stack[top - 1] = -stack[top - 1];
        break;
      case Code::Add:
        --top;
        stack[top - 1] = stack[top - 1] + stack[top];
        break;
      case Code::Sub:
        --top;
        stack[top - 1] = stack[top - 1] - stack[top];
        break;
      case Code::Mul:
        --top;
        stack[top - 1] = stack[top - 1] * stack[top];
        break;
      case Code::Div:
        --top;
        if (stack[top].contains_zero()) {
          if (div_unbounded) *div_unbounded = true;
          stack[top - 1] = Interval::whole();
        } else {
          stack[top - 1] = stack[top - 1] / stack[top];
        }
        break;
      case Code::Min: {
        Interval v = stack[top - op.arity];
        for (int i = 1; i < op.arity; ++i) v = interval_min(v, stack[top - op.arity + i]);
        top -= op.arity - 1;
        stack[top - 1] = v;
        break;
      }
      case Code::Max: {
        Interval v = stack[top - op.arity];
        for (int i = 1; i < op.arity; ++i) v = interval_max(v, stack[top - op.arity + i]);
        top -= op.arity - 1;
        stack[top - 1] = v;
        break;
      }
    }
  }
  return stack[0];
}

/// True when every completion's objective vector is lexicographically >= the
/// incumbent, i.e. the subtree cannot contain a strictly better solution.
inline bool lex_cannot_improve(std::span<const double> lower_bounds,
                               std::span<const double> incumbent) {
  for (std::size_t j = 0; j < lower_bounds.size(); ++j) {
    if (lower_bounds[j] < incumbent[j]) return false;
    if (lower_bounds[j] > incumbent[j]) return true;
  }
  return true;  // bounds equal the incumbent everywhere: ties are not improvements
}

class LexSearch {
 public:
  LexSearch(const DenseModel& dm, const std::vector<Cut>& cuts, const SolverConfig& cfg)
      : dm_(dm), cfg_(cfg) {
    const SystemModel& m = dm.model();
    nvars_ = dm.variable_count();
    nconstraints_ = static_cast<int>(m.constraints().size());
    nobjectives_ = static_cast<int>(m.objectives().size());

    for (const Constraint& c : m.constraints()) {
      clhs_.push_back(dm.compile(c.lhs));
      crhs_.push_back(dm.compile(c.rhs));
      relations_.push_back(c.relation);
    }
    for (const Objective& o : m.objectives()) {
      const Expression canonical = o.direction == Direction::Maximize ? -o.expr : o.expr;
      objectives_.push_back(dm.compile(canonical));
    }
    for (const Cut& cut : cuts) {
      if (cut.point.size() != static_cast<std::size_t>(nobjectives_))
        throw LengthMismatchError("cut over " + std::to_string(cut.point.size()) +
                                  " objectives, model has " + std::to_string(nobjectives_));
    }
    cuts_ = &cuts;
  }

  std::optional<LexSolution> run() {
    const auto t0 = std::chrono::steady_clock::now();
    setup_domains();
    std::optional<LexSolution> result;
    if (!infeasible_after_filter_) {
      order_variables();
      order_values();
      if (init_search_state()) dfs(0);
      if (incumbent_found_) {
        LexSolution sol;
        sol.assignment = dm_.assignment(incumbent_choice_);
        sol.objectives = incumbent_;
        result = std::move(sol);
      }
    }
    stats_.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (result) result->stats = stats_;
    return result;
  }

  const SearchStatistics& stats() const { return stats_; }

 private:
  void setup_domains() {
    domains_.resize(static_cast<std::size_t>(nvars_));
    std::vector<std::int32_t> probe(static_cast<std::size_t>(nvars_), -1);
    for (int v = 0; v < nvars_; ++v) {
      auto& dom = domains_[static_cast<std::size_t>(v)];
      dom.reserve(static_cast<std::size_t>(dm_.rows(v)));
      for (std::int32_t r = 0; r < dm_.rows(v); ++r) dom.push_back(r);
      if (cfg_.propagation != Propagation::BoundsPlusUnary) continue;
      // Unary pre-filtering: drop tuples violating constraints whose
      // properties all belong to this variable.
      for (int c = 0; c < nconstraints_; ++c) {
        const auto& lv = clhs_[static_cast<std::size_t>(c)].variables();
        const auto& rv = crhs_[static_cast<std::size_t>(c)].variables();
        const bool unary = (lv.empty() || (lv.size() == 1 && lv[0] == v)) &&
                           (rv.empty() || (rv.size() == 1 && rv[0] == v)) &&
                           !(lv.empty() && rv.empty());
        if (!unary) continue;
        std::erase_if(dom, [&](std::int32_t r) {
          probe[static_cast<std::size_t>(v)] = r;
          const double l = clhs_[static_cast<std::size_t>(c)].eval(dm_, probe);
          const double rr = crhs_[static_cast<std::size_t>(c)].eval(dm_, probe);
          probe[static_cast<std::size_t>(v)] = -1;
          return relations_[static_cast<std::size_t>(c)] == Relation::LessOrEqual
                     ? l > rr
                     : std::fabs(l - rr) > kEqualTolerance;
        });
      }
      if (dom.empty()) infeasible_after_filter_ = true;
    }
  }

  void order_variables() {
    order_.resize(static_cast<std::size_t>(nvars_));
    for (int v = 0; v < nvars_; ++v) order_[static_cast<std::size_t>(v)] = v;
    if (cfg_.variable_order == VariableOrder::SmallestDomainFirst) {
      std::stable_sort(order_.begin(), order_.end(), [&](int a, int b) {
        return domains_[static_cast<std::size_t>(a)].size() < domains_[static_cast<std::size_t>(b)].size();
      });
    }
  }

  void order_values() {
    if (cfg_.value_order != ValueOrder::BestObjectiveFirst || objectives_.empty()) return;
    const CompiledExpression& primary = objectives_.front();
    std::vector<std::int32_t> probe(static_cast<std::size_t>(nvars_), -1);
    for (int v = 0; v < nvars_; ++v) {
      if (!primary.uses_variable(v)) continue;
      auto& dom = domains_[static_cast<std::size_t>(v)];
      std::vector<double> key(static_cast<std::size_t>(dm_.rows(v)), 0.0);
      for (std::int32_t r : dom) {
        probe[static_cast<std::size_t>(v)] = r;
        key[static_cast<std::size_t>(r)] = eval_interval(primary, dm_, probe).lo;
      }
      probe[static_cast<std::size_t>(v)] = -1;
      std::stable_sort(dom.begin(), dom.end(), [&](std::int32_t a, std::int32_t b) {
        return key[static_cast<std::size_t>(a)] < key[static_cast<std::size_t>(b)];
      });
    }
  }

  bool init_search_state() {
    choice_.assign(static_cast<std::size_t>(nvars_), -1);
    const std::size_t nexpr = static_cast<std::size_t>(2 * nconstraints_ + nobjectives_);
    ivals_.assign(static_cast<std::size_t>(nvars_) + 1, std::vector<Interval>(nexpr));
    cut_satisfied_at_.assign(cuts_->size(), -1);
    // Root intervals, all variables free.
    return recompute(0, -1);
  }

  Interval& ival(int depth, int expr) {
    return ivals_[static_cast<std::size_t>(depth)][static_cast<std::size_t>(expr)];
  }

  // Fills level `depth` from `depth-1`, re-evaluating only expressions that
  // use `assigned_var` (everything, at the root). Returns false on a prune.
  bool recompute(int depth, int assigned_var) {
    const bool bounds = cfg_.propagation != Propagation::None;
    const bool leaf = depth == nvars_;
    auto& cur = ivals_[static_cast<std::size_t>(depth)];
    if (depth > 0) cur = ivals_[static_cast<std::size_t>(depth) - 1];

    for (int c = 0; c < nconstraints_; ++c) {
      CompiledExpression& l = clhs_[static_cast<std::size_t>(c)];
      CompiledExpression& r = crhs_[static_cast<std::size_t>(c)];
      bool changed = assigned_var < 0;
      if (l.uses_variable(assigned_var)) {
        cur[static_cast<std::size_t>(2 * c)] = eval_interval(l, dm_, choice_);
        changed = true;
      } else if (assigned_var < 0) {
        cur[static_cast<std::size_t>(2 * c)] = eval_interval(l, dm_, choice_);
      }
      if (r.uses_variable(assigned_var)) {
        cur[static_cast<std::size_t>(2 * c + 1)] = eval_interval(r, dm_, choice_);
        changed = true;
      } else if (assigned_var < 0) {
        cur[static_cast<std::size_t>(2 * c + 1)] = eval_interval(r, dm_, choice_);
      }
      if (!bounds && !leaf) continue;
      if (!changed && !leaf) continue;
      const Interval& li = cur[static_cast<std::size_t>(2 * c)];
      const Interval& ri = cur[static_cast<std::size_t>(2 * c + 1)];
      if (leaf && (!li.is_point() || !ri.is_point()))
        throw DivisionByZeroError("division by zero while checking constraint '" +
                                  dm_.model().constraints()[static_cast<std::size_t>(c)].name + "'");
      if (relations_[static_cast<std::size_t>(c)] == Relation::LessOrEqual) {
        if (li.lo > ri.hi) return false;
      } else {
        if (li.lo > ri.hi + kEqualTolerance || ri.lo > li.hi + kEqualTolerance) return false;
      }
    }

    for (int j = 0; j < nobjectives_; ++j) {
      CompiledExpression& f = objectives_[static_cast<std::size_t>(j)];
      if (assigned_var < 0 || f.uses_variable(assigned_var))
        cur[static_cast<std::size_t>(2 * nconstraints_ + j)] = eval_interval(f, dm_, choice_);
      if (leaf && !cur[static_cast<std::size_t>(2 * nconstraints_ + j)].is_point())
        throw DivisionByZeroError("division by zero while evaluating objective '" +
                                  dm_.model().objectives()[static_cast<std::size_t>(j)].name + "'");
    }

    if (!bounds && !leaf) return true;

    // Objective bound vector for incumbent and cut pruning.
    lbs_.resize(static_cast<std::size_t>(nobjectives_));
    ubs_.resize(static_cast<std::size_t>(nobjectives_));
    for (int j = 0; j < nobjectives_; ++j) {
      const Interval& iv = cur[static_cast<std::size_t>(2 * nconstraints_ + j)];
      lbs_[static_cast<std::size_t>(j)] = iv.lo;
      ubs_[static_cast<std::size_t>(j)] = iv.hi;
    }
    if (incumbent_found_ && lex_cannot_improve(lbs_, incumbent_)) return false;
    for (std::size_t i = 0; i < cuts_->size(); ++i) {
      if (cut_satisfied_at_[i] >= 0) continue;
      const std::vector<double>& p = (*cuts_)[i].point;
      bool satisfied = false, violated = true;
      for (int j = 0; j < nobjectives_; ++j) {
        if (ubs_[static_cast<std::size_t>(j)] < p[static_cast<std::size_t>(j)]) satisfied = true;
        if (lbs_[static_cast<std::size_t>(j)] < p[static_cast<std::size_t>(j)]) violated = false;
      }
      if (satisfied) cut_satisfied_at_[i] = depth;
      else if (violated) return false;
    }
    return true;
  }

  void undo_cut_marks(int depth) {
    for (std::size_t i = 0; i < cut_satisfied_at_.size(); ++i)
      if (cut_satisfied_at_[i] == depth) cut_satisfied_at_[i] = -1;
  }

  void dfs(int depth) {
    const int var = order_[static_cast<std::size_t>(depth)];
    for (std::int32_t row : domains_[static_cast<std::size_t>(var)]) {
      ++stats_.nodes_expanded;
      if (cfg_.node_limit && stats_.nodes_expanded > *cfg_.node_limit)
        throw NodeLimitExceededError("node limit of " + std::to_string(*cfg_.node_limit) +
                                     " exceeded");
      choice_[static_cast<std::size_t>(var)] = row;
      const bool ok = recompute(depth + 1, var);
      if (ok) {
        if (depth + 1 == nvars_) accept_leaf();
        else dfs(depth + 1);
      }
      undo_cut_marks(depth + 1);
    }
    choice_[static_cast<std::size_t>(var)] = -1;
    ++stats_.backtracks;
  }

  void accept_leaf() {
    // recompute() already verified feasibility, cuts, and (in bounds modes)
    // that the exact vector improves on the incumbent; in propagation None
    // the incumbent test below is the only filter.
    std::vector<double> vals(static_cast<std::size_t>(nobjectives_));
    for (int j = 0; j < nobjectives_; ++j)
      vals[static_cast<std::size_t>(j)] = ival(nvars_, 2 * nconstraints_ + j).lo;
    if (incumbent_found_ && lex_cannot_improve(vals, incumbent_)) return;
    incumbent_ = std::move(vals);
    incumbent_choice_ = choice_;
    incumbent_found_ = true;
  }

  const DenseModel& dm_;
  SolverConfig cfg_;
  int nvars_ = 0, nconstraints_ = 0, nobjectives_ = 0;
  std::vector<CompiledExpression> clhs_, crhs_, objectives_;
  std::vector<Relation> relations_;
  const std::vector<Cut>* cuts_ = nullptr;

  std::vector<std::vector<std::int32_t>> domains_;
  std::vector<int> order_;
  std::vector<std::int32_t> choice_;
  std::vector<std::vector<Interval>> ivals_;
  std::vector<int> cut_satisfied_at_;
  std::vector<double> lbs_, ubs_;

  bool infeasible_after_filter_ = false;
  std::vector<double> incumbent_;
  std::vector<std::int32_t> incumbent_choice_;
  bool incumbent_found_ = false;
  SearchStatistics stats_;
};

}  // namespace detail

/// Sound and complete lexicographic single-objective solve over the catalog
/// assignment space, subject to the model constraints plus non-domination
/// cuts. Returns nullopt exactly when no feasible assignment exists.
inline std::optional<LexSolution> solve_lexicographic(const DenseModel& dm,
                                                      const std::vector<Cut>& cuts = {},
                                                      const SolverConfig& cfg = {},
                                                      SearchStatistics* stats_out = nullptr) {
  detail::LexSearch search(dm, cuts, cfg);
  auto result = search.run();
  if (stats_out) *stats_out = search.stats();
  return result;
}

inline std::optional<LexSolution> solve_lexicographic(const SystemModel& m,
                                                      const std::vector<Cut>& cuts = {},
                                                      const SolverConfig& cfg = {},
                                                      SearchStatistics* stats_out = nullptr) {
  DenseModel dm(m);
  return solve_lexicographic(dm, cuts, cfg, stats_out);
}

/// Sound enclosure of expr over every completion of the partial assignment;
/// unassigned properties contribute their catalog min/max through interval
/// arithmetic. Throws IntervalDivisionByZeroError when a denominator interval
/// spans zero (callers that merely prune treat that case as unbounded
/// instead; see the solver internals).
inline std::pair<double, double> bound_expression(const Expression& expr, const Assignment& partial,
                                                  const SystemModel& m) {
  DenseModel dm(m);
  const CompiledExpression ce = dm.compile(expr);
  const std::vector<std::int32_t> choice = dm.dense(partial);
  bool div_unbounded = false;
  const Interval iv = detail::eval_interval(ce, dm, choice, &div_unbounded);
  if (div_unbounded)
    throw IntervalDivisionByZeroError("denominator interval spans zero");
  return {iv.lo, iv.hi};
}

}  // namespace moco
