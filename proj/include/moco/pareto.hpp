#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "moco/model.hpp"

namespace moco {

using ObjectiveVector = std::vector<double>;

/// a dominates b: no worse everywhere, strictly better somewhere. Both
/// vectors are in canonical minimization space.
inline bool dominates(const ObjectiveVector& a, const ObjectiveVector& b) {
  if (a.size() != b.size())
    throw LengthMismatchError("objective vectors of length " + std::to_string(a.size()) +
                              " and " + std::to_string(b.size()));
  bool strict = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > b[i]) return false;
    if (a[i] < b[i]) strict = true;
  }
  return strict;
}

/// Mutually non-dominated set of (objective vector, assignment) pairs with at
/// most one representative per distinct vector. add() maintains the
/// invariant; append_unchecked() exists solely for handle-partitioned
/// subsystem fronts, which are non-dominated only within each partition.
class ParetoFront {
 public:
  struct Point {
    ObjectiveVector objectives;
    Assignment assignment;
    std::string provenance;
  };

  ParetoFront() = default;

  /// False when the candidate is dominated by (or ties) an existing member;
  /// otherwise inserts and drops every member the candidate dominates.
  bool add(Point p) {
    for (const Point& q : points_) {
      if (q.objectives == p.objectives) return false;  // keep the incumbent
      if (dominates(q.objectives, p.objectives)) return false;
    }
    std::erase_if(points_, [&](const Point& q) { return dominates(p.objectives, q.objectives); });
    points_.push_back(std::move(p));
    return true;
  }

  void append_unchecked(Point p) { points_.push_back(std::move(p)); }

  const std::vector<Point>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }

  const Point* find(const ObjectiveVector& v) const {
    for (const Point& p : points_)
      if (p.objectives == v) return &p;
    return nullptr;
  }

  /// O(n^2) audit of the front invariant.
  bool is_mutually_non_dominated() const {
    for (std::size_t i = 0; i < points_.size(); ++i)
      for (std::size_t j = 0; j < points_.size(); ++j)
        if (i != j && (points_[i].objectives == points_[j].objectives ||
                       dominates(points_[i].objectives, points_[j].objectives)))
          return false;
    return true;
  }

  std::vector<Point> sorted_points() const {
    std::vector<Point> out = points_;
    std::sort(out.begin(), out.end(), [](const Point& a, const Point& b) {
      return std::lexicographical_compare(a.objectives.begin(), a.objectives.end(),
                                          b.objectives.begin(), b.objectives.end());
    });
    return out;
  }

  std::vector<ObjectiveVector> vectors() const {
    std::vector<ObjectiveVector> out;
    out.reserve(points_.size());
    for (const Point& p : points_) out.push_back(p.objectives);
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  std::vector<Point> points_;
};

/// Non-dominated subset of the union.
inline ParetoFront merge(const ParetoFront& a, const ParetoFront& b) {
  ParetoFront out;
  for (const ParetoFront::Point& p : a.points()) out.add(p);
  for (const ParetoFront::Point& p : b.points()) out.add(p);
  return out;
}

}  // namespace moco
