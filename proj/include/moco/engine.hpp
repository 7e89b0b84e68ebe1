#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "moco/model.hpp"
#include "moco/pareto.hpp"
#include "moco/solver.hpp"

namespace moco {

/// The unconstrained model itself has no feasible assignment.
class InfeasibleModelError : public Error {
 public:
  using Error::Error;
};

struct EngineConfig {
  SolverConfig solver;
  /// >1 lets decomposition run independent partition solves concurrently;
  /// the scalarization loop itself is sequential by construction.
  int threads = 1;
};

struct EngineStats {
  std::uint64_t solves = 0;
  std::uint64_t total_nodes = 0;
  std::uint64_t total_backtracks = 0;
  double wall_time = 0.0;
};

/// kth-objective epsilon-constraint scalarization: repeat a lexicographic
/// solve (objective order = model order) under one non-domination cut per
/// front point, inserting each result, until the augmented problem is
/// infeasible. On finite catalogs the strict-improvement cuts need no epsilon
/// fudge, and the loop returns exactly the non-dominated set with one
/// assignment per distinct objective vector.
///
/// `lex` must behave like solve_lexicographic: sound, complete, and
/// deterministic for a fixed configuration.
template <class LexFn>
ParetoFront compute_front_with(const DenseModel& dm, LexFn&& lex, const SolverConfig& cfg = {},
                               EngineStats* stats = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  ParetoFront front;
  std::vector<Cut> cuts;
  for (;;) {
    SearchStatistics solve_stats;
    std::optional<LexSolution> sol = lex(dm, cuts, cfg, &solve_stats);
    if (stats) {
      ++stats->solves;
      stats->total_nodes += solve_stats.nodes_expanded;
      stats->total_backtracks += solve_stats.backtracks;
    }
    if (!sol) {
      if (front.empty())
        throw InfeasibleModelError("no feasible assignment");
      break;
    }
    cuts.push_back(Cut{sol->objectives});
    front.add({std::move(sol->objectives), std::move(sol->assignment), {}});
  }
  if (stats)
    stats->wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return front;
}

inline ParetoFront compute_front(const DenseModel& dm, const EngineConfig& cfg = {},
                                 EngineStats* stats = nullptr) {
  return compute_front_with(
      dm,
      [](const DenseModel& model, const std::vector<Cut>& cuts, const SolverConfig& scfg,
         SearchStatistics* st) { return solve_lexicographic(model, cuts, scfg, st); },
      cfg.solver, stats);
}

inline ParetoFront compute_front(const SystemModel& m, const EngineConfig& cfg = {},
                                 EngineStats* stats = nullptr) {
  DenseModel dm(m);
  return compute_front(dm, cfg, stats);
}

}  // namespace moco
