#pragma once

#include <vector>

#include "sdpc/context.hpp"
#include "sdpc/model.hpp"

namespace sdpc {

struct SolveOptions {
  /// Epsilon points to materialize into the report when a handle exists.
  std::vector<double> epsilons;
};

/// Full solve of a dual-orientation problem: status, optimal value,
/// attainment, solution or epsilon handle, and every certificate produced.
SolveReport complete_solve(const SdpProblem& problem, Context& ctx, const SolveOptions& opts = {});

/// Primal-orientation problem: inf <c,x> s.t. A x = b, x PSD.
SolveReport solve_primal_form(const SdpProblem& problem, Context& ctx, const SolveOptions& opts = {});

/// Dispatches on problem.orientation.
SolveReport solve(const SdpProblem& problem, Context& ctx, const SolveOptions& opts = {});

}  // namespace sdpc
