#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "emplan/spline_builder.hpp"

namespace emplan {

/// Convex QP: minimize p^T Q p - 2 c^T p subject to Ae p = be, Ai p <= bi.
/// epsilon is added to Q's diagonal so the regularized Hessian is positive
/// definite even when the assembled cost is only semidefinite.
struct QpProblem {
  QuadraticCost cost;
  LinearConstraintSet constraints;
  double epsilon = 1e-8;

  int dim() const { return int(cost.Q.rows()); }
};

enum class QpStatus { Optimal, Infeasible, IterLimit };

struct QpSolution {
  Eigen::VectorXd params;
  std::vector<int> active_set;  // binding inequality rows
  int iterations = 0;
  QpStatus status = QpStatus::IterLimit;
  double objective = 0.0;
  double primal_residual = 0.0;
  double stationarity_residual = 0.0;
  std::vector<ConstraintTag> violated_tags;  // populated when Infeasible
};

/// Primal active-set solve. A warm start carrying the active set of a similar
/// problem short-circuits to a single equality-constrained solve when that
/// set is still optimal.
QpSolution solve_qp(const QpProblem& problem,
                    const QpSolution* warm_start = nullptr);

}  // namespace emplan
