#pragma once

#include "concmtf/tensor.hpp"

#include <optional>
#include <vector>

namespace concmtf {

/// Feasible set for one factor-column subproblem, as an intersection of
/// convex sets: the non-negative orthant, the halfspace sum(x) <= l1_bound
/// (equal to the L1-norm bound on the orthant, which is how the solvers are
/// used), and one halfspace c_j^T x <= orth_bound per fixed column c_j.
struct ColumnConstraints {
  bool nonneg = false;
  std::optional<double> l1_bound;
  std::optional<double> orth_bound;
  std::vector<Vector> fixed_columns;

  bool any() const { return nonneg || l1_bound || orth_bound; }
};

struct SolveReport {
  Vector solution;
  int iterations = 0;
  /// Final subproblem objective: squared Frobenius residual for the rank-one
  /// solve, 0.5 x^T G x - b^T x for the quadratic solve.
  double residual = 0.0;
  /// Max violation over all configured constraints at the solution.
  double feasibility_violation = 0.0;
  bool converged = true;
  /// Set when the design is degenerate (||f||^2 below 1e-12); the solution
  /// is then the zero vector and the caller decides what to keep.
  bool degenerate = false;
};

/// Max constraint violation of x under c (0 when feasible).
double feasibility_violation(const Vector& x, const ColumnConstraints& c);

/// Euclidean projection onto the intersection via Dykstra's alternating
/// projections; at most 1000 sweeps, stopping when successive iterates move
/// less than 1e-10. Always feasible to high accuracy since 0 is in the set.
Vector project_feasible(const Vector& v, const ColumnConstraints& c);

/// As project_feasible but reporting sweep count and convergence.
SolveReport project_feasible_report(const Vector& v, const ColumnConstraints& c);

/// Exact solution of min_a ||residual - a f^T||_F^2 subject to c. The
/// Hessian is ||f||^2 * Identity, so the constrained optimum is the
/// projection of the unconstrained one, residual*f / ||f||^2.
SolveReport solve_rank1_column(const Matrix& residual, const Vector& f, const ColumnConstraints& c);

/// Internal form of the rank-one solve given rf = residual*f and
/// f_sq = ||f||^2; solve_rank1_column and the ALS engine share this path.
SolveReport solve_isotropic_column(const Vector& rf, double f_sq, const ColumnConstraints& c);

/// Projected gradient for min 0.5 x^T gram x - linear^T x subject to c.
/// Step 1/L with L estimated by 50 power-iteration steps times 1.01; stops
/// when the projected-gradient norm drops below tol or after 5000 iterations
/// (flagged as non-converged). Optional feasible warm start.
SolveReport solve_box_l1_qp(const Matrix& gram, const Vector& linear, const ColumnConstraints& c,
                            double tol, const std::optional<Vector>& start = {});

/// Default tolerance for solve_box_l1_qp, scaled to the linear term.
double default_qp_tol(const Vector& linear);

/// Test-grade exact optimum by active-set enumeration: every subset of the
/// constraints is tried as an equality system and the best feasible KKT
/// candidate wins. Rejects dimension > 6. Independent of the projection and
/// projected-gradient paths above.
Vector reference_qp_oracle(const Matrix& gram, const Vector& linear, const ColumnConstraints& c);

}  // namespace concmtf
