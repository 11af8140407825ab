#include "concmtf/column_qp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

namespace concmtf {

namespace {

constexpr int kDykstraMaxSweeps = 1000;
constexpr double kDykstraMoveTol = 1e-10;
constexpr double kDegenerateDesign = 1e-12;
constexpr int kPgMaxIters = 5000;
constexpr int kPowerIters = 50;

struct Halfspace {
  Vector normal;
  double bound;
  double normal_sq;
};

std::vector<Halfspace> halfspaces_of(const ColumnConstraints& c, Index n, bool include_l1) {
  std::vector<Halfspace> hs;
  if (c.l1_bound && include_l1)
    hs.push_back({Vector::Ones(n), *c.l1_bound, static_cast<double>(n)});
  if (c.orth_bound) {
    for (const auto& col : c.fixed_columns) {
      if (col.size() != n)
        throw DimensionError("ColumnConstraints: fixed column length mismatch");
      hs.push_back({col, *c.orth_bound, col.squaredNorm()});
    }
  }
  return hs;
}

void project_halfspace(Vector& x, const Halfspace& h) {
  if (h.normal_sq <= 0.0) return;  // 0 <= bound holds for bounds >= 0
  double excess = h.normal.dot(x) - h.bound;
  if (excess > 0.0) x -= (excess / h.normal_sq) * h.normal;
}

/// Exact projection onto {x >= 0, sum(x) <= bound}: x = max(v - tau, 0) with
/// the threshold found on the sorted entries. Treating the pair as one set
/// keeps Dykstra fast when the input is far outside the simplex cap.
Vector project_capped_simplex(const Vector& v, double bound) {
  Vector x = v.cwiseMax(0.0);
  double total = x.sum();
  if (total <= bound) return x;
  std::vector<double> sorted(v.data(), v.data() + v.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double tau = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    cumulative += sorted[k];
    double candidate = (cumulative - bound) / static_cast<double>(k + 1);
    if (k + 1 == sorted.size() || sorted[k + 1] <= candidate) {
      tau = candidate;
      break;
    }
  }
  return (v.array() - tau).cwiseMax(0.0);
}

}  // namespace

double feasibility_violation(const Vector& x, const ColumnConstraints& c) {
  double v = 0.0;
  if (c.nonneg && x.size() > 0) v = std::max(v, -x.minCoeff());
  if (c.l1_bound) v = std::max(v, x.sum() - *c.l1_bound);
  if (c.orth_bound) {
    for (const auto& col : c.fixed_columns) v = std::max(v, col.dot(x) - *c.orth_bound);
  }
  return std::max(v, 0.0);
}

SolveReport project_feasible_report(const Vector& v, const ColumnConstraints& c) {
  SolveReport report;
  const Index n = v.size();

  // The orthant and the sum halfspace get one exact compound projection when
  // both are present; the zig-zag between them is otherwise the slow pair.
  const bool compound = c.nonneg && c.l1_bound.has_value();
  auto hs = halfspaces_of(c, n, !compound);

  enum class Set { identity, orthant, capped_simplex, halfspace0 };
  Set head = Set::identity;
  if (compound)
    head = Set::capped_simplex;
  else if (c.nonneg)
    head = Set::orthant;
  const std::size_t nsets = hs.size() + (head != Set::identity ? 1 : 0);

  if (nsets == 0) {
    report.solution = v;
    return report;
  }

  auto project_head = [&](const Vector& x) -> Vector {
    if (head == Set::capped_simplex) return project_capped_simplex(x, *c.l1_bound);
    return x.cwiseMax(0.0);
  };

  if (nsets == 1) {
    // A single set needs no Dykstra bookkeeping.
    Vector x = head != Set::identity ? project_head(v) : v;
    if (head == Set::identity) project_halfspace(x, hs[0]);
    report.solution = std::move(x);
    report.iterations = 1;
    report.feasibility_violation = feasibility_violation(report.solution, c);
    return report;
  }

  // Dykstra's alternating projections with one increment per set. A sweep
  // counts as converged only when every individual projection leaves the
  // iterate in place, which certifies membership in each set to that
  // tolerance (the start-to-end movement alone can vanish on a cycle).
  std::vector<Vector> increments(nsets, Vector::Zero(n));
  Vector x = v;
  bool converged = false;
  int sweep = 0;
  for (; sweep < kDykstraMaxSweeps; ++sweep) {
    double max_move = 0.0;
    std::size_t s = 0;
    if (head != Set::identity) {
      Vector y = project_head(x + increments[s]);
      increments[s] = x + increments[s] - y;
      max_move = std::max(max_move, (y - x).norm());
      x = std::move(y);
      ++s;
    }
    for (const auto& h : hs) {
      Vector y = x + increments[s];
      project_halfspace(y, h);
      increments[s] = x + increments[s] - y;
      max_move = std::max(max_move, (y - x).norm());
      x = std::move(y);
      ++s;
    }
    if (max_move < kDykstraMoveTol) {
      converged = true;
      ++sweep;
      break;
    }
  }
  if (c.nonneg) x = x.cwiseMax(0.0);

  report.solution = std::move(x);
  report.iterations = sweep;
  report.converged = converged;
  report.feasibility_violation = feasibility_violation(report.solution, c);
  return report;
}

Vector project_feasible(const Vector& v, const ColumnConstraints& c) {
  return project_feasible_report(v, c).solution;
}

SolveReport solve_isotropic_column(const Vector& rf, double f_sq, const ColumnConstraints& c) {
  if (f_sq < kDegenerateDesign) {
    SolveReport report;
    report.solution = Vector::Zero(rf.size());
    report.degenerate = true;
    return report;
  }
  Vector unconstrained = rf / f_sq;
  SolveReport report = c.any() ? project_feasible_report(unconstrained, c) : SolveReport{};
  if (!c.any()) report.solution = std::move(unconstrained);
  report.residual = 0.5 * f_sq * report.solution.squaredNorm() - rf.dot(report.solution);
  return report;
}

SolveReport solve_rank1_column(const Matrix& residual, const Vector& f, const ColumnConstraints& c) {
  if (residual.cols() != f.size())
    throw DimensionError("solve_rank1_column: residual columns != design length");
  SolveReport report = solve_isotropic_column(residual * f, f.squaredNorm(), c);
  // Convert the quadratic value to the Frobenius objective of the subproblem.
  report.residual = residual.squaredNorm() + 2.0 * report.residual;
  return report;
}

double default_qp_tol(const Vector& linear) {
  // Purely relative so the solve commutes with a rescaling of the data.
  double scale = linear.norm();
  return scale > 0.0 ? 1e-9 * scale : 1e-12;
}

SolveReport solve_box_l1_qp(const Matrix& gram, const Vector& linear, const ColumnConstraints& c,
                            double tol, const std::optional<Vector>& start) {
  const Index n = linear.size();
  if (gram.rows() != n || gram.cols() != n)
    throw DimensionError("solve_box_l1_qp: gram shape does not match linear term");

  // Lipschitz constant of the gradient via power iteration.
  Vector v = Vector::Ones(n);
  for (Index i = 0; i < n; ++i) v[i] += static_cast<double>(i) / static_cast<double>(n + 1);
  v.normalize();
  double lip = 0.0;
  for (int it = 0; it < kPowerIters; ++it) {
    Vector w = gram.selfadjointView<Eigen::Lower>() * v;
    lip = w.norm();
    if (lip <= 0.0) break;
    v = w / lip;
  }
  lip = std::max(lip * 1.01, kDegenerateDesign);

  Vector x = start ? project_feasible(*start, c) : Vector::Zero(n);
  SolveReport report;
  report.converged = false;
  int it = 0;
  for (; it < kPgMaxIters; ++it) {
    Vector grad = gram.selfadjointView<Eigen::Lower>() * x - linear;
    Vector next = project_feasible(x - grad / lip, c);
    double pg_norm = lip * (x - next).norm();
    x = std::move(next);
    if (pg_norm < tol) {
      report.converged = true;
      ++it;
      break;
    }
  }
  report.solution = std::move(x);
  report.iterations = it;
  report.residual = 0.5 * report.solution.dot(gram.selfadjointView<Eigen::Lower>() * report.solution) -
                    linear.dot(report.solution);
  report.feasibility_violation = feasibility_violation(report.solution, c);
  return report;
}

namespace {

struct LinearConstraint {
  Vector normal;
  double bound;
};

double qp_objective(const Matrix& gram, const Vector& linear, const Vector& x) {
  return 0.5 * x.dot(gram * x) - linear.dot(x);
}

}  // namespace

Vector reference_qp_oracle(const Matrix& gram, const Vector& linear, const ColumnConstraints& c) {
  const Index n = linear.size();
  if (n > 6) throw DimensionError("reference_qp_oracle: dimension > 6 rejected");
  if (gram.rows() != n || gram.cols() != n)
    throw DimensionError("reference_qp_oracle: gram shape does not match linear term");

  std::vector<LinearConstraint> cons;
  if (c.nonneg) {
    for (Index i = 0; i < n; ++i) {
      Vector e = Vector::Zero(n);
      e[i] = -1.0;
      cons.push_back({e, 0.0});
    }
  }
  if (c.l1_bound) cons.push_back({Vector::Ones(n), *c.l1_bound});
  if (c.orth_bound) {
    for (const auto& col : c.fixed_columns) cons.push_back({col, *c.orth_bound});
  }
  const std::size_t m = cons.size();
  if (m > 16) throw DimensionError("reference_qp_oracle: too many constraints to enumerate");

  auto feasible = [&](const Vector& x) {
    double tol = 1e-8 * (1.0 + x.norm());
    for (const auto& lc : cons)
      if (lc.normal.dot(x) > lc.bound + tol) return false;
    return true;
  };

  double best_obj = std::numeric_limits<double>::infinity();
  Vector best;
  auto consider = [&](const Vector& x) {
    if (!x.allFinite() || !feasible(x)) return;
    double obj = qp_objective(gram, linear, x);
    if (obj < best_obj) {
      best_obj = obj;
      best = x;
    }
  };

  // The origin is feasible whenever the bounds are >= 0; keep it as a seed
  // so the result is defined even if every KKT solve is rejected.
  consider(Vector::Zero(n));

  for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
    const int active = std::popcount(mask);
    if (active > n) continue;

    Vector x;
    if (active == 0) {
      // Unconstrained stationary point, if one exists.
      x = gram.completeOrthogonalDecomposition().solve(linear);
      if ((gram * x - linear).norm() > 1e-8 * (1.0 + linear.norm())) continue;
    } else {
      Matrix eq(active, n);
      Vector rhs(active);
      int row = 0;
      for (std::size_t s = 0; s < m; ++s) {
        if (mask & (std::size_t{1} << s)) {
          eq.row(row) = cons[s].normal.transpose();
          rhs[row] = cons[s].bound;
          ++row;
        }
      }
      Vector particular = eq.completeOrthogonalDecomposition().solve(rhs);
      if ((eq * particular - rhs).norm() > 1e-9 * (1.0 + rhs.norm())) continue;
      Eigen::FullPivLU<Matrix> lu(eq);
      if (lu.dimensionOfKernel() == 0) {
        x = particular;
      } else {
        Matrix kernel = lu.kernel();
        Matrix reduced = kernel.transpose() * gram * kernel;
        Vector g = kernel.transpose() * (linear - gram * particular);
        Vector z = reduced.completeOrthogonalDecomposition().solve(g);
        if ((reduced * z - g).norm() > 1e-8 * (1.0 + g.norm())) continue;
        x = particular + kernel * z;
      }
    }
    consider(x);
  }
  if (!best.size() && n > 0)
    throw std::runtime_error("reference_qp_oracle: no feasible candidate found");
  return best;
}

}  // namespace concmtf
