#include "concmtf/als.hpp"

#include "concmtf/rng.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace concmtf;
using concmtf::testing::random_matrix;
using concmtf::testing::random_tensor;

namespace {

ConstraintConfig loose_nonneg(double lambda = 1.0) {
  ConstraintConfig cfg;
  cfg.a.nonneg = cfg.b.nonneg = cfg.c.nonneg = cfg.d.nonneg = true;
  cfg.core.nonneg = true;
  cfg.coupling_weight = lambda;
  return cfg;
}

ConstraintConfig paper_constraints(double lambda = 1.0) {
  // The configuration exercised in the physics experiments: non-negativity,
  // column L1 and orthogonality bounds per block.
  ConstraintConfig cfg;
  auto block = [](double eps) {
    BlockConstraints bc;
    bc.nonneg = true;
    bc.l1_eps = eps;
    bc.orth_eps = eps;
    return bc;
  };
  cfg.a = block(0.05);
  cfg.b = block(0.6);
  cfg.c = block(0.2);
  cfg.d = block(0.2);
  cfg.core.nonneg = true;
  cfg.coupling_weight = lambda;
  return cfg;
}

struct Problem {
  Tensor3 t;
  Matrix y;
};

Problem planted_problem(std::array<Index, 4> dims, std::array<Index, 3> ranks, ModelKind kind,
                        std::uint64_t seed) {
  RandomStream rs(seed);
  FactorModel truth;
  truth.kind = kind;
  truth.a = random_matrix(dims[0], ranks[0], rs);
  truth.b = random_matrix(dims[1], ranks[1], rs);
  truth.c = random_matrix(dims[2], ranks[2], rs);
  truth.d = random_matrix(dims[3], ranks[0], rs);
  if (kind == ModelKind::cp) {
    Vector w(ranks[0]);
    for (Index p = 0; p < ranks[0]; ++p) w[p] = rs.uniform(0.5, 1.5);
    truth.core = superdiagonal_core(w, ranks[0]);
  } else {
    truth.core = random_tensor(ranks[0], ranks[1], ranks[2], rs);
  }
  return {truth.reconstruct_tensor(), truth.reconstruct_coupled()};
}

}  // namespace

TEST_CASE("init_factors is deterministic and validates config") {
  FactorModel m1 = init_factors({5, 4, 3, 2}, {2, 2, 2}, ModelKind::tucker3, 99);
  FactorModel m2 = init_factors({5, 4, 3, 2}, {2, 2, 2}, ModelKind::tucker3, 99);
  CHECK(m1.a == m2.a);
  CHECK(m1.b == m2.b);
  CHECK(m1.c == m2.c);
  CHECK(m1.d == m2.d);
  CHECK(m1.core == m2.core);

  FactorModel cp = init_factors({5, 4, 3, 2}, {2, 2, 2}, ModelKind::cp, 1);
  int nonzeros = 0;
  for (Index i = 0; i < cp.core.size(); ++i) nonzeros += cp.core.values()[i] != 0.0;
  CHECK(nonzeros == 2);

  CHECK_THROWS_AS(init_factors({5, 4, 3, 2}, {3, 2, 2}, ModelKind::cp, 1), ConfigError);
  CHECK_THROWS_AS(init_factors({2, 4, 3, 2}, {3, 2, 2}, ModelKind::tucker3, 1), ConfigError);
}

TEST_CASE("factor updates never increase the objective from a feasible state") {
  auto [t, y] = planted_problem({8, 6, 5, 4}, {2, 2, 2}, ModelKind::tucker3, 5);
  ConstraintConfig cfg = loose_nonneg();
  FactorModel m = init_factors({8, 6, 5, 4}, {2, 2, 2}, ModelKind::tucker3, 17);

  double before = objective(t, y, m, 1.0);
  m.a = update_factor_a(t, y, m, cfg);
  double after = objective(t, y, m, 1.0);
  CHECK(after <= before + 1e-8 * (1.0 + before));

  before = after;
  m.b = update_factor_b(t, m, cfg);
  after = objective(t, y, m, 1.0);
  CHECK(after <= before + 1e-8 * (1.0 + before));

  before = after;
  m.c = update_factor_c(t, m, cfg);
  after = objective(t, y, m, 1.0);
  CHECK(after <= before + 1e-8 * (1.0 + before));

  before = after;
  m.d = update_factor_d(y, m, cfg);
  after = objective(t, y, m, 1.0);
  CHECK(after <= before + 1e-8 * (1.0 + before));

  before = after;
  m.core = update_core(t, m, cfg);
  after = objective(t, y, m, 1.0);
  CHECK(after <= before + 1e-8 * (1.0 + before));
}

TEST_CASE("lambda zero reduces the A update to the uncoupled path") {
  auto [t, y] = planted_problem({6, 5, 4, 3}, {2, 2, 2}, ModelKind::tucker3, 3);
  FactorModel m = init_factors({6, 5, 4, 3}, {2, 2, 2}, ModelKind::tucker3, 4);
  ConstraintConfig cfg = loose_nonneg(0.0);

  Matrix coupled_path = update_factor_a(t, y, m, cfg);

  FactorModel uncoupled = m;
  uncoupled.d = Matrix(0, 2);
  ConstraintConfig cfg1 = loose_nonneg(1.0);
  Matrix uncoupled_path = update_factor_a(t, Matrix(6, 0), uncoupled, cfg1);

  CHECK((coupled_path - uncoupled_path).norm() <= 1e-12);
}

TEST_CASE("tight A bound is honored before normalization") {
  auto [t, y] = planted_problem({10, 6, 5, 4}, {3, 2, 2}, ModelKind::tucker3, 21);
  FactorModel m = init_factors({10, 6, 5, 4}, {3, 2, 2}, ModelKind::tucker3, 22);
  ConstraintConfig cfg = paper_constraints();

  UpdateStats stats;
  Matrix a = update_factor_a(t, y, m, cfg, &stats);
  for (Index p = 0; p < a.cols(); ++p) {
    CHECK(a.col(p).sum() <= 0.05 + 1e-8);
    CHECK(a.col(p).minCoeff() >= -1e-12);
  }
  CHECK(stats.max_violation <= 1e-8);
}

TEST_CASE("tightening the A bound never loosens the realized column sums") {
  auto [t, y] = planted_problem({10, 6, 5, 4}, {3, 2, 2}, ModelKind::tucker3, 31);
  FactorModel m = init_factors({10, 6, 5, 4}, {3, 2, 2}, ModelKind::tucker3, 32);

  auto max_col_sum = [](const Matrix& a) {
    double s = 0.0;
    for (Index p = 0; p < a.cols(); ++p) s = std::max(s, a.col(p).sum());
    return s;
  };
  ConstraintConfig tight = paper_constraints();
  ConstraintConfig tighter = paper_constraints();
  tighter.a.l1_eps = 0.01;
  CHECK(max_col_sum(update_factor_a(t, y, m, tighter)) <=
        max_col_sum(update_factor_a(t, y, m, tight)) + 1e-12);
}

TEST_CASE("B update converges to the planted factor on exact data") {
  RandomStream rs(8);
  Tensor3 core = random_tensor(2, 2, 2, rs, 0.1, 1.0);
  Matrix a = random_matrix(7, 2, rs), b_true = random_matrix(6, 2, rs),
         c = random_matrix(5, 2, rs);
  Tensor3 t = tucker_reconstruct(core, a, b_true, c);

  FactorModel m;
  m.kind = ModelKind::tucker3;
  m.a = a;
  m.b = random_matrix(6, 2, rs);
  m.c = c;
  m.d = Matrix(0, 2);
  m.core = core;

  ConstraintConfig cfg = loose_nonneg();
  // Column-wise Gauss-Seidel converges linearly at a rate set by the design
  // row correlation; iterate the block solve to its fixed point.
  for (int sweep = 0; sweep < 20000; ++sweep) {
    Matrix next = update_factor_b(t, m, cfg);
    double move = (next - m.b).norm();
    m.b = next;
    if (move < 1e-14) break;
  }
  CHECK((m.b - b_true).norm() <= 1e-6);
}

TEST_CASE("D update recovers the planted coupled factor and flags zero designs") {
  RandomStream rs(9);
  Matrix a = random_matrix(8, 3, rs, 0.1, 1.0);
  Matrix d_true = random_matrix(5, 3, rs);
  Matrix y = a * d_true.transpose();

  FactorModel m;
  m.kind = ModelKind::cp;
  m.a = a;
  m.b = random_matrix(4, 3, rs);
  m.c = random_matrix(4, 3, rs);
  m.d = random_matrix(5, 3, rs);
  m.core = superdiagonal_core(Vector::Ones(3), 3);

  ConstraintConfig cfg = loose_nonneg();
  for (int sweep = 0; sweep < 20000; ++sweep) {
    Matrix next = update_factor_d(y, m, cfg);
    double move = (next - m.d).norm();
    m.d = next;
    if (move < 1e-14) break;
  }
  CHECK((m.d - d_true).norm() <= 1e-6);

  // All-zero A freezes D and reports the degeneracy.
  m.a.setZero();
  UpdateStats stats;
  Matrix frozen = update_factor_d(y, m, cfg, &stats);
  CHECK(frozen == m.d);
  CHECK(stats.degenerate_columns == 3);
}

TEST_CASE("core update matches the closed form for orthonormal factors") {
  RandomStream rs(12);
  auto orthonormal = [&rs](Index rows, Index cols) {
    Matrix m = random_matrix(rows, cols, rs, -1.0, 1.0);
    Eigen::HouseholderQR<Matrix> qr(m);
    Matrix q = qr.householderQ();
    return Matrix(q.leftCols(cols));
  };
  FactorModel m;
  m.kind = ModelKind::tucker3;
  m.a = orthonormal(6, 2);
  m.b = orthonormal(5, 2);
  m.c = orthonormal(4, 2);
  m.d = Matrix(0, 2);
  m.core = random_tensor(2, 2, 2, rs);
  Tensor3 t = random_tensor(6, 5, 4, rs);

  ConstraintConfig cfg;  // unconstrained core
  Tensor3 solved = update_core(t, m, cfg);
  Tensor3 contracted =
      tucker_reconstruct(t, m.a.transpose(), m.b.transpose(), m.c.transpose());
  CHECK(frobenius_error(solved, contracted) <= 1e-8);
}

TEST_CASE("zero core bound forces a zero core") {
  auto [t, y] = planted_problem({5, 4, 3, 2}, {2, 2, 2}, ModelKind::tucker3, 2);
  FactorModel m = init_factors({5, 4, 3, 2}, {2, 2, 2}, ModelKind::tucker3, 2);
  ConstraintConfig cfg = loose_nonneg();
  cfg.core.l1_eps = 0.0;
  Tensor3 core = update_core(t, m, cfg);
  CHECK(core.values().cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("gram assembly identity for the core solve") {
  RandomStream rs(14);
  Matrix a = random_matrix(2, 2, rs), b = random_matrix(2, 2, rs), c = random_matrix(2, 2, rs);
  Matrix big = kronecker(c, kronecker(b, a));
  Matrix assembled =
      kronecker(c.transpose() * c, kronecker(b.transpose() * b, a.transpose() * a));
  CHECK((assembled - big.transpose() * big).norm() <= 1e-12);
}

TEST_CASE("compensated normalization preserves both reconstructions") {
  FactorModel m = init_factors({6, 5, 4, 3}, {2, 2, 2}, ModelKind::tucker3, 44);
  ConstraintConfig cfg;
  m.a.col(0) *= 10.0;  // de-normalize deliberately
  Tensor3 scaled_recon = m.reconstruct_tensor();
  Matrix coupled_before = m.reconstruct_coupled();

  NormalizeResult result = normalize_with_compensation(m, cfg);
  for (Index p = 0; p < result.model.a.cols(); ++p)
    CHECK(result.model.a.col(p).norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(frobenius_error(result.model.reconstruct_tensor(), scaled_recon) <=
        1e-10 * scaled_recon.values().norm());
  CHECK((result.model.reconstruct_coupled() - coupled_before).norm() <=
        1e-10 * coupled_before.norm());
  CHECK(result.zero_columns[0].empty());

  // Idempotence on an already normalized model.
  NormalizeResult again = normalize_with_compensation(result.model, cfg);
  CHECK((again.model.a - result.model.a).norm() <= 1e-12);
  CHECK((again.model.b - result.model.b).norm() <= 1e-12);
  CHECK(frobenius_error(again.model.core, result.model.core) <=
        1e-12 * (1.0 + result.model.core.values().norm()));
}

TEST_CASE("normalization leaves zero columns untouched and flags them") {
  FactorModel m = init_factors({6, 5, 4, 3}, {2, 2, 2}, ModelKind::tucker3, 45);
  m.b.col(1).setZero();
  NormalizeResult result = normalize_with_compensation(m, {});
  CHECK(result.model.b.col(1).isZero(0.0));
  REQUIRE(result.zero_columns[1].size() == 1);
  CHECK(result.zero_columns[1][0] == 1);
}

TEST_CASE("objective matches an elementwise oracle") {
  auto [t, y] = planted_problem({5, 4, 3, 3}, {2, 2, 2}, ModelKind::tucker3, 77);
  FactorModel m = init_factors({5, 4, 3, 3}, {2, 2, 2}, ModelKind::tucker3, 78);

  const double lambda = 0.7;
  Tensor3 recon = concmtf::testing::reconstruct_by_loops(m.core, m.a, m.b, m.c);
  double tensor_term = 0.0;
  for (Index i = 0; i < t.size(); ++i) {
    double d = t.values()[i] - recon.values()[i];
    tensor_term += d * d;
  }
  Matrix coupled = m.a * m.d.transpose();
  double coupled_term = 0.0;
  for (Index r = 0; r < y.rows(); ++r)
    for (Index c = 0; c < y.cols(); ++c) {
      double d = y(r, c) - coupled(r, c);
      coupled_term += d * d;
    }
  double expected = tensor_term + lambda * coupled_term;
  CHECK(objective(t, y, m, lambda) == doctest::Approx(expected).epsilon(1e-10));
  CHECK(objective(t, y, m, 0.0) == doctest::Approx(tensor_term).epsilon(1e-10));
}

TEST_CASE("fit converges on a noiseless planted Tucker3 instance") {
  auto [t, y] = planted_problem({20, 15, 6, 5}, {3, 2, 2}, ModelKind::tucker3, 123);
  FitConfig fcfg;
  fcfg.seed = 7;
  fcfg.max_iters = 2000;  // this instance has a long ALS tail
  fcfg.rel_tol = 1e-12;
  fcfg.record_trace = true;
  auto [model, trace] = fit(t, y, {3, 2, 2}, ModelKind::tucker3, loose_nonneg(), fcfg);
  double rel = frobenius_error(t, model.reconstruct_tensor()) / t.values().norm();
  CHECK(rel <= 1e-3);
}

TEST_CASE("fit accepts the physics constraint values and stays feasible") {
  auto [t, y] = planted_problem({12, 8, 5, 6}, {3, 2, 2}, ModelKind::tucker3, 55);
  FitConfig fcfg;
  fcfg.seed = 3;
  fcfg.max_iters = 25;
  fcfg.record_trace = true;
  auto [model, trace] = fit(t, y, {3, 2, 2}, ModelKind::tucker3, paper_constraints(), fcfg);
  for (const auto& row : trace.iterations) CHECK(row.max_violation() <= 1e-8);
}

TEST_CASE("single-iteration fit records the initial and one sweep") {
  auto [t, y] = planted_problem({6, 5, 4, 3}, {2, 2, 2}, ModelKind::cp, 1);
  FitConfig fcfg;
  fcfg.max_iters = 1;
  auto [model, trace] = fit(t, y, {2, 2, 2}, ModelKind::cp, loose_nonneg(), fcfg);
  REQUIRE(trace.iterations.size() == 2);
  CHECK(trace.iterations[0].iteration == 0);
  CHECK(trace.iterations[1].iteration == 1);
}

TEST_CASE("monotone descent across seeds and constraint configs") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    auto [t, y] = planted_problem({10, 8, 5, 4}, {2, 2, 2}, ModelKind::tucker3, seed);
    for (int which = 0; which < 2; ++which) {
      ConstraintConfig cfg = which == 0 ? loose_nonneg() : paper_constraints();
      FitConfig fcfg;
      fcfg.seed = seed + 100;
      fcfg.max_iters = 30;
      fcfg.rel_tol = 1e-12;
      fcfg.record_trace = true;
      auto [model, trace] = fit(t, y, {2, 2, 2}, ModelKind::tucker3, cfg, fcfg);
      const auto obj = trace.objectives();
      const double slack = 1e-8 * (1.0 + obj.front());
      for (std::size_t i = 1; i < obj.size(); ++i) CHECK(obj[i] <= obj[i - 1] + slack);
    }
  }
}

TEST_CASE("CP and frozen-superdiagonal Tucker paths agree per iterate") {
  auto [t, y] = planted_problem({9, 7, 6, 4}, {3, 3, 3}, ModelKind::cp, 10);
  FitConfig fast;
  fast.seed = 11;
  fast.max_iters = 15;
  fast.rel_tol = 1e-14;
  fast.record_trace = true;
  FitConfig generic = fast;
  generic.cp_fast_path = false;

  auto [m1, tr1] = fit(t, y, {3, 3, 3}, ModelKind::cp, loose_nonneg(), fast);
  auto [m2, tr2] = fit(t, y, {3, 3, 3}, ModelKind::cp, loose_nonneg(), generic);
  REQUIRE(tr1.iterations.size() == tr2.iterations.size());
  for (std::size_t i = 0; i < tr1.iterations.size(); ++i) {
    double a = tr1.iterations[i].objective, b = tr2.iterations[i].objective;
    CHECK(std::abs(a - b) <= 1e-10 * (1.0 + std::max(a, b)));
  }
  CHECK((m1.a - m2.a).norm() <= 1e-10 * (1.0 + m1.a.norm()));
  // The generic path keeps the core superdiagonal exactly.
  for (Index p = 0; p < 3; ++p)
    for (Index q = 0; q < 3; ++q)
      for (Index r = 0; r < 3; ++r)
        if (!(p == q && q == r)) CHECK(m2.core(p, q, r) == 0.0);
}

TEST_CASE("fit is deterministic for a fixed seed") {
  auto [t, y] = planted_problem({8, 6, 4, 3}, {2, 2, 2}, ModelKind::cp, 9);
  FitConfig fcfg;
  fcfg.seed = 42;
  fcfg.max_iters = 10;
  fcfg.record_trace = true;
  auto [m1, tr1] = fit(t, y, {2, 2, 2}, ModelKind::cp, paper_constraints(), fcfg);
  auto [m2, tr2] = fit(t, y, {2, 2, 2}, ModelKind::cp, paper_constraints(), fcfg);
  REQUIRE(tr1.iterations.size() == tr2.iterations.size());
  for (std::size_t i = 0; i < tr1.iterations.size(); ++i)
    CHECK(tr1.iterations[i].objective == tr2.iterations[i].objective);
  CHECK(m1.a == m2.a);
}

TEST_CASE("scaling the data scales the objective trace quadratically") {
  // Cone constraints (non-negativity) commute with rescaling; bounded sets
  // like the L1 ball do not, so this is the config the law is exact for.
  auto [t, y] = planted_problem({8, 6, 4, 3}, {2, 2, 2}, ModelKind::tucker3, 61);
  FitConfig fcfg;
  fcfg.seed = 5;
  fcfg.max_iters = 12;
  fcfg.rel_tol = 1e-13;
  fcfg.record_trace = true;

  const double alpha = 3.5;
  Tensor3 t_scaled = t;
  t_scaled.values() *= alpha;
  Matrix y_scaled = alpha * y;

  auto [m1, tr1] = fit(t, y, {2, 2, 2}, ModelKind::tucker3, loose_nonneg(), fcfg);
  auto [m2, tr2] =
      fit(t_scaled, y_scaled, {2, 2, 2}, ModelKind::tucker3, loose_nonneg(), fcfg);
  REQUIRE(tr1.iterations.size() == tr2.iterations.size());
  for (std::size_t i = 0; i < tr1.iterations.size(); ++i) {
    double expected = alpha * alpha * tr1.iterations[i].objective;
    CHECK(tr2.iterations[i].objective == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("fit rejects inconsistent configurations") {
  Tensor3 t(4, 3, 2);
  Matrix y(5, 2);  // wrong first mode
  CHECK_THROWS_AS(fit(t, y, {2, 2, 2}, ModelKind::tucker3, {}, {}), DimensionError);

  Matrix y_ok(4, 2);
  ConstraintConfig bad;
  bad.coupling_weight = -1.0;
  CHECK_THROWS_AS(fit(t, y_ok, {2, 2, 2}, ModelKind::tucker3, bad, {}), ConfigError);
}
