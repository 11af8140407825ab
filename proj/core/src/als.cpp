#include "concmtf/als.hpp"

#include "concmtf/rng.hpp"

#include <chrono>
#include <cmath>

namespace concmtf {

std::string to_string(ModelKind kind) { return kind == ModelKind::cp ? "cp" : "tucker3"; }

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "cp") return ModelKind::cp;
  if (s == "tucker3" || s == "tucker") return ModelKind::tucker3;
  throw ConfigError("unknown model kind: " + s);
}

Vector FactorModel::cp_weights() const {
  const Index r = core.dim(0);
  Vector w(r);
  for (Index p = 0; p < r; ++p) w[p] = core(p, p, p);
  return w;
}

Tensor3 FactorModel::reconstruct_tensor() const { return tucker_reconstruct(core, a, b, c); }

void ConstraintConfig::validate() const {
  auto check_block = [](const BlockConstraints& bc, const char* name) {
    if (bc.l1_eps && (!std::isfinite(*bc.l1_eps) || *bc.l1_eps < 0))
      throw ConfigError(std::string("constraint eps for ") + name + " must be finite and >= 0");
    if (bc.orth_eps && (!std::isfinite(*bc.orth_eps) || *bc.orth_eps < 0))
      throw ConfigError(std::string("constraint eps for ") + name + " must be finite and >= 0");
  };
  check_block(a, "A");
  check_block(b, "B");
  check_block(c, "C");
  check_block(d, "D");
  if (core.l1_eps && (!std::isfinite(*core.l1_eps) || *core.l1_eps < 0))
    throw ConfigError("core l1 eps must be finite and >= 0");
  if (!std::isfinite(coupling_weight) || coupling_weight < 0)
    throw ConfigError("coupling weight must be finite and >= 0");
}

double IterationStats::max_violation() const {
  double v = 0.0;
  for (double b : block_violation) v = std::max(v, b);
  return v;
}

std::vector<double> FitTrace::objectives() const {
  std::vector<double> out;
  out.reserve(iterations.size());
  for (const auto& it : iterations) out.push_back(it.objective);
  return out;
}

namespace {

ColumnConstraints column_constraints(const BlockConstraints& bc, const Matrix& x, Index skip) {
  ColumnConstraints c;
  c.nonneg = bc.nonneg;
  c.l1_bound = bc.l1_eps;
  c.orth_bound = bc.orth_eps;
  if (bc.orth_eps) {
    c.fixed_columns.reserve(static_cast<std::size_t>(x.cols() - 1));
    for (Index q = 0; q < x.cols(); ++q)
      if (q != skip) c.fixed_columns.push_back(x.col(q));
  }
  return c;
}

/// Mode-n design matrix M with rows indexed by the mode's rank, columns by
/// the mode's unfolding columns, so that unfold(t,n) ~ X * M. Assembled by
/// core-slice contraction; the CP fast path uses the Khatri-Rao identity for
/// superdiagonal cores.
Matrix mode_design(const FactorModel& m, int mode, bool cp_fast_path) {
  if (m.kind == ModelKind::cp && cp_fast_path) {
    const Vector w = m.cp_weights();
    switch (mode) {
      case 1: return (khatri_rao(m.c, m.b) * w.asDiagonal()).transpose();
      case 2: return (khatri_rao(m.c, m.a) * w.asDiagonal()).transpose();
      case 3: return (khatri_rao(m.b, m.a) * w.asDiagonal()).transpose();
    }
  }
  const auto [r1, r2, r3] = m.core.dims();
  const Index di = m.a.rows(), dj = m.b.rows(), dk = m.c.rows();
  switch (mode) {
    case 1: {
      Matrix out(r1, dj * dk);
      Matrix slice(r2, r3);
      for (Index p = 0; p < r1; ++p) {
        for (Index q = 0; q < r2; ++q)
          for (Index r = 0; r < r3; ++r) slice(q, r) = m.core(p, q, r);
        Matrix v = m.b * slice * m.c.transpose();  // J x K, column-major = j + J*k
        out.row(p) = Eigen::Map<const Vector>(v.data(), v.size());
      }
      return out;
    }
    case 2: {
      Matrix out(r2, di * dk);
      Matrix slice(r1, r3);
      for (Index q = 0; q < r2; ++q) {
        for (Index p = 0; p < r1; ++p)
          for (Index r = 0; r < r3; ++r) slice(p, r) = m.core(p, q, r);
        Matrix v = m.a * slice * m.c.transpose();  // I x K, i + I*k
        out.row(q) = Eigen::Map<const Vector>(v.data(), v.size());
      }
      return out;
    }
    case 3: {
      Matrix out(r3, di * dj);
      Matrix slice(r1, r2);
      for (Index r = 0; r < r3; ++r) {
        for (Index p = 0; p < r1; ++p)
          for (Index q = 0; q < r2; ++q) slice(p, q) = m.core(p, q, r);
        Matrix v = m.a * slice * m.b.transpose();  // I x J, i + I*j
        out.row(r) = Eigen::Map<const Vector>(v.data(), v.size());
      }
      return out;
    }
    default:
      throw DimensionError("mode_design: mode must be 1, 2 or 3");
  }
}

/// Gauss-Seidel sweep over the columns of x for min ||W - x N^T ... ||
/// expressed through the grams P = W N^T and S = N N^T. Each column solve is
/// the isotropic projection solve; degenerate designs freeze the column.
Matrix update_block_grams(const Matrix& p_gram, const Matrix& s_gram, Matrix x,
                          const BlockConstraints& bc, UpdateStats* stats) {
  UpdateStats local;
  UpdateStats& st = stats ? *stats : local;
  for (Index p = 0; p < x.cols(); ++p) {
    Vector rf = p_gram.col(p) - x * s_gram.col(p) + x.col(p) * s_gram(p, p);
    SolveReport rep = solve_isotropic_column(rf, s_gram(p, p), column_constraints(bc, x, p));
    if (rep.degenerate) {
      ++st.degenerate_columns;
      continue;
    }
    x.col(p) = rep.solution;
    st.max_violation = std::max(st.max_violation, rep.feasibility_violation);
  }
  return x;
}

enum Block { kBlockA = 0, kBlockB = 1, kBlockC = 2, kBlockD = 3, kBlockCore = 4 };

/// Unit-normalize one factor block in place, pushing the scales into the
/// core (and into D for block A). Returns indices of zero columns.
std::vector<Index> normalize_block(FactorModel& m, int block) {
  std::vector<Index> zeros;
  Matrix& x = block == kBlockA ? m.a : (block == kBlockB ? m.b : m.c);
  const auto [r1, r2, r3] = m.core.dims();
  for (Index p = 0; p < x.cols(); ++p) {
    double s = x.col(p).norm();
    if (s == 0.0) {
      zeros.push_back(p);
      continue;
    }
    x.col(p) /= s;
    if (block == kBlockA) {
      for (Index q = 0; q < r2; ++q)
        for (Index r = 0; r < r3; ++r) m.core(p, q, r) *= s;
      if (m.d.cols() > 0) m.d.col(p) *= s;
    } else if (block == kBlockB) {
      for (Index q = 0; q < r1; ++q)
        for (Index r = 0; r < r3; ++r) m.core(q, p, r) *= s;
    } else {
      for (Index q = 0; q < r1; ++q)
        for (Index r = 0; r < r2; ++r) m.core(q, r, p) *= s;
    }
  }
  return zeros;
}

void normalize_d_literal(FactorModel& m) {
  for (Index p = 0; p < m.d.cols(); ++p) {
    double s = m.d.col(p).norm();
    if (s > 0.0) m.d.col(p) /= s;
  }
}

void project_block_feasible(Matrix& x, const BlockConstraints& bc) {
  if (!bc.any()) return;
  for (Index p = 0; p < x.cols(); ++p)
    x.col(p) = project_feasible(x.col(p), column_constraints(bc, x, p));
}

}  // namespace

FactorModel init_factors(std::array<Index, 4> dims, std::array<Index, 3> ranks, ModelKind kind,
                         std::uint64_t seed) {
  const auto [di, dj, dk, df] = dims;
  const auto [r1, r2, r3] = ranks;
  if (r1 < 1 || r2 < 1 || r3 < 1) throw ConfigError("init_factors: ranks must be >= 1");
  if (r1 > di || r2 > dj || r3 > dk)
    throw ConfigError("init_factors: rank exceeds the corresponding dimension");
  if (kind == ModelKind::cp && (r1 != r2 || r1 != r3))
    throw ConfigError("init_factors: CP requires equal ranks");

  RandomStream rs(seed);
  auto fill = [&rs](Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index c = 0; c < cols; ++c)
      for (Index r = 0; r < rows; ++r) m(r, c) = rs.uniform();
    return m;
  };

  FactorModel m;
  m.kind = kind;
  m.a = fill(di, r1);
  m.b = fill(dj, r2);
  m.c = fill(dk, r3);
  m.d = fill(df, r1);
  if (kind == ModelKind::cp) {
    Vector w(r1);
    for (Index p = 0; p < r1; ++p) w[p] = rs.uniform();
    m.core = superdiagonal_core(w, r1);
  } else {
    Tensor3 g(r1, r2, r3);
    for (Index i = 0; i < g.size(); ++i) g.values()[i] = rs.uniform();
    m.core = std::move(g);
  }
  return m;
}

Matrix update_factor_a(const Tensor3& t, const Matrix& y, const FactorModel& m,
                       const ConstraintConfig& cfg, UpdateStats* stats, bool cp_fast_path) {
  if (t.dim(0) != m.a.rows() || (y.cols() > 0 && y.rows() != m.a.rows()))
    throw DimensionError("update_factor_a: first-mode dimensions disagree");
  const double lambda = cfg.coupling_weight;
  Matrix design = mode_design(m, 1, cp_fast_path);
  Matrix p_gram = unfold(t, 1) * design.transpose();
  Matrix s_gram = design * design.transpose();
  if (lambda > 0.0 && y.cols() > 0) {
    p_gram.noalias() += lambda * (y * m.d);
    s_gram.noalias() += lambda * (m.d.transpose() * m.d);
  }
  return update_block_grams(p_gram, s_gram, m.a, cfg.a, stats);
}

Matrix update_factor_b(const Tensor3& t, const FactorModel& m, const ConstraintConfig& cfg,
                       UpdateStats* stats, bool cp_fast_path) {
  if (t.dim(1) != m.b.rows()) throw DimensionError("update_factor_b: mode-2 dimension disagrees");
  Matrix design = mode_design(m, 2, cp_fast_path);
  Matrix p_gram = unfold(t, 2) * design.transpose();
  Matrix s_gram = design * design.transpose();
  return update_block_grams(p_gram, s_gram, m.b, cfg.b, stats);
}

Matrix update_factor_c(const Tensor3& t, const FactorModel& m, const ConstraintConfig& cfg,
                       UpdateStats* stats, bool cp_fast_path) {
  if (t.dim(2) != m.c.rows()) throw DimensionError("update_factor_c: mode-3 dimension disagrees");
  Matrix design = mode_design(m, 3, cp_fast_path);
  Matrix p_gram = unfold(t, 3) * design.transpose();
  Matrix s_gram = design * design.transpose();
  return update_block_grams(p_gram, s_gram, m.c, cfg.c, stats);
}

Matrix update_factor_d(const Matrix& y, const FactorModel& m, const ConstraintConfig& cfg,
                       UpdateStats* stats) {
  if (y.cols() != m.d.rows() || y.rows() != m.a.rows())
    throw DimensionError("update_factor_d: coupled matrix shape disagrees with model");
  // min_D ||Y^T - D A^T||: design rows are A's columns.
  Matrix p_gram = y.transpose() * m.a;
  Matrix s_gram = m.a.transpose() * m.a;
  return update_block_grams(p_gram, s_gram, m.d, cfg.d, stats);
}

Tensor3 update_core(const Tensor3& t, const FactorModel& m, const ConstraintConfig& cfg,
                    UpdateStats* stats) {
  if (m.kind != ModelKind::tucker3)
    throw ConfigError("update_core: only Tucker3 models re-estimate the core");
  const auto ranks = m.core.dims();
  Matrix gram = kronecker(m.c.transpose() * m.c,
                          kronecker(m.b.transpose() * m.b, m.a.transpose() * m.a));
  // (C kron B kron A)^T vec(t) as a three-mode contraction of t.
  Vector linear =
      vectorize(tucker_reconstruct(t, m.a.transpose(), m.b.transpose(), m.c.transpose()));

  ColumnConstraints cons;
  cons.nonneg = cfg.core.nonneg;
  cons.l1_bound = cfg.core.l1_eps;
  SolveReport rep =
      solve_box_l1_qp(gram, linear, cons, default_qp_tol(linear), vectorize(m.core));
  if (stats) {
    stats->max_violation = std::max(stats->max_violation, rep.feasibility_violation);
    stats->qp_converged = rep.converged;
  }
  return Tensor3(ranks, std::move(rep.solution));
}

NormalizeResult normalize_with_compensation(const FactorModel& m, const ConstraintConfig& cfg) {
  NormalizeResult out{m, {}};
  out.zero_columns[0] = normalize_block(out.model, kBlockA);
  out.zero_columns[1] = normalize_block(out.model, kBlockB);
  out.zero_columns[2] = normalize_block(out.model, kBlockC);
  if (cfg.normalize_d) normalize_d_literal(out.model);
  return out;
}

double objective(const Tensor3& t, const Matrix& y, const FactorModel& m, double lambda) {
  double tensor_term = (t.values() - m.reconstruct_tensor().values()).squaredNorm();
  double coupled_term = (y - m.reconstruct_coupled()).squaredNorm();
  return tensor_term + lambda * coupled_term;
}

std::pair<FactorModel, FitTrace> fit(const Tensor3& t, const Matrix& y,
                                     std::array<Index, 3> ranks, ModelKind kind,
                                     const ConstraintConfig& ccfg, const FitConfig& fcfg) {
  ccfg.validate();
  if (fcfg.max_iters < 1) throw ConfigError("fit: max_iters must be >= 1");
  if (!(fcfg.rel_tol > 0)) throw ConfigError("fit: rel_tol must be > 0");
  if (y.cols() > 0 && y.rows() != t.dim(0))
    throw DimensionError("fit: tensor and coupled matrix disagree on the first mode");

  const auto start_time = std::chrono::steady_clock::now();
  auto elapsed_ms = [&start_time] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                     start_time)
        .count();
  };

  FactorModel model = init_factors({t.dim(0), t.dim(1), t.dim(2), y.cols()}, ranks, kind,
                                   fcfg.seed);

  // Match the random initial reconstruction to the data magnitude. Besides
  // starting ALS in the right ballpark, this makes the whole iteration map
  // commute with a rescaling of (t, y) under cone constraints.
  {
    double recon_norm = model.reconstruct_tensor().values().norm();
    double t_norm = t.values().norm();
    if (recon_norm > 0.0 && t_norm > 0.0) model.core.values() *= t_norm / recon_norm;
    if (y.cols() > 0) {
      double coupled_norm = model.reconstruct_coupled().norm();
      double y_norm = y.norm();
      if (coupled_norm > 0.0 && y_norm > 0.0) model.d *= y_norm / coupled_norm;
    }
  }

  // Start feasible so every later column solve improves on its current value.
  project_block_feasible(model.a, ccfg.a);
  project_block_feasible(model.b, ccfg.b);
  project_block_feasible(model.c, ccfg.c);
  project_block_feasible(model.d, ccfg.d);
  if (kind == ModelKind::tucker3 && (ccfg.core.nonneg || ccfg.core.l1_eps)) {
    ColumnConstraints core_cons;
    core_cons.nonneg = ccfg.core.nonneg;
    core_cons.l1_bound = ccfg.core.l1_eps;
    model.core = Tensor3(model.core.dims(), project_feasible(vectorize(model.core), core_cons));
  }

  const double lambda = ccfg.coupling_weight;
  FitTrace trace;
  IterationStats initial;
  initial.iteration = 0;
  initial.objective = objective(t, y, model, lambda);
  initial.millis = elapsed_ms();
  trace.iterations.push_back(initial);

  // Factors stay at their constraint-box scale throughout the sweeps, with
  // the core (or CP weights) carrying the data magnitude; every column solve
  // then starts from a feasible point, which is what makes each sweep
  // non-increasing. Unit column normalization is applied once at the end as
  // the compensated output form; mid-loop unit normalization would inflate
  // each column out of its own L1 box and force the next exact solve uphill.
  double prev_obj = initial.objective;
  for (int it = 1; it <= fcfg.max_iters; ++it) {
    IterationStats row;
    row.iteration = it;

    UpdateStats sa, sb, sc, sd, score;
    model.a = update_factor_a(t, y, model, ccfg, &sa, fcfg.cp_fast_path);
    model.b = update_factor_b(t, model, ccfg, &sb, fcfg.cp_fast_path);
    model.c = update_factor_c(t, model, ccfg, &sc, fcfg.cp_fast_path);
    if (model.d.rows() > 0) model.d = update_factor_d(y, model, ccfg, &sd);
    if (ccfg.normalize_d) normalize_d_literal(model);  // paper-literal, breaks descent
    if (kind == ModelKind::tucker3) model.core = update_core(t, model, ccfg, &score);

    row.block_violation = {sa.max_violation, sb.max_violation, sc.max_violation,
                           sd.max_violation, score.max_violation};
    row.degenerate_columns = sa.degenerate_columns + sb.degenerate_columns +
                             sc.degenerate_columns + sd.degenerate_columns;
    row.objective = objective(t, y, model, lambda);
    row.millis = elapsed_ms();

    if (fcfg.record_trace || it == fcfg.max_iters) {
      trace.iterations.push_back(row);
    }

    // Pure relative change keeps the stopping rule scale-invariant.
    if (prev_obj == 0.0 || std::abs(prev_obj - row.objective) < fcfg.rel_tol * prev_obj) {
      trace.converged = true;
      if (!fcfg.record_trace && it != fcfg.max_iters) trace.iterations.push_back(row);
      break;
    }
    prev_obj = row.objective;
  }

  normalize_block(model, kBlockA);
  normalize_block(model, kBlockB);
  normalize_block(model, kBlockC);
  return {std::move(model), std::move(trace)};
}

}  // namespace concmtf
