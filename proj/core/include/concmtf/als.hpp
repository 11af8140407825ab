#pragma once

#include "concmtf/column_qp.hpp"
#include "concmtf/tensor.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace concmtf {

/// Thrown for invalid rank/kind/constraint configurations.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

enum class ModelKind { cp, tucker3 };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

/// Coupled factorization state: tensor factors a (I x R1), b (J x R2),
/// c (K x R3), coupled-matrix factor d (F x R1), and core (R1 x R2 x R3).
/// CP keeps equal ranks and a superdiagonal core whose weights live on the
/// diagonal.
struct FactorModel {
  Matrix a, b, c, d;
  Tensor3 core;
  ModelKind kind = ModelKind::tucker3;

  std::array<Index, 3> ranks() const { return {a.cols(), b.cols(), c.cols()}; }

  /// CP weights, i.e. the superdiagonal of the core.
  Vector cp_weights() const;

  Tensor3 reconstruct_tensor() const;
  Matrix reconstruct_coupled() const { return a * d.transpose(); }
};

/// Per-factor constraint switches; eps bounds are halfspace levels as in
/// ColumnConstraints.
struct BlockConstraints {
  bool nonneg = false;
  std::optional<double> l1_eps;
  std::optional<double> orth_eps;

  bool any() const { return nonneg || l1_eps || orth_eps; }
};

struct CoreConstraints {
  bool nonneg = false;
  std::optional<double> l1_eps;
};

struct ConstraintConfig {
  BlockConstraints a, b, c, d;
  CoreConstraints core;
  double coupling_weight = 1.0;  // lambda
  /// Paper-literal uncompensated normalization of D's columns. Off by
  /// default: it changes the coupled fit and breaks the descent guarantee.
  bool normalize_d = false;

  void validate() const;
};

struct FitConfig {
  int max_iters = 200;
  double rel_tol = 1e-6;
  std::uint64_t seed = 0;
  bool record_trace = false;
  /// Engine knob: route CP through the Khatri-Rao design instead of the
  /// generic superdiagonal-core Tucker design. Same math, different
  /// floating-point path; the generic route exists so the two can be
  /// cross-checked.
  bool cp_fast_path = true;
};

/// One row of the fit trace. Violations are per block (a, b, c, d, core),
/// measured after that block's update and before its normalization.
struct IterationStats {
  int iteration = 0;
  double objective = 0.0;
  std::array<double, 5> block_violation{0, 0, 0, 0, 0};
  int degenerate_columns = 0;
  int zero_norm_columns = 0;
  double millis = 0.0;  // wall time since fit start

  double max_violation() const;
};

struct FitTrace {
  std::vector<IterationStats> iterations;  // entry 0 is the initial state
  bool converged = false;

  std::vector<double> objectives() const;
};

/// Stats out-parameter shared by the block update functions.
struct UpdateStats {
  double max_violation = 0.0;
  int degenerate_columns = 0;
  bool qp_converged = true;
};

/// Random model with all factor and core entries i.i.d. uniform [0,1) from
/// the seeded stream (draw order: a, b, c, d column-major, then core). CP
/// cores are superdiagonal with weights from the same stream.
FactorModel init_factors(std::array<Index, 4> dims, std::array<Index, 3> ranks, ModelKind kind,
                         std::uint64_t seed);

/// One constrained block solve of the coupled mode-1 problem
///   min_A ||unfold(t,1) - A*M||_F^2 + lambda*||y - A*D^T||_F^2,
/// column by column in index order, each column seeing the freshest other
/// columns (Gauss-Seidel). Degenerate design rows leave the column at its
/// previous value.
Matrix update_factor_a(const Tensor3& t, const Matrix& y, const FactorModel& m,
                       const ConstraintConfig& cfg, UpdateStats* stats = nullptr,
                       bool cp_fast_path = true);

Matrix update_factor_b(const Tensor3& t, const FactorModel& m, const ConstraintConfig& cfg,
                       UpdateStats* stats = nullptr, bool cp_fast_path = true);

Matrix update_factor_c(const Tensor3& t, const FactorModel& m, const ConstraintConfig& cfg,
                       UpdateStats* stats = nullptr, bool cp_fast_path = true);

Matrix update_factor_d(const Matrix& y, const FactorModel& m, const ConstraintConfig& cfg,
                       UpdateStats* stats = nullptr);

/// Constrained core solve (Tucker3 only): projected gradient on
///   min_g 0.5 g^T (C kron B kron A)^T (C kron B kron A) g - vec(t)^T (C kron B kron A) g
/// with the gram assembled as kron(c^T c, kron(b^T b, a^T a)). Warm-started
/// from the current core.
Tensor3 update_core(const Tensor3& t, const FactorModel& m, const ConstraintConfig& cfg,
                    UpdateStats* stats = nullptr);

struct NormalizeResult {
  FactorModel model;
  /// Columns (per block a, b, c) whose norm was zero and were left as-is.
  std::array<std::vector<Index>, 3> zero_columns;
};

/// Unit-normalize the columns of A, B and C, compensating the scales into
/// the core (and, for A, into D) so both reconstructions are unchanged.
/// Zero columns are left untouched and flagged. With cfg.normalize_d, D is
/// additionally unit-normalized without compensation.
NormalizeResult normalize_with_compensation(const FactorModel& m, const ConstraintConfig& cfg);

/// ||t - reconstruct||_F^2 + lambda * ||y - a d^T||_F^2.
double objective(const Tensor3& t, const Matrix& y, const FactorModel& m, double lambda);

/// Full alternating solve: A -> normalize A -> B -> normalize B -> C ->
/// normalize C -> D [-> normalize D if configured] -> core (Tucker3 only),
/// until the relative objective change drops below rel_tol or max_iters
/// sweeps. The initial factors are projected onto their feasible sets
/// before the first sweep so every later block solve starts feasible.
std::pair<FactorModel, FitTrace> fit(const Tensor3& t, const Matrix& y,
                                     std::array<Index, 3> ranks, ModelKind kind,
                                     const ConstraintConfig& ccfg, const FitConfig& fcfg);

}  // namespace concmtf
