#include "concmtf/synth.hpp"

#include "concmtf/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace concmtf {

namespace {

Matrix sparse_nonneg_factor(Index rows, Index cols, double sparsity, RandomStream& rs) {
  Matrix m(rows, cols);
  for (Index c = 0; c < cols; ++c)
    for (Index r = 0; r < rows; ++r) m(r, c) = rs.uniform();
  const auto zeros_per_col = std::min<std::int64_t>(
      std::llround(sparsity * static_cast<double>(rows)), rows > 0 ? rows - 1 : 0);
  for (Index c = 0; c < cols; ++c) {
    std::vector<Index> order(static_cast<std::size_t>(rows));
    std::iota(order.begin(), order.end(), Index{0});
    // Seeded Fisher-Yates prefix selects the zeroed entries.
    for (std::int64_t z = 0; z < zeros_per_col; ++z) {
      auto pick = z + static_cast<std::int64_t>(
                          rs.below(static_cast<std::uint64_t>(rows - z)));
      std::swap(order[static_cast<std::size_t>(z)], order[static_cast<std::size_t>(pick)]);
      m(order[static_cast<std::size_t>(z)], c) = 0.0;
    }
    double norm = m.col(c).norm();
    if (norm > 0.0) m.col(c) /= norm;
  }
  return m;
}

void add_calibrated_noise(Vector& values, double noise, RandomStream& rs) {
  if (noise <= 0.0 || values.size() == 0) return;
  Vector g(values.size());
  for (Index i = 0; i < g.size(); ++i) g[i] = rs.gaussian();
  double gnorm = g.norm();
  if (gnorm == 0.0) return;
  g *= noise * values.norm() / gnorm;
  values += g;
  values = values.cwiseMax(0.0);
}

}  // namespace

PlantedInstance generate_planted(std::array<Index, 4> dims, std::array<Index, 3> ranks,
                                 ModelKind kind, double sparsity, double noise,
                                 std::uint64_t seed) {
  if (sparsity < 0.0 || sparsity > 1.0)
    throw ConfigError("generate_planted: sparsity must lie in [0,1]");
  if (noise < 0.0) throw ConfigError("generate_planted: noise must be >= 0");
  const auto [di, dj, dk, df] = dims;
  const auto [r1, r2, r3] = ranks;
  if (r1 > di || r2 > dj || r3 > dk)
    throw ConfigError("generate_planted: rank exceeds the corresponding dimension");
  if (kind == ModelKind::cp && (r1 != r2 || r1 != r3))
    throw ConfigError("generate_planted: CP requires equal ranks");

  RandomStream rs(seed);
  PlantedInstance inst;
  inst.noise_level = noise;
  inst.sparsity = sparsity;
  inst.seed = seed;

  FactorModel truth;
  truth.kind = kind;
  truth.a = sparse_nonneg_factor(di, r1, sparsity, rs);
  truth.b = sparse_nonneg_factor(dj, r2, sparsity, rs);
  truth.c = sparse_nonneg_factor(dk, r3, sparsity, rs);
  truth.d = sparse_nonneg_factor(df, r1, sparsity, rs);
  if (kind == ModelKind::cp) {
    Vector w(r1);
    for (Index p = 0; p < r1; ++p) w[p] = rs.uniform(1.0, 2.0);
    truth.core = superdiagonal_core(w, r1);
  } else {
    Tensor3 g(r1, r2, r3);
    for (Index i = 0; i < g.size(); ++i) g.values()[i] = rs.uniform();
    const auto zeros = std::min<std::int64_t>(
        std::llround(sparsity * static_cast<double>(g.size())), g.size() > 0 ? g.size() - 1 : 0);
    std::vector<Index> order(static_cast<std::size_t>(g.size()));
    std::iota(order.begin(), order.end(), Index{0});
    for (std::int64_t z = 0; z < zeros; ++z) {
      auto pick = z + static_cast<std::int64_t>(
                          rs.below(static_cast<std::uint64_t>(g.size() - z)));
      std::swap(order[static_cast<std::size_t>(z)], order[static_cast<std::size_t>(pick)]);
      g.values()[order[static_cast<std::size_t>(z)]] = 0.0;
    }
    truth.core = std::move(g);
  }

  inst.tensor = truth.reconstruct_tensor();
  add_calibrated_noise(inst.tensor.values(), noise, rs);

  inst.coupled = truth.reconstruct_coupled();
  if (inst.coupled.size() > 0) {
    Vector flat = Eigen::Map<const Vector>(inst.coupled.data(), inst.coupled.size());
    add_calibrated_noise(flat, noise, rs);
    inst.coupled = Eigen::Map<const Matrix>(flat.data(), di, df);
  }

  inst.truth = std::move(truth);
  return inst;
}

namespace {

double column_cosine(const Matrix& x, const Matrix& y, Index cx, Index cy) {
  double nx = x.col(cx).norm(), ny = y.col(cy).norm();
  if (nx == 0.0 || ny == 0.0) return 0.0;
  return x.col(cx).dot(y.col(cy)) / (nx * ny);
}

}  // namespace

double factor_match_score(const FactorModel& est, const FactorModel& truth) {
  if (est.kind != ModelKind::cp || truth.kind != ModelKind::cp)
    throw ConfigError("factor_match_score: component matching is defined for CP models");
  const Index r = est.a.cols();
  if (truth.a.cols() != r) throw ConfigError("factor_match_score: rank mismatch");
  if (r == 0) return 0.0;

  Matrix score(r, r);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < r; ++j)
      score(i, j) = column_cosine(est.a, truth.a, i, j) * column_cosine(est.b, truth.b, i, j) *
                    column_cosine(est.c, truth.c, i, j);

  if (r <= 8) {
    std::vector<Index> perm(static_cast<std::size_t>(r));
    std::iota(perm.begin(), perm.end(), Index{0});
    double best = -std::numeric_limits<double>::infinity();
    do {
      double total = 0.0;
      for (Index j = 0; j < r; ++j) total += score(perm[static_cast<std::size_t>(j)], j);
      best = std::max(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best / static_cast<double>(r);
  }

  // Greedy matching for large ranks.
  std::vector<bool> used_est(static_cast<std::size_t>(r), false),
      used_truth(static_cast<std::size_t>(r), false);
  double total = 0.0;
  for (Index step = 0; step < r; ++step) {
    double best = -std::numeric_limits<double>::infinity();
    Index bi = 0, bj = 0;
    for (Index i = 0; i < r; ++i) {
      if (used_est[static_cast<std::size_t>(i)]) continue;
      for (Index j = 0; j < r; ++j) {
        if (used_truth[static_cast<std::size_t>(j)]) continue;
        if (score(i, j) > best) {
          best = score(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    used_est[static_cast<std::size_t>(bi)] = true;
    used_truth[static_cast<std::size_t>(bj)] = true;
    total += best;
  }
  return total / static_cast<double>(r);
}

RunMetrics evaluate_run(const PlantedInstance& instance, const FactorModel& model,
                        const FitTrace& trace, const TopicReport& report) {
  RunMetrics metrics;
  if (model.kind == ModelKind::cp && instance.truth.kind == ModelKind::cp &&
      model.a.cols() == instance.truth.a.cols()) {
    metrics.match_score = factor_match_score(model, instance.truth);
  }
  double tnorm = instance.tensor.values().norm();
  double err = frobenius_error(instance.tensor, model.reconstruct_tensor());
  metrics.rel_error = tnorm > 0.0 ? err / tnorm : err;
  metrics.mean_word_overlap = report.mean_pairwise_overlap();
  metrics.core_density = report.core_density;
  metrics.iterations =
      trace.iterations.empty() ? 0 : trace.iterations.back().iteration;
  metrics.millis = trace.iterations.empty() ? 0.0 : trace.iterations.back().millis;
  return metrics;
}

}  // namespace concmtf
