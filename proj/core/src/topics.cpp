#include "concmtf/topics.hpp"

#include <algorithm>
#include <cmath>

namespace concmtf {

KMeans2Result kmeans2_1d(const Vector& values) {
  const Index n = values.size();
  if (n == 0) throw std::invalid_argument("kmeans2_1d: empty input");
  if (!values.allFinite()) throw std::invalid_argument("kmeans2_1d: non-finite input");

  const double vmin = values.minCoeff();
  const double vmax = values.maxCoeff();
  KMeans2Result result;
  if (vmin == vmax) {
    result.threshold = vmin;
    result.high.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) result.high[static_cast<std::size_t>(i)] = i;
    return result;
  }

  double c_lo = vmin, c_hi = vmax;
  std::vector<bool> high(static_cast<std::size_t>(n), false), prev;
  for (int iter = 0; iter < 1000; ++iter) {
    for (Index i = 0; i < n; ++i) {
      // Ties go to the high cluster.
      high[static_cast<std::size_t>(i)] =
          std::abs(values[i] - c_hi) <= std::abs(values[i] - c_lo);
    }
    if (high == prev) break;
    prev = high;
    double sum_lo = 0, sum_hi = 0;
    Index n_lo = 0, n_hi = 0;
    for (Index i = 0; i < n; ++i) {
      if (high[static_cast<std::size_t>(i)]) {
        sum_hi += values[i];
        ++n_hi;
      } else {
        sum_lo += values[i];
        ++n_lo;
      }
    }
    if (n_lo == 0 || n_hi == 0) break;
    c_lo = sum_lo / static_cast<double>(n_lo);
    c_hi = sum_hi / static_cast<double>(n_hi);
  }

  double threshold = vmax;
  for (Index i = 0; i < n; ++i) {
    if (high[static_cast<std::size_t>(i)]) {
      result.high.push_back(i);
      threshold = std::min(threshold, values[i]);
    }
  }
  result.threshold = threshold;
  return result;
}

namespace {

std::vector<SupportEntry> support_above(const Vector& column, double threshold) {
  std::vector<SupportEntry> support;
  for (Index i = 0; i < column.size(); ++i)
    if (column[i] >= threshold) support.push_back({i, column[i]});
  std::sort(support.begin(), support.end(), [](const SupportEntry& a, const SupportEntry& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    return a.index < b.index;
  });
  return support;
}

double cosine(const Vector& x, const Vector& y) {
  double nx = x.norm(), ny = y.norm();
  if (nx == 0.0 || ny == 0.0) return 0.0;
  return x.dot(y) / (nx * ny);
}

}  // namespace

std::vector<SupportEntry> threshold_component(const Vector& word_column) {
  return support_above(word_column, kmeans2_1d(word_column).threshold);
}

Vector apply_support(const Vector& column, const std::vector<SupportEntry>& support) {
  Vector out = Vector::Zero(column.size());
  for (const auto& e : support) out[e.index] = column[e.index];
  return out;
}

double core_density(const Tensor3& core, double tol) {
  if (core.size() == 0) return 0.0;
  Index nonzero = 0;
  for (Index i = 0; i < core.size(); ++i)
    if (std::abs(core.values()[i]) > tol) ++nonzero;
  return static_cast<double>(nonzero) / static_cast<double>(core.size());
}

double TopicReport::mean_pairwise_overlap() const {
  const Index r = cosine_overlap.rows();
  if (r < 2) return 0.0;
  double sum = 0.0;
  for (Index i = 0; i < r; ++i)
    for (Index j = i + 1; j < r; ++j) sum += cosine_overlap(i, j);
  return sum / (static_cast<double>(r) * static_cast<double>(r - 1) / 2.0);
}

TopicReport build_report(const FactorModel& m, const std::vector<std::string>& vocab,
                         std::optional<double> density_tol) {
  if (static_cast<Index>(vocab.size()) != m.a.rows())
    throw DimensionError("build_report: vocabulary length does not match the word mode");

  const auto [r1, r2, r3] = m.core.dims();
  TopicReport report;
  report.vocab = vocab;

  for (Index r = 0; r < r1; ++r) {
    TopicComponent comp;
    comp.index = static_cast<int>(r);
    auto km = kmeans2_1d(m.a.col(r));
    comp.threshold = km.threshold;
    comp.word_support = support_above(m.a.col(r), km.threshold);
    if (m.kind == ModelKind::cp) {
      comp.time_profile = m.b.col(r);
      comp.difficulty_profile = m.c.col(r);
    } else {
      // Contract the mode-1 core slice r against B and C, summing over the
      // mode that is not being profiled.
      Vector over_time = Vector::Zero(r2), over_difficulty = Vector::Zero(r3);
      for (Index q = 0; q < r2; ++q)
        for (Index s = 0; s < r3; ++s) {
          over_time[q] += m.core(r, q, s);
          over_difficulty[s] += m.core(r, q, s);
        }
      comp.time_profile = m.b * over_time;
      comp.difficulty_profile = m.c * over_difficulty;
    }
    comp.tag_loadings = m.d.cols() > r ? Vector(m.d.col(r)) : Vector();
    report.components.push_back(std::move(comp));
  }

  report.cosine_overlap = Matrix::Zero(r1, r1);
  report.support_jaccard = Matrix::Zero(r1, r1);
  for (Index i = 0; i < r1; ++i) {
    for (Index j = i; j < r1; ++j) {
      report.cosine_overlap(i, j) = report.cosine_overlap(j, i) = cosine(m.a.col(i), m.a.col(j));
      std::vector<bool> in_i(vocab.size(), false);
      for (const auto& e : report.components[static_cast<std::size_t>(i)].word_support)
        in_i[static_cast<std::size_t>(e.index)] = true;
      Index inter = 0, uni = 0;
      std::vector<bool> counted = in_i;
      for (const auto& e : report.components[static_cast<std::size_t>(j)].word_support) {
        if (in_i[static_cast<std::size_t>(e.index)]) ++inter;
        counted[static_cast<std::size_t>(e.index)] = true;
      }
      for (bool b : counted) uni += b ? 1 : 0;
      double jac = uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
      report.support_jaccard(i, j) = report.support_jaccard(j, i) = jac;
    }
  }

  double max_abs = m.core.size() == 0 ? 0.0 : m.core.values().cwiseAbs().maxCoeff();
  report.density_tol = density_tol.value_or(1e-6 * max_abs);
  report.core_density = core_density(m.core, report.density_tol);
  return report;
}

}  // namespace concmtf
