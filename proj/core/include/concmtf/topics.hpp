#pragma once

#include "concmtf/als.hpp"

#include <optional>
#include <string>
#include <vector>

namespace concmtf {

struct KMeans2Result {
  double threshold = 0.0;
  std::vector<Index> high;  // indices of the higher-mean cluster
};

/// Deterministic 1-D Lloyd's with k = 2, centroids initialized at min and
/// max. Returns the higher-mean cluster and its smallest value as the
/// threshold; all-equal inputs put every index in the high cluster.
/// Throws on empty input.
KMeans2Result kmeans2_1d(const Vector& values);

struct SupportEntry {
  Index index;
  double weight;
};

/// Zero entries strictly below the kmeans2 threshold of the column; the
/// survivors are returned sorted by weight descending, ties by index.
std::vector<SupportEntry> threshold_component(const Vector& word_column);

/// Apply a support as a mask: entries outside it become 0.
Vector apply_support(const Vector& column, const std::vector<SupportEntry>& support);

struct TopicComponent {
  int index = 0;
  std::vector<SupportEntry> word_support;
  Vector time_profile;        // over the J weeks
  Vector difficulty_profile;  // over the K post-number buckets
  Vector tag_loadings;        // D column
  double threshold = 0.0;
};

struct TopicReport {
  std::vector<TopicComponent> components;
  std::vector<std::string> vocab;
  Matrix cosine_overlap;   // pairwise cosine of word columns
  Matrix support_jaccard;  // pairwise Jaccard of thresholded supports
  double core_density = 0.0;
  double density_tol = 0.0;

  /// Mean off-diagonal cosine overlap (0 for single-component models).
  double mean_pairwise_overlap() const;
};

/// One component per first-mode factor column. CP components take columns r
/// of B, C and D directly; Tucker3 time and difficulty profiles contract the
/// r-th mode-1 core slice against B and C (summing the slice over the other
/// mode). Core density counts entries with |g| > density_tol, which defaults
/// to 1e-6 * max|g|.
TopicReport build_report(const FactorModel& m, const std::vector<std::string>& vocab,
                         std::optional<double> density_tol = {});

double core_density(const Tensor3& core, double tol);

}  // namespace concmtf
