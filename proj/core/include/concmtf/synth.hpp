#pragma once

#include "concmtf/als.hpp"
#include "concmtf/topics.hpp"

#include <optional>

namespace concmtf {

/// A generated instance with known ground truth.
struct PlantedInstance {
  Tensor3 tensor;
  Matrix coupled;
  FactorModel truth;
  double noise_level = 0.0;  // relative Frobenius, pre-clamp
  double sparsity = 0.0;
  std::uint64_t seed = 0;
};

/// Factors uniform [0,1) with a seeded fraction of entries zeroed per column
/// (at least one entry survives), columns L2-normalized; CP weights uniform
/// [1,2), Tucker cores uniform [0,1) with the same sparsity fraction zeroed.
/// Noise is Gaussian, scaled so ||noise||_F = noise * ||signal||_F exactly,
/// then negative entries are clamped at 0 (a documented bias at high noise).
PlantedInstance generate_planted(std::array<Index, 4> dims, std::array<Index, 3> ranks,
                                 ModelKind kind, double sparsity, double noise,
                                 std::uint64_t seed);

/// Permutation-maximized mean over components of the product of cosine
/// similarities of matched A, B and C columns. Exhaustive for rank <= 8,
/// greedy beyond. Both models must be CP with equal ranks.
double factor_match_score(const FactorModel& est, const FactorModel& truth);

struct RunMetrics {
  std::optional<double> match_score;  // CP instances only
  double rel_error = 0.0;             // ||t - reconstruction||_F / ||t||_F
  double mean_word_overlap = 0.0;
  double core_density = 0.0;
  int iterations = 0;
  double millis = 0.0;
};

RunMetrics evaluate_run(const PlantedInstance& instance, const FactorModel& model,
                        const FitTrace& trace, const TopicReport& report);

}  // namespace concmtf
