#include "concmtf/synth.hpp"

#include "concmtf/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace concmtf;

TEST_CASE("noiseless instances fit their own truth exactly") {
  PlantedInstance inst = generate_planted({12, 10, 6, 5}, {3, 3, 3}, ModelKind::cp, 0.5, 0.0, 7);
  CHECK(objective(inst.tensor, inst.coupled, inst.truth, 1.0) <= 1e-18);
  CHECK(inst.tensor.values().minCoeff() >= 0.0);
  for (Index p = 0; p < 3; ++p)
    CHECK(inst.truth.a.col(p).norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("noise calibration is exact when no clamping triggers") {
  // Sparsity 0 keeps the signal strictly positive so small noise survives
  // the clamp; the pre-clamp scaling is then observable in the output.
  PlantedInstance inst = generate_planted({10, 8, 6, 4}, {2, 2, 2}, ModelKind::cp, 0.0, 0.05, 8);
  Tensor3 signal = inst.truth.reconstruct_tensor();
  CHECK(inst.tensor.values().minCoeff() > 0.0);  // clamp was a no-op
  double rel = frobenius_error(inst.tensor, signal) / signal.values().norm();
  CHECK(rel == doctest::Approx(0.05).epsilon(1e-9));
}

TEST_CASE("instances are seed-reproducible") {
  PlantedInstance a = generate_planted({8, 6, 5, 3}, {2, 2, 2}, ModelKind::tucker3, 0.4, 0.1, 9);
  PlantedInstance b = generate_planted({8, 6, 5, 3}, {2, 2, 2}, ModelKind::tucker3, 0.4, 0.1, 9);
  CHECK(a.tensor == b.tensor);
  CHECK(a.coupled == b.coupled);
  CHECK(a.truth.a == b.truth.a);
}

TEST_CASE("sparsity zeroes the requested fraction per column") {
  PlantedInstance inst = generate_planted({20, 10, 5, 4}, {2, 2, 2}, ModelKind::cp, 0.6, 0.0, 1);
  for (Index p = 0; p < 2; ++p) {
    Index zeros = 0;
    for (Index i = 0; i < 20; ++i) zeros += inst.truth.a(i, p) == 0.0;
    CHECK(zeros == 12);  // round(0.6 * 20)
  }
  CHECK_THROWS_AS(generate_planted({5, 5, 5, 2}, {2, 2, 2}, ModelKind::cp, 1.5, 0.0, 1),
                  ConfigError);
}

TEST_CASE("match score is perfect for the truth and permutation invariant") {
  PlantedInstance inst = generate_planted({10, 8, 6, 4}, {3, 3, 3}, ModelKind::cp, 0.4, 0.0, 5);
  CHECK(factor_match_score(inst.truth, inst.truth) == doctest::Approx(1.0).epsilon(1e-12));

  FactorModel permuted = inst.truth;
  // Swap components 0 and 2 across all blocks.
  permuted.a.col(0).swap(permuted.a.col(2));
  permuted.b.col(0).swap(permuted.b.col(2));
  permuted.c.col(0).swap(permuted.c.col(2));
  CHECK(factor_match_score(permuted, inst.truth) == doctest::Approx(1.0).epsilon(1e-12));

  // Positive rescaling of est columns does not change cosines.
  FactorModel scaled = inst.truth;
  scaled.a.col(1) *= 7.5;
  scaled.b.col(2) *= 0.1;
  CHECK(factor_match_score(scaled, inst.truth) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("match score on hand-built disjoint factors") {
  // est matches truth on component 0; component 1 word factors are
  // orthogonal, so its product term is 0 and the mean is 1/2.
  FactorModel truth, est;
  truth.kind = est.kind = ModelKind::cp;
  truth.a = Matrix::Zero(4, 2);
  truth.a(0, 0) = 1;
  truth.a(1, 1) = 1;
  est.a = Matrix::Zero(4, 2);
  est.a(0, 0) = 1;
  est.a(2, 1) = 1;  // orthogonal to truth column 1
  truth.b = est.b = Matrix::Ones(3, 2);
  truth.c = est.c = Matrix::Ones(2, 2);
  truth.d = est.d = Matrix(0, 2);
  truth.core = est.core = superdiagonal_core(Vector::Ones(2), 2);
  CHECK(factor_match_score(est, truth) == doctest::Approx(0.5).epsilon(1e-12));

  FactorModel wrong_rank = truth;
  wrong_rank.a = Matrix::Zero(4, 1);
  wrong_rank.b = Matrix::Ones(3, 1);
  wrong_rank.c = Matrix::Ones(2, 1);
  wrong_rank.core = superdiagonal_core(Vector::Ones(1), 1);
  CHECK_THROWS_AS(factor_match_score(wrong_rank, truth), ConfigError);
}

TEST_CASE("evaluate_run reports metrics consistent with their parts") {
  PlantedInstance inst = generate_planted({10, 8, 6, 4}, {2, 2, 2}, ModelKind::cp, 0.3, 0.0, 11);
  std::vector<std::string> vocab(10, "w");
  for (std::size_t i = 0; i < vocab.size(); ++i) vocab[i] += std::to_string(i);

  TopicReport report = build_report(inst.truth, vocab);
  FitTrace trace;
  IterationStats row;
  row.iteration = 17;
  row.millis = 5.0;
  trace.iterations.push_back(row);

  RunMetrics metrics = evaluate_run(inst, inst.truth, trace, report);
  CHECK(metrics.rel_error <= 1e-12);
  REQUIRE(metrics.match_score.has_value());
  CHECK(*metrics.match_score == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(metrics.mean_word_overlap == doctest::Approx(report.mean_pairwise_overlap()));
  CHECK(metrics.core_density == doctest::Approx(report.core_density));
  CHECK(metrics.iterations == 17);
}
