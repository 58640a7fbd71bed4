#include <cmath>
#include <memory>

#include <gtest/gtest.h>

#include "ldsc/ldscores.hpp"
#include "ldsc/textio.hpp"
#include "test_util.hpp"

namespace ldsc {
namespace {

using testing::ar1_covariance;

const PanelOptions kPopulation{GenotypeMode::Gaussian, PanelScaling::Population};

CovarianceModel pair_block(double r) {
  Eigen::MatrixXd t(2, 2);
  t << 1.0, r, r, 1.0;
  return build_covariance(BlockStructure::build({2}), std::vector<Eigen::MatrixXd>{t});
}

TEST(TrueScores, SmallExamples) {
  EXPECT_EQ(true_ld_scores(pair_block(0.5)).values, Eigen::Vector2d(1.25, 1.25));
  EXPECT_EQ(true_ld_scores(pair_block(0.0)).values, Eigen::Vector2d(1.0, 1.0));
  const auto a = pair_block(0.5), b = pair_block(-0.5);
  const auto cross = true_ld_scores(a, &b);
  EXPECT_EQ(cross.values, Eigen::Vector2d(0.75, 0.75));
  EXPECT_EQ(cross.kind, ScoreKind::Cross);
}

TEST(TrueScores, StructureMismatch) {
  const auto a = ar1_covariance({2, 2}, {0.5});
  const auto b = ar1_covariance({4}, {0.5});
  EXPECT_LDSC_ERROR(true_ld_scores(a, &b), ErrorCode::StructureMismatch);
}

TEST(TrueScores, SingletonBlocksScoreOne) {
  const auto cov = ar1_covariance(std::vector<std::size_t>(7, 1), {0.0});
  EXPECT_TRUE((true_ld_scores(cov).values.array() == 1.0).all());
}

TEST(TrueScores, PermutationEquivariant) {
  Rng rng(1);
  const auto cov = testing::random_covariance({3, 2, 4}, rng);
  const std::vector<std::size_t> order{1, 2, 0};
  const auto perm = cov.permuted(order);
  const auto l = true_ld_scores(cov).values;
  const auto lp = true_ld_scores(perm).values;
  EXPECT_EQ(lp.segment(0, 2), l.segment(3, 2));
  EXPECT_EQ(lp.segment(2, 4), l.segment(5, 4));
  EXPECT_EQ(lp.segment(6, 3), l.segment(0, 3));
}

TEST(EstimatedScores, StandardizedPanelScoresAtLeastOne) {
  Rng rng(2);
  const auto cov = ar1_covariance({10, 10}, {0.6, 0.1});
  const auto panel = simulate_panel(cov, 50, {}, nullptr, rng);
  const auto l = estimate_ld_scores(panel, nullptr, cov.structure());
  EXPECT_GE(l.values.minCoeff(), 1.0 - 1e-12);
  EXPECT_EQ(l.source, ScoreSource::Estimated);
  EXPECT_EQ(l.panel_n, std::vector<std::size_t>{50});
}

TEST(EstimatedScores, MatchDenseSampleCorrelations) {
  Rng rng(3);
  const auto cov = ar1_covariance({4, 3}, {0.5});
  const auto panel = simulate_panel(cov, 30, {}, nullptr, rng);
  const Eigen::MatrixXd x = panel.materialize();
  const Eigen::MatrixXd r = x.transpose() * x / 30.0;
  const auto l = estimate_ld_scores(panel, nullptr, cov.structure());
  for (Eigen::Index j = 0; j < 7; ++j) {
    const Eigen::Index lo = j < 4 ? 0 : 4, q = j < 4 ? 4 : 3;
    EXPECT_NEAR(l.values[j], r.row(j).segment(lo, q).squaredNorm(), 1e-12);
  }
}

TEST(EstimatedScores, SingletonBlocksOnStandardizedPanel) {
  Rng rng(4);
  const auto cov = ar1_covariance(std::vector<std::size_t>(5, 1), {0.0});
  const auto panel = simulate_panel(cov, 20, {}, nullptr, rng);
  const auto l = estimate_ld_scores(panel, nullptr, cov.structure());
  EXPECT_LT((l.values.array() - 1.0).abs().maxCoeff(), 1e-12);
}

TEST(EstimatedScores, BiasShrinksLikeOneOverN) {
  // Standardized 2-variant block with r = 0.5: E lhat - l is O(1/n).
  const auto cov = pair_block(0.5);
  const int reps = 10000;
  double total = 0.0;
  for (int r = 0; r < reps; ++r) {
    Rng rng = SeedStream(5).child(static_cast<std::uint64_t>(r)).engine();
    const auto panel = simulate_panel(cov, 2000, {}, nullptr, rng);
    total += estimate_ld_scores(panel, nullptr, cov.structure()).values[0];
  }
  EXPECT_LT(std::abs(total / reps - 1.25), 0.01);
}

TEST(EstimatedScores, ConvergeForLargePanels) {
  Rng rng(6);
  const auto cov = ar1_covariance({5, 5}, {0.7, 0.3});
  const auto panel = simulate_panel(cov, 1000000, kPopulation, nullptr, rng);
  const auto l = estimate_ld_scores(panel, nullptr, cov.structure()).values;
  EXPECT_LT((l - true_ld_scores(cov).values).cwiseAbs().maxCoeff(), 0.01);
}

TEST(EstimatedScores, CrossScoresCanBeNegative) {
  Rng rng(7);
  const auto a = pair_block(0.8), b = pair_block(-0.8);
  const auto pa = simulate_panel(a, 5000, kPopulation, nullptr, rng);
  const auto pb = simulate_panel(b, 5000, kPopulation, nullptr, rng);
  const auto l = estimate_ld_scores(pa, &pb, a.structure());
  EXPECT_EQ(l.kind, ScoreKind::Cross);
  EXPECT_NEAR(l.values[0], 1.0 - 0.64, 0.05);
  EXPECT_EQ(l.panel_n, (std::vector<std::size_t>{5000, 5000}));
}

TEST(EstimatedScores, BlocksAreEstimatedIndependently) {
  // A block's scores depend only on its own columns.
  Rng rng(8);
  const auto cov = ar1_covariance({3, 4}, {0.5});
  const auto panel = simulate_panel(cov, 40, kPopulation, nullptr, rng);
  const auto l = estimate_ld_scores(panel, nullptr, cov.structure()).values;
  const Eigen::MatrixXd x = panel.materialize();
  const auto left = GenotypePanel::dense(x.leftCols(3), BlockStructure::build({3}), GenotypeMode::Gaussian,
                                         PanelScaling::Population);
  const auto right = GenotypePanel::dense(x.rightCols(4), BlockStructure::build({4}), GenotypeMode::Gaussian,
                                          PanelScaling::Population);
  EXPECT_LT((estimate_ld_scores(left, nullptr, left.structure()).values - l.head(3)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((estimate_ld_scores(right, nullptr, right.structure()).values - l.tail(4)).cwiseAbs().maxCoeff(),
            1e-12);
}

TEST(EstimatedScores, CoarserStructureSumsOverMergedBlocks) {
  Rng rng(9);
  const auto cov = ar1_covariance({3, 3, 2, 2}, {0.5});
  const auto panel = simulate_panel(cov, 60, kPopulation, nullptr, rng);
  const auto merged = cov.structure().merged(2);
  const auto l = estimate_ld_scores(panel, nullptr, merged).values;
  const Eigen::MatrixXd x = panel.materialize();
  const Eigen::MatrixXd s = x.transpose() * x / 60.0;
  EXPECT_NEAR(l[0], s.row(0).segment(0, 6).squaredNorm(), 1e-12);
  EXPECT_NEAR(l[9], s.row(9).segment(6, 4).squaredNorm(), 1e-12);
}

TEST(EstimatedScores, RejectsMismatchedStructure) {
  Rng rng(10);
  const auto cov = ar1_covariance({3, 3}, {0.5});
  const auto panel = simulate_panel(cov, 20, kPopulation, nullptr, rng);
  EXPECT_LDSC_ERROR(estimate_ld_scores(panel, nullptr, BlockStructure::build({5})), ErrorCode::StructureMismatch);
  EXPECT_LDSC_ERROR(estimate_ld_scores(panel, nullptr, BlockStructure::build({2, 4})),
                    ErrorCode::StructureMismatch);
}

TEST(PooledScores, SamePopulationMatchesWithin) {
  Rng rng(11);
  const auto cov = ar1_covariance({6}, {0.6});
  const auto pa = simulate_panel(cov, 100000, kPopulation, nullptr, rng);
  const auto pb = simulate_panel(cov, 100000, kPopulation, nullptr, rng);
  const auto pooled = pooled_ld_scores(pa, pb, cov.structure());
  EXPECT_TRUE(pooled.pooled);
  EXPECT_EQ(pooled.kind, ScoreKind::Within);
  // Sampling sd of each score is about 0.01 at this panel size.
  EXPECT_LT((pooled.values - true_ld_scores(cov).values).cwiseAbs().maxCoeff(), 0.05);
}

TEST(PooledScores, MixtureLiesBetweenPopulations) {
  Rng rng(12);
  const auto a = pair_block(0.0), b = pair_block(0.8);
  const auto pa = simulate_panel(a, 100000, kPopulation, nullptr, rng);
  const auto pb = simulate_panel(b, 100000, kPopulation, nullptr, rng);
  const double l = pooled_ld_scores(pa, pb, a.structure()).values[0];
  // Pooled correlation is 0.4, so the score is near 1.16.
  EXPECT_GT(l, 1.0);
  EXPECT_LT(l, 1.64);
  EXPECT_NEAR(l, 1.16, 0.02);
}

TEST(PooledScores, TwoSingleRowPanelsPool) {
  Rng rng(13);
  const auto cov = ar1_covariance({3}, {0.5});
  const auto pa = simulate_panel(cov, 1, kPopulation, nullptr, rng);
  const auto pb = simulate_panel(cov, 1, kPopulation, nullptr, rng);
  EXPECT_NO_THROW(pooled_ld_scores(pa, pb, cov.structure()));
  EXPECT_LDSC_ERROR(estimate_ld_scores(pa, nullptr, cov.structure()), ErrorCode::DegeneratePanel);
}

TEST(ScoreFile, RoundTripWithSidecar) {
  testing::TempDir dir("ldscores");
  Rng rng(14);
  const auto a = ar1_covariance({3, 2}, {0.5});
  const auto b = ar1_covariance({3, 2}, {-0.4});
  const auto pa = simulate_panel(a, 30, kPopulation, nullptr, rng);
  const auto pb = simulate_panel(b, 40, kPopulation, nullptr, rng);
  const auto l = estimate_ld_scores(pa, &pb, a.structure());
  write_ldscores(l, dir.file("l.tsv"));
  const auto back = read_ldscores(dir.file("l.tsv"));
  EXPECT_EQ(back.values, l.values);
  EXPECT_EQ(back.structure, l.structure);
  EXPECT_EQ(back.kind, ScoreKind::Cross);
  EXPECT_EQ(back.panel_n, (std::vector<std::size_t>{30, 40}));
}

TEST(ScoreFile, WithoutSidecarDefaultsToEstimatedWithin) {
  testing::TempDir dir("ldscores");
  textio::write_file(dir.file("l.tsv"), "CHR\tSNP\tBP\tL2\n1\ta\t1\t1.5\n1\tb\t2\t1.5\n2\tc\t3\t1\n");
  const auto l = read_ldscores(dir.file("l.tsv"));
  EXPECT_EQ(l.structure.sizes(), (std::vector<std::size_t>{2, 1}));
  EXPECT_EQ(l.kind, ScoreKind::Within);
  EXPECT_EQ(l.source, ScoreSource::Estimated);
}

TEST(ScoreFile, Errors) {
  testing::TempDir dir("ldscores");
  textio::write_file(dir.file("split.tsv"), "CHR\tSNP\tBP\tL2\n1\ta\t1\t1\n2\tb\t2\t1\n1\tc\t3\t1\n");
  EXPECT_LDSC_ERROR(read_ldscores(dir.file("split.tsv")), ErrorCode::ParseError);
  textio::write_file(dir.file("nol2.tsv"), "CHR\tSNP\tBP\n1\ta\t1\n");
  EXPECT_LDSC_ERROR(read_ldscores(dir.file("nol2.tsv")), ErrorCode::MissingColumn);
}

}  // namespace
}  // namespace ldsc
