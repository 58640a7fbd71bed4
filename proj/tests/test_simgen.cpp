#include <algorithm>
#include <cmath>
#include <memory>
#include <set>
#include <tuple>

#include <boost/math/distributions/normal.hpp>

#include <gtest/gtest.h>

#include "ldsc/simgen.hpp"
#include "test_util.hpp"

namespace ldsc {
namespace {

using testing::ar1_covariance;

double sample_corr(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::ArrayXd x = a.array() - a.mean();
  const Eigen::ArrayXd y = b.array() - b.mean();
  return (x * y).sum() / std::sqrt((x * x).sum() * (y * y).sum());
}

TEST(Maf, WithinRange) {
  Rng rng(1);
  const auto m = sample_maf(16000, 0.05, 0.45, rng);
  EXPECT_EQ(m.values.size(), 16000);
  EXPECT_GE(m.values.minCoeff(), 0.05);
  EXPECT_LE(m.values.maxCoeff(), 0.45);
}

TEST(Maf, DegenerateRangeIsConstant) {
  Rng rng(1);
  const auto m = sample_maf(10, 0.3, 0.3, rng);
  EXPECT_TRUE((m.values.array() == 0.3).all());
}

TEST(Maf, BadRange) {
  Rng rng(1);
  EXPECT_LDSC_ERROR(sample_maf(10, 0.6, 0.7, rng), ErrorCode::BadRange);
  EXPECT_LDSC_ERROR(sample_maf(10, 0.0, 0.2, rng), ErrorCode::BadRange);
  EXPECT_LDSC_ERROR(sample_maf(10, 0.3, 0.2, rng), ErrorCode::BadRange);
}

TEST(Panel, IdentityCovarianceIsNearlyUncorrelated) {
  Rng rng(2);
  const auto cov = ar1_covariance({10}, {0.0});
  const auto panel = simulate_panel(cov, 10000, {}, nullptr, rng);
  const Eigen::MatrixXd x = panel.materialize();
  double total = 0;
  int pairs = 0;
  for (int i = 0; i < 10; ++i)
    for (int j = i + 1; j < 10; ++j, ++pairs) total += std::abs(sample_corr(x.col(i), x.col(j)));
  EXPECT_LT(total / pairs, 0.02);
}

TEST(Panel, StandardizationInvariant) {
  Rng rng(3);
  const auto cov = ar1_covariance({4, 6}, {0.5, 0.8});
  const auto panel = simulate_panel(cov, 300, {}, nullptr, rng);
  const Eigen::MatrixXd x = panel.materialize();
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    EXPECT_LT(std::abs(x.col(j).mean()), 1e-12);
    EXPECT_LT(std::abs(x.col(j).squaredNorm() / 300.0 - 1.0), 1e-10);
  }
}

TEST(Panel, SingleRowCannotBeStandardized) {
  Rng rng(4);
  const auto cov = ar1_covariance({3}, {0.5});
  EXPECT_LDSC_ERROR(simulate_panel(cov, 1, {}, nullptr, rng), ErrorCode::DegeneratePanel);
}

TEST(Panel, Ar1PairCorrelationByLargeSample) {
  Rng rng(5);
  const auto cov = ar1_covariance({2}, {0.5});
  const auto panel = simulate_panel(cov, 100000, {}, nullptr, rng);
  const Eigen::MatrixXd x = panel.materialize();
  EXPECT_NEAR(sample_corr(x.col(0), x.col(1)), 0.5, 0.01);
}

TEST(Panel, DeterministicGivenSeed) {
  const auto cov = ar1_covariance({5, 5}, {0.3});
  Rng a(77), b(77);
  EXPECT_EQ(simulate_panel(cov, 50, {}, nullptr, a).materialize(),
            simulate_panel(cov, 50, {}, nullptr, b).materialize());
}

TEST(Panel, PopulationPanelFirstRowsIndependentOfSize) {
  const auto cov = ar1_covariance({5, 5}, {0.3});
  const PanelOptions pop{GenotypeMode::Gaussian, PanelScaling::Population};
  Rng a(78), b(78);
  const Eigen::MatrixXd small = simulate_panel(cov, 20, pop, nullptr, a).materialize();
  const Eigen::MatrixXd big = simulate_panel(cov, 35, pop, nullptr, b).materialize();
  EXPECT_EQ(small, big.topRows(20));
}

TEST(Panel, FactoredOperationsMatchDense) {
  Rng rng(6);
  const auto cov = testing::random_covariance({3, 4, 5}, rng);
  const PanelOptions pop{GenotypeMode::Gaussian, PanelScaling::Population};
  const auto panel = simulate_panel(cov, 40, pop, nullptr, rng);
  ASSERT_TRUE(panel.is_factored());
  const Eigen::MatrixXd x = panel.materialize();
  const Eigen::VectorXd v = testing::normal_vector(12, rng);
  const Eigen::VectorXd y = testing::normal_vector(40, rng);
  EXPECT_LT((panel.multiply(v) - x * v).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((panel.transpose_multiply(y) - x.transpose() * y).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((panel.columns(3, 9) - x.middleCols(3, 9)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LDSC_ERROR(panel.columns(1, 4), ErrorCode::StructureMismatch);
}

TEST(Panel, PopulationPanelCovarianceByLargeSample) {
  Rng rng(7);
  const auto cov = ar1_covariance({3}, {0.6});
  const PanelOptions pop{GenotypeMode::Gaussian, PanelScaling::Population};
  const auto panel = simulate_panel(cov, 200000, pop, nullptr, rng);
  const Eigen::MatrixXd x = panel.materialize();
  const Eigen::MatrixXd s = x.transpose() * x / 200000.0;
  EXPECT_LT((s - cov.block(0)).cwiseAbs().maxCoeff(), 0.015);
}

TEST(Panel, DiscreteNeedsMaf) {
  Rng rng(8);
  const auto cov = ar1_covariance({3}, {0.5});
  EXPECT_LDSC_ERROR(simulate_panel(cov, 10, {GenotypeMode::Discrete}, nullptr, rng), ErrorCode::MissingMaf);
  MafVector short_maf{Eigen::VectorXd::Constant(2, 0.3), 0.3, 0.3};
  EXPECT_LDSC_ERROR(simulate_panel(cov, 10, {GenotypeMode::Discrete}, &short_maf, rng),
                    ErrorCode::DimensionMismatch);
}

TEST(Panel, DiscreteGenotypesAreStandardizedDosages) {
  Rng rng(9);
  const auto cov = ar1_covariance({4}, {0.5});
  MafVector maf{Eigen::VectorXd::Constant(4, 0.25), 0.25, 0.25};
  const auto panel = simulate_panel(cov, 2000, {GenotypeMode::Discrete}, &maf, rng);
  const Eigen::MatrixXd x = panel.materialize();
  for (Eigen::Index j = 0; j < 4; ++j) {
    std::set<double> levels(x.col(j).data(), x.col(j).data() + x.rows());
    EXPECT_LE(levels.size(), 3u);
    EXPECT_LT(std::abs(x.col(j).mean()), 1e-12);
    EXPECT_LT(std::abs(x.col(j).squaredNorm() / 2000.0 - 1.0), 1e-10);
  }
}

TEST(Copula, IndependentMonteCarloOracle) {
  // Threshold a large bivariate normal sample at the Hardy-Weinberg cut points.
  const boost::math::normal_distribution<double> z;
  auto cuts = [&](double f) {
    return std::pair{boost::math::quantile(z, (1.0 - f) * (1.0 - f)), boost::math::quantile(z, 1.0 - f * f)};
  };
  Rng rng(10);
  for (auto [rho, f1, f2] : {std::tuple{0.6, 0.2, 0.35}, std::tuple{-0.4, 0.1, 0.5}, std::tuple{0.9, 0.3, 0.3}}) {
    const auto [a1, a2] = cuts(f1);
    const auto [b1, b2] = cuts(f2);
    const int n = 2000000;
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
      const double u = standard_normal(rng);
      const double v = rho * u + std::sqrt(1.0 - rho * rho) * standard_normal(rng);
      const double x = (u > a1) + (u > a2);
      const double y = (v > b1) + (v > b2);
      sx += x, sy += y, sxx += x * x, syy += y * y, sxy += x * y;
    }
    const double cxy = sxy / n - sx / n * sy / n;
    const double r = cxy / std::sqrt((sxx / n - sx * sx / n / n) * (syy / n - sy * sy / n / n));
    EXPECT_NEAR(copula_implied_correlation(rho, f1, f2), r, 0.004) << rho << " " << f1 << " " << f2;
  }
}

TEST(Copula, ZeroLatentCorrelationGivesZero) {
  EXPECT_NEAR(copula_implied_correlation(0.0, 0.2, 0.4), 0.0, 1e-12);
}

TEST(Copula, AttenuatesLatentCorrelation) {
  const double r = copula_implied_correlation(0.6, 0.3, 0.3);
  EXPECT_GT(r, 0.0);
  EXPECT_LT(r, 0.6);
  EXPECT_LT(copula_implied_correlation(-0.6, 0.3, 0.3), 0.0);
}

TEST(Copula, DiscretePanelConvergesToImpliedCorrelation) {
  Rng rng(11);
  const auto cov = ar1_covariance({3}, {0.7});
  MafVector maf{Eigen::Vector3d(0.1, 0.3, 0.45), 0.1, 0.45};
  const auto panel = simulate_panel(cov, 100000, {GenotypeMode::Discrete}, &maf, rng);
  const Eigen::MatrixXd x = panel.materialize();
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j)
      EXPECT_NEAR(sample_corr(x.col(i), x.col(j)),
                  copula_implied_correlation(cov.block(0)(i, j), maf.values[i], maf.values[j]), 0.02);
}

TEST(Effects, OrthogonalWhenNothingShared) {
  Rng rng(12);
  const auto [a, b] = sample_effect_pair({0.5, 0.3, 0.0, 0.0}, 100, rng);
  EXPECT_EQ(a.values().dot(b.values()), 0.0);
  EXPECT_EQ(a.m(), 30u);
  EXPECT_EQ(b.m(), 30u);
}

TEST(Effects, PerfectCorrelationIsProportional) {
  Rng rng(13);
  const auto [a, b] = sample_effect_pair({0.5, 1.0, 1.0, 1.0}, 200, rng);
  EXPECT_NEAR(effect_correlation(a, b), 1.0, 1e-12);
  const double c = b.values()[0] / a.values()[0];
  EXPECT_GT(c, 0.0);
  EXPECT_LT((b.values() - c * a.values()).cwiseAbs().maxCoeff(), 1e-12 * b.values().cwiseAbs().maxCoeff());
}

TEST(Effects, RealizedCorrelationIsExact) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    const auto [a, b] = sample_effect_pair({0.5, 0.5, 0.5, 0.25}, 400, rng);
    EXPECT_NEAR(effect_correlation(a, b), 0.25, 1e-12);
    EXPECT_EQ(a.m(), 200u);
    // Support of beta: 100 shared entries plus 100 outside alpha's support.
    std::size_t shared = 0;
    for (auto j : b.support()) shared += a.values()[static_cast<Eigen::Index>(j)] != 0.0;
    EXPECT_EQ(b.m(), 200u);
    EXPECT_EQ(shared, 100u);
  }
}

TEST(Effects, NegativeCorrelation) {
  Rng rng(14);
  const auto [a, b] = sample_effect_pair({0.5, 1.0, 1.0, -0.7}, 300, rng);
  EXPECT_NEAR(effect_correlation(a, b), -0.7, 1e-12);
}

TEST(Effects, SupportErrors) {
  Rng rng(15);
  EXPECT_LDSC_ERROR(sample_effect_pair({0.5, 0.001, 1.0, 0.0}, 100, rng), ErrorCode::EmptySupport);
  EXPECT_LDSC_ERROR(sample_effect_pair({0.5, 0.8, 0.0, 0.0}, 100, rng), ErrorCode::InfeasibleSupport);
  EXPECT_LDSC_ERROR(sample_effect_pair({0.5, 0.5, 0.0, 0.3}, 100, rng), ErrorCode::UnreachableRg);
  EXPECT_LDSC_ERROR(sample_effect_pair({0.5, 0.5, 0.02, 0.95}, 1000, rng), ErrorCode::UnreachableRg);
}

TEST(Effects, Accessors) {
  Eigen::VectorXd v(4);
  v << 1.0, 0.0, -2.0, 0.0;
  const EffectVector e(v);
  EXPECT_EQ(e.m(), 2u);
  EXPECT_EQ(e.support(), (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(e.g2(), 5.0);
  EXPECT_EQ(e.sigma2(), 1.25);
  EXPECT_NEAR(e.norm4(), std::pow(17.0, 0.25), 1e-15);
  EXPECT_NEAR(rescale_to_g2(e, 0.5).g2(), 0.5, 1e-15);
}

TEST(Phenotype, PureNoiseWithoutEffects) {
  Rng rng(16);
  const auto cov = ar1_covariance({5}, {0.2});
  auto panel = std::make_shared<const GenotypePanel>(simulate_panel(cov, 20000, {}, nullptr, rng));
  const auto c = simulate_phenotype(panel, EffectVector(Eigen::VectorXd::Zero(5)), 0.0, rng);
  EXPECT_EQ(c.sigma_eps2, 1.0);
  const double mean = c.phenotype.mean();
  const double var = (c.phenotype.array() - mean).square().mean();
  EXPECT_NEAR(var, 1.0, 0.05);
}

TEST(Phenotype, ZeroEffectWithHeritability) {
  Rng rng(17);
  const auto cov = ar1_covariance({5}, {0.2});
  auto panel = std::make_shared<const GenotypePanel>(simulate_panel(cov, 10, {}, nullptr, rng));
  EXPECT_LDSC_ERROR(simulate_phenotype(panel, EffectVector(Eigen::VectorXd::Zero(5)), 0.5, rng),
                    ErrorCode::ZeroEffectNonzeroH2);
}

TEST(Phenotype, HeritabilityCalibrationIsExact) {
  Rng rng(18);
  const auto cov = ar1_covariance({50}, {0.4});
  auto panel = std::make_shared<const GenotypePanel>(simulate_panel(cov, 10, {}, nullptr, rng));
  const EffectVector alpha(testing::normal_vector(50, rng, 0.1));
  const auto c = simulate_phenotype(panel, alpha, 0.5, rng);
  EXPECT_NEAR(alpha.g2() / (alpha.g2() + c.sigma_eps2), 0.5, 1e-12);
  EXPECT_EQ(c.phenotype.size(), 10);
}

TEST(Cohorts, NoOverlapGivesDisjointRows) {
  Rng rng(19);
  const auto cov = ar1_covariance({6}, {0.2});
  auto panel = std::make_shared<const GenotypePanel>(simulate_panel(cov, 200, {}, nullptr, rng));
  const EffectVector a(testing::normal_vector(6, rng)), b(testing::normal_vector(6, rng));
  const auto [ca, cb] = split_cohorts(panel, {a, b}, {0.5, 0.5}, 0.0, 100, 100, rng);
  std::set<Eigen::Index> ra(ca.rows.begin(), ca.rows.end());
  for (auto r : cb.rows) EXPECT_EQ(ra.count(r), 0u);
}

TEST(Cohorts, FullOverlapSharesRowsNotNoise) {
  Rng rng(20);
  const auto cov = ar1_covariance({6}, {0.2});
  auto panel = std::make_shared<const GenotypePanel>(simulate_panel(cov, 100, {}, nullptr, rng));
  const EffectVector a(testing::normal_vector(6, rng));
  const auto [ca, cb] = split_cohorts(panel, {a, a}, {0.5, 0.5}, 1.0, 100, 100, rng);
  EXPECT_EQ(ca.rows, cb.rows);
  EXPECT_NE(ca.phenotype, cb.phenotype);
}

TEST(Cohorts, HalfOverlapCount) {
  Rng rng(21);
  const auto cov = ar1_covariance({6}, {0.2});
  auto panel = std::make_shared<const GenotypePanel>(simulate_panel(cov, 150, {}, nullptr, rng));
  const EffectVector a(testing::normal_vector(6, rng));
  const auto [ca, cb] = split_cohorts(panel, {a, a}, {0.5, 0.5}, 0.5, 100, 100, rng);
  std::set<Eigen::Index> ra(ca.rows.begin(), ca.rows.end());
  std::size_t shared = 0;
  for (auto r : cb.rows) shared += ra.count(r);
  EXPECT_EQ(shared, 50u);
  EXPECT_EQ(cohort_rows_required(100, 100, 0.5), 150u);
}

TEST(Cohorts, InsufficientSamples) {
  Rng rng(22);
  const auto cov = ar1_covariance({6}, {0.2});
  auto panel = std::make_shared<const GenotypePanel>(simulate_panel(cov, 149, {}, nullptr, rng));
  const EffectVector a(testing::normal_vector(6, rng));
  EXPECT_LDSC_ERROR(split_cohorts(panel, {a, a}, {0.5, 0.5}, 0.5, 100, 100, rng), ErrorCode::InsufficientSamples);
}

TEST(TextExport, EffectsAndPanelRoundTrip) {
  testing::TempDir dir("simgen");
  Rng rng(23);
  const EffectVector e(testing::normal_vector(7, rng));
  write_effects_tsv(e, dir.file("e.tsv"));
  EXPECT_EQ(read_effects_tsv(dir.file("e.tsv")).values(), e.values());

  const auto cov = ar1_covariance({3, 4}, {0.5});
  const auto panel = simulate_panel(cov, 6, {}, nullptr, rng);
  write_panel_tsv(panel, dir.file("x.tsv"));
  EXPECT_EQ(read_panel_tsv(dir.file("x.tsv")), panel.materialize());
}

}  // namespace
}  // namespace ldsc
