#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "ldsc/ldscores.hpp"
#include "ldsc/model.hpp"
#include "ldsc/sumstats.hpp"

namespace ldsc {

enum class FitMode { Univariate, Bivariate };

struct LdscFit {
  FitMode mode = FitMode::Univariate;
  double slope = 0.0;
  std::optional<double> intercept;
  std::size_t p = 0;
  std::optional<double> se_jackknife;
  double g_hat = 0.0;  // p * slope
};

inline constexpr std::size_t kDefaultJackknifeGroups = 200;

/// Centered least squares of w on the scores with an intercept. Throws
/// DegenerateDesign when the centered score sum of squares is below 1e-12 p.
LdscFit fit_univariate(const Eigen::VectorXd& w, const Eigen::VectorXd& scores);
LdscFit fit_univariate(const WVector& w, const LdScoreVector& scores);

/// Regression through the origin, or with an intercept when asked. Throws
/// ZeroScores when the scores are all zero.
LdscFit fit_bivariate(const Eigen::VectorXd& w, const Eigen::VectorXd& scores, bool with_intercept = false);
LdscFit fit_bivariate(const WVector& w, const LdScoreVector& scores, bool with_intercept = false);

/// Contiguous runs of whole blocks. Returns one group index per block; the
/// number of groups is min(n_groups, number of blocks). Throws TooFewGroups
/// when fewer than two groups can be formed.
std::vector<std::size_t> jackknife_groups(const BlockStructure& structure, std::size_t n_groups);

/// Slopes refitted with each group left out, in group order.
std::vector<double> jackknife_slopes(const Eigen::VectorXd& w, const Eigen::VectorXd& scores,
                                     const BlockStructure& structure, std::size_t n_groups, FitMode mode,
                                     bool with_intercept = false);

/// sqrt((G-1)/G * sum (theta_g - mean)^2).
double jackknife_se(const std::vector<double>& leave_out);

/// Delete-a-group standard error of the fitted slope.
double block_jackknife(const Eigen::VectorXd& w, const Eigen::VectorXd& scores, const BlockStructure& structure,
                       std::size_t n_groups, FitMode mode, bool with_intercept = false);
double block_jackknife(const WVector& w, const LdScoreVector& scores, const BlockStructure& structure,
                       std::size_t n_groups, FitMode mode, bool with_intercept = false);

/// Leave-out values of slope_ab / sqrt(slope_a slope_b). Groups where either
/// univariate slope is not positive give NaN.
std::vector<double> jackknife_genetic_correlation(const Eigen::VectorXd& w_ab, const Eigen::VectorXd& scores_ab,
                                                  const Eigen::VectorXd& w_a, const Eigen::VectorXd& scores_a,
                                                  const Eigen::VectorXd& w_b, const Eigen::VectorXd& scores_b,
                                                  const BlockStructure& structure, std::size_t n_groups,
                                                  bool with_intercept = false);

struct HeritabilityEstimate {
  double value = 0.0;
  bool negative_variance = false;  // slope < 0; the value is not clamped
};

/// p * slope for a normalized phenotype, else g/(g + sigma_eps2_hat).
HeritabilityEstimate derive_heritability(const LdscFit& fit, std::optional<double> sigma_eps2_hat = std::nullopt);

/// slope_ab / sqrt(slope_a slope_b). Throws NonpositiveHeritability.
double derive_genetic_correlation(const LdscFit& fit_ab, const LdscFit& fit_a, const LdscFit& fit_b);

}  // namespace ldsc
