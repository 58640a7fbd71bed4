#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "ldsc/model.hpp"
#include "ldsc/simgen.hpp"
#include "ldsc/sumstats.hpp"

namespace ldsc {

/// Inputs of the closed-form variance expressions. Trait B fields are only
/// read by the bivariate and cross-population functions. An empty `scores`
/// vector means the true scores of the relevant kind.
struct TheoryInputs {
  std::optional<CovarianceModel> cov_a;
  std::optional<CovarianceModel> cov_b;  // defaults to cov_a
  EffectVector alpha;
  EffectVector beta;
  double sigma_eps2_a = 0.0;
  double sigma_eps2_b = 0.0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  std::size_t n_ra = 0;
  std::size_t n_rb = 0;
  Eigen::VectorXd scores;
};

/// Variance of the univariate slope computed with true scores, for Gaussian
/// genotypes. Uses the centered scores on the diagonal weight.
double zeta2_univariate(const TheoryInputs& in);

/// Variance of the through-origin cross-trait slope computed with true
/// scores, independent cohorts. Uses the raw (uncentered) cross scores.
double zeta2_bivariate(const TheoryInputs& in);

/// Var(lhat_ab^T w_ab) for independent Gaussian reference panels of sizes
/// n_ra and n_rb, where lhat_ab comes from uncentered Z^T Z / n_r estimates.
double rho2_cross(const TheoryInputs& in, const Eigen::VectorXd& w_ab);

struct ResidualDecomposition {
  WVector w;              // expected squared (or product) statistics
  Eigen::VectorXd eps;    // w - slope * scores
};

/// eps_j = (n+1)/n (Sigma_j alpha)^2 - sigma^2 l_j + (alpha^T Sigma alpha + sigma_eps^2)/n
/// and w = sigma^2 l + eps, with sigma^2 = g^2 / p.
ResidualDecomposition epsilon_univariate(const CovarianceModel& cov, const EffectVector& alpha, double sigma_eps2,
                                         std::size_t n);

/// eps_ab,j = sum_i a_i b_i Sa_ij Sb_ij - sigma_ab l_ab,j + sum_{i != k} a_i b_k Sa_ij Sb_kj,
/// evaluated term by term; w_ab = (Sigma_a alpha) * (Sigma_b beta) entrywise.
ResidualDecomposition epsilon_cross(const CovarianceModel& cov_a, const CovarianceModel& cov_b,
                                    const EffectVector& alpha, const EffectVector& beta);

/// Named left-hand quantities of the regularity conditions. Values only.
using DiagnosticReport = std::vector<std::pair<std::string, double>>;

DiagnosticReport condition_diagnostics(const TheoryInputs& in, const WVector* w_a = nullptr,
                                       const WVector* w_ab = nullptr);

}  // namespace ldsc
