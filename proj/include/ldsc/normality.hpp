#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace ldsc {

struct ShapiroWilk {
  double w = 0.0;
  double p_value = 0.0;
};

/// Royston's AS R94 approximation. Requires 3 <= n <= 5000 and a
/// non-constant sample (ConstantSample otherwise).
ShapiroWilk shapiro_wilk(std::vector<double> values);

struct AndersonDarling {
  double a2 = 0.0;        // statistic with estimated mean and variance
  double a2_star = 0.0;   // small-sample adjusted statistic
  double p_value = 0.0;
};

AndersonDarling anderson_darling(std::vector<double> values);

struct NormalityReport {
  double w = 0.0;
  double p_value = 0.0;
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  AndersonDarling anderson;
  /// (normal quantile, sorted sample value), Blom plotting positions.
  std::vector<std::pair<double, double>> qq;
};

/// Tests already standardized values. Needs at least 8 values; throws
/// ConstantSample when all values are equal.
NormalityReport normality_summary(const std::vector<double>& standardized);

/// (x - mean) / sd with the sample mean and sd (denominator n - 1).
std::vector<double> standardize_empirical(const std::vector<double>& values);

/// (x_i - truth) / zeta_i.
std::vector<double> standardize_theory(const std::vector<double>& values, double truth,
                                       const std::vector<double>& zetas);

}  // namespace ldsc
