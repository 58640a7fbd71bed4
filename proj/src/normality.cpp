#include "ldsc/normality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/normal.hpp>

#include "ldsc/error.hpp"

namespace ldsc {

namespace {

const boost::math::normal_distribution<double> kUnit;

double qnorm(double p) { return boost::math::quantile(kUnit, p); }
double pnorm(double x) { return boost::math::cdf(kUnit, x); }

// c[0] + c[1] x + ... + c[n-1] x^(n-1)
template <std::size_t N>
double poly(const double (&c)[N], double x) {
  double r = c[N - 1];
  for (std::size_t i = N - 1; i-- > 0;) r = r * x + c[i];
  return r;
}

void require_spread(const std::vector<double>& sorted) {
  require(sorted.back() - sorted.front() > 0.0, ErrorCode::ConstantSample, "all values are equal");
}

}  // namespace

ShapiroWilk shapiro_wilk(std::vector<double> x) {
  const std::size_t n = x.size();
  require(n >= 3, ErrorCode::InvalidArgument, "Shapiro-Wilk needs at least 3 values");
  require(n <= 5000, ErrorCode::InvalidArgument, "Shapiro-Wilk approximation is valid up to n = 5000");
  for (double v : x) require(std::isfinite(v), ErrorCode::InvalidArgument, "non-finite value in sample");
  std::sort(x.begin(), x.end());
  require_spread(x);

  static constexpr double c1[] = {0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056};
  static constexpr double c2[] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
  static constexpr double c3[] = {0.544, -0.39978, 0.025054, -6.714e-4};
  static constexpr double c4[] = {1.3822, -0.77857, 0.062767, -0.0020322};
  static constexpr double c5[] = {-1.5861, -0.31082, -0.083751, 0.0038915};
  static constexpr double c6[] = {-0.4803, -0.082676, 0.0030302};
  static constexpr double g[] = {-2.273, 0.459};

  const double an = static_cast<double>(n);
  const std::size_t half = n / 2;
  std::vector<double> a(half);  // coefficients for the upper half, largest first
  if (n == 3) {
    a[0] = std::sqrt(0.5);
  } else {
    std::vector<double> m(half);
    double summ2 = 0.0;
    for (std::size_t i = 0; i < half; ++i) {
      m[i] = qnorm((static_cast<double>(i + 1) - 0.375) / (an + 0.25));
      summ2 += m[i] * m[i];
    }
    summ2 *= 2.0;
    const double ssumm2 = std::sqrt(summ2);
    const double rsn = 1.0 / std::sqrt(an);
    const double a1 = poly(c1, rsn) - m[0] / ssumm2;
    std::size_t first;
    double fac;
    if (n > 5) {
      const double a2 = -m[1] / ssumm2 + poly(c2, rsn);
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
      a[1] = a2;
      first = 2;
    } else {
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1));
      first = 1;
    }
    a[0] = a1;
    for (std::size_t i = first; i < half; ++i) a[i] = -m[i] / fac;
  }

  // W is the squared correlation between the ordered sample and the
  // antisymmetric coefficient vector; 1 - W is formed directly to keep
  // precision when W is close to 1.
  const double range = x.back() - x.front();
  double sx = 0.0;
  for (double v : x) sx += v / range;
  sx /= an;
  double ssa = 0.0, ssx = 0.0, sax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = n - 1 - i;
    double coef = 0.0;
    if (i < j) coef = -a[i];
    else if (i > j) coef = a[j];
    const double xs = x[i] / range - sx;
    ssa += coef * coef;
    ssx += xs * xs;
    sax += coef * xs;
  }
  const double ssassx = std::sqrt(ssa * ssx);
  const double w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
  ShapiroWilk out;
  out.w = 1.0 - w1;

  if (n == 3) {
    constexpr double pi6 = 6.0 / M_PI;
    constexpr double stqr = M_PI / 3.0;
    out.p_value = std::max(0.0, pi6 * (std::asin(std::sqrt(out.w)) - stqr));
    return out;
  }
  double y = std::log(w1);
  double mean, sd;
  if (n <= 11) {
    const double gamma = poly(g, an);
    if (y >= gamma) {
      out.p_value = 1e-99;
      return out;
    }
    y = -std::log(gamma - y);
    mean = poly(c3, an);
    sd = std::exp(poly(c4, an));
  } else {
    const double ln = std::log(an);
    mean = poly(c5, ln);
    sd = std::exp(poly(c6, ln));
  }
  out.p_value = 1.0 - pnorm((y - mean) / sd);
  return out;
}

AndersonDarling anderson_darling(std::vector<double> x) {
  const std::size_t n = x.size();
  require(n >= 8, ErrorCode::InvalidArgument, "Anderson-Darling needs at least 8 values");
  std::sort(x.begin(), x.end());
  require_spread(x);
  const double an = static_cast<double>(n);
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= an;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (an - 1.0));

  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = boost::math::cdf(kUnit, (x[i] - mean) / sd);
    const double hi = boost::math::cdf(boost::math::complement(kUnit, (x[n - 1 - i] - mean) / sd));
    s += (2.0 * static_cast<double>(i) + 1.0) * (std::log(lo) + std::log(hi));
  }
  AndersonDarling out;
  out.a2 = -an - s / an;
  out.a2_star = out.a2 * (1.0 + 0.75 / an + 2.25 / (an * an));
  const double a = out.a2_star;
  // D'Agostino and Stephens (1986), case of estimated mean and variance.
  if (a >= 0.6) out.p_value = std::exp(1.2937 - 5.709 * a + 0.0186 * a * a);
  else if (a >= 0.34) out.p_value = std::exp(0.9177 - 4.279 * a - 1.38 * a * a);
  else if (a >= 0.2) out.p_value = 1.0 - std::exp(-8.318 + 42.796 * a - 59.938 * a * a);
  else out.p_value = 1.0 - std::exp(-13.436 + 101.14 * a - 223.73 * a * a);
  out.p_value = std::clamp(out.p_value, 0.0, 1.0);
  return out;
}

NormalityReport normality_summary(const std::vector<double>& z) {
  require(z.size() >= 8, ErrorCode::InvalidArgument, "normality summary needs at least 8 values");
  NormalityReport r;
  const auto sw = shapiro_wilk(z);
  r.w = sw.w;
  r.p_value = sw.p_value;
  r.n = z.size();
  r.anderson = anderson_darling(z);

  const double n = static_cast<double>(z.size());
  for (double v : z) r.mean += v;
  r.mean /= n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : z) {
    const double d = v - r.mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  r.sd = std::sqrt(m2 * n / (n - 1.0));
  r.skewness = m3 / std::pow(m2, 1.5);
  r.excess_kurtosis = m4 / (m2 * m2) - 3.0;

  std::vector<double> sorted = z;
  std::sort(sorted.begin(), sorted.end());
  r.qq.reserve(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i)
    r.qq.emplace_back(qnorm((static_cast<double>(i + 1) - 0.375) / (n + 0.25)), sorted[i]);
  return r;
}

std::vector<double> standardize_empirical(const std::vector<double>& values) {
  require(values.size() >= 2, ErrorCode::InvalidArgument, "standardizing needs at least 2 values");
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  require(sd > 0.0, ErrorCode::ConstantSample, "all values are equal");
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) out.push_back((v - mean) / sd);
  return out;
}

std::vector<double> standardize_theory(const std::vector<double>& values, double truth,
                                       const std::vector<double>& zetas) {
  require(values.size() == zetas.size(), ErrorCode::LengthMismatch, "one zeta per value is required");
  std::vector<double> out;
  out.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    require(zetas[i] > 0.0, ErrorCode::InvalidArgument, "theory standard deviation must be positive");
    out.push_back((values[i] - truth) / zetas[i]);
  }
  return out;
}

}  // namespace ldsc
