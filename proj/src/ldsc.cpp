#include "ldsc/ldsc.hpp"

#include <cmath>
#include <limits>

#include "ldsc/error.hpp"

namespace ldsc {

namespace {

void check_lengths(const Eigen::VectorXd& w, const Eigen::VectorXd& scores) {
  require(w.size() == scores.size(), ErrorCode::LengthMismatch,
          "w has length " + std::to_string(w.size()) + ", scores have length " + std::to_string(scores.size()));
  require(w.size() > 0, ErrorCode::LengthMismatch, "empty regression inputs");
}

// Sufficient statistics of a regression on data already shifted by the
// global means, so leave-out differences do not cancel badly.
struct Moments {
  double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;

  Moments operator-(const Moments& o) const {
    return {n - o.n, sx - o.sx, sy - o.sy, sxx - o.sxx, sxy - o.sxy};
  }
  double slope(bool with_intercept) const {
    if (!with_intercept) return sxy / sxx;
    const double cxx = sxx - sx * sx / n;
    const double cxy = sxy - sx * sy / n;
    return cxy / cxx;
  }
};

struct GroupMoments {
  Moments total;
  std::vector<Moments> groups;
};

GroupMoments group_moments(const Eigen::VectorXd& w, const Eigen::VectorXd& scores, const BlockStructure& structure,
                           std::size_t n_groups, bool centered) {
  check_lengths(w, scores);
  require(structure.p() == static_cast<std::size_t>(w.size()), ErrorCode::StructureMismatch,
          "block structure does not cover the regression inputs");
  const auto group_of_block = jackknife_groups(structure, n_groups);
  const double mx = centered ? scores.mean() : 0.0;
  const double my = centered ? w.mean() : 0.0;
  GroupMoments out;
  out.groups.resize(group_of_block.back() + 1);
  for (std::size_t k = 0; k < structure.num_blocks(); ++k) {
    Moments& g = out.groups[group_of_block[k]];
    const auto o = static_cast<Eigen::Index>(structure.offset(k));
    const auto q = static_cast<Eigen::Index>(structure.size(k));
    const Eigen::ArrayXd x = scores.segment(o, q).array() - mx;
    const Eigen::ArrayXd y = w.segment(o, q).array() - my;
    g.n += static_cast<double>(q);
    g.sx += x.sum();
    g.sy += y.sum();
    g.sxx += x.square().sum();
    g.sxy += (x * y).sum();
  }
  for (const auto& g : out.groups) {
    out.total.n += g.n;
    out.total.sx += g.sx;
    out.total.sy += g.sy;
    out.total.sxx += g.sxx;
    out.total.sxy += g.sxy;
  }
  return out;
}

}  // namespace

LdscFit fit_univariate(const Eigen::VectorXd& w, const Eigen::VectorXd& scores) {
  check_lengths(w, scores);
  const auto p = static_cast<double>(w.size());
  const double mu_l = scores.mean();
  const double mu_w = w.mean();
  const Eigen::ArrayXd cl = scores.array() - mu_l;
  const double ssq = cl.square().sum();
  require(ssq >= 1e-12 * p, ErrorCode::DegenerateDesign, "LD scores have (almost) no variation");
  LdscFit fit;
  fit.mode = FitMode::Univariate;
  fit.slope = (cl * (w.array() - mu_w)).sum() / ssq;
  fit.intercept = mu_w - fit.slope * mu_l;
  fit.p = static_cast<std::size_t>(w.size());
  fit.g_hat = p * fit.slope;
  return fit;
}

LdscFit fit_univariate(const WVector& w, const LdScoreVector& scores) {
  require(w.kind == WVector::Kind::Squared, ErrorCode::InvalidArgument, "univariate fit needs squared statistics");
  return fit_univariate(w.values, scores.values);
}

LdscFit fit_bivariate(const Eigen::VectorXd& w, const Eigen::VectorXd& scores, bool with_intercept) {
  check_lengths(w, scores);
  LdscFit fit;
  fit.mode = FitMode::Bivariate;
  fit.p = static_cast<std::size_t>(w.size());
  if (with_intercept) {
    const double mu_l = scores.mean();
    const double mu_w = w.mean();
    const Eigen::ArrayXd cl = scores.array() - mu_l;
    const double ssq = cl.square().sum();
    require(ssq >= 1e-12 * static_cast<double>(fit.p), ErrorCode::DegenerateDesign,
            "LD scores have (almost) no variation");
    fit.slope = (cl * (w.array() - mu_w)).sum() / ssq;
    fit.intercept = mu_w - fit.slope * mu_l;
  } else {
    const double ll = scores.squaredNorm();
    require(ll > 0.0, ErrorCode::ZeroScores, "all LD scores are zero");
    fit.slope = scores.dot(w) / ll;
  }
  fit.g_hat = static_cast<double>(fit.p) * fit.slope;
  return fit;
}

LdscFit fit_bivariate(const WVector& w, const LdScoreVector& scores, bool with_intercept) {
  require(w.kind == WVector::Kind::Product, ErrorCode::InvalidArgument, "bivariate fit needs product statistics");
  return fit_bivariate(w.values, scores.values, with_intercept);
}

std::vector<std::size_t> jackknife_groups(const BlockStructure& structure, std::size_t n_groups) {
  require(n_groups >= 2, ErrorCode::TooFewGroups, "the jackknife needs at least 2 groups");
  const std::size_t blocks = structure.num_blocks();
  require(blocks >= 2, ErrorCode::TooFewGroups,
          "only one LD block; groups may not split blocks, so the jackknife needs at least 2");
  const std::size_t g = std::min(n_groups, blocks);
  std::vector<std::size_t> out(blocks);
  for (std::size_t k = 0; k < blocks; ++k) out[k] = k * g / blocks;
  return out;
}

std::vector<double> jackknife_slopes(const Eigen::VectorXd& w, const Eigen::VectorXd& scores,
                                     const BlockStructure& structure, std::size_t n_groups, FitMode mode,
                                     bool with_intercept) {
  const bool intercept = mode == FitMode::Univariate || with_intercept;
  const GroupMoments gm = group_moments(w, scores, structure, n_groups, intercept);
  std::vector<double> out;
  out.reserve(gm.groups.size());
  for (const auto& g : gm.groups) out.push_back((gm.total - g).slope(intercept));
  return out;
}

double jackknife_se(const std::vector<double>& leave_out) {
  const auto g = static_cast<double>(leave_out.size());
  require(leave_out.size() >= 2, ErrorCode::TooFewGroups, "the jackknife needs at least 2 groups");
  double mean = 0.0;
  for (double v : leave_out) mean += v;
  mean /= g;
  double ss = 0.0;
  for (double v : leave_out) ss += (v - mean) * (v - mean);
  return std::sqrt((g - 1.0) / g * ss);
}

double block_jackknife(const Eigen::VectorXd& w, const Eigen::VectorXd& scores, const BlockStructure& structure,
                       std::size_t n_groups, FitMode mode, bool with_intercept) {
  return jackknife_se(jackknife_slopes(w, scores, structure, n_groups, mode, with_intercept));
}

double block_jackknife(const WVector& w, const LdScoreVector& scores, const BlockStructure& structure,
                       std::size_t n_groups, FitMode mode, bool with_intercept) {
  return block_jackknife(w.values, scores.values, structure, n_groups, mode, with_intercept);
}

std::vector<double> jackknife_genetic_correlation(const Eigen::VectorXd& w_ab, const Eigen::VectorXd& scores_ab,
                                                  const Eigen::VectorXd& w_a, const Eigen::VectorXd& scores_a,
                                                  const Eigen::VectorXd& w_b, const Eigen::VectorXd& scores_b,
                                                  const BlockStructure& structure, std::size_t n_groups,
                                                  bool with_intercept) {
  const auto ab = jackknife_slopes(w_ab, scores_ab, structure, n_groups, FitMode::Bivariate, with_intercept);
  const auto a = jackknife_slopes(w_a, scores_a, structure, n_groups, FitMode::Univariate);
  const auto b = jackknife_slopes(w_b, scores_b, structure, n_groups, FitMode::Univariate);
  std::vector<double> out(ab.size());
  for (std::size_t g = 0; g < ab.size(); ++g)
    out[g] = a[g] > 0.0 && b[g] > 0.0 ? ab[g] / std::sqrt(a[g] * b[g]) : std::numeric_limits<double>::quiet_NaN();
  return out;
}

HeritabilityEstimate derive_heritability(const LdscFit& fit, std::optional<double> sigma_eps2_hat) {
  require(fit.mode == FitMode::Univariate, ErrorCode::InvalidArgument, "heritability needs a univariate fit");
  HeritabilityEstimate out;
  out.negative_variance = fit.slope < 0.0;
  if (!sigma_eps2_hat) {
    out.value = fit.g_hat;
  } else {
    require(*sigma_eps2_hat >= 0.0, ErrorCode::InvalidArgument, "noise variance must be non-negative");
    out.value = fit.g_hat / (fit.g_hat + *sigma_eps2_hat);
  }
  return out;
}

double derive_genetic_correlation(const LdscFit& fit_ab, const LdscFit& fit_a, const LdscFit& fit_b) {
  require(fit_a.slope > 0.0 && fit_b.slope > 0.0, ErrorCode::NonpositiveHeritability,
          "genetic correlation needs positive variance estimates for both traits");
  return fit_ab.slope / std::sqrt(fit_a.slope * fit_b.slope);
}

}  // namespace ldsc
