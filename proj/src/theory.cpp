#include "ldsc/theory.hpp"

#include <cmath>

#include "ldsc/error.hpp"
#include "ldsc/ldscores.hpp"

namespace ldsc {

namespace {

const CovarianceModel& model_a(const TheoryInputs& in) {
  require(in.cov_a.has_value(), ErrorCode::InvalidArgument, "theory inputs need a covariance model");
  return *in.cov_a;
}

const CovarianceModel& model_b(const TheoryInputs& in) { return in.cov_b ? *in.cov_b : model_a(in); }

void check_effect(const EffectVector& e, const CovarianceModel& cov, const char* name) {
  require(e.p() == cov.p(), ErrorCode::DimensionMismatch,
          std::string(name) + " has length " + std::to_string(e.p()) + ", covariance has p=" +
              std::to_string(cov.p()));
}

Eigen::VectorXd scores_or_true(const TheoryInputs& in, bool cross) {
  const auto& a = model_a(in);
  if (in.scores.size() > 0) {
    require(static_cast<std::size_t>(in.scores.size()) == a.p(), ErrorCode::DimensionMismatch,
            "score vector length does not match p");
    return in.scores;
  }
  return cross ? true_ld_scores(a, &model_b(in)).values : true_ld_scores(a).values;
}

double lp_norm(const Eigen::VectorXd& v, double power) {
  return std::pow(v.array().abs().pow(power).sum(), 1.0 / power);
}

}  // namespace

double zeta2_univariate(const TheoryInputs& in) {
  const auto& cov = model_a(in);
  check_effect(in.alpha, cov, "alpha");
  require(in.n_a >= 2, ErrorCode::InvalidArgument, "n_a must be at least 2");
  const Eigen::VectorXd l = scores_or_true(in, false);
  const Eigen::VectorXd d = (l.array() - l.mean()).matrix();  // H l
  const double lhl = d.squaredNorm();
  require(lhl > 0.0, ErrorCode::DegenerateDesign, "centered LD scores are all zero");

  // Quadratic forms and traces, accumulated block by block:
  //   q  = a^T S a,         s1 = a^T S D S a,
  //   s2 = a^T S D S D S a, t  = tr(S D S D).
  double q = 0, s1 = 0, s2 = 0, t = 0;
  const auto& st = cov.structure();
  for (std::size_t k = 0; k < st.num_blocks(); ++k) {
    const auto o = static_cast<Eigen::Index>(st.offset(k));
    const auto& s = cov.block(k);
    const auto n = s.rows();
    const Eigen::VectorXd sa = s * in.alpha.values().segment(o, n);
    const Eigen::VectorXd dk = d.segment(o, n);
    const Eigen::VectorXd dsa = dk.cwiseProduct(sa);
    q += in.alpha.values().segment(o, n).dot(sa);
    s1 += sa.dot(dsa);
    s2 += dsa.dot(s * dsa);
    t += dk.dot(s.cwiseProduct(s) * dk);
  }
  const double na = static_cast<double>(in.n_a);
  const double se2 = in.sigma_eps2_a;
  const double bracket = 2.0 * se2 * ((na + 2) * (na + 3) * s2 + (na + 2) * t * q) + se2 * se2 * (na + 2) * t +
                         (2 * na * na + 5 * na + 3) * s1 * s1 + (na + 2) * q * q * t +
                         2 * (na + 2) * (na + 3) * q * s2;
  return 2.0 / (na * na * na * lhl * lhl) * bracket;
}

double zeta2_bivariate(const TheoryInputs& in) {
  const auto& ca = model_a(in);
  const auto& cb = model_b(in);
  require(ca.structure() == cb.structure(), ErrorCode::StructureMismatch, "covariance models differ in structure");
  check_effect(in.alpha, ca, "alpha");
  check_effect(in.beta, cb, "beta");
  require(in.n_a >= 2 && in.n_b >= 2, ErrorCode::InvalidArgument, "n_a and n_b must be at least 2");
  const Eigen::VectorXd d = scores_or_true(in, true);  // no centering here
  const double ll = d.squaredNorm();
  require(ll > 0.0, ErrorCode::ZeroScores, "cross LD scores are all zero");

  // qa = a^T Sa a, qb = b^T Sb b, x = a^T Sa D Sb b,
  // ua = a^T Sa D Sb D Sa a, ub = b^T Sb D Sa D Sb b, t = tr(D Sa D Sb).
  double qa = 0, qb = 0, x = 0, ua = 0, ub = 0, t = 0;
  const auto& st = ca.structure();
  for (std::size_t k = 0; k < st.num_blocks(); ++k) {
    const auto o = static_cast<Eigen::Index>(st.offset(k));
    const auto& sa = ca.block(k);
    const auto& sb = cb.block(k);
    const auto n = sa.rows();
    const auto alpha = in.alpha.values().segment(o, n);
    const auto beta = in.beta.values().segment(o, n);
    const Eigen::VectorXd a = sa * alpha;
    const Eigen::VectorXd b = sb * beta;
    const Eigen::VectorXd dk = d.segment(o, n);
    const Eigen::VectorXd da = dk.cwiseProduct(a);
    const Eigen::VectorXd db = dk.cwiseProduct(b);
    qa += alpha.dot(a);
    qb += beta.dot(b);
    x += da.dot(b);
    ua += da.dot(sb * da);
    ub += db.dot(sa * db);
    t += dk.dot(sa.cwiseProduct(sb) * dk);
  }
  const double na = static_cast<double>(in.n_a);
  const double nb = static_cast<double>(in.n_b);
  const double ea = in.sigma_eps2_a;
  const double eb = in.sigma_eps2_b;
  // The last trace, tr(Sa^{1/2} D Sb D Sa^{1/2}), equals t by cyclicity.
  const double bracket = (nb + 1) * qa * ub + eb * (t * qa + (na + 1) * ua) + ea * (t * qb + (nb + 1) * ub) +
                         eb * ea * t + (na + nb + 1) * x * x + (na + 1) * qb * ua + qa * qb * t;
  return bracket / (ll * ll * na * nb);
}

double rho2_cross(const TheoryInputs& in, const Eigen::VectorXd& w_ab) {
  const auto& ca = model_a(in);
  const auto& cb = model_b(in);
  require(ca.structure() == cb.structure(), ErrorCode::StructureMismatch, "covariance models differ in structure");
  require(static_cast<std::size_t>(w_ab.size()) == ca.p(), ErrorCode::DimensionMismatch,
          "w_ab length does not match p");
  require(in.n_ra >= 1 && in.n_rb >= 1, ErrorCode::InvalidArgument, "reference panel sizes must be positive");
  const double ra = static_cast<double>(in.n_ra);
  const double rb = static_cast<double>(in.n_rb);
  const double c_ab = 1.0 / (ra * rb);
  const double c_a = (1.0 + rb) / (ra * rb);
  const double c_b = (1.0 + ra) / (ra * rb);
  const double c_x = (ra + rb) / (ra * rb);

  double total = 0.0;
  const auto& st = ca.structure();
  for (std::size_t m = 0; m < st.num_blocks(); ++m) {
    const auto o = static_cast<Eigen::Index>(st.offset(m));
    const auto& a = ca.block(m);
    const auto& b = cb.block(m);
    const Eigen::VectorXd w = w_ab.segment(o, a.rows());
    const Eigen::MatrixXd ab = a * b;
    const Eigen::MatrixXd aba = ab * a;
    const Eigen::MatrixXd bab = b * ab;
    const double tr = ab.trace();
    const double wd = w.dot(ab.diagonal());
    total += c_ab * (wd * wd + tr * w.dot(a.cwiseProduct(b) * w));
    total += c_a * w.dot(a.cwiseProduct(bab) * w);
    total += c_b * w.dot(b.cwiseProduct(aba) * w);
    total += c_x * w.dot(ab.cwiseProduct(ab.transpose()) * w);
  }
  return total;
}

ResidualDecomposition epsilon_univariate(const CovarianceModel& cov, const EffectVector& alpha, double sigma_eps2,
                                         std::size_t n) {
  check_effect(alpha, cov, "alpha");
  require(n >= 1, ErrorCode::InvalidArgument, "sample size must be positive");
  const double nn = static_cast<double>(n);
  const double sigma2 = alpha.sigma2();
  const Eigen::VectorXd l = true_ld_scores(cov).values;
  const Eigen::VectorXd a = cov.multiply(alpha.values());
  const double quad = alpha.values().dot(a);

  ResidualDecomposition out;
  out.eps = ((nn + 1.0) / nn) * a.array().square() - sigma2 * l.array() + (quad + sigma_eps2) / nn;
  out.w.values = sigma2 * l + out.eps;
  out.w.kind = WVector::Kind::Squared;
  return out;
}

ResidualDecomposition epsilon_cross(const CovarianceModel& cov_a, const CovarianceModel& cov_b,
                                    const EffectVector& alpha, const EffectVector& beta) {
  require(cov_a.structure() == cov_b.structure(), ErrorCode::StructureMismatch,
          "covariance models differ in structure");
  check_effect(alpha, cov_a, "alpha");
  check_effect(beta, cov_b, "beta");
  const double sigma_ab = alpha.values().dot(beta.values()) / static_cast<double>(alpha.p());
  const Eigen::VectorXd l = true_ld_scores(cov_a, &cov_b).values;

  ResidualDecomposition out;
  out.eps.resize(l.size());
  const auto& st = cov_a.structure();
  for (std::size_t m = 0; m < st.num_blocks(); ++m) {
    const auto o = static_cast<Eigen::Index>(st.offset(m));
    const auto& sa = cov_a.block(m);
    const auto& sb = cov_b.block(m);
    const auto q = sa.rows();
    const auto al = alpha.values().segment(o, q);
    const auto be = beta.values().segment(o, q);
    for (Eigen::Index j = 0; j < q; ++j) {
      double diag = 0.0;
      double off = 0.0;
      for (Eigen::Index i = 0; i < q; ++i) {
        diag += al[i] * be[i] * sa(i, j) * sb(i, j);
        const double ai = al[i] * sa(i, j);
        if (ai == 0.0) continue;
        double inner = 0.0;
        for (Eigen::Index k = 0; k < q; ++k)
          if (k != i) inner += be[k] * sb(k, j);
        off += ai * inner;
      }
      out.eps[o + j] = diag - sigma_ab * l[o + j] + off;
    }
  }
  out.w.values = cov_a.multiply(alpha.values()).cwiseProduct(cov_b.multiply(beta.values()));
  out.w.kind = WVector::Kind::Product;
  return out;
}

DiagnosticReport condition_diagnostics(const TheoryInputs& in, const WVector* w_a, const WVector* w_ab) {
  DiagnosticReport r;
  const auto& ca = model_a(in);
  const double p = static_cast<double>(ca.p());
  const bool have_b = in.beta.p() == ca.p();
  r.emplace_back("p", p);

  if (w_a) {
    const Eigen::VectorXd hw = (w_a->values.array() - w_a->values.mean()).matrix();
    const double n2 = hw.norm();
    r.emplace_back("Hw_a_norm3_over_norm2", n2 == 0.0 ? 0.0 : lp_norm(hw, 3.0) / n2);
  }
  if (w_ab) {
    const double n2 = w_ab->values.norm();
    r.emplace_back("w_ab_norm3_over_norm2", n2 == 0.0 ? 0.0 : lp_norm(w_ab->values, 3.0) / n2);
  }
  for (auto [name, n] : {std::pair{"p_over_n_a", in.n_a}, std::pair{"p_over_n_b", in.n_b},
                         std::pair{"p_over_n_ra", in.n_ra}, std::pair{"p_over_n_rb", in.n_rb}})
    if (n > 0) r.emplace_back(name, p / static_cast<double>(n));

  const double na2 = in.alpha.norm();
  if (in.alpha.p() == ca.p() && in.n_a > 0) {
    const double na = static_cast<double>(in.n_a);
    r.emplace_back("n_a_pow_1_6_times_norm_alpha", std::pow(na, 1.0 / 6.0) * na2);
    r.emplace_back("norm_alpha_pow4_over_n_a_p", std::pow(na2, 4.0) / (na * p));
    if (in.n_ra > 0 && na2 > 0.0)
      r.emplace_back("n_a_norm4_alpha_pow4_over_n_ra_norm_alpha_pow4",
                     na * std::pow(in.alpha.norm4(), 4.0) / (static_cast<double>(in.n_ra) * std::pow(na2, 4.0)));
    const auto dec = epsilon_univariate(ca, in.alpha, in.sigma_eps2_a, in.n_a);
    const Eigen::VectorXd l = true_ld_scores(ca).values;
    const Eigen::VectorXd hl = (l.array() - l.mean()).matrix();
    r.emplace_back("abs_l_a_H_eps_a_over_sqrt_p", std::abs(hl.dot(dec.eps)) / std::sqrt(p));
  }
  const Eigen::VectorXd la = true_ld_scores(ca).values;
  r.emplace_back("l_a_min", la.minCoeff());
  r.emplace_back("l_a_max", la.maxCoeff());
  const Eigen::VectorXd lab = true_ld_scores(ca, &model_b(in)).values;
  r.emplace_back("l_ab_abs_min", lab.cwiseAbs().minCoeff());
  r.emplace_back("l_ab_max", lab.maxCoeff());

  if (have_b && in.alpha.p() == ca.p()) {
    const auto dec = epsilon_cross(ca, model_b(in), in.alpha, in.beta);
    r.emplace_back("abs_l_ab_eps_ab_over_sqrt_p", std::abs(lab.dot(dec.eps)) / std::sqrt(p));
    const double nb2 = in.beta.norm();
    if (in.n_a > 0 && in.n_b > 0) {
      const double root_min_n = std::sqrt(static_cast<double>(std::min(in.n_a, in.n_b)));
      r.emplace_back("root_min_n_times_min_norms", root_min_n * std::min(na2, 1.0) * std::min(nb2, 1.0));
      r.emplace_back("norm_alpha_norm_beta_over_root_n_a_n_b",
                     na2 * nb2 / std::sqrt(static_cast<double>(in.n_a) * static_cast<double>(in.n_b)));
    }
  }
  if (in.n_ra > 0) r.emplace_back("n_ra_over_sqrt_p", static_cast<double>(in.n_ra) / std::sqrt(p));
  if (in.n_rb > 0) r.emplace_back("n_rb_over_sqrt_p", static_cast<double>(in.n_rb) / std::sqrt(p));
  return r;
}

}  // namespace ldsc
