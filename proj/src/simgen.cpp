#include "ldsc/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/random/student_t_distribution.hpp>

#include "ldsc/error.hpp"
#include "ldsc/textio.hpp"

namespace ldsc {

namespace {

double normal_quantile(double prob) {
  static const boost::math::normal_distribution<double> unit;
  if (prob <= 0.0) return -std::numeric_limits<double>::infinity();
  if (prob >= 1.0) return std::numeric_limits<double>::infinity();
  return boost::math::quantile(unit, prob);
}

double normal_upper(double x) {
  static const boost::math::normal_distribution<double> unit;
  if (std::isinf(x)) return x > 0 ? 0.0 : 1.0;
  return boost::math::cdf(boost::math::complement(unit, x));
}

// Hardy-Weinberg cut points: genotype >= 1 above t1, == 2 above t2.
std::pair<double, double> hwe_thresholds(double f) {
  return {normal_quantile((1.0 - f) * (1.0 - f)), normal_quantile(1.0 - f * f)};
}

// P(Z1 > s, Z2 > t) for a standard bivariate normal with correlation rho.
double upper_orthant(double s, double t, double rho) {
  if (std::isinf(s) || std::isinf(t)) {
    if ((std::isinf(s) && s > 0) || (std::isinf(t) && t > 0)) return 0.0;
    if (std::isinf(s)) return normal_upper(t);
    return normal_upper(s);
  }
  if (rho >= 1.0) return normal_upper(std::max(s, t));
  if (rho <= -1.0) return std::max(0.0, normal_upper(s) - (1.0 - normal_upper(-t)));
  const double scale = std::sqrt(1.0 - rho * rho);
  auto integrand = [&](double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI) * normal_upper((t - rho * z) / scale);
  };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      integrand, s, std::numeric_limits<double>::infinity(), 15, 1e-13);
}

void fill_factored_columns(const Eigen::MatrixXd& latent, const BlockFactor& factor,
                           Eigen::MatrixXd& out) {
  const auto& s = factor.structure();
  out.resize(latent.rows(), latent.cols());
  for (std::size_t k = 0; k < s.num_blocks(); ++k) {
    const auto o = static_cast<Eigen::Index>(s.offset(k));
    const auto q = static_cast<Eigen::Index>(s.size(k));
    out.middleCols(o, q).noalias() = latent.middleCols(o, q) * factor.factor(k);
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Frequencies

MafVector sample_maf(std::size_t p, double lo, double hi, Rng& rng) {
  require(lo > 0.0 && lo <= hi && hi <= 0.5, ErrorCode::BadRange,
          "allele frequency range must satisfy 0 < lo <= hi <= 0.5");
  MafVector out;
  out.lo = lo;
  out.hi = hi;
  out.values.resize(static_cast<Eigen::Index>(p));
  for (Eigen::Index j = 0; j < out.values.size(); ++j) {
    out.values[j] = lo == hi ? lo : lo + (hi - lo) * uniform01(rng);
  }
  return out;
}

// ---------------------------------------------------------------------------
// GenotypePanel

GenotypePanel GenotypePanel::dense(Eigen::MatrixXd data, BlockStructure structure, GenotypeMode mode,
                                   PanelScaling scaling) {
  require(static_cast<std::size_t>(data.cols()) == structure.p(), ErrorCode::DimensionMismatch,
          "panel has " + std::to_string(data.cols()) + " columns, structure has p=" +
              std::to_string(structure.p()));
  GenotypePanel out;
  out.data_ = std::move(data);
  out.structure_ = std::move(structure);
  out.mode_ = mode;
  out.scaling_ = scaling;
  return out;
}

GenotypePanel GenotypePanel::factored(Eigen::MatrixXd latent, std::shared_ptr<const BlockFactor> factor) {
  require(factor != nullptr, ErrorCode::InvalidArgument, "missing block factor");
  require(static_cast<std::size_t>(latent.cols()) == factor->structure().p(), ErrorCode::DimensionMismatch,
          "latent matrix width does not match the factor");
  GenotypePanel out;
  out.data_ = std::move(latent);
  out.structure_ = factor->structure();
  out.factor_ = std::move(factor);
  out.mode_ = GenotypeMode::Gaussian;
  out.scaling_ = PanelScaling::Population;
  return out;
}

Eigen::VectorXd GenotypePanel::multiply(const Eigen::VectorXd& v) const {
  require(static_cast<std::size_t>(v.size()) == p(), ErrorCode::DimensionMismatch,
          "vector length does not match panel width");
  if (factor_) return data_ * factor_->multiply(v);
  return data_ * v;
}

Eigen::VectorXd GenotypePanel::transpose_multiply(const Eigen::VectorXd& y) const {
  require(static_cast<std::size_t>(y.size()) == n(), ErrorCode::DimensionMismatch,
          "vector length does not match panel height");
  Eigen::VectorXd t = data_.transpose() * y;
  if (factor_) return factor_->multiply(t);
  return t;
}

Eigen::MatrixXd GenotypePanel::columns(std::size_t offset, std::size_t count) const {
  require(offset + count <= p(), ErrorCode::DimensionMismatch, "column range out of bounds");
  const auto o = static_cast<Eigen::Index>(offset);
  const auto c = static_cast<Eigen::Index>(count);
  if (!factor_) return data_.middleCols(o, c);

  Eigen::MatrixXd out(data_.rows(), c);
  std::size_t pos = offset;
  while (pos < offset + count) {
    const std::size_t k = structure_.block_of(pos);
    require(structure_.offset(k) == pos && pos + structure_.size(k) <= offset + count,
            ErrorCode::StructureMismatch, "column range splits an LD block of the panel");
    const auto q = static_cast<Eigen::Index>(structure_.size(k));
    out.middleCols(static_cast<Eigen::Index>(pos - offset), q).noalias() =
        data_.middleCols(static_cast<Eigen::Index>(pos), q) * factor_->factor(k);
    pos += structure_.size(k);
  }
  return out;
}

Eigen::MatrixXd GenotypePanel::materialize() const {
  if (!factor_) return data_;
  Eigen::MatrixXd out;
  fill_factored_columns(data_, *factor_, out);
  return out;
}

void standardize_columns(Eigen::MatrixXd& x) {
  require(x.rows() >= 2, ErrorCode::DegeneratePanel, "cannot standardize a panel with fewer than 2 rows");
  const double n = static_cast<double>(x.rows());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    auto col = x.col(j);
    const double mean = col.sum() / n;
    col.array() -= mean;
    const double var = col.squaredNorm() / n;
    require(var > 0.0, ErrorCode::DegeneratePanel, "column " + std::to_string(j) + " is constant");
    col /= std::sqrt(var);
    // A second pass removes the rounding residue left by the first.
    col.array() -= col.sum() / n;
  }
}

GenotypePanel simulate_panel(const CovarianceModel& cov, std::size_t n, const PanelOptions& options,
                             const MafVector* maf, Rng& rng) {
  return simulate_panel(cov, std::make_shared<const BlockFactor>(block_sqrt(cov)), n, options, maf, rng);
}

GenotypePanel simulate_panel(const CovarianceModel& cov, std::shared_ptr<const BlockFactor> factor,
                             std::size_t n, const PanelOptions& options, const MafVector* maf, Rng& rng) {
  require(factor != nullptr && factor->structure() == cov.structure(), ErrorCode::StructureMismatch,
          "factor does not belong to the covariance model");
  const bool discrete = options.mode == GenotypeMode::Discrete;
  if (discrete) {
    require(maf != nullptr, ErrorCode::MissingMaf, "discrete panels need allele frequencies");
    require(static_cast<std::size_t>(maf->values.size()) == cov.p(), ErrorCode::DimensionMismatch,
            "allele frequency vector length does not match p");
  }
  const bool standardize = discrete || options.scaling == PanelScaling::Standardized;
  require(n >= (standardize ? 2u : 1u), ErrorCode::DegeneratePanel,
          "panel needs at least " + std::string(standardize ? "2 rows" : "1 row"));

  // Drawn row by row so the first k samples of a panel do not depend on n.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows(
      static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cov.p()));
  Eigen::Map<Eigen::VectorXd> flat(rows.data(), rows.size());
  fill_standard_normal(Eigen::Ref<Eigen::VectorXd>(flat), rng);
  Eigen::MatrixXd latent = rows;
  rows.resize(0, 0);
  if (!standardize) return GenotypePanel::factored(std::move(latent), std::move(factor));

  Eigen::MatrixXd x;
  fill_factored_columns(latent, *factor, x);
  latent.resize(0, 0);
  if (discrete) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const auto [t1, t2] = hwe_thresholds(maf->values[j]);
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double z = x(i, j);
        x(i, j) = static_cast<double>(z > t1) + static_cast<double>(z > t2);
      }
    }
  }
  standardize_columns(x);
  return GenotypePanel::dense(std::move(x), cov.structure(), options.mode, PanelScaling::Standardized);
}

double copula_implied_correlation(double rho, double f1, double f2) {
  require(f1 > 0.0 && f1 <= 0.5 && f2 > 0.0 && f2 <= 0.5, ErrorCode::BadRange,
          "allele frequencies must lie in (0, 0.5]");
  require(rho >= -1.0 && rho <= 1.0, ErrorCode::InvalidArgument, "latent correlation outside [-1, 1]");
  const auto [a1, a2] = hwe_thresholds(f1);
  const auto [b1, b2] = hwe_thresholds(f2);
  double cross = 0.0;
  for (double s : {a1, a2})
    for (double t : {b1, b2}) cross += upper_orthant(s, t, rho);
  const double cov = cross - 4.0 * f1 * f2;
  return cov / std::sqrt(4.0 * f1 * (1.0 - f1) * f2 * (1.0 - f2));
}

// ---------------------------------------------------------------------------
// Effects

EffectVector::EffectVector(Eigen::VectorXd values) : values_(std::move(values)) {
  for (Eigen::Index j = 0; j < values_.size(); ++j)
    if (values_[j] != 0.0) support_.push_back(static_cast<std::size_t>(j));
}

double EffectVector::norm4() const noexcept {
  return std::pow(values_.array().square().square().sum(), 0.25);
}

double effect_correlation(const EffectVector& a, const EffectVector& b) {
  require(a.p() == b.p(), ErrorCode::LengthMismatch, "effect vectors differ in length");
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.values().dot(b.values()) / (na * nb);
}

void TraitArchitecture::validate() const {
  require(h2 >= 0.0 && h2 < 1.0, ErrorCode::InvalidArgument, "h2 must lie in [0, 1)");
  require(sparsity > 0.0 && sparsity <= 1.0, ErrorCode::InvalidArgument, "sparsity must lie in (0, 1]");
  require(shared_fraction >= 0.0 && shared_fraction <= 1.0, ErrorCode::InvalidArgument,
          "shared fraction must lie in [0, 1]");
  require(rg >= -1.0 && rg <= 1.0, ErrorCode::InvalidArgument, "rg must lie in [-1, 1]");
}

std::pair<EffectVector, EffectVector> sample_effect_pair(const TraitArchitecture& arch, std::size_t p,
                                                         Rng& rng) {
  arch.validate();
  const auto m = static_cast<std::size_t>(std::llround(arch.sparsity * static_cast<double>(p)));
  require(m >= 1, ErrorCode::EmptySupport, "sparsity * p rounds to zero causal variants");
  const auto m_ab = static_cast<std::size_t>(std::llround(arch.shared_fraction * static_cast<double>(m)));
  const std::size_t own_b = m - m_ab;
  require(own_b <= p - m, ErrorCode::InfeasibleSupport,
          "beta needs " + std::to_string(own_b) + " variants outside alpha's support but only " +
              std::to_string(p - m) + " remain");

  std::vector<std::size_t> perm(p);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = p; i > 1; --i) std::swap(perm[i - 1], perm[uniform_index(rng, i)]);

  const double sd = 1.0 / std::sqrt(static_cast<double>(p));
  const auto P = static_cast<Eigen::Index>(p);
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(P);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(P);
  Eigen::VectorXd shared_mask = Eigen::VectorXd::Zero(P);

  // Starting draw: on the shared support the pair is jointly normal with a
  // correlation that makes the target roughly right before the exact rotation.
  const double start_corr =
      m_ab == 0 ? 0.0 : std::clamp(arch.rg * std::sqrt(static_cast<double>(m) / m_ab), -1.0, 1.0);
  for (std::size_t i = 0; i < m; ++i) alpha[static_cast<Eigen::Index>(perm[i])] = sd * standard_normal(rng);
  for (std::size_t i = 0; i < m_ab; ++i) {
    const auto j = static_cast<Eigen::Index>(perm[i]);
    shared_mask[j] = 1.0;
    beta[j] = start_corr * alpha[j] + std::sqrt(1.0 - start_corr * start_corr) * sd * standard_normal(rng);
  }
  for (std::size_t i = 0; i < own_b; ++i) beta[static_cast<Eigen::Index>(perm[m + i])] = sd * standard_normal(rng);

  const Eigen::VectorXd a_shared = alpha.cwiseProduct(shared_mask);
  const double shared_norm = a_shared.norm();
  const double beta_norm = beta.norm();
  if (shared_norm == 0.0 || beta_norm == 0.0) {
    require(arch.rg == 0.0, ErrorCode::UnreachableRg, "no shared causal variants, so only rg = 0 is reachable");
    return {EffectVector(std::move(alpha)), EffectVector(std::move(beta))};
  }

  const double kappa = shared_norm / alpha.norm();
  const double t = arch.rg / kappa;
  require(std::abs(t) <= 1.0 + 1e-12, ErrorCode::UnreachableRg,
          "shared support allows |rg| <= " + textio::format_double(kappa));
  const double tc = std::clamp(t, -1.0, 1.0);

  const Eigen::VectorXd u = a_shared / shared_norm;
  const Eigen::VectorXd rest = beta - u.dot(beta) * u;
  const double rest_norm = rest.norm();
  Eigen::VectorXd rotated = tc * beta_norm * u;
  if (std::abs(tc) < 1.0) {
    require(rest_norm > 0.0, ErrorCode::UnreachableRg, "beta has no direction orthogonal to alpha");
    rotated += std::sqrt(1.0 - tc * tc) * beta_norm / rest_norm * rest;
  }
  return {EffectVector(std::move(alpha)), EffectVector(std::move(rotated))};
}

EffectVector rescale_to_g2(const EffectVector& effect, double g2) {
  require(g2 >= 0.0, ErrorCode::InvalidArgument, "target g2 must be non-negative");
  const double current = effect.g2();
  if (g2 == 0.0) return effect.scaled(0.0);
  require(current > 0.0, ErrorCode::ZeroEffectNonzeroH2, "cannot rescale a zero effect vector");
  return effect.scaled(std::sqrt(g2 / current));
}

// ---------------------------------------------------------------------------
// Phenotypes and cohorts

double noise_variance(double g2, double h2) {
  require(h2 >= 0.0 && h2 < 1.0, ErrorCode::InvalidArgument, "h2 must lie in [0, 1)");
  if (h2 == 0.0) return 1.0;
  require(g2 > 0.0, ErrorCode::ZeroEffectNonzeroH2, "h2 > 0 requires nonzero effects");
  return g2 * (1.0 - h2) / h2;
}

Cohort simulate_phenotype(std::shared_ptr<const GenotypePanel> panel, const EffectVector& effect, double h2,
                          Rng& rng, std::vector<Eigen::Index> rows, NoiseKind noise) {
  require(panel != nullptr, ErrorCode::InvalidArgument, "missing panel");
  require(effect.p() == panel->p(), ErrorCode::DimensionMismatch, "effect length does not match panel width");
  const double sigma2 = noise_variance(effect.g2(), h2);
  if (rows.empty()) {
    rows.resize(panel->n());
    std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  }
  for (auto r : rows)
    require(r >= 0 && static_cast<std::size_t>(r) < panel->n(), ErrorCode::DimensionMismatch,
            "cohort row index out of range");

  const Eigen::VectorXd genetic = panel->multiply(effect.values());
  Cohort out;
  out.phenotype.resize(static_cast<Eigen::Index>(rows.size()));
  const double sd = std::sqrt(sigma2);
  if (noise == NoiseKind::Gaussian) {
    for (Eigen::Index i = 0; i < out.phenotype.size(); ++i)
      out.phenotype[i] = genetic[rows[static_cast<std::size_t>(i)]] + sd * standard_normal(rng);
  } else {
    // Student t with 8 degrees of freedom has variance 8/6.
    boost::random::student_t_distribution<double> t8(8.0);
    const double scale = sd * std::sqrt(6.0 / 8.0);
    for (Eigen::Index i = 0; i < out.phenotype.size(); ++i)
      out.phenotype[i] = genetic[rows[static_cast<std::size_t>(i)]] + scale * t8(rng);
  }
  out.panel = std::move(panel);
  out.rows = std::move(rows);
  out.sigma_eps2 = sigma2;
  out.effect = effect;
  return out;
}

std::size_t overlap_rows(std::size_t n_a, std::size_t n_b, double overlap_fraction) {
  require(overlap_fraction >= 0.0 && overlap_fraction <= 1.0, ErrorCode::InvalidArgument,
          "overlap fraction must lie in [0, 1]");
  return static_cast<std::size_t>(std::llround(overlap_fraction * static_cast<double>(std::min(n_a, n_b))));
}

std::size_t cohort_rows_required(std::size_t n_a, std::size_t n_b, double overlap_fraction) {
  return n_a + n_b - overlap_rows(n_a, n_b, overlap_fraction);
}

std::pair<Cohort, Cohort> split_cohorts(std::shared_ptr<const GenotypePanel> panel,
                                        const std::pair<EffectVector, EffectVector>& effects,
                                        std::pair<double, double> h2s, double overlap_fraction,
                                        std::size_t n_a, std::size_t n_b, Rng& rng, NoiseKind noise) {
  require(panel != nullptr, ErrorCode::InvalidArgument, "missing panel");
  require(n_a >= 1 && n_b >= 1, ErrorCode::InsufficientSamples, "cohort sizes must be positive");
  const std::size_t shared = overlap_rows(n_a, n_b, overlap_fraction);
  const std::size_t needed = n_a + n_b - shared;
  require(needed <= panel->n(), ErrorCode::InsufficientSamples,
          "cohorts need " + std::to_string(needed) + " rows, panel has " + std::to_string(panel->n()));

  std::vector<Eigen::Index> rows_a(n_a);
  std::vector<Eigen::Index> rows_b(n_b);
  std::iota(rows_a.begin(), rows_a.end(), Eigen::Index{0});
  std::iota(rows_b.begin(), rows_b.end(), static_cast<Eigen::Index>(n_a - shared));

  Cohort a = simulate_phenotype(panel, effects.first, h2s.first, rng, std::move(rows_a), noise);
  Cohort b = simulate_phenotype(panel, effects.second, h2s.second, rng, std::move(rows_b), noise);
  return {std::move(a), std::move(b)};
}

// ---------------------------------------------------------------------------
// Text export

void write_panel_tsv(const GenotypePanel& panel, const std::string& path) {
  const Eigen::MatrixXd x = panel.materialize();
  std::string s;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (j) s += '\t';
    s += textio::variant_id(static_cast<std::size_t>(j));
  }
  s += '\n';
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (j) s += '\t';
      s += textio::format_double(x(i, j));
    }
    s += '\n';
  }
  textio::write_file(path, s);
}

Eigen::MatrixXd read_panel_tsv(const std::string& path) {
  const std::string text = textio::read_file(path);
  std::istringstream in(text);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::ParseError, path + ": empty file");
  const std::size_t p = textio::split(line, '\t').size();
  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = textio::split(line, '\t');
    require(fields.size() == p, ErrorCode::ParseError,
            path + ":" + std::to_string(line_no) + ": expected " + std::to_string(p) + " fields");
    for (auto f : fields) values.push_back(textio::parse_double(f, path + ":" + std::to_string(line_no)));
    ++rows;
  }
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < p; ++j)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[i * p + j];
  return x;
}

void write_effects_tsv(const EffectVector& effect, const std::string& path) {
  std::string s = "SNP\tEFFECT\n";
  for (Eigen::Index j = 0; j < effect.values().size(); ++j) {
    s += textio::variant_id(static_cast<std::size_t>(j));
    s += '\t';
    s += textio::format_double(effect.values()[j]);
    s += '\n';
  }
  textio::write_file(path, s);
}

EffectVector read_effects_tsv(const std::string& path) {
  const std::string text = textio::read_file(path);
  std::istringstream in(text);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::ParseError, path + ": empty file");
  const auto header = textio::split(line, '\t');
  const int col = textio::find_column(header, "EFFECT");
  require(col >= 0, ErrorCode::MissingColumn, path + ": no EFFECT column");
  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = textio::split(line, '\t');
    require(fields.size() == header.size(), ErrorCode::ParseError,
            path + ":" + std::to_string(line_no) + ": wrong field count");
    values.push_back(textio::parse_double(fields[static_cast<std::size_t>(col)],
                                          path + ":" + std::to_string(line_no)));
  }
  return EffectVector(Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size())));
}

}  // namespace ldsc
