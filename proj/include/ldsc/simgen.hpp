#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "ldsc/model.hpp"
#include "ldsc/rng.hpp"

namespace ldsc {

struct MafVector {
  Eigen::VectorXd values;
  double lo = 0.0;
  double hi = 0.5;
};

/// p i.i.d. Uniform[lo, hi] allele frequencies. Throws BadRange unless
/// 0 < lo <= hi <= 0.5.
MafVector sample_maf(std::size_t p, double lo, double hi, Rng& rng);

enum class GenotypeMode { Gaussian, Discrete };

/// How panel columns are scaled.
///   Standardized: every column has sample mean 0 and sample variance 1.
///   Population:   raw draws X = X0 * Sigma^{1/2}, population mean 0 and
///                 variance 1 per column, no sample-level rescaling.
enum class PanelScaling { Standardized, Population };

/// n x p genotype matrix. Population-scaled Gaussian panels keep the latent
/// i.i.d. normal matrix and the block factor instead of the product, which
/// keeps products with vectors at O(np) and per-block Gram matrices at
/// O(n q^2).
class GenotypePanel {
 public:
  static GenotypePanel dense(Eigen::MatrixXd data, BlockStructure structure, GenotypeMode mode,
                             PanelScaling scaling);
  static GenotypePanel factored(Eigen::MatrixXd latent, std::shared_ptr<const BlockFactor> factor);

  std::size_t n() const noexcept { return static_cast<std::size_t>(data_.rows()); }
  std::size_t p() const noexcept { return structure_.p(); }
  const BlockStructure& structure() const noexcept { return structure_; }
  GenotypeMode mode() const noexcept { return mode_; }
  PanelScaling scaling() const noexcept { return scaling_; }
  bool is_factored() const noexcept { return factor_ != nullptr; }

  /// X v.
  Eigen::VectorXd multiply(const Eigen::VectorXd& v) const;
  /// X^T y.
  Eigen::VectorXd transpose_multiply(const Eigen::VectorXd& y) const;
  /// Columns [offset, offset + count) as a dense n x count matrix. In the
  /// factored form the range must align with factor block boundaries.
  Eigen::MatrixXd columns(std::size_t offset, std::size_t count) const;
  /// Full dense matrix. Debugging and export only.
  Eigen::MatrixXd materialize() const;

 private:
  GenotypePanel() = default;

  Eigen::MatrixXd data_;  // X itself, or the latent X0 when factored
  std::shared_ptr<const BlockFactor> factor_;
  BlockStructure structure_;
  GenotypeMode mode_ = GenotypeMode::Gaussian;
  PanelScaling scaling_ = PanelScaling::Standardized;
};

struct PanelOptions {
  GenotypeMode mode = GenotypeMode::Gaussian;
  /// Discrete panels are always standardized.
  PanelScaling scaling = PanelScaling::Standardized;
};

/// Throws DegeneratePanel when n < 2 or a column is constant, MissingMaf for a
/// discrete panel without frequencies, DimensionMismatch on a length mismatch.
GenotypePanel simulate_panel(const CovarianceModel& cov, std::size_t n, const PanelOptions& options,
                             const MafVector* maf, Rng& rng);

/// Reuses a precomputed factor; population-scaled Gaussian panels share it.
GenotypePanel simulate_panel(const CovarianceModel& cov, std::shared_ptr<const BlockFactor> factor,
                             std::size_t n, const PanelOptions& options, const MafVector* maf, Rng& rng);

/// Centers each column and scales it to sample variance 1 (denominator n).
/// Throws DegeneratePanel for n < 2 or a constant column.
void standardize_columns(Eigen::MatrixXd& x);

/// Correlation of two 0/1/2 genotypes produced by thresholding a bivariate
/// normal with latent correlation rho at the Hardy-Weinberg cut points for
/// frequencies f1 and f2.
double copula_implied_correlation(double rho, double f1, double f2);

/// Fixed genetic effects. The support is the set of nonzero entries.
class EffectVector {
 public:
  EffectVector() = default;
  explicit EffectVector(Eigen::VectorXd values);

  const Eigen::VectorXd& values() const noexcept { return values_; }
  const std::vector<std::size_t>& support() const noexcept { return support_; }
  std::size_t m() const noexcept { return support_.size(); }
  std::size_t p() const noexcept { return static_cast<std::size_t>(values_.size()); }
  /// g^2 = sum of squared effects.
  double g2() const noexcept { return values_.squaredNorm(); }
  /// Per-variant variance g^2 / p.
  double sigma2() const noexcept { return p() == 0 ? 0.0 : g2() / static_cast<double>(p()); }
  double norm() const noexcept { return values_.norm(); }
  double norm4() const noexcept;

  EffectVector scaled(double c) const { return EffectVector(values_ * c); }

 private:
  Eigen::VectorXd values_;
  std::vector<std::size_t> support_;
};

/// alpha^T beta / (|alpha| |beta|); 0 when either is zero.
double effect_correlation(const EffectVector& a, const EffectVector& b);

struct TraitArchitecture {
  double h2 = 0.5;
  double sparsity = 1.0;
  double shared_fraction = 1.0;
  double rg = 0.0;

  /// Throws InvalidArgument when a field is out of range.
  void validate() const;
};

/// Draws supports and N(0, 1/p) effects, then rotates beta so the realized
/// correlation equals arch.rg exactly while keeping |beta| fixed.
/// Errors: EmptySupport (m rounds to 0), InfeasibleSupport (the non-shared
/// part of beta does not fit outside alpha's support), UnreachableRg (|rg|
/// exceeds what the shared support allows).
std::pair<EffectVector, EffectVector> sample_effect_pair(const TraitArchitecture& arch, std::size_t p,
                                                         Rng& rng);

/// Scales effects so g^2 equals `g2`. Throws ZeroEffectNonzeroH2 for a zero
/// vector with g2 > 0.
EffectVector rescale_to_g2(const EffectVector& effect, double g2);

enum class NoiseKind { Gaussian, StudentT8 };

struct Cohort {
  std::shared_ptr<const GenotypePanel> panel;
  std::vector<Eigen::Index> rows;  // rows of `panel` used by this cohort
  Eigen::VectorXd phenotype;
  double sigma_eps2 = 1.0;
  EffectVector effect;

  std::size_t n() const noexcept { return rows.size(); }
};

/// sigma_eps^2 = g^2 (1 - h2) / h2, or 1 when h2 = 0.
double noise_variance(double g2, double h2);

/// y = X alpha + eps on the chosen rows (all rows when `rows` is empty).
/// Throws ZeroEffectNonzeroH2, InvalidArgument for h2 outside [0, 1).
Cohort simulate_phenotype(std::shared_ptr<const GenotypePanel> panel, const EffectVector& effect, double h2,
                          Rng& rng, std::vector<Eigen::Index> rows = {},
                          NoiseKind noise = NoiseKind::Gaussian);

/// Cohort A takes rows [0, n_a); cohort B shares round(overlap * min(n_a, n_b))
/// of A's last rows and takes the rest from the rows after A. Phenotype noise
/// is independent per trait.
std::pair<Cohort, Cohort> split_cohorts(std::shared_ptr<const GenotypePanel> panel,
                                        const std::pair<EffectVector, EffectVector>& effects,
                                        std::pair<double, double> h2s, double overlap_fraction,
                                        std::size_t n_a, std::size_t n_b, Rng& rng,
                                        NoiseKind noise = NoiseKind::Gaussian);

/// Rows needed for two cohorts with the given overlap.
std::size_t overlap_rows(std::size_t n_a, std::size_t n_b, double overlap_fraction);
std::size_t cohort_rows_required(std::size_t n_a, std::size_t n_b, double overlap_fraction);

/// Panel TSV: header of variant ids, then one row per sample.
void write_panel_tsv(const GenotypePanel& panel, const std::string& path);
/// Reads a panel TSV as a dense standardized-or-not matrix (stored as is).
Eigen::MatrixXd read_panel_tsv(const std::string& path);

/// Effects TSV: header `SNP\tEFFECT`.
void write_effects_tsv(const EffectVector& effect, const std::string& path);
EffectVector read_effects_tsv(const std::string& path);

}  // namespace ldsc
