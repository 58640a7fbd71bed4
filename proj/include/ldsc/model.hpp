#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace ldsc {

/// Upper bound on the total variant count accepted by build_block_structure.
inline constexpr std::size_t kDefaultMaxVariants = 10'000'000;

/// Partition of variants 0..p-1 into contiguous, disjoint LD blocks.
class BlockStructure {
 public:
  /// Throws EmptyStructure for an empty list, InvalidArgument for a zero size,
  /// SizeOverflow when p exceeds max_variants or a block exceeds max_block_size.
  static BlockStructure build(std::vector<std::size_t> block_sizes,
                              std::optional<std::size_t> max_block_size = std::nullopt,
                              std::size_t max_variants = kDefaultMaxVariants);

  /// Uniform partition: p_b blocks of the same size.
  static BlockStructure uniform(std::size_t num_blocks, std::size_t block_size);

  std::size_t p() const noexcept { return p_; }
  std::size_t num_blocks() const noexcept { return sizes_.size(); }
  std::size_t size(std::size_t k) const { return sizes_.at(k); }
  std::size_t offset(std::size_t k) const { return offsets_.at(k); }
  const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }
  const std::vector<std::size_t>& offsets() const noexcept { return offsets_; }
  std::size_t max_block_size() const noexcept;
  std::size_t block_of(std::size_t variant) const;

  /// Coarser partition: every run of `factor` adjacent blocks becomes one block.
  BlockStructure merged(std::size_t factor) const;

  /// Structure with blocks reordered as `order[k]` -> new position k.
  BlockStructure permuted(const std::vector<std::size_t>& order) const;

  bool operator==(const BlockStructure& other) const noexcept { return sizes_ == other.sizes_; }

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
  std::size_t p_ = 0;
};

/// Per-block generator for correlation templates.
struct BlockGenerator {
  enum class Kind { Identity, Ar1, Exchangeable, Explicit };
  Kind kind = Kind::Identity;
  double rho = 0.0;
  // Ar1 with local correlations: the correlation between variants j - 1 and j
  // is segment_rhos[(j / segment) % size()], and distant pairs multiply the
  // local correlations between them. Empty means the constant `rho`.
  std::vector<double> segment_rhos;
  std::size_t segment = 1;
  Eigen::MatrixXd matrix;  // used when kind == Explicit
};

/// Optional eigenvalue band [lo, hi] enforced on every block.
struct EigenBand {
  double lo;
  double hi;
};

/// Block-diagonal population LD matrix with unit diagonal. Immutable.
class CovarianceModel {
 public:
  const BlockStructure& structure() const noexcept { return structure_; }
  const Eigen::MatrixXd& block(std::size_t k) const { return blocks_.at(k); }
  const std::vector<Eigen::MatrixXd>& blocks() const noexcept { return blocks_; }
  std::size_t p() const noexcept { return structure_.p(); }

  /// Dense p x p assembly; only meant for small instances and tests.
  Eigen::MatrixXd dense() const;
  /// Sigma * v computed block by block.
  Eigen::VectorXd multiply(const Eigen::VectorXd& v) const;
  /// Per-block eigenvalues (ascending within each block), concatenated.
  Eigen::VectorXd eigenvalues() const;

  CovarianceModel permuted(const std::vector<std::size_t>& order) const;

 private:
  friend CovarianceModel build_covariance(const BlockStructure&, const std::vector<Eigen::MatrixXd>&,
                                          std::optional<EigenBand>);
  CovarianceModel(BlockStructure s, std::vector<Eigen::MatrixXd> b)
      : structure_(std::move(s)), blocks_(std::move(b)) {}

  BlockStructure structure_;
  std::vector<Eigen::MatrixXd> blocks_;
};

/// Symmetric square roots of each covariance block.
class BlockFactor {
 public:
  const BlockStructure& structure() const noexcept { return structure_; }
  const Eigen::MatrixXd& factor(std::size_t k) const { return factors_.at(k); }
  const std::vector<Eigen::MatrixXd>& factors() const noexcept { return factors_; }

  /// F * v block by block.
  Eigen::VectorXd multiply(const Eigen::VectorXd& v) const;

 private:
  friend BlockFactor block_sqrt(const CovarianceModel&);
  BlockFactor(BlockStructure s, std::vector<Eigen::MatrixXd> f)
      : structure_(std::move(s)), factors_(std::move(f)) {}

  BlockStructure structure_;
  std::vector<Eigen::MatrixXd> factors_;
};

inline constexpr double kPsdTolerance = 1e-10;

BlockStructure build_block_structure(const std::vector<std::size_t>& block_sizes);

Eigen::MatrixXd generate_block(const BlockGenerator& gen, std::size_t size);

/// Validates templates, rescales each to unit diagonal and checks positive
/// definiteness. Throws DimensionMismatch or NotPositiveDefinite (the message
/// names the offending block index).
CovarianceModel build_covariance(const BlockStructure& structure,
                                 const std::vector<Eigen::MatrixXd>& templates,
                                 std::optional<EigenBand> band = std::nullopt);

/// One generator per block, or a single generator applied to every block.
CovarianceModel build_covariance(const BlockStructure& structure,
                                 const std::vector<BlockGenerator>& generators,
                                 std::optional<EigenBand> band = std::nullopt);

BlockFactor block_sqrt(const CovarianceModel& cov);

/// Covariance spec document:
///   {"blocks":[{"size":N,"kind":"ar1","rho":0.5}, ...]}
///   {"kind":"explicit","file":"blocks.tsv"}
/// Relative file paths resolve against `base_dir`.
CovarianceModel covariance_from_json(const std::string& json_text, const std::string& base_dir = ".");
CovarianceModel load_covariance_spec(const std::string& path);

/// Block matrices as TSV: rows of tab-separated values, blocks separated by a
/// blank line.
std::vector<Eigen::MatrixXd> read_block_matrices(const std::string& path);
void write_block_matrices(const CovarianceModel& cov, const std::string& path);

}  // namespace ldsc
