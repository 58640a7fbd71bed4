#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "ldsc/model.hpp"
#include "ldsc/simgen.hpp"

namespace ldsc {

enum class ScoreKind { Within, Cross };
enum class ScoreSource { True, Estimated };

struct LdScoreVector {
  Eigen::VectorXd values;
  ScoreKind kind = ScoreKind::Within;
  ScoreSource source = ScoreSource::True;
  std::vector<std::size_t> panel_n;  // reference panel sizes when estimated
  bool pooled = false;
  BlockStructure structure;           // blocks the scores were summed over

  std::size_t p() const noexcept { return static_cast<std::size_t>(values.size()); }
};

/// Within scores sum squared correlations over each variant's block; cross
/// scores sum the entrywise products of the two models' correlations.
/// Throws StructureMismatch when the two models are partitioned differently.
LdScoreVector true_ld_scores(const CovarianceModel& a, const CovarianceModel* b = nullptr);

/// Per-block uncentered Gram matrices Z_k^T Z_k of a reference panel.
struct BlockMoments {
  BlockStructure structure;
  std::vector<Eigen::MatrixXd> gram;
  std::size_t n = 0;
};

/// `structure` must cover the panel's p variants; for population-scaled
/// panels its blocks must be unions of the panel's own blocks.
BlockMoments block_moments(const GenotypePanel& panel, const BlockStructure& structure);

/// Moments of the row-concatenated panel.
BlockMoments pool_moments(const BlockMoments& a, const BlockMoments& b);

/// Per-block sample covariance Z^T Z / n. For standardized panels this is the
/// sample correlation matrix.
std::vector<Eigen::MatrixXd> sample_covariances(const BlockMoments& m);

/// Within scores from one set of moments, cross scores from two. Throws
/// DegeneratePanel for n < 2 and StructureMismatch.
LdScoreVector scores_from_moments(const BlockMoments& a, const BlockMoments* b = nullptr);

LdScoreVector estimate_ld_scores(const GenotypePanel& a, const GenotypePanel* b, const BlockStructure& structure);

/// Within-kind scores of the two panels stacked by rows. Deliberately
/// misspecified when the panels come from different populations.
LdScoreVector pooled_ld_scores(const GenotypePanel& a, const GenotypePanel& b, const BlockStructure& structure);

/// TSV with header CHR, SNP, BP, L2 (CHR is the 1-based block index, BP the
/// 1-based variant position) plus a JSON sidecar at `path + ".json"` holding
/// kind, source, pooled and panel_n. A non-null `provenance` is stored in the
/// sidecar under "config".
void write_ldscores(const LdScoreVector& scores, const std::string& path,
                    const nlohmann::ordered_json& provenance = nullptr);

/// The block structure is rebuilt from runs of equal CHR values. A missing
/// sidecar means estimated within-kind scores.
LdScoreVector read_ldscores(const std::string& path);

}  // namespace ldsc
