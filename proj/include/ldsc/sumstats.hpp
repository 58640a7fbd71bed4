#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ldsc/simgen.hpp"

namespace ldsc {

struct SummaryStats {
  Eigen::VectorXd beta;  // marginal estimates on the standardized scale
  std::size_t n = 0;
  std::string trait_id;
  std::vector<std::string> variant_ids;  // empty means simulated ids

  std::size_t p() const noexcept { return static_cast<std::size_t>(beta.size()); }
};

/// beta_j = X_j^T y / n over the cohort's rows.
SummaryStats marginal_stats(const Cohort& cohort, std::string trait_id = "trait");

/// Same estimator for an explicit panel, row subset and phenotype.
SummaryStats marginal_stats(const GenotypePanel& panel, const std::vector<Eigen::Index>& rows,
                            const Eigen::VectorXd& phenotype, std::string trait_id = "trait");

struct WVector {
  enum class Kind { Squared, Product };
  Eigen::VectorXd values;
  Kind kind = Kind::Squared;
};

/// Squared estimates when `b` is null, entrywise products otherwise.
/// Throws LengthMismatch.
WVector make_w(const SummaryStats& a, const SummaryStats* b = nullptr);

/// TSV with header SNP, N, BETA, Z where Z = BETA * sqrt(N).
void write_sumstats(const SummaryStats& stats, const std::string& path);

/// Reads SNP, N and BETA by name; other columns are ignored. Throws
/// MissingColumn, or ParseError naming the line.
SummaryStats read_sumstats(const std::string& path);

}  // namespace ldsc
