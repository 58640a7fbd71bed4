#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ldsc/normality.hpp"
#include "ldsc/model.hpp"
#include "ldsc/simgen.hpp"
#include "ldsc/sumstats.hpp"

namespace ldsc {

/// Where the regression's LD scores come from.
///   true              population scores from the covariance models
///   estimated-within  within-population scores from reference panels
///   estimated-cross   cross-population scores for the cross-trait fit
///   pooled            within scores of both reference panels stacked
///   merged-blocks(f)  estimated with every f adjacent blocks merged, the
///                     stand-in for coarser window-based block choices
struct ScoreSourceSpec {
  enum class Kind { True, EstimatedWithin, EstimatedCross, Pooled, MergedBlocks };
  Kind kind = Kind::EstimatedWithin;
  std::size_t merge_factor = 1;

  std::string name() const;
  /// Throws InvalidArgument for an unknown name.
  static ScoreSourceSpec parse(const std::string& name);
  bool operator==(const ScoreSourceSpec&) const = default;
};

enum class EstimatorMode { Univariate, Bivariate };

struct ExperimentConfig {
  std::string preset;
  std::uint64_t seed = 1;
  std::size_t replicates = 200;
  /// Covariance spec documents (see covariance_from_json). A null `cov_b`
  /// means both traits come from the population of `cov_a`.
  nlohmann::json cov_a;
  nlohmann::json cov_b;
  std::size_t n_a = 2000;
  std::size_t n_b = 2000;
  std::size_t n_ra = 2000;
  std::size_t n_rb = 2000;
  double h2_a = 0.5;
  double h2_b = 0.5;
  double rg = 0.5;
  double sparsity = 1.0;
  double shared_fraction = 1.0;
  double overlap = 0.0;
  GenotypeMode genotype_mode = GenotypeMode::Gaussian;
  PanelScaling scaling = PanelScaling::Population;
  double maf_lo = 0.05;
  double maf_hi = 0.45;
  std::vector<ScoreSourceSpec> sources{ScoreSourceSpec{}};
  EstimatorMode estimator = EstimatorMode::Bivariate;
  std::size_t jackknife_groups = 200;
  bool bivariate_intercept = false;
  NoiseKind noise = NoiseKind::Gaussian;
  /// Draw the effects once and keep them for every replicate.
  bool fixed_effects = false;
  /// Worker threads; 0 picks the hardware concurrency.
  std::size_t threads = 1;

  bool cross_population() const { return !cov_b.is_null(); }

  /// Throws InvalidArgument naming the offending field.
  void validate() const;

  /// Every field except `threads`, which never affects results.
  nlohmann::ordered_json to_json() const;
  /// Starts from the preset named by "preset" (if any), then applies the
  /// remaining keys. Unknown keys are rejected.
  static ExperimentConfig from_json(const nlohmann::json& doc);
};

std::vector<std::string> preset_names();
/// Throws InvalidArgument for an unknown name.
ExperimentConfig preset_config(const std::string& name);

/// Covariance spec of `blocks` AR(1) blocks of `size`, with correlations
/// cycling through `rhos`.
nlohmann::json ar1_blocks_spec(std::size_t blocks, std::size_t size, const std::vector<double>& rhos);

/// Covariance spec of `blocks` AR(1) blocks of `size` whose local correlation
/// changes every `segment` variants, cycling through `rhos`. Block k starts k
/// steps into the cycle.
nlohmann::json ar1_segments_spec(std::size_t blocks, std::size_t size, std::size_t segment,
                                 const std::vector<double>& rhos);

/// One replicate. Optional quantities are NaN when absent. CSV columns, in
/// order: replicate, slope, intercept, h2_hat, rg_hat, se_jackknife, error,
/// then slope_a, slope_b, slope_ab, intercept_b, h2_b_hat, se_h2, se_rg,
/// zeta_a, zeta_ab.
///   slope        primary slope: trait A's univariate slope for the univariate
///                estimator, the cross-trait slope otherwise
///   se_jackknife jackknife SE of `slope`
///   zeta_a       theory SD of trait A's slope (true scores, realized effects)
///   zeta_ab      theory SD of the cross-trait slope, independent cohorts
struct ReplicateRow {
  std::size_t replicate = 0;
  double slope = 0.0;
  double intercept = 0.0;
  double h2_hat = 0.0;
  double rg_hat = 0.0;
  double se_jackknife = 0.0;
  std::string error;
  double slope_a = 0.0;
  double slope_b = 0.0;
  double slope_ab = 0.0;
  double intercept_b = 0.0;
  double h2_b_hat = 0.0;
  double se_h2 = 0.0;
  double se_rg = 0.0;
  double zeta_a = 0.0;
  double zeta_ab = 0.0;

  bool ok() const { return error.empty(); }
};

struct ReplicateTable {
  std::string source;
  std::vector<ReplicateRow> rows;  // sorted by replicate index
};

/// Runs the first score source.
ReplicateTable run_experiment(const ExperimentConfig& cfg);

/// One table per configured score source; all sources see the same draws.
/// Results do not depend on the thread count.
std::vector<ReplicateTable> run_experiment_multi(const ExperimentConfig& cfg);

/// Effects of one replicate, each rescaled so that g^2 equals its h^2.
std::pair<EffectVector, EffectVector> replicate_effects(const ExperimentConfig& cfg, std::size_t replicate);

/// Simulated data of one replicate, drawn from the same streams the harness
/// uses. Reference panels are always drawn. Trait B fields are empty for the
/// univariate estimator.
struct ReplicateDraw {
  std::optional<CovarianceModel> cov_a;
  std::optional<CovarianceModel> cov_b;  // set in the cross design
  EffectVector alpha;
  EffectVector beta;
  SummaryStats stats_a;
  SummaryStats stats_b;
  std::optional<GenotypePanel> ref_a;
  std::optional<GenotypePanel> ref_b;
  double zeta_a = 0.0;
  double zeta_ab = 0.0;  // NaN for the univariate estimator
};

ReplicateDraw draw_replicate(const ExperimentConfig& cfg, std::size_t replicate);

/// Computes a single replicate for every source. Exposed for testing.
std::vector<ReplicateRow> run_replicate(const ExperimentConfig& cfg, std::size_t replicate);

/// Fraction of finite (estimate, se) pairs with |estimate - truth| <= z se,
/// z the two-sided normal quantile for `level`. An infinite SE covers.
double coverage_summary(const std::vector<double>& estimates, const std::vector<double>& ses, double truth,
                        double level = 0.95);

struct MetricSummary {
  std::string name;
  double truth = 0.0;
  std::size_t n = 0;
  double mean = 0.0;
  double bias = 0.0;
  double relative_bias = 0.0;
  double mc_sd = 0.0;
  double mc_se = 0.0;
  double median_se_jackknife = 0.0;
  double coverage = 0.0;
  std::optional<double> theory_zeta;  // mean theory SD over replicates
  std::optional<NormalityReport> normality_theory;
  std::optional<NormalityReport> normality_empirical;
};

struct ExperimentSummary {
  std::string source;
  std::size_t replicates = 0;
  std::size_t summarized = 0;
  std::size_t excluded = 0;
  std::vector<MetricSummary> metrics;  // "slope", "h2", and "rg" when bivariate

  const MetricSummary* find(const std::string& name) const;
};

ExperimentSummary summarize(const ReplicateTable& table, const ExperimentConfig& cfg, double level = 0.95);

/// Fixed column order documented on ReplicateRow. Absent values are empty
/// fields; an empty table yields the header only.
void write_table_csv(const ReplicateTable& table, const std::string& path);
std::string table_csv(const ReplicateTable& table);
ReplicateTable read_table_csv(const std::string& path, const std::string& source = "");

nlohmann::ordered_json summary_json(const ExperimentSummary& s);
/// Columns: source, metric, standardization, theoretical, sample.
std::string qq_csv(const std::vector<ExperimentSummary>& summaries);

}  // namespace ldsc
