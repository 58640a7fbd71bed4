#include "ldsc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include <boost/math/distributions/normal.hpp>

#include "ldsc/error.hpp"
#include "ldsc/ldsc.hpp"
#include "ldsc/ldscores.hpp"
#include "ldsc/model.hpp"
#include "ldsc/sumstats.hpp"
#include "ldsc/textio.hpp"
#include "ldsc/theory.hpp"

namespace ldsc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Seed tree layout under each replicate's node.
enum Stream : std::uint64_t {
  kEffects = 0,
  kPanelA = 1,
  kPanelB = 2,
  kNoiseA = 3,
  kRefA = 4,
  kRefB = 5,
  kNoiseB = 6,
  kMafA = 7,
  kMafB = 8,
};
// Child of the master node used when effects are fixed across replicates.
constexpr std::uint64_t kFixedEffectsStream = 0xffffffffffffffffull;

}  // namespace

// ---------------------------------------------------------------------------
// Score sources

std::string ScoreSourceSpec::name() const {
  switch (kind) {
    case Kind::True: return "true";
    case Kind::EstimatedWithin: return "estimated-within";
    case Kind::EstimatedCross: return "estimated-cross";
    case Kind::Pooled: return "pooled";
    case Kind::MergedBlocks: return "merged-blocks(" + std::to_string(merge_factor) + ")";
  }
  return {};
}

ScoreSourceSpec ScoreSourceSpec::parse(const std::string& name) {
  ScoreSourceSpec s;
  if (name == "true") {
    s.kind = Kind::True;
  } else if (name == "estimated-within") {
    s.kind = Kind::EstimatedWithin;
  } else if (name == "estimated-cross") {
    s.kind = Kind::EstimatedCross;
  } else if (name == "pooled") {
    s.kind = Kind::Pooled;
  } else if (name.rfind("merged-blocks(", 0) == 0 && name.size() > 15 && name.back() == ')') {
    s.kind = Kind::MergedBlocks;
    const auto f = textio::parse_int(std::string_view(name).substr(14, name.size() - 15), "score source " + name);
    require(f >= 1, ErrorCode::InvalidArgument, "merge factor must be >= 1");
    s.merge_factor = static_cast<std::size_t>(f);
  } else {
    fail(ErrorCode::InvalidArgument, "unknown score source '" + name + "'");
  }
  return s;
}

// ---------------------------------------------------------------------------
// Config

void ExperimentConfig::validate() const {
  auto check = [](bool ok, const std::string& what) { require(ok, ErrorCode::InvalidArgument, what); };
  check(replicates >= 2, "replicates must be >= 2");
  check(!cov_a.is_null(), "cov_a is required");
  check(n_a >= 2 && n_b >= 2, "cohort sizes must be >= 2");
  check(n_ra >= 2 && n_rb >= 2, "reference panel sizes must be >= 2");
  check(h2_a > 0.0 && h2_a < 1.0, "h2_a must lie in (0, 1)");
  check(h2_b > 0.0 && h2_b < 1.0, "h2_b must lie in (0, 1)");
  check(std::abs(rg) <= 1.0, "rg must lie in [-1, 1]");
  check(sparsity > 0.0 && sparsity <= 1.0, "sparsity must lie in (0, 1]");
  check(shared_fraction >= 0.0 && shared_fraction <= 1.0, "shared_fraction must lie in [0, 1]");
  check(overlap >= 0.0 && overlap <= 1.0, "overlap must lie in [0, 1]");
  check(overlap == 0.0 || !cross_population(), "sample overlap needs both traits in one population");
  check(!sources.empty(), "at least one score source is required");
  check(jackknife_groups >= 2, "jackknife_groups must be >= 2");
  check(maf_lo > 0.0 && maf_lo <= maf_hi && maf_hi <= 0.5, "MAF range must satisfy 0 < lo <= hi <= 0.5");
  check(genotype_mode == GenotypeMode::Gaussian || scaling == PanelScaling::Standardized,
        "discrete genotypes must use standardized scaling");
}

namespace {

const char* mode_name(GenotypeMode m) { return m == GenotypeMode::Discrete ? "discrete" : "gaussian"; }
const char* scaling_name(PanelScaling s) { return s == PanelScaling::Population ? "population" : "standardized"; }
const char* estimator_name(EstimatorMode e) { return e == EstimatorMode::Univariate ? "univariate" : "bivariate"; }
const char* noise_name(NoiseKind n) { return n == NoiseKind::StudentT8 ? "t8" : "gaussian"; }

template <typename T>
T pick(const std::string& value, const char* field, std::initializer_list<std::pair<const char*, T>> options) {
  for (const auto& [name, v] : options)
    if (value == name) return v;
  fail(ErrorCode::InvalidArgument, std::string("unknown ") + field + " '" + value + "'");
}

}  // namespace

nlohmann::ordered_json ExperimentConfig::to_json() const {
  nlohmann::ordered_json j;
  j["preset"] = preset;
  j["seed"] = seed;
  j["replicates"] = replicates;
  j["cov_a"] = cov_a;
  j["cov_b"] = cov_b;
  j["n_a"] = n_a;
  j["n_b"] = n_b;
  j["n_ra"] = n_ra;
  j["n_rb"] = n_rb;
  j["h2_a"] = h2_a;
  j["h2_b"] = h2_b;
  j["rg"] = rg;
  j["sparsity"] = sparsity;
  j["shared_fraction"] = shared_fraction;
  j["overlap"] = overlap;
  j["genotype_mode"] = mode_name(genotype_mode);
  j["scaling"] = scaling_name(scaling);
  j["maf_lo"] = maf_lo;
  j["maf_hi"] = maf_hi;
  auto& src = j["sources"] = nlohmann::ordered_json::array();
  for (const auto& s : sources) src.push_back(s.name());
  j["estimator"] = estimator_name(estimator);
  j["jackknife_groups"] = jackknife_groups;
  j["bivariate_intercept"] = bivariate_intercept;
  j["noise"] = noise_name(noise);
  j["fixed_effects"] = fixed_effects;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& doc) {
  require(doc.is_object(), ErrorCode::ParseError, "experiment config must be a JSON object");
  ExperimentConfig c;
  try {
    if (doc.contains("preset") && !doc.at("preset").get<std::string>().empty())
      c = preset_config(doc.at("preset").get<std::string>());
    for (const auto& [key, v] : doc.items()) {
      if (key == "preset") continue;
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "replicates") c.replicates = v.get<std::size_t>();
      else if (key == "cov_a") c.cov_a = v;
      else if (key == "cov_b") c.cov_b = v;
      else if (key == "n_a") c.n_a = v.get<std::size_t>();
      else if (key == "n_b") c.n_b = v.get<std::size_t>();
      else if (key == "n_ra") c.n_ra = v.get<std::size_t>();
      else if (key == "n_rb") c.n_rb = v.get<std::size_t>();
      else if (key == "h2_a") c.h2_a = v.get<double>();
      else if (key == "h2_b") c.h2_b = v.get<double>();
      else if (key == "rg") c.rg = v.get<double>();
      else if (key == "sparsity") c.sparsity = v.get<double>();
      else if (key == "shared_fraction") c.shared_fraction = v.get<double>();
      else if (key == "overlap") c.overlap = v.get<double>();
      else if (key == "genotype_mode")
        c.genotype_mode = pick<GenotypeMode>(v.get<std::string>(), "genotype_mode",
                                             {{"gaussian", GenotypeMode::Gaussian}, {"discrete", GenotypeMode::Discrete}});
      else if (key == "scaling")
        c.scaling = pick<PanelScaling>(v.get<std::string>(), "scaling",
                                       {{"population", PanelScaling::Population},
                                        {"standardized", PanelScaling::Standardized}});
      else if (key == "maf_lo") c.maf_lo = v.get<double>();
      else if (key == "maf_hi") c.maf_hi = v.get<double>();
      else if (key == "sources") {
        c.sources.clear();
        for (const auto& s : v) c.sources.push_back(ScoreSourceSpec::parse(s.get<std::string>()));
      } else if (key == "estimator")
        c.estimator = pick<EstimatorMode>(v.get<std::string>(), "estimator",
                                          {{"univariate", EstimatorMode::Univariate},
                                           {"bivariate", EstimatorMode::Bivariate}});
      else if (key == "jackknife_groups") c.jackknife_groups = v.get<std::size_t>();
      else if (key == "bivariate_intercept") c.bivariate_intercept = v.get<bool>();
      else if (key == "noise")
        c.noise = pick<NoiseKind>(v.get<std::string>(), "noise",
                                  {{"gaussian", NoiseKind::Gaussian}, {"t8", NoiseKind::StudentT8}});
      else if (key == "fixed_effects") c.fixed_effects = v.get<bool>();
      else if (key == "threads") c.threads = v.get<std::size_t>();
      else fail(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("experiment config: ") + e.what());
  }
  return c;
}

// ---------------------------------------------------------------------------
// Presets

nlohmann::json ar1_blocks_spec(std::size_t blocks, std::size_t size, const std::vector<double>& rhos) {
  require(!rhos.empty(), ErrorCode::InvalidArgument, "need at least one correlation");
  nlohmann::json list = nlohmann::json::array();
  for (std::size_t k = 0; k < blocks; ++k)
    list.push_back({{"size", size}, {"kind", "ar1"}, {"rho", rhos[k % rhos.size()]}});
  return {{"blocks", list}};
}

nlohmann::json ar1_segments_spec(std::size_t blocks, std::size_t size, std::size_t segment,
                                 const std::vector<double>& rhos) {
  require(!rhos.empty(), ErrorCode::InvalidArgument, "need at least one correlation");
  nlohmann::json list = nlohmann::json::array();
  for (std::size_t k = 0; k < blocks; ++k) {
    std::vector<double> r(rhos.size());
    for (std::size_t i = 0; i < rhos.size(); ++i) r[i] = rhos[(i + k) % rhos.size()];
    list.push_back({{"size", size}, {"kind", "ar1"}, {"rho", r}, {"segment", segment}});
  }
  return {{"blocks", list}};
}

namespace {

// Local correlations from none to strong, so LD scores vary within every block
// (roughly 1 to 15) instead of taking one value per block.
const std::vector<double> kRhosA{0.0, 0.95, 0.5, 0.85, 0.2, 0.7, 0.9, 0.35};
const std::vector<double> kRhosB{0.6, 0.15, 0.9, 0.4, 0.95, 0.0, 0.75, 0.3};
constexpr std::size_t kSegment = 25;

}  // namespace

std::vector<std::string> preset_names() {
  return {"s51-within", "s51-cross", "s52-overlap", "s53-pooled-vs-window"};
}

// Desk-scale defaults. The original designs use p = 16,000 to ~1e6 variants
// and n = 2,000 to 350,000; raise p, n and replicates through the config to
// approach them.
ExperimentConfig preset_config(const std::string& name) {
  ExperimentConfig c;
  c.preset = name;
  c.seed = 20240601;
  c.replicates = 200;
  if (name == "s51-within") {
    c.cov_a = ar1_segments_spec(40, 100, kSegment, kRhosA);
    c.estimator = EstimatorMode::Univariate;
    c.sources = {ScoreSourceSpec::parse("estimated-within")};
  } else if (name == "s51-cross") {
    c.cov_a = ar1_segments_spec(8, 500, kSegment, kRhosA);
    c.cov_b = ar1_segments_spec(8, 500, kSegment, kRhosB);
    c.sources = {ScoreSourceSpec::parse("estimated-cross"), ScoreSourceSpec::parse("pooled"),
                 ScoreSourceSpec::parse("true")};
  } else if (name == "s52-overlap") {
    c.cov_a = ar1_segments_spec(40, 100, kSegment, kRhosA);
    c.h2_a = 0.6;
    c.h2_b = 0.6;
    c.bivariate_intercept = true;
    c.sources = {ScoreSourceSpec::parse("estimated-within")};
  } else if (name == "s53-pooled-vs-window") {
    c.cov_a = ar1_segments_spec(16, 250, kSegment, kRhosA);
    c.cov_b = ar1_segments_spec(16, 250, kSegment, kRhosB);
    c.sources = {ScoreSourceSpec::parse("estimated-cross"), ScoreSourceSpec::parse("merged-blocks(2)"),
                 ScoreSourceSpec::parse("pooled")};
  } else {
    fail(ErrorCode::InvalidArgument, "unknown preset '" + name + "'");
  }
  return c;
}

// ---------------------------------------------------------------------------
// Replicates

namespace {

// Per-config state shared read-only by all replicates.
struct Prepared {
  ExperimentConfig cfg;
  std::optional<CovarianceModel> cov_a;
  std::optional<CovarianceModel> cov_b;  // set in the cross design
  std::shared_ptr<const BlockFactor> factor_a;
  std::shared_ptr<const BlockFactor> factor_b;
  LdScoreVector true_a, true_b, true_ab;
  bool needs_reference = false;

  const CovarianceModel& pop_b() const { return cov_b ? *cov_b : *cov_a; }
  std::size_t p() const { return cov_a->p(); }
};

CovarianceModel covariance_from_spec(const nlohmann::json& spec) {
  if (spec.is_string()) return load_covariance_spec(spec.get<std::string>());
  return covariance_from_json(spec.dump());
}

std::size_t spec_variants(const nlohmann::json& spec) {
  if (spec.is_object() && spec.contains("blocks")) {
    std::size_t p = 0;
    for (const auto& b : spec.at("blocks")) p += b.at("size").get<std::size_t>();
    return p;
  }
  return covariance_from_spec(spec).p();
}

std::shared_ptr<const Prepared> prepare(const ExperimentConfig& cfg) {
  cfg.validate();
  auto pr = std::make_shared<Prepared>();
  pr->cfg = cfg;
  pr->cov_a = covariance_from_spec(cfg.cov_a);
  if (cfg.cross_population()) {
    pr->cov_b = covariance_from_spec(cfg.cov_b);
    require(pr->cov_b->structure() == pr->cov_a->structure(), ErrorCode::StructureMismatch,
            "cov_a and cov_b must share a block structure");
  }
  pr->factor_a = std::make_shared<const BlockFactor>(block_sqrt(*pr->cov_a));
  pr->factor_b = pr->cov_b ? std::make_shared<const BlockFactor>(block_sqrt(*pr->cov_b)) : pr->factor_a;
  pr->true_a = true_ld_scores(*pr->cov_a);
  if (pr->cov_b) {
    pr->true_b = true_ld_scores(*pr->cov_b);
    pr->true_ab = true_ld_scores(*pr->cov_a, &*pr->cov_b);
  } else {
    pr->true_b = pr->true_a;
    pr->true_ab = pr->true_a;
  }
  for (const auto& s : cfg.sources)
    if (s.kind != ScoreSourceSpec::Kind::True) pr->needs_reference = true;
  for (const auto& s : cfg.sources)
    if (s.kind == ScoreSourceSpec::Kind::MergedBlocks) (void)pr->cov_a->structure().merged(s.merge_factor);
  return pr;
}

std::string sanitize(std::string s) {
  for (auto& c : s)
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ';';
  return s;
}

ReplicateRow failed_row(std::size_t r, const std::string& what) {
  ReplicateRow row;
  row.replicate = r;
  row.slope = row.intercept = row.h2_hat = row.rg_hat = row.se_jackknife = kNaN;
  row.slope_a = row.slope_b = row.slope_ab = row.intercept_b = row.h2_b_hat = kNaN;
  row.se_h2 = row.se_rg = row.zeta_a = row.zeta_ab = kNaN;
  row.error = sanitize(what.empty() ? "unknown error" : what);
  return row;
}

struct ScoreSet {
  LdScoreVector a, b, ab;
};

using ReplicateData = ReplicateDraw;

PanelOptions panel_options(const ExperimentConfig& cfg) { return {cfg.genotype_mode, cfg.scaling}; }

std::pair<EffectVector, EffectVector> effects_for(const ExperimentConfig& cfg, std::size_t p, std::size_t r) {
  Rng rng = cfg.fixed_effects ? SeedStream(cfg.seed).child(kFixedEffectsStream).engine()
                              : SeedStream(cfg.seed).child(r).child(kEffects).engine();
  TraitArchitecture arch{cfg.h2_a, cfg.sparsity, cfg.shared_fraction, cfg.rg};
  auto [alpha, beta] = sample_effect_pair(arch, p, rng);
  // Normalized phenotypes: g^2 = h^2 and Var(y) = 1.
  return {rescale_to_g2(alpha, cfg.h2_a), rescale_to_g2(beta, cfg.h2_b)};
}

ReplicateData simulate_replicate(const Prepared& pr, std::size_t r, bool force_reference = false) {
  const auto& cfg = pr.cfg;
  const bool bivariate = cfg.estimator == EstimatorMode::Bivariate;
  const SeedStream rs = SeedStream(cfg.seed).child(r);
  const std::size_t p = pr.p();
  const auto [alpha, beta] = effects_for(cfg, p, r);

  MafVector maf_a, maf_b;
  const bool discrete = cfg.genotype_mode == GenotypeMode::Discrete;
  if (discrete) {
    Rng ra = rs.child(kMafA).engine();
    maf_a = sample_maf(p, cfg.maf_lo, cfg.maf_hi, ra);
    if (pr.cov_b) {
      Rng rb = rs.child(kMafB).engine();
      maf_b = sample_maf(p, cfg.maf_lo, cfg.maf_hi, rb);
    } else {
      maf_b = maf_a;
    }
  }
  const MafVector* mafp_a = discrete ? &maf_a : nullptr;
  const MafVector* mafp_b = discrete ? &maf_b : nullptr;
  const PanelOptions opts = panel_options(cfg);

  ReplicateData d;
  d.alpha = alpha;
  if (bivariate) d.beta = beta;
  Rng noise_a = rs.child(kNoiseA).engine();
  Rng noise_b = rs.child(kNoiseB).engine();
  const auto all_rows = [](std::size_t begin, std::size_t count) {
    std::vector<Eigen::Index> rows(count);
    for (std::size_t i = 0; i < count; ++i) rows[i] = static_cast<Eigen::Index>(begin + i);
    return rows;
  };

  if (!bivariate) {
    Rng pa = rs.child(kPanelA).engine();
    auto panel = std::make_shared<const GenotypePanel>(simulate_panel(*pr.cov_a, pr.factor_a, cfg.n_a, opts, mafp_a, pa));
    Cohort a = simulate_phenotype(panel, alpha, cfg.h2_a, noise_a, all_rows(0, cfg.n_a), cfg.noise);
    d.stats_a = marginal_stats(a, "a");
  } else if (!pr.cov_b) {
    // One population: trait B's cohort shares the last rows of A's cohort.
    const std::size_t shared = overlap_rows(cfg.n_a, cfg.n_b, cfg.overlap);
    Rng pa = rs.child(kPanelA).engine();
    auto panel = std::make_shared<const GenotypePanel>(
        simulate_panel(*pr.cov_a, pr.factor_a, cfg.n_a + cfg.n_b - shared, opts, mafp_a, pa));
    Cohort a = simulate_phenotype(panel, alpha, cfg.h2_a, noise_a, all_rows(0, cfg.n_a), cfg.noise);
    Cohort b = simulate_phenotype(panel, beta, cfg.h2_b, noise_b, all_rows(cfg.n_a - shared, cfg.n_b), cfg.noise);
    d.stats_a = marginal_stats(a, "a");
    d.stats_b = marginal_stats(b, "b");
  } else {
    Rng pa = rs.child(kPanelA).engine();
    Rng pb = rs.child(kPanelB).engine();
    auto panel_a = std::make_shared<const GenotypePanel>(simulate_panel(*pr.cov_a, pr.factor_a, cfg.n_a, opts, mafp_a, pa));
    auto panel_b = std::make_shared<const GenotypePanel>(simulate_panel(*pr.cov_b, pr.factor_b, cfg.n_b, opts, mafp_b, pb));
    Cohort a = simulate_phenotype(panel_a, alpha, cfg.h2_a, noise_a, {}, cfg.noise);
    Cohort b = simulate_phenotype(panel_b, beta, cfg.h2_b, noise_b, {}, cfg.noise);
    d.stats_a = marginal_stats(a, "a");
    d.stats_b = marginal_stats(b, "b");
  }

  if (pr.needs_reference || force_reference) {
    Rng ra = rs.child(kRefA).engine();
    d.ref_a = simulate_panel(*pr.cov_a, pr.factor_a, cfg.n_ra, opts, mafp_a, ra);
    Rng rb = rs.child(kRefB).engine();
    d.ref_b = simulate_panel(pr.pop_b(), pr.factor_b, cfg.n_rb, opts, mafp_b, rb);
  }

  // Oracle variances with true scores and the realized effects.
  TheoryInputs in;
  in.cov_a = pr.cov_a;
  in.cov_b = pr.cov_b;
  in.alpha = alpha;
  in.beta = beta;
  in.sigma_eps2_a = 1.0 - cfg.h2_a;
  in.sigma_eps2_b = 1.0 - cfg.h2_b;
  in.n_a = cfg.n_a;
  in.n_b = cfg.n_b;
  in.n_ra = cfg.n_ra;
  in.n_rb = cfg.n_rb;
  in.scores = pr.true_a.values;
  d.zeta_a = std::sqrt(zeta2_univariate(in));
  d.zeta_ab = kNaN;
  if (bivariate) {
    in.scores = pr.true_ab.values;
    d.zeta_ab = std::sqrt(zeta2_bivariate(in));
  }
  return d;
}

ScoreSet scores_for(const Prepared& pr, const ReplicateData& d, const ScoreSourceSpec& src) {
  using Kind = ScoreSourceSpec::Kind;
  const bool cross = pr.cov_b.has_value();
  const BlockStructure& st = pr.cov_a->structure();
  switch (src.kind) {
    case Kind::True:
      return {pr.true_a, pr.true_b, pr.true_ab};
    case Kind::EstimatedWithin: {
      const auto ma = block_moments(*d.ref_a, st);
      LdScoreVector la = scores_from_moments(ma);
      if (!cross) return {la, la, la};
      LdScoreVector lb = scores_from_moments(block_moments(*d.ref_b, st));
      return {la, lb, la};
    }
    case Kind::EstimatedCross:
    case Kind::MergedBlocks: {
      const BlockStructure s = src.kind == Kind::MergedBlocks ? st.merged(src.merge_factor) : st;
      const auto ma = block_moments(*d.ref_a, s);
      const auto mb = block_moments(*d.ref_b, s);
      LdScoreVector la = scores_from_moments(ma);
      if (src.kind == Kind::MergedBlocks && !cross) return {la, la, la};
      return {la, scores_from_moments(mb), scores_from_moments(ma, &mb)};
    }
    case Kind::Pooled: {
      LdScoreVector l = scores_from_moments(pool_moments(block_moments(*d.ref_a, st), block_moments(*d.ref_b, st)));
      return {l, l, l};
    }
  }
  return {};
}

ReplicateRow fit_source(const Prepared& pr, const ReplicateData& d, const ScoreSourceSpec& src, std::size_t r) {
  const auto& cfg = pr.cfg;
  const ScoreSet sc = scores_for(pr, d, src);
  const BlockStructure& st = sc.a.structure;
  const double p = static_cast<double>(pr.p());
  const std::size_t groups = cfg.jackknife_groups;

  ReplicateRow row = failed_row(r, "");
  row.error.clear();
  row.zeta_a = d.zeta_a;
  row.zeta_ab = d.zeta_ab;

  const WVector w_a = make_w(d.stats_a);
  const LdscFit fit_a = fit_univariate(w_a, sc.a);
  row.slope_a = fit_a.slope;
  row.h2_hat = derive_heritability(fit_a).value;
  row.se_h2 = p * block_jackknife(w_a, sc.a, st, groups, FitMode::Univariate);

  if (cfg.estimator == EstimatorMode::Univariate) {
    row.slope = fit_a.slope;
    row.intercept = *fit_a.intercept;
    row.se_jackknife = row.se_h2 / p;
    return row;
  }

  const WVector w_b = make_w(d.stats_b);
  const WVector w_ab = make_w(d.stats_a, &d.stats_b);
  const LdscFit fit_b = fit_univariate(w_b, sc.b);
  const LdscFit fit_ab = fit_bivariate(w_ab, sc.ab, cfg.bivariate_intercept);
  row.slope = fit_ab.slope;
  row.slope_ab = fit_ab.slope;
  row.slope_b = fit_b.slope;
  row.intercept = fit_ab.intercept ? *fit_ab.intercept : kNaN;
  row.intercept_b = *fit_b.intercept;
  row.h2_b_hat = derive_heritability(fit_b).value;
  row.se_jackknife = block_jackknife(w_ab, sc.ab, st, groups, FitMode::Bivariate, cfg.bivariate_intercept);
  // A nonpositive univariate slope leaves rg undefined for this replicate only;
  // the slope and heritability estimates are still reported.
  if (fit_a.slope <= 0.0 || fit_b.slope <= 0.0) return row;
  row.rg_hat = derive_genetic_correlation(fit_ab, fit_a, fit_b);
  const auto leave_out = jackknife_genetic_correlation(w_ab.values, sc.ab.values, w_a.values, sc.a.values,
                                                       w_b.values, sc.b.values, st, groups, cfg.bivariate_intercept);
  const bool finite = std::all_of(leave_out.begin(), leave_out.end(), [](double v) { return std::isfinite(v); });
  row.se_rg = finite ? jackknife_se(leave_out) : kNaN;
  return row;
}

std::vector<ReplicateRow> replicate_rows(const Prepared& pr, std::size_t r) {
  const auto& sources = pr.cfg.sources;
  std::vector<ReplicateRow> rows;
  rows.reserve(sources.size());
  ReplicateData d;
  try {
    d = simulate_replicate(pr, r);
  } catch (const std::exception& e) {
    for (std::size_t s = 0; s < sources.size(); ++s) rows.push_back(failed_row(r, e.what()));
    return rows;
  }
  for (const auto& src : sources) {
    try {
      rows.push_back(fit_source(pr, d, src, r));
    } catch (const std::exception& e) {
      rows.push_back(failed_row(r, e.what()));
    }
  }
  return rows;
}

std::size_t resolve_threads(std::size_t requested, std::size_t jobs) {
  std::size_t t = requested;
  if (t == 0) t = std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(t, jobs));
}

}  // namespace

std::pair<EffectVector, EffectVector> replicate_effects(const ExperimentConfig& cfg, std::size_t replicate) {
  cfg.validate();
  return effects_for(cfg, spec_variants(cfg.cov_a), replicate);
}

ReplicateDraw draw_replicate(const ExperimentConfig& cfg, std::size_t replicate) {
  const auto pr = prepare(cfg);
  ReplicateDraw d = simulate_replicate(*pr, replicate, true);
  d.cov_a = pr->cov_a;
  d.cov_b = pr->cov_b;
  return d;
}

std::vector<ReplicateRow> run_replicate(const ExperimentConfig& cfg, std::size_t replicate) {
  return replicate_rows(*prepare(cfg), replicate);
}

std::vector<ReplicateTable> run_experiment_multi(const ExperimentConfig& cfg) {
  const auto pr = prepare(cfg);
  const std::size_t reps = cfg.replicates;
  std::vector<std::vector<ReplicateRow>> results(reps);

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t r = next.fetch_add(1); r < reps; r = next.fetch_add(1)) results[r] = replicate_rows(*pr, r);
  };
  const std::size_t threads = resolve_threads(cfg.threads, reps);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::vector<ReplicateTable> tables(cfg.sources.size());
  for (std::size_t s = 0; s < tables.size(); ++s) {
    tables[s].source = cfg.sources[s].name();
    tables[s].rows.reserve(reps);
    for (std::size_t r = 0; r < reps; ++r) tables[s].rows.push_back(results[r][s]);
  }
  return tables;
}

ReplicateTable run_experiment(const ExperimentConfig& cfg) {
  ExperimentConfig one = cfg;
  one.sources.resize(1);
  return run_experiment_multi(one).front();
}

// ---------------------------------------------------------------------------
// Summaries

double coverage_summary(const std::vector<double>& estimates, const std::vector<double>& ses, double truth,
                        double level) {
  require(estimates.size() == ses.size(), ErrorCode::LengthMismatch, "estimates and SEs differ in length");
  require(level > 0.0 && level < 1.0, ErrorCode::InvalidArgument, "level must lie in (0, 1)");
  const double z = boost::math::quantile(boost::math::normal(), 0.5 + 0.5 * level);
  std::size_t used = 0, covered = 0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    const double e = estimates[i];
    const double s = ses[i];
    if (std::isnan(e) || std::isnan(s)) continue;
    ++used;
    if (std::isinf(s) || std::abs(e - truth) <= z * s) ++covered;
  }
  return used == 0 ? kNaN : static_cast<double>(covered) / static_cast<double>(used);
}

const MetricSummary* ExperimentSummary::find(const std::string& name) const {
  for (const auto& m : metrics)
    if (m.name == name) return &m;
  return nullptr;
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

std::optional<NormalityReport> try_normality(const std::vector<double>& standardized) {
  try {
    return normality_summary(standardized);
  } catch (const Error&) {
    return std::nullopt;
  }
}

MetricSummary summarize_metric(const std::string& name, double truth, const std::vector<double>& est,
                               const std::vector<double>& se, const std::vector<double>& zeta, double level) {
  MetricSummary m;
  m.name = name;
  m.truth = truth;
  std::vector<double> x, s, z;
  for (std::size_t i = 0; i < est.size(); ++i) {
    if (!std::isfinite(est[i])) continue;
    x.push_back(est[i]);
    s.push_back(se[i]);
    z.push_back(zeta[i]);
  }
  m.n = x.size();
  if (x.empty()) {
    m.mean = m.bias = m.relative_bias = m.mc_sd = m.mc_se = m.median_se_jackknife = m.coverage = kNaN;
    return m;
  }
  double sum = 0.0;
  for (double v : x) sum += v;
  m.mean = sum / static_cast<double>(x.size());
  m.bias = m.mean - truth;
  m.relative_bias = truth != 0.0 ? m.bias / truth : kNaN;
  double ss = 0.0;
  for (double v : x) ss += (v - m.mean) * (v - m.mean);
  m.mc_sd = x.size() > 1 ? std::sqrt(ss / static_cast<double>(x.size() - 1)) : kNaN;
  m.mc_se = m.mc_sd / std::sqrt(static_cast<double>(x.size()));
  std::vector<double> finite_se;
  for (double v : s)
    if (!std::isnan(v)) finite_se.push_back(v);
  m.median_se_jackknife = median(finite_se);
  m.coverage = coverage_summary(x, s, truth, level);

  const bool have_zeta = std::all_of(z.begin(), z.end(), [](double v) { return std::isfinite(v) && v > 0.0; });
  if (have_zeta) {
    double zs = 0.0;
    for (double v : z) zs += v;
    m.theory_zeta = zs / static_cast<double>(z.size());
    if (x.size() >= 8) m.normality_theory = try_normality(standardize_theory(x, truth, z));
  }
  if (x.size() >= 8) m.normality_empirical = try_normality(standardize_empirical(x));
  return m;
}

}  // namespace

ExperimentSummary summarize(const ReplicateTable& table, const ExperimentConfig& cfg, double level) {
  ExperimentSummary out;
  out.source = table.source;
  out.replicates = table.rows.size();
  std::vector<const ReplicateRow*> ok;
  for (const auto& r : table.rows)
    if (r.ok()) ok.push_back(&r);
  out.summarized = ok.size();
  out.excluded = out.replicates - out.summarized;

  // The effects are rescaled so that g^2 = h^2 exactly; the slope truth is
  // g^2 / p (or alpha^T beta / p = rg h_a h_b / p).
  const double p = static_cast<double>(spec_variants(cfg.cov_a));
  const bool bivariate = cfg.estimator == EstimatorMode::Bivariate;

  std::vector<double> slope, se_slope, zeta_slope, h2, se_h2, zeta_h2, rg, se_rg, none;
  for (const auto* r : ok) {
    slope.push_back(r->slope);
    se_slope.push_back(r->se_jackknife);
    zeta_slope.push_back(bivariate ? r->zeta_ab : r->zeta_a);
    h2.push_back(r->h2_hat);
    se_h2.push_back(r->se_h2);
    zeta_h2.push_back(p * r->zeta_a);
    rg.push_back(r->rg_hat);
    se_rg.push_back(r->se_rg);
    none.push_back(kNaN);
  }
  const double slope_truth = bivariate ? cfg.rg * std::sqrt(cfg.h2_a * cfg.h2_b) / p : cfg.h2_a / p;
  out.metrics.push_back(summarize_metric("slope", slope_truth, slope, se_slope, zeta_slope, level));
  out.metrics.push_back(summarize_metric("h2", cfg.h2_a, h2, se_h2, zeta_h2, level));
  if (bivariate) out.metrics.push_back(summarize_metric("rg", cfg.rg, rg, se_rg, none, level));
  return out;
}

// ---------------------------------------------------------------------------
// Emit

namespace {

const char* const kCsvHeader =
    "replicate,slope,intercept,h2_hat,rg_hat,se_jackknife,error,slope_a,slope_b,slope_ab,intercept_b,h2_b_hat,"
    "se_h2,se_rg,zeta_a,zeta_ab";

std::string field(double v) { return std::isnan(v) ? std::string() : textio::format_double(v); }

double parse_field(std::string_view f, const std::string& context) {
  return f.empty() ? kNaN : textio::parse_double(f, context);
}

// NaN and null both mean "absent" in the JSON output.
nlohmann::ordered_json num(double v) { return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(); }

nlohmann::ordered_json normality_json(const std::optional<NormalityReport>& r) {
  if (!r) return nullptr;
  nlohmann::ordered_json j;
  j["W"] = num(r->w);
  j["p_value"] = num(r->p_value);
  j["n"] = r->n;
  j["mean"] = num(r->mean);
  j["sd"] = num(r->sd);
  j["skewness"] = num(r->skewness);
  j["excess_kurtosis"] = num(r->excess_kurtosis);
  j["anderson_darling"] = {{"A2", num(r->anderson.a2)},
                           {"A2_star", num(r->anderson.a2_star)},
                           {"p_value", num(r->anderson.p_value)}};
  return j;
}

}  // namespace

std::string table_csv(const ReplicateTable& table) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const auto& r : table.rows) {
    out += std::to_string(r.replicate);
    for (double v : {r.slope, r.intercept, r.h2_hat, r.rg_hat, r.se_jackknife}) out += ',' + field(v);
    out += ',' + sanitize(r.error);
    for (double v : {r.slope_a, r.slope_b, r.slope_ab, r.intercept_b, r.h2_b_hat, r.se_h2, r.se_rg, r.zeta_a,
                     r.zeta_ab})
      out += ',' + field(v);
    out += '\n';
  }
  return out;
}

void write_table_csv(const ReplicateTable& table, const std::string& path) {
  textio::write_file(path, table_csv(table));
}

ReplicateTable read_table_csv(const std::string& path, const std::string& source) {
  const std::string text = textio::read_file(path);
  std::istringstream in(text);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)) && line == kCsvHeader, ErrorCode::ParseError,
          path + ": unexpected replicate table header");
  ReplicateTable t;
  t.source = source;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string ctx = path + ":" + std::to_string(line_no);
    const auto f = textio::split(line, ',');
    require(f.size() == 16, ErrorCode::ParseError, ctx + ": expected 16 fields");
    ReplicateRow r;
    r.replicate = static_cast<std::size_t>(textio::parse_int(f[0], ctx));
    r.slope = parse_field(f[1], ctx);
    r.intercept = parse_field(f[2], ctx);
    r.h2_hat = parse_field(f[3], ctx);
    r.rg_hat = parse_field(f[4], ctx);
    r.se_jackknife = parse_field(f[5], ctx);
    r.error = std::string(f[6]);
    r.slope_a = parse_field(f[7], ctx);
    r.slope_b = parse_field(f[8], ctx);
    r.slope_ab = parse_field(f[9], ctx);
    r.intercept_b = parse_field(f[10], ctx);
    r.h2_b_hat = parse_field(f[11], ctx);
    r.se_h2 = parse_field(f[12], ctx);
    r.se_rg = parse_field(f[13], ctx);
    r.zeta_a = parse_field(f[14], ctx);
    r.zeta_ab = parse_field(f[15], ctx);
    t.rows.push_back(std::move(r));
  }
  return t;
}

nlohmann::ordered_json summary_json(const ExperimentSummary& s) {
  nlohmann::ordered_json j;
  j["source"] = s.source;
  j["replicates"] = s.replicates;
  j["summarized"] = s.summarized;
  j["excluded"] = s.excluded;
  auto& metrics = j["metrics"] = nlohmann::ordered_json::object();
  for (const auto& m : s.metrics) {
    nlohmann::ordered_json mj;
    mj["truth"] = num(m.truth);
    mj["n"] = m.n;
    mj["mean"] = num(m.mean);
    mj["bias"] = num(m.bias);
    mj["relative_bias"] = num(m.relative_bias);
    mj["mc_sd"] = num(m.mc_sd);
    mj["mc_se"] = num(m.mc_se);
    mj["median_se_jackknife"] = num(m.median_se_jackknife);
    mj["coverage"] = num(m.coverage);
    mj["theory_zeta"] = m.theory_zeta ? num(*m.theory_zeta) : nlohmann::ordered_json();
    // Headline normality fields use the theory standardization when available.
    const auto& primary = m.normality_theory ? m.normality_theory : m.normality_empirical;
    mj["W"] = primary ? num(primary->w) : nlohmann::ordered_json();
    mj["p_value"] = primary ? num(primary->p_value) : nlohmann::ordered_json();
    mj["standardization"] = m.normality_theory ? "theory" : (m.normality_empirical ? "empirical" : "none");
    mj["normality_theory"] = normality_json(m.normality_theory);
    mj["normality_empirical"] = normality_json(m.normality_empirical);
    metrics[m.name] = std::move(mj);
  }
  return j;
}

std::string qq_csv(const std::vector<ExperimentSummary>& summaries) {
  std::string out = "source,metric,standardization,theoretical,sample\n";
  for (const auto& s : summaries)
    for (const auto& m : s.metrics)
      for (const auto& [label, report] : {std::pair{"theory", &m.normality_theory},
                                          std::pair{"empirical", &m.normality_empirical}}) {
        if (!*report) continue;
        for (const auto& [q, v] : (*report)->qq)
          out += s.source + ',' + m.name + ',' + label + ',' + textio::format_double(q) + ',' +
                 textio::format_double(v) + '\n';
      }
  return out;
}

}  // namespace ldsc
