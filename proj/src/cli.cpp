#include "ldsc/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ldsc/error.hpp"
#include "ldsc/harness.hpp"
#include "ldsc/ldsc.hpp"
#include "ldsc/ldscores.hpp"
#include "ldsc/model.hpp"
#include "ldsc/simgen.hpp"
#include "ldsc/sumstats.hpp"
#include "ldsc/textio.hpp"
#include "ldsc/theory.hpp"

namespace ldsc::cli {

namespace {

using ojson = nlohmann::ordered_json;

constexpr const char* kThreadsEnv = "LDSC_FORGE_THREADS";

ojson num(double v) { return std::isfinite(v) ? ojson(v) : ojson(); }

std::filesystem::path ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  require(!ec, ErrorCode::IoError, "cannot create directory " + dir + ": " + ec.message());
  return dir;
}

// Options shared by the subcommands that build an experiment config.
struct ExperimentArgs {
  std::string config_path;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<std::size_t> replicates;
  std::string out;
  std::size_t replicate = 0;

  void add_common(CLI::App* app) {
    app->add_option("--config", config_path, "Experiment config JSON; flags override its values");
    app->add_option("--preset", preset, "Start from a named preset")
        ->check(CLI::IsMember(preset_names()));
    app->add_option("--seed", seed, "Master seed (64-bit unsigned)");
  }

  ExperimentConfig build() const {
    nlohmann::json doc = nlohmann::json::object();
    if (!config_path.empty()) {
      try {
        doc = nlohmann::json::parse(textio::read_file(config_path));
      } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ParseError, config_path + ": " + e.what());
      }
      require(doc.is_object(), ErrorCode::ParseError, config_path + ": expected a JSON object");
      // Relative covariance spec paths resolve against the config file.
      const auto base = std::filesystem::path(config_path).parent_path();
      for (const char* key : {"cov_a", "cov_b"})
        if (doc.contains(key) && doc[key].is_string() && std::filesystem::path(doc[key].get<std::string>()).is_relative())
          doc[key] = (base / doc[key].get<std::string>()).string();
    }
    if (!preset.empty()) doc["preset"] = preset;
    const bool config_threads = doc.contains("threads");
    ExperimentConfig cfg = ExperimentConfig::from_json(doc);
    require(!cfg.cov_a.is_null(), ErrorCode::InvalidArgument, "need --preset or a config with cov_a");
    if (seed) cfg.seed = *seed;
    if (replicates) cfg.replicates = *replicates;
    if (threads) {
      cfg.threads = *threads;
    } else if (const char* env = std::getenv(kThreadsEnv); env && *env) {
      cfg.threads = static_cast<std::size_t>(textio::parse_int(env, kThreadsEnv));
    } else if (!config_threads) {
      cfg.threads = 0;
    }
    cfg.validate();
    return cfg;
  }
};

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs : ExperimentArgs {
  bool no_panels = false;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  const ExperimentConfig cfg = a.build();
  const ReplicateDraw d = draw_replicate(cfg, a.replicate);
  const auto dir = ensure_dir(a.out);
  const bool bivariate = cfg.estimator == EstimatorMode::Bivariate;

  ojson echo = cfg.to_json();
  echo["replicate"] = a.replicate;
  std::vector<std::string> written;
  auto emit = [&](const std::string& name, auto&& writer) {
    writer((dir / name).string());
    written.push_back(name);
  };

  emit("config.json", [&](const std::string& p) { textio::write_file(p, echo.dump(2) + "\n"); });
  emit("covariance_a.tsv", [&](const std::string& p) { write_block_matrices(*d.cov_a, p); });
  if (d.cov_b) emit("covariance_b.tsv", [&](const std::string& p) { write_block_matrices(*d.cov_b, p); });
  emit("effects_a.tsv", [&](const std::string& p) { write_effects_tsv(d.alpha, p); });
  emit("sumstats_a.tsv", [&](const std::string& p) { write_sumstats(d.stats_a, p); });
  if (bivariate) {
    emit("effects_b.tsv", [&](const std::string& p) { write_effects_tsv(d.beta, p); });
    emit("sumstats_b.tsv", [&](const std::string& p) { write_sumstats(d.stats_b, p); });
  }
  const CovarianceModel& cov_b = d.cov_b ? *d.cov_b : *d.cov_a;
  emit("ldscores_true_a.tsv", [&](const std::string& p) { write_ldscores(true_ld_scores(*d.cov_a), p, echo); });
  if (bivariate) {
    emit("ldscores_true_b.tsv", [&](const std::string& p) { write_ldscores(true_ld_scores(cov_b), p, echo); });
    emit("ldscores_true_ab.tsv",
         [&](const std::string& p) { write_ldscores(true_ld_scores(*d.cov_a, &cov_b), p, echo); });
  }
  if (!a.no_panels) {
    emit("reference_a.tsv", [&](const std::string& p) { write_panel_tsv(*d.ref_a, p); });
    emit("reference_b.tsv", [&](const std::string& p) { write_panel_tsv(*d.ref_b, p); });
  }
  for (const auto& w : written) out << (dir / w).string() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// ldscore

struct LdscoreArgs {
  std::string panel, panel_b, structure, block_sizes, out;
  std::size_t block_size = 0;
  std::size_t merge_factor = 1;
  bool pooled = false;
};

BlockStructure structure_from_args(const LdscoreArgs& a, std::size_t p) {
  const int given = !a.structure.empty() + !a.block_sizes.empty() + (a.block_size > 0);
  require(given == 1, ErrorCode::InvalidArgument, "give exactly one of --structure, --block-sizes, --block-size");
  if (!a.structure.empty()) return load_covariance_spec(a.structure).structure();
  if (a.block_size > 0) {
    require(p % a.block_size == 0, ErrorCode::DimensionMismatch,
            "p=" + std::to_string(p) + " is not a multiple of --block-size");
    return BlockStructure::uniform(p / a.block_size, a.block_size);
  }
  std::vector<std::size_t> sizes;
  for (auto f : textio::split(a.block_sizes, ','))
    sizes.push_back(static_cast<std::size_t>(textio::parse_int(f, "--block-sizes")));
  return BlockStructure::build(std::move(sizes));
}

int cmd_ldscore(const LdscoreArgs& a, std::ostream& out) {
  require(!a.pooled || !a.panel_b.empty(), ErrorCode::InvalidArgument, "--pooled needs --panel-b");
  Eigen::MatrixXd xa = read_panel_tsv(a.panel);
  const BlockStructure base = structure_from_args(a, static_cast<std::size_t>(xa.cols()));
  const BlockStructure st = a.merge_factor > 1 ? base.merged(a.merge_factor) : base;
  const auto pa = GenotypePanel::dense(std::move(xa), st, GenotypeMode::Gaussian, PanelScaling::Population);
  std::optional<GenotypePanel> pb;
  if (!a.panel_b.empty())
    pb = GenotypePanel::dense(read_panel_tsv(a.panel_b), st, GenotypeMode::Gaussian, PanelScaling::Population);

  LdScoreVector scores = a.pooled ? pooled_ld_scores(pa, *pb, st) : estimate_ld_scores(pa, pb ? &*pb : nullptr, st);

  ojson echo;
  echo["panel"] = a.panel;
  echo["panel_b"] = a.panel_b.empty() ? ojson() : ojson(a.panel_b);
  echo["block_sizes"] = base.sizes();
  echo["merge_factor"] = a.merge_factor;
  echo["pooled"] = a.pooled;
  write_ldscores(scores, a.out, echo);
  out << a.out << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// fit

struct FitArgs {
  std::string sumstats, sumstats_b, ldscores, ldscores_a, ldscores_b, mode = "univariate", out;
  std::size_t jackknife_groups = kDefaultJackknifeGroups;
  bool intercept = false;
};

int cmd_fit(const FitArgs& a, std::ostream& out) {
  const bool bivariate = a.mode == "bivariate";
  require(!bivariate || !a.sumstats_b.empty(), ErrorCode::InvalidArgument, "bivariate mode needs --sumstats-b");
  const SummaryStats sa = read_sumstats(a.sumstats);
  const LdScoreVector l = read_ldscores(a.ldscores);
  const BlockStructure& st = l.structure;

  ojson echo;
  echo["sumstats"] = a.sumstats;
  echo["sumstats_b"] = a.sumstats_b.empty() ? ojson() : ojson(a.sumstats_b);
  echo["ldscores"] = a.ldscores;
  echo["ldscores_a"] = a.ldscores_a.empty() ? ojson() : ojson(a.ldscores_a);
  echo["ldscores_b"] = a.ldscores_b.empty() ? ojson() : ojson(a.ldscores_b);
  echo["mode"] = a.mode;
  echo["jackknife_groups"] = a.jackknife_groups;
  echo["intercept"] = a.intercept;

  ojson res;
  res["config"] = echo;
  res["mode"] = a.mode;
  res["p"] = sa.p();
  res["n"] = sa.n;

  if (!bivariate) {
    const WVector w = make_w(sa);
    const LdscFit fit = fit_univariate(w, l);
    const double se = block_jackknife(w, l, st, a.jackknife_groups, FitMode::Univariate);
    const auto h2 = derive_heritability(fit);
    res["slope"] = num(fit.slope);
    res["intercept"] = num(*fit.intercept);
    res["se_jackknife"] = num(se);
    res["g_hat"] = num(fit.g_hat);
    res["h2"] = num(h2.value);
    res["se_h2"] = num(static_cast<double>(sa.p()) * se);
    res["negative_variance"] = h2.negative_variance;
  } else {
    const SummaryStats sb = read_sumstats(a.sumstats_b);
    const WVector w = make_w(sa, &sb);
    const LdscFit fit = fit_bivariate(w, l, a.intercept);
    res["n_b"] = sb.n;
    res["slope"] = num(fit.slope);
    res["intercept"] = fit.intercept ? num(*fit.intercept) : ojson();
    res["se_jackknife"] = num(block_jackknife(w, l, st, a.jackknife_groups, FitMode::Bivariate, a.intercept));
    res["g_hat"] = num(fit.g_hat);
    if (!a.ldscores_a.empty() && !a.ldscores_b.empty()) {
      const LdScoreVector la = read_ldscores(a.ldscores_a);
      const LdScoreVector lb = read_ldscores(a.ldscores_b);
      require(la.structure == st && lb.structure == st, ErrorCode::StructureMismatch,
              "--ldscores-a and --ldscores-b must share the block structure of --ldscores");
      const WVector wa = make_w(sa);
      const WVector wb = make_w(sb);
      const LdscFit fa = fit_univariate(wa, la);
      const LdscFit fb = fit_univariate(wb, lb);
      res["h2_a"] = num(derive_heritability(fa).value);
      res["h2_b"] = num(derive_heritability(fb).value);
      res["rg"] = num(derive_genetic_correlation(fit, fa, fb));
      const auto leave_out = jackknife_genetic_correlation(w.values, l.values, wa.values, la.values, wb.values,
                                                           lb.values, st, a.jackknife_groups, a.intercept);
      bool finite = true;
      for (double v : leave_out) finite = finite && std::isfinite(v);
      res["se_rg"] = finite ? num(jackknife_se(leave_out)) : ojson();
    }
  }
  const std::string text = res.dump(2) + "\n";
  if (!a.out.empty()) textio::write_file((ensure_dir(a.out) / "fit.json").string(), text);
  out << text;
  return 0;
}

// ---------------------------------------------------------------------------
// theory

int cmd_theory(const ExperimentArgs& a, std::ostream& out) {
  const ExperimentConfig cfg = a.build();
  const auto effects = replicate_effects(cfg, a.replicate);
  TheoryInputs in;
  in.cov_a = cfg.cov_a.is_string() ? load_covariance_spec(cfg.cov_a.get<std::string>())
                                   : covariance_from_json(cfg.cov_a.dump());
  if (cfg.cross_population())
    in.cov_b = cfg.cov_b.is_string() ? load_covariance_spec(cfg.cov_b.get<std::string>())
                                     : covariance_from_json(cfg.cov_b.dump());
  in.alpha = effects.first;
  in.beta = effects.second;
  in.sigma_eps2_a = 1.0 - cfg.h2_a;
  in.sigma_eps2_b = 1.0 - cfg.h2_b;
  in.n_a = cfg.n_a;
  in.n_b = cfg.n_b;
  in.n_ra = cfg.n_ra;
  in.n_rb = cfg.n_rb;
  const CovarianceModel& cov_b = in.cov_b ? *in.cov_b : *in.cov_a;

  const double p = static_cast<double>(in.cov_a->p());
  const ResidualDecomposition ua = epsilon_univariate(*in.cov_a, in.alpha, in.sigma_eps2_a, in.n_a);
  WVector w_ab{(in.cov_a->multiply(in.alpha.values()).array() * cov_b.multiply(in.beta.values()).array()).matrix(),
               WVector::Kind::Product};

  ojson echo = cfg.to_json();
  echo["replicate"] = a.replicate;
  ojson res;
  res["config"] = echo;
  res["p"] = in.cov_a->p();
  res["g2_a"] = num(in.alpha.g2());
  res["g2_b"] = num(in.beta.g2());
  res["sigma2_alpha"] = num(in.alpha.sigma2());
  res["sigma_alphabeta"] = num(in.alpha.values().dot(in.beta.values()) / p);
  const double z2a = zeta2_univariate(in);
  res["zeta2_a"] = num(z2a);
  res["zeta_a"] = num(std::sqrt(z2a));
  res["zeta_h2"] = num(p * std::sqrt(z2a));
  const double z2ab = zeta2_bivariate(in);
  res["zeta2_ab"] = num(z2ab);
  res["zeta_ab"] = num(std::sqrt(z2ab));
  res["rho2_ab"] = num(rho2_cross(in, w_ab.values));
  ojson diag = ojson::object();
  for (const auto& [name, value] : condition_diagnostics(in, &ua.w, &w_ab)) diag[name] = num(value);
  res["diagnostics"] = diag;

  const std::string text = res.dump(2) + "\n";
  if (!a.out.empty()) textio::write_file((ensure_dir(a.out) / "theory.json").string(), text);
  out << text;
  return 0;
}

// ---------------------------------------------------------------------------
// experiment

std::string file_slug(const std::string& source) {
  std::string s;
  for (char c : source) {
    if (c == '(') s += '-';
    else if (c != ')') s += c;
  }
  return s;
}

int cmd_experiment(const ExperimentArgs& a, std::ostream& out) {
  const ExperimentConfig cfg = a.build();
  const auto dir = ensure_dir(a.out);
  const auto tables = run_experiment_multi(cfg);

  ojson res;
  res["config"] = cfg.to_json();
  auto& list = res["summaries"] = ojson::array();
  std::vector<ExperimentSummary> summaries;
  for (const auto& t : tables) {
    write_table_csv(t, (dir / ("replicates_" + file_slug(t.source) + ".csv")).string());
    summaries.push_back(summarize(t, cfg));
    list.push_back(summary_json(summaries.back()));
  }
  textio::write_file((dir / "qq.csv").string(), qq_csv(summaries));
  const std::string text = res.dump(2) + "\n";
  textio::write_file((dir / "summary.json").string(), text);
  out << text;
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"LD score regression simulation and estimation toolkit", "ldsc-forge"};
  app.require_subcommand(1);
  app.fallthrough(false);

  SimulateArgs sim;
  auto* s_sim = app.add_subcommand("simulate", "Simulate one replicate: effects, summary statistics, panels");
  sim.add_common(s_sim);
  s_sim->add_option("--threads", sim.threads, "Accepted for symmetry; simulation is single threaded");
  s_sim->add_option("--replicate", sim.replicate, "Replicate index whose seed streams are used")->capture_default_str();
  s_sim->add_option("--out", sim.out, "Output directory")->required();
  s_sim->add_flag("--no-panels", sim.no_panels, "Skip writing the reference panels");

  LdscoreArgs ld;
  auto* s_ld = app.add_subcommand("ldscore", "Estimate LD scores from reference panel TSVs");
  s_ld->add_option("--panel", ld.panel, "Reference panel TSV (header of variant ids, one row per sample)")
      ->required();
  s_ld->add_option("--panel-b", ld.panel_b, "Second panel; gives cross scores, or pooled scores with --pooled");
  s_ld->add_option("--structure", ld.structure, "Covariance spec JSON whose block sizes partition the variants");
  s_ld->add_option("--block-sizes", ld.block_sizes, "Comma-separated block sizes");
  s_ld->add_option("--block-size", ld.block_size, "Uniform block size");
  s_ld->add_option("--merge-factor", ld.merge_factor, "Merge every f adjacent blocks before estimating")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  s_ld->add_flag("--pooled", ld.pooled, "Within scores of both panels stacked by rows");
  s_ld->add_option("--out", ld.out, "Output LD score TSV (a .json sidecar is written next to it)")->required();
  std::optional<std::uint64_t> ld_seed;
  std::optional<std::size_t> ld_threads;
  std::string ld_config;
  s_ld->add_option("--seed", ld_seed, "Accepted for symmetry; estimation is deterministic");
  s_ld->add_option("--threads", ld_threads, "Accepted for symmetry; estimation is single threaded");
  s_ld->add_option("--config", ld_config, "Accepted for symmetry; unused");

  FitArgs fit;
  auto* s_fit = app.add_subcommand("fit", "Fit the LD score regression and print JSON");
  s_fit->add_option("--sumstats", fit.sumstats, "Summary statistics TSV for trait A (SNP, N, BETA)")->required();
  s_fit->add_option("--sumstats-b", fit.sumstats_b, "Summary statistics TSV for trait B (bivariate mode)");
  s_fit->add_option("--ldscores", fit.ldscores,
                    "LD scores regressed on: within scores (univariate) or cross scores (bivariate)")
      ->required();
  s_fit->add_option("--ldscores-a", fit.ldscores_a, "Trait A within scores; with --ldscores-b adds h2 and rg");
  s_fit->add_option("--ldscores-b", fit.ldscores_b, "Trait B within scores");
  s_fit->add_option("--mode", fit.mode, "univariate or bivariate")
      ->capture_default_str()
      ->check(CLI::IsMember({"univariate", "bivariate"}));
  s_fit->add_option("--jackknife-groups", fit.jackknife_groups, "Number of delete-a-group jackknife groups")
      ->capture_default_str();
  s_fit->add_flag("--intercept", fit.intercept, "Fit an intercept in bivariate mode");
  s_fit->add_option("--out", fit.out, "Also write fit.json into this directory");
  std::optional<std::uint64_t> fit_seed;
  std::optional<std::size_t> fit_threads;
  std::string fit_config;
  s_fit->add_option("--seed", fit_seed, "Accepted for symmetry; fitting is deterministic");
  s_fit->add_option("--threads", fit_threads, "Accepted for symmetry; fitting is single threaded");
  s_fit->add_option("--config", fit_config, "Accepted for symmetry; unused");

  ExperimentArgs th;
  auto* s_th = app.add_subcommand("theory", "Closed-form variances and condition diagnostics as JSON");
  th.add_common(s_th);
  s_th->add_option("--threads", th.threads, "Accepted for symmetry; single threaded");
  s_th->add_option("--replicate", th.replicate, "Replicate index whose effects are used")->capture_default_str();
  s_th->add_option("--out", th.out, "Also write theory.json into this directory");

  ExperimentArgs ex;
  auto* s_ex = app.add_subcommand("experiment", "Run a Monte Carlo experiment and write CSV/JSON reports");
  ex.add_common(s_ex);
  s_ex->add_option("--threads", ex.threads,
                   std::string("Worker threads (default: $") + kThreadsEnv + ", else all cores)");
  s_ex->add_option("--replicates", ex.replicates, "Override the replicate count");
  s_ex->add_option("--out", ex.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*s_sim) return cmd_simulate(sim, out);
    if (*s_ld) return cmd_ldscore(ld, out);
    if (*s_fit) return cmd_fit(fit, out);
    if (*s_th) return cmd_theory(th, out);
    if (*s_ex) return cmd_experiment(ex, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.category() == ErrorCategory::Numeric ? 3 : 2;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace ldsc::cli
