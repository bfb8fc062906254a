#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "arena/cli_support.hpp"
#include "arena/simlab.hpp"

using namespace arena;

namespace {

struct CommonIngest {
  std::string data_path;
  int top_k = 0;
  std::string tie_policy = "drop";
  std::string category_map_path;
};

void add_ingest_flags(CLI::App* cmd, CommonIngest& opts) {
  cmd->add_option("--data", opts.data_path, "battle log CSV")->required();
  cmd->add_option("--top-k", opts.top_k, "keep the k most frequent models (0 = all)");
  cmd->add_option("--tie-policy", opts.tie_policy, "tie handling")
      ->check(CLI::IsMember({"drop", "half"}));
  cmd->add_option("--category-map", opts.category_map_path,
                  "category remap file (raw=mapped lines)");
}

IngestResult run_ingest(const CommonIngest& opts) {
  IngestOptions io;
  io.top_k = opts.top_k;
  io.tie_policy = opts.tie_policy == "half" ? TiePolicy::Half : TiePolicy::Drop;
  if (!opts.category_map_path.empty()) {
    std::ifstream map_in(opts.category_map_path);
    if (!map_in) throw ConfigError("cannot open category map: " + opts.category_map_path);
    io.category_map = parse_category_map(map_in);
  }
  std::ifstream in(opts.data_path, std::ios::binary);
  if (!in) throw ConfigError("cannot open battle log: " + opts.data_path);
  return ingest_battle_log(in, io);
}

MappedLog run_mapped_load(const std::string& data_path, const PersistedModel& model,
                          const std::string& tie_policy) {
  std::ifstream in(data_path, std::ios::binary);
  if (!in) throw ConfigError("cannot open battle log: " + data_path);
  return map_battle_log(in, model.model_names, model.category_names,
                        tie_policy == "half" ? TiePolicy::Half : TiePolicy::Drop);
}

Method method_from_token(const std::string& token) {
  if (token == "efficient") return Method::Efficient;
  if (token == "whitened") return Method::Whitened;
  if (token == "ipw") return Method::IpwEstimated;
  if (token == "ipw_known") return Method::IpwKnown;
  if (token == "ipw_estimated") return Method::IpwEstimated;
  if (token == "efficient_nonuniform") return Method::EfficientNonuniform;
  throw ConfigError("unknown method '" + token + "'");
}

FunctionalSpec parse_index_target(const std::string& text) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(text);
  while (std::getline(in, part, ':')) parts.push_back(part);
  auto as_int = [&](const std::string& s) {
    try {
      size_t pos = 0;
      const int v = std::stoi(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("target: expected an integer index, got '" + s + "'");
    }
  };
  if (parts.size() == 3 && parts[0] == "entry")
    return FunctionalSpec::linear_entry({{as_int(parts[1]), as_int(parts[2]), 1.0}});
  if (parts.size() == 4 && parts[0] == "winprob")
    return FunctionalSpec::win_prob(as_int(parts[1]), as_int(parts[2]), as_int(parts[3]));
  if (parts.size() == 4 && parts[0] == "contrast")
    return FunctionalSpec::category_contrast(as_int(parts[1]), as_int(parts[2]),
                                             as_int(parts[3]));
  throw ConfigError("target: expected entry:ROW:COL, winprob:A:B:CAT, or contrast:A:B:CAT");
}

std::vector<std::string> synthetic_names(const char* prefix, int n) {
  std::vector<std::string> out;
  out.reserve(n);
  char buf[16];
  for (int i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof buf, "%s%03d", prefix, i);
    out.emplace_back(buf);
  }
  return out;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"low-rank pairwise-comparison inference"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "options file (INI; subcommand sections)");
  std::string echo_config_path;
  app.add_option("--echo-config", echo_config_path,
                 "write the fully resolved options to this file");

  // ingest
  auto* ingest_cmd = app.add_subcommand("ingest", "filter a battle log and report stats");
  CommonIngest ingest_opts;
  add_ingest_flags(ingest_cmd, ingest_opts);
  std::string ingest_out;
  ingest_cmd->add_option("--out", ingest_out, "write the filtered battle CSV here");

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "fit a low-rank model and persist it");
  CommonIngest fit_ingest;
  add_ingest_flags(fit_cmd, fit_ingest);
  int fit_rank = 3;
  double fit_clip = 7.0;
  std::uint64_t fit_seed = 1;
  double fit_subsample = 1.0;
  std::string fit_out;
  fit_cmd->add_option("--rank", fit_rank, "fitted rank")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--clip", fit_clip, "entry clip bound");
  fit_cmd->add_option("--seed", fit_seed, "seed (recorded; drives subsampling)");
  fit_cmd->add_option("--subsample", fit_subsample, "keep this fraction of battles");
  fit_cmd->add_option("--out", fit_out, "output model JSON")->required();

  // infer
  auto* infer_cmd = app.add_subcommand("infer", "one-step inference for a target");
  std::string infer_model, infer_data, infer_target, infer_out;
  std::string infer_method = "efficient";
  std::string infer_tie = "drop";
  int infer_folds = 6;
  double infer_level = 0.95;
  std::uint64_t infer_seed = 1;
  double infer_subsample = 1.0;
  std::uint64_t infer_subseed = 1;
  infer_cmd->add_option("--model", infer_model, "persisted model JSON")->required();
  infer_cmd->add_option("--data", infer_data, "battle log CSV")->required();
  infer_cmd->add_option("--target", infer_target,
                        "entry:MODEL:CATEGORY | winprob:A:B:CATEGORY | contrast:A:B:CATEGORY")
      ->required();
  infer_cmd->add_option("--method", infer_method, "estimator")
      ->check(CLI::IsMember({"efficient", "whitened", "ipw", "naive"}));
  infer_cmd->add_option("--tie-policy", infer_tie, "tie handling")
      ->check(CLI::IsMember({"drop", "half"}));
  infer_cmd->add_option("--folds", infer_folds, "cross-fit folds");
  infer_cmd->add_option("--level", infer_level, "confidence level");
  infer_cmd->add_option("--seed", infer_seed, "cross-fit seed");
  infer_cmd->add_option("--subsample", infer_subsample, "keep this fraction of battles");
  infer_cmd->add_option("--subsample-seed", infer_subseed, "subsampling seed");
  infer_cmd->add_option("--out", infer_out, "write the JSON report here");

  // leaderboard
  auto* lb_cmd = app.add_subcommand("leaderboard", "per-category ranked scores with CIs");
  std::string lb_model, lb_data, lb_out;
  std::string lb_tie = "drop";
  int lb_folds = 6;
  double lb_level = 0.95;
  std::uint64_t lb_seed = 1;
  lb_cmd->add_option("--model", lb_model, "persisted model JSON")->required();
  lb_cmd->add_option("--data", lb_data, "battle log CSV")->required();
  lb_cmd->add_option("--tie-policy", lb_tie, "tie handling")
      ->check(CLI::IsMember({"drop", "half"}));
  lb_cmd->add_option("--folds", lb_folds, "cross-fit folds");
  lb_cmd->add_option("--level", lb_level, "confidence level");
  lb_cmd->add_option("--seed", lb_seed, "cross-fit seed");
  lb_cmd->add_option("--out", lb_out, "write the CSV table here");

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "emit a synthetic battle log");
  int sim_d1 = 20, sim_d2 = 5, sim_rank = 2, sim_battles = 10000;
  double sim_alpha = 1.0;
  std::uint64_t sim_seed = 1;
  std::string sim_out, sim_truth_out;
  sim_cmd->add_option("--d1", sim_d1, "models")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--d2", sim_d2, "categories")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--rank", sim_rank, "truth rank")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--alpha", sim_alpha, "signal scale");
  sim_cmd->add_option("--battles", sim_battles, "number of battles")
      ->check(CLI::PositiveNumber);
  sim_cmd->add_option("--seed", sim_seed, "seed");
  sim_cmd->add_option("--out", sim_out, "output battle CSV")->required();
  sim_cmd->add_option("--truth-out", sim_truth_out, "write the truth matrix CSV here");

  // mc
  auto* mc_cmd = app.add_subcommand("mc", "Monte Carlo coverage study");
  std::string mc_preset_name, mc_records, mc_summary, mc_target = "entry:0:0";
  std::string mc_sampling = "uniform";
  std::vector<std::string> mc_methods = {"efficient", "whitened"};
  int mc_d1 = 20, mc_d2 = 2, mc_rank = 1, mc_battles = 10000, mc_reps = 100;
  int mc_rep_offset = 0, mc_folds = 6, mc_workers = 1, mc_log_every = 25;
  double mc_alpha = 1.0, mc_level = 0.95, mc_conc = 5.0;
  std::uint64_t mc_seed = 1;
  mc_cmd->add_option("--preset", mc_preset_name,
                     "smoke | table2-entry | table2-winprob-60k | table2-winprob-80k | "
                     "table3-dirichlet");
  mc_cmd->add_option("--d1", mc_d1, "models");
  mc_cmd->add_option("--d2", mc_d2, "categories");
  mc_cmd->add_option("--rank", mc_rank, "truth and fit rank");
  mc_cmd->add_option("--alpha", mc_alpha, "signal scale");
  mc_cmd->add_option("--battles", mc_battles, "battles per replication");
  mc_cmd->add_option("--replications", mc_reps, "replications");
  mc_cmd->add_option("--rep-offset", mc_rep_offset, "first replication index");
  mc_cmd->add_option("--folds", mc_folds, "cross-fit folds");
  mc_cmd->add_option("--level", mc_level, "confidence level");
  mc_cmd->add_option("--seed", mc_seed, "study seed");
  mc_cmd->add_option("--target", mc_target, "index target, e.g. entry:0:0");
  mc_cmd->add_option("--methods", mc_methods, "estimators")->delimiter(',');
  mc_cmd->add_option("--sampling", mc_sampling, "design")
      ->check(CLI::IsMember({"uniform", "dirichlet"}));
  mc_cmd->add_option("--concentration", mc_conc, "Dirichlet concentration");
  mc_cmd->add_option("--workers", mc_workers, "worker threads");
  mc_cmd->add_option("--log-every", mc_log_every, "progress interval (0 = quiet)");
  mc_cmd->add_option("--records", mc_records, "per-replication CSV output");
  mc_cmd->add_option("--summary", mc_summary, "summary CSV output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (!echo_config_path.empty())
      open_out(echo_config_path) << app.config_to_str(false, false);
    std::cerr << "# effective config\n" << app.config_to_str(false, false);

    if (*ingest_cmd) {
      const IngestResult res = run_ingest(ingest_opts);
      std::printf("rows=%ld filtered=%ld ties_dropped=%ld battles=%zu models=%zu "
                  "categories=%zu\n",
                  res.rows_read, res.rows_filtered, res.ties_dropped, res.battles.size(),
                  res.model_names.size(), res.category_names.size());
      for (size_t i = 0; i < res.model_names.size(); ++i)
        std::printf("model %3zu  %8ld  %s\n", i, res.model_counts[i],
                    res.model_names[i].c_str());
      if (!ingest_out.empty()) {
        auto out = open_out(ingest_out);
        write_battles_csv(res.battles, res.model_names, res.category_names, out);
      }
    } else if (*fit_cmd) {
      IngestResult res = run_ingest(fit_ingest);
      std::vector<Battle> battles = std::move(res.battles);
      if (fit_subsample < 1.0) battles = subsample_battles(battles, fit_subsample, fit_seed);
      FitConfig config;
      config.rank = fit_rank;
      config.clip_bound = fit_clip;
      const FitReport report =
          fit_pipeline(battles, static_cast<int>(res.model_names.size()),
                       static_cast<int>(res.category_names.size()), config);
      const PersistedModel model = make_persisted_model(
          report, res.model_names, res.category_names,
          static_cast<long>(battles.size()), "altmin+refine", iso_timestamp_utc(),
          fit_seed, fit_clip);
      save_model(model, fit_out);
      std::printf("fit: battles=%zu rank=%d nll=%.6f -> %s\n", battles.size(), fit_rank,
                  report.final_nll, fit_out.c_str());
    } else if (*infer_cmd) {
      const PersistedModel model = load_model(infer_model);
      MappedLog log = run_mapped_load(infer_data, model, infer_tie);
      std::vector<Battle> battles = std::move(log.battles);
      if (infer_subsample < 1.0)
        battles = subsample_battles(battles, infer_subsample, infer_subseed);
      const int d1 = static_cast<int>(model.model_names.size());
      const int d2 = static_cast<int>(model.category_names.size());
      const FunctionalSpec spec =
          parse_target(infer_target, model.model_names, model.category_names);

      InferReport report;
      if (infer_method == "naive") {
        report = naive_inference(battles, d1, d2, spec, infer_level);
      } else {
        CrossFitOptions options;
        options.folds = infer_folds;
        options.level = infer_level;
        options.seed = infer_seed;
        options.fit.rank = model.rank;
        options.fit.clip_bound = model.clip_bound;
        EstimateReport est;
        if (infer_method == "efficient")
          est = efficient_one_step(battles, d1, d2, spec, options);
        else if (infer_method == "whitened")
          est = whitened_one_step(battles, d1, d2, spec, options);
        else
          est = ipw_one_step(battles, d1, d2, spec, options, IpwSampling{std::nullopt});
        report.estimate = est.estimate;
        report.se = est.standard_error;
        report.ci_low = est.ci_low;
        report.ci_high = est.ci_high;
        report.level = est.level;
        report.n = est.n_used;
        report.folds = est.folds;
        report.method = method_name(est.method);
      }
      report.target = infer_target;
      report.seed = infer_seed;
      std::printf("%s  %s  estimate=%.6f  se=%.6f  %.0f%% CI [%.6f, %.6f]  n=%ld\n",
                  infer_target.c_str(), report.method.c_str(), report.estimate, report.se,
                  100.0 * report.level, report.ci_low, report.ci_high, report.n);
      if (!infer_out.empty()) open_out(infer_out) << infer_report_to_json(report);
    } else if (*lb_cmd) {
      const PersistedModel model = load_model(lb_model);
      MappedLog log = run_mapped_load(lb_data, model, lb_tie);
      CrossFitOptions options;
      options.folds = lb_folds;
      options.level = lb_level;
      options.seed = lb_seed;
      options.fit.rank = model.rank;
      options.fit.clip_bound = model.clip_bound;
      const std::vector<LeaderboardRow> rows = make_leaderboard(
          log.battles, model.model_names, model.category_names, options);
      std::string category;
      for (const LeaderboardRow& r : rows) {
        if (r.category != category) {
          category = r.category;
          std::printf("\n== %s ==\n", category.c_str());
        }
        std::printf("%3d  %-32s  %+8.4f  (se %.4f)  [%+.4f, %+.4f]\n", r.rank,
                    r.model.c_str(), r.score, r.se, r.ci_low, r.ci_high);
      }
      if (!lb_out.empty()) {
        auto out = open_out(lb_out);
        write_leaderboard_csv(rows, out);
      }
    } else if (*sim_cmd) {
      Rng truth_rng(derive_seed(sim_seed, 0xA1));
      const ScoreMatrix truth =
          gen_truth(sim_d1, sim_d2, sim_rank, sim_alpha, truth_rng);
      const SamplingModel sampling = SamplingModel::uniform(sim_d1, sim_d2);
      Rng battle_rng(derive_seed(sim_seed, 0xB0, 0));
      std::vector<Battle> battles;
      battles.reserve(sim_battles);
      for (int i = 0; i < sim_battles; ++i)
        battles.push_back(sample_battle(truth.entries(), sampling, battle_rng));
      const std::vector<std::string> models = synthetic_names("m", sim_d1);
      const std::vector<std::string> categories = synthetic_names("c", sim_d2);
      auto out = open_out(sim_out);
      write_battles_csv(battles, models, categories, out);
      if (!sim_truth_out.empty()) {
        auto tout = open_out(sim_truth_out);
        tout.precision(17);
        for (int i = 0; i < sim_d1; ++i)
          for (int j = 0; j < sim_d2; ++j)
            tout << truth.entries()(i, j) << (j + 1 == sim_d2 ? '\n' : ',');
      }
      std::printf("simulate: %d battles (%dx%d rank %d alpha %g) -> %s\n", sim_battles,
                  sim_d1, sim_d2, sim_rank, sim_alpha, sim_out.c_str());
    } else if (*mc_cmd) {
      SimConfig config = [&]() {
        if (!mc_preset_name.empty()) return mc_preset(mc_preset_name);
        SimConfig cfg(parse_index_target(mc_target));
        cfg.d1 = mc_d1;
        cfg.d2 = mc_d2;
        cfg.rank = mc_rank;
        cfg.alpha = mc_alpha;
        cfg.battles_per_rep = mc_battles;
        cfg.methods.clear();
        for (const std::string& token : mc_methods)
          cfg.methods.push_back(method_from_token(token));
        if (mc_sampling == "dirichlet") {
          cfg.sampling.kind = SimSampling::Kind::Dirichlet;
          cfg.sampling.concentration = mc_conc;
        }
        cfg.seed = mc_seed;
        cfg.folds = mc_folds;
        cfg.level = mc_level;
        return cfg;
      }();
      // chunking and execution knobs apply on top of presets
      if (mc_cmd->count("--replications")) config.replications = mc_reps;
      if (mc_cmd->count("--rep-offset")) config.rep_offset = mc_rep_offset;
      if (!mc_preset_name.empty() && mc_cmd->count("--seed")) config.seed = mc_seed;
      config.workers = mc_workers;
      config.log_every = mc_log_every;

      const StudyResult result = run_study(config);
      if (!mc_records.empty()) {
        auto out = open_out(mc_records);
        write_records_csv(result.records, out);
      }
      if (!mc_summary.empty()) {
        auto out = open_out(mc_summary);
        write_summary_csv(result.summaries, out);
      }
      std::printf("psi_true=%.6f\n", result.psi_true);
      for (const MethodSummary& s : result.summaries)
        std::printf("%-22s reps=%d fail=%d coverage=%.3f medSE=%.4f SE*=%.4f "
                    "ratio=%.3f ks=%.3f\n",
                    method_name(s.method).c_str(), s.replications, s.failures,
                    s.coverage, s.median_se, s.oracle_se, s.se_ratio, s.ks);
    }
    return 0;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 3;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "failure: %s\n", e.what());
    return 3;
  }
}
