#include "arena/simlab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <iomanip>
#include <limits>
#include <mutex>
#include <thread>

#include "arena/stats.hpp"

namespace arena {

namespace {

constexpr std::uint64_t kTruthStream = 0xA1;
constexpr std::uint64_t kSamplingStream = 0xA2;
constexpr std::uint64_t kBattleStream = 0xB0;
constexpr std::uint64_t kFoldSeedStream = 0xB1;
constexpr std::uint64_t kRedrawStream = 0xB2;

}  // namespace

ScoreMatrix gen_truth(int d1, int d2, int r, double alpha, Rng& rng) {
  if (alpha <= 0.0) throw std::invalid_argument("gen_truth: alpha must be positive");
  if (r < 1 || r > std::min(d1, d2))
    throw std::invalid_argument("gen_truth: rank out of range");
  Eigen::MatrixXd theta(d1, r), a(d2, r);
  for (int k = 0; k < r; ++k) {
    for (int i = 0; i < d1; ++i) theta(i, k) = rng.normal();
    for (int j = 0; j < d2; ++j) a(j, k) = rng.normal();
  }
  Eigen::MatrixXd t = center_columns(theta * a.transpose());
  const double peak = t.cwiseAbs().maxCoeff();
  if (peak <= 0.0) throw std::runtime_error("gen_truth: degenerate draw");
  t *= alpha / peak;
  return ScoreMatrix(t, alpha);
}

SamplingModel gen_dirichlet_sampling(int d1, int d2, double concentration, Rng& rng) {
  if (concentration <= 0.0)
    throw std::invalid_argument("gen_dirichlet_sampling: concentration must be positive");
  const std::vector<double> cat_alpha(d2, concentration);
  const std::vector<double> model_alpha(d1, concentration);
  return SamplingModel::product(rng.dirichlet(cat_alpha), rng.dirichlet(model_alpha));
}

double oracle_se_for(Method method, const ScoreMatrix& truth, const SamplingModel& s,
                     const FunctionalSpec& spec, int rank, int n) {
  double variance = 0.0;
  switch (method) {
    case Method::Efficient:
    case Method::EfficientNonuniform:
      variance = oracle_efficient_variance(truth, s, spec, rank);
      break;
    case Method::Whitened:
      variance = oracle_whitened_variance(truth, s, spec, rank, false);
      break;
    case Method::IpwKnown:
    case Method::IpwEstimated:
      variance = oracle_whitened_variance(truth, s, spec, rank, true);
      break;
  }
  return std::sqrt(variance / n);
}

std::vector<RepRecord> run_replication(const SimConfig& config,
                                       const ScoreMatrix& truth,
                                       const SamplingModel& sampling,
                                       double psi_true, int rep_index) {
  const int n_methods = static_cast<int>(config.methods.size());
  std::vector<RepRecord> out(n_methods);
  for (int mi = 0; mi < n_methods; ++mi) {
    out[mi].method = config.methods[mi];
    out[mi].replication = rep_index;
    out[mi].failed = true;
    out[mi].estimate = std::numeric_limits<double>::quiet_NaN();
    out[mi].se = std::numeric_limits<double>::quiet_NaN();
    out[mi].z = std::numeric_limits<double>::quiet_NaN();
  }

  const ScoreMatrix* effective_truth = &truth;
  ScoreMatrix redrawn(Eigen::MatrixXd::Zero(config.d1, config.d2), 1.0);
  double psi = psi_true;
  if (config.redraw_truth_each_rep) {
    Rng redraw_rng(derive_seed(config.seed, kRedrawStream, rep_index));
    redrawn = gen_truth(config.d1, config.d2, config.rank, config.alpha, redraw_rng);
    effective_truth = &redrawn;
    psi = functional_value(config.spec, redrawn.entries());
  }

  FitConfig fit = config.fit;
  fit.rank = config.rank;
  fit.clip_bound = config.alpha + 2.0;

  try {
    Rng rep_rng(derive_seed(config.seed, kBattleStream, rep_index));
    std::vector<Battle> battles;
    battles.reserve(config.battles_per_rep);
    for (int i = 0; i < config.battles_per_rep; ++i)
      battles.push_back(sample_battle(effective_truth->entries(), sampling, rep_rng));

    CrossFitOptions opts;
    opts.folds = config.folds;
    opts.level = config.level;
    opts.seed = derive_seed(config.seed, kFoldSeedStream, rep_index);
    opts.fit = fit;
    const CrossFitPlan plan =
        build_crossfit_plan(battles, config.d1, config.d2, opts);

    for (int mi = 0; mi < n_methods; ++mi) {
      const Method method = config.methods[mi];
      try {
        const std::optional<SamplingModel> known =
            (method == Method::IpwKnown) ? std::optional<SamplingModel>(sampling)
                                         : std::nullopt;
        const EstimateReport report = one_step_from_plan(
            plan, battles, config.spec, method, config.level, known);
        RepRecord& rec = out[mi];
        rec.failed = false;
        rec.estimate = report.estimate;
        rec.se = report.standard_error;
        rec.z = (rec.se > 0.0) ? (rec.estimate - psi) / rec.se : 0.0;
        rec.covered = report.ci_low <= psi && psi <= report.ci_high;
      } catch (const std::exception&) {
        // failure already recorded in the preset state
      }
    }
  } catch (const std::exception&) {
    // plan-level failure: every method stays marked failed
  }
  return out;
}

MethodSummary mc_summary(Method method, double psi_true, double oracle_se,
                         const std::vector<RepRecord>& records) {
  if (oracle_se <= 0.0)
    throw std::invalid_argument("mc_summary: oracle standard error must be positive");
  MethodSummary s;
  s.method = method;
  s.oracle_se = oracle_se;
  std::vector<double> ses, zs;
  double mean = 0.0, sq = 0.0, abs_z = 0.0, zsum = 0.0, zsq = 0.0;
  int covered = 0;
  for (const RepRecord& r : records) {
    if (r.method != method) continue;
    if (r.failed) {
      ++s.failures;
      continue;
    }
    ++s.replications;
    ses.push_back(r.se);
    zs.push_back(r.z);
    mean += r.estimate;
    sq += (r.estimate - psi_true) * (r.estimate - psi_true);
    abs_z += std::abs(r.z);
    zsum += r.z;
    zsq += r.z * r.z;
    covered += r.covered ? 1 : 0;
  }
  if (s.replications == 0) return s;
  const int n = s.replications;
  s.coverage = static_cast<double>(covered) / n;
  s.median_se = median(ses);
  s.se_ratio = s.median_se / oracle_se;
  s.ks = ks_distance_to_normal(zs);
  s.mean_abs_z = abs_z / n;
  s.var_z = zsq / n - (zsum / n) * (zsum / n);
  s.mean_estimate = mean / n;
  s.rmse = std::sqrt(sq / n);
  return s;
}

StudyResult run_study(const SimConfig& config) {
  if (config.replications < 1 || config.battles_per_rep < 1)
    throw std::invalid_argument("run_study: need positive replications and battles");
  if (config.methods.empty())
    throw std::invalid_argument("run_study: no methods requested");
  if (config.alpha <= 0.0) throw std::invalid_argument("run_study: alpha must be positive");
  config.spec.check_dims(config.d1, config.d2);

  Rng truth_rng(derive_seed(config.seed, kTruthStream));
  ScoreMatrix truth =
      gen_truth(config.d1, config.d2, config.rank, config.alpha, truth_rng);

  Rng sampling_rng(derive_seed(config.seed, kSamplingStream));
  SamplingModel sampling =
      (config.sampling.kind == SimSampling::Kind::Uniform)
          ? SamplingModel::uniform(config.d1, config.d2)
          : gen_dirichlet_sampling(config.d1, config.d2,
                                   config.sampling.concentration, sampling_rng);

  const double psi_true = functional_value(config.spec, truth.entries());
  const int n_methods = static_cast<int>(config.methods.size());

  StudyResult result{truth, sampling, psi_true, {}, {}};
  result.records.resize(static_cast<size_t>(config.replications) * n_methods);

  std::atomic<int> next_rep{0};
  std::atomic<int> done_reps{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;

  auto worker = [&]() {
    for (;;) {
      const int rep = next_rep.fetch_add(1);
      if (rep >= config.replications) return;
      try {
        const std::vector<RepRecord> recs = run_replication(
            config, truth, sampling, psi_true, config.rep_offset + rep);
        std::copy(recs.begin(), recs.end(),
                  result.records.begin() + static_cast<size_t>(rep) * n_methods);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
      const int done = done_reps.fetch_add(1) + 1;
      if (config.log_every > 0 && done % config.log_every == 0)
        std::fprintf(stderr, "[study seed=%llu] %d/%d replications\n",
                     static_cast<unsigned long long>(config.seed), done,
                     config.replications);
    }
  };

  const int n_workers = std::max(1, config.workers);
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  result.summaries.reserve(n_methods);
  for (Method method : config.methods) {
    const double oracle_se = oracle_se_for(method, truth, sampling, config.spec,
                                           config.rank, config.battles_per_rep);
    result.summaries.push_back(mc_summary(method, psi_true, oracle_se, result.records));
  }
  return result;
}

void write_records_csv(const std::vector<RepRecord>& records, std::ostream& out) {
  out << "method,replication,estimate,se,z,covered\n";
  out << std::setprecision(17);
  for (const RepRecord& r : records) {
    out << method_name(r.method) << ',' << r.replication << ',' << r.estimate << ','
        << r.se << ',' << r.z << ',' << (r.covered ? 1 : 0) << '\n';
  }
}

void write_summary_csv(const std::vector<MethodSummary>& summaries, std::ostream& out) {
  out << "method,replications,failures,coverage,median_se,oracle_se,se_ratio,ks,"
         "mean_abs_z,var_z,mean_estimate,rmse\n";
  out << std::setprecision(17);
  for (const MethodSummary& s : summaries) {
    out << method_name(s.method) << ',' << s.replications << ',' << s.failures << ','
        << s.coverage << ',' << s.median_se << ',' << s.oracle_se << ',' << s.se_ratio
        << ',' << s.ks << ',' << s.mean_abs_z << ',' << s.var_z << ','
        << s.mean_estimate << ',' << s.rmse << '\n';
  }
}

}  // namespace arena
