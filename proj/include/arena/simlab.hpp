#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "arena/fitting.hpp"
#include "arena/inference.hpp"
#include "arena/rng.hpp"

namespace arena {

struct SimSampling {
  enum class Kind { Uniform, Dirichlet };
  Kind kind = Kind::Uniform;
  double concentration = 5.0;  // Dirichlet only
};

struct SimConfig {
  explicit SimConfig(FunctionalSpec target) : spec(std::move(target)) {}

  int d1 = 20;
  int d2 = 2;
  int rank = 1;
  double alpha = 1.0;
  int battles_per_rep = 10000;
  int replications = 100;
  int rep_offset = 0;  // first replication index; chunked studies stay reproducible
  std::vector<Method> methods = {Method::Efficient, Method::Whitened};
  FunctionalSpec spec;
  SimSampling sampling;
  std::uint64_t seed = 1;
  int folds = 6;
  double level = 0.95;
  FitConfig fit;       // rank and clip_bound are overridden from rank/alpha
  bool redraw_truth_each_rep = false;
  int workers = 1;
  int log_every = 0;   // 0 silences progress lines on stderr
};

struct RepRecord {
  Method method = Method::Efficient;
  int replication = 0;
  double estimate = 0.0;
  double se = 0.0;
  double z = 0.0;
  bool covered = false;
  bool failed = false;  // method error in this replication; excluded from summaries
};

struct MethodSummary {
  Method method = Method::Efficient;
  int replications = 0;  // successful ones
  int failures = 0;
  double coverage = 0.0;
  double median_se = 0.0;
  double oracle_se = 0.0;
  double se_ratio = 0.0;    // median_se / oracle_se
  double ks = 0.0;          // KS distance of the z scores to standard normal
  double mean_abs_z = 0.0;  // standard normal reference: 0.798
  double var_z = 0.0;
  double mean_estimate = 0.0;
  double rmse = 0.0;
};

struct StudyResult {
  ScoreMatrix truth;
  SamplingModel sampling;
  double psi_true = 0.0;
  std::vector<RepRecord> records;        // replication-major, method order
  std::vector<MethodSummary> summaries;  // config method order
};

// Centered i.i.d.-factor truth, rescaled so the largest entry magnitude is
// exactly alpha.
ScoreMatrix gen_truth(int d1, int d2, int r, double alpha, Rng& rng);

// Product sampling with Dirichlet(concentration * ones) marginals.
SamplingModel gen_dirichlet_sampling(int d1, int d2, double concentration, Rng& rng);

// Per-method asymptotic standard error at the truth, for calibration ratios.
double oracle_se_for(Method method, const ScoreMatrix& truth, const SamplingModel& s,
                     const FunctionalSpec& spec, int rank, int n);

// One replication: fresh battles, one shared cross-fit plan, every configured
// method. Method errors mark the record failed instead of aborting.
std::vector<RepRecord> run_replication(const SimConfig& config,
                                       const ScoreMatrix& truth,
                                       const SamplingModel& sampling,
                                       double psi_true, int rep_index);

// Coverage, SE calibration, and z diagnostics for one method's records.
MethodSummary mc_summary(Method method, double psi_true, double oracle_se,
                         const std::vector<RepRecord>& records);

// One truth and sampling design per study (unless redraw_truth_each_rep);
// per-replication substreams make the result independent of worker count.
StudyResult run_study(const SimConfig& config);

// Header: method,replication,estimate,se,z,covered
void write_records_csv(const std::vector<RepRecord>& records, std::ostream& out);

void write_summary_csv(const std::vector<MethodSummary>& summaries, std::ostream& out);

}  // namespace arena
