#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "arena/errors.hpp"
#include "arena/fitting.hpp"
#include "arena/inference.hpp"
#include "arena/simlab.hpp"

namespace arena {

enum class TiePolicy { Drop, Half };

struct IngestOptions {
  int top_k = 0;  // 0 keeps every model
  std::map<std::string, std::string> category_map;
  TiePolicy tie_policy = TiePolicy::Drop;
};

struct IngestResult {
  std::vector<Battle> battles;
  std::vector<std::string> model_names;     // whole-log appearance count desc, name asc
  std::vector<std::string> category_names;  // name asc
  std::vector<long> model_counts;           // appearances in the surviving rows
  long rows_read = 0;
  long rows_filtered = 0;  // removed by the top-k model filter
  long ties_dropped = 0;
};

// Battle log CSV: required columns model_a, model_b, category, winner (extras
// ignored); winner tokens model_a / model_b / tie / "tie (bothbad)". Throws
// ConfigError with the line number on malformed rows.
IngestResult ingest_battle_log(std::istream& in, const IngestOptions& options);

// Lines "raw=mapped"; '#' starts a comment.
std::map<std::string, std::string> parse_category_map(std::istream& in);

// Rows whose model or category is not in the given tables are dropped (the
// tables come from a persisted model; battles must agree with its indices).
struct MappedLog {
  std::vector<Battle> battles;
  long rows_read = 0;
  long rows_dropped = 0;
  long ties_dropped = 0;
};
MappedLog map_battle_log(std::istream& in, const std::vector<std::string>& model_names,
                         const std::vector<std::string>& category_names,
                         TiePolicy tie_policy);

// Seeded uniform subsample without replacement, keeping battle order.
std::vector<Battle> subsample_battles(const std::vector<Battle>& battles, double fraction,
                                      std::uint64_t seed);

struct PersistedModel {
  std::string format_version = "1.0";
  std::vector<std::string> model_names;
  std::vector<std::string> category_names;
  int rank = 0;
  Eigen::MatrixXd u;                // d1 x r
  Eigen::VectorXd singular_values;  // r
  Eigen::MatrixXd v;                // d2 x r
  long n_battles = 0;
  std::string method;
  std::string timestamp;
  std::uint64_t seed = 0;
  double clip_bound = 0.0;
};

PersistedModel make_persisted_model(const FitReport& report,
                                    std::vector<std::string> model_names,
                                    std::vector<std::string> category_names,
                                    long n_battles, std::string method,
                                    std::string timestamp, std::uint64_t seed,
                                    double clip_bound);

std::string model_to_json(const PersistedModel& model);
PersistedModel model_from_json(const std::string& text);  // rejects unknown major version
void save_model(const PersistedModel& model, const std::string& path);
PersistedModel load_model(const std::string& path);

ScoreMatrix model_scores(const PersistedModel& model);

std::string iso_timestamp_utc();

// "entry:MODEL:CATEGORY", "winprob:A:B:CATEGORY", "contrast:A:B:CATEGORY".
// Unknown names raise ConfigError listing the nearest matches.
FunctionalSpec parse_target(const std::string& text,
                            const std::vector<std::string>& model_names,
                            const std::vector<std::string>& category_names);

std::vector<std::string> nearest_names(const std::string& name,
                                       const std::vector<std::string>& candidates,
                                       int count = 3);

struct InferReport {
  std::string target;
  std::string method;
  double estimate = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double level = 0.95;
  long n = 0;
  int folds = 0;
  std::uint64_t seed = 0;
};

std::string infer_report_to_json(const InferReport& report);

// Per-category BTL fit with a delta-method sandwich standard error from the
// category Fisher information; the low-rank structure is ignored.
InferReport naive_inference(const std::vector<Battle>& battles, int d1, int d2,
                            const FunctionalSpec& spec, double level);

struct LeaderboardRow {
  std::string category;
  int rank = 0;
  std::string model;
  double score = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

// One shared cross-fit plan; every (model, category) entry is an efficient
// one-step target. Rows are grouped by category, ranked by score descending.
std::vector<LeaderboardRow> make_leaderboard(const std::vector<Battle>& battles,
                                             const std::vector<std::string>& model_names,
                                             const std::vector<std::string>& category_names,
                                             const CrossFitOptions& options);

// Header: category,rank,model,score,se,ci_low,ci_high
void write_leaderboard_csv(const std::vector<LeaderboardRow>& rows, std::ostream& out);

// Header: model_a,model_b,category,winner — weight-1 battles only.
void write_battles_csv(const std::vector<Battle>& battles,
                       const std::vector<std::string>& model_names,
                       const std::vector<std::string>& category_names, std::ostream& out);

// Named study configurations: smoke, table2-entry, table2-winprob-60k,
// table2-winprob-80k, table3-dirichlet. Unknown names raise ConfigError.
SimConfig mc_preset(const std::string& name);

}  // namespace arena
