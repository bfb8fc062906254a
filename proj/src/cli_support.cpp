#include "arena/cli_support.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <fstream>
#include <istream>
#include <json.hpp>
#include <numeric>
#include <ostream>
#include <sstream>

#include "arena/rng.hpp"
#include "arena/stats.hpp"

namespace arena {

namespace {

using nlohmann::json;

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

// Minimal RFC-4180 field splitter: quoted fields may contain commas and
// doubled quotes.
std::vector<std::string> split_csv(const std::string& line, long line_no) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"' && field.empty()) {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  if (quoted)
    throw ConfigError("ingest: line " + std::to_string(line_no) +
                      ": unterminated quoted field");
  out.push_back(std::move(field));
  return out;
}

struct LogRecord {
  std::string a;
  std::string b;
  std::string category;
  int winner;  // 0 = model_a, 1 = model_b, 2 = tie
  long line_no;
};

std::vector<LogRecord> parse_log(std::istream& in) {
  std::string line;
  long line_no = 0;
  // header
  int col_a = -1, col_b = -1, col_cat = -1, col_win = -1;
  size_t n_cols = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const std::vector<std::string> cols = split_csv(line, line_no);
    for (int i = 0; i < static_cast<int>(cols.size()); ++i) {
      if (cols[i] == "model_a") col_a = i;
      if (cols[i] == "model_b") col_b = i;
      if (cols[i] == "category") col_cat = i;
      if (cols[i] == "winner") col_win = i;
    }
    if (col_a < 0 || col_b < 0 || col_cat < 0 || col_win < 0)
      throw ConfigError(
          "ingest: header must name the model_a, model_b, category, winner columns");
    n_cols = cols.size();
    break;
  }
  if (n_cols == 0) throw ConfigError("ingest: empty file");

  std::vector<LogRecord> records;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const std::vector<std::string> cols = split_csv(line, line_no);
    if (cols.size() < n_cols)
      throw ConfigError("ingest: line " + std::to_string(line_no) + ": expected " +
                        std::to_string(n_cols) + " columns, got " +
                        std::to_string(cols.size()));
    LogRecord rec;
    rec.a = cols[col_a];
    rec.b = cols[col_b];
    rec.category = cols[col_cat];
    rec.line_no = line_no;
    if (rec.a.empty() || rec.b.empty())
      throw ConfigError("ingest: line " + std::to_string(line_no) + ": empty model name");
    if (rec.category.empty())
      throw ConfigError("ingest: line " + std::to_string(line_no) + ": empty category");
    const std::string& w = cols[col_win];
    if (w == "model_a")
      rec.winner = 0;
    else if (w == "model_b")
      rec.winner = 1;
    else if (w == "tie" || w == "tie (bothbad)")
      rec.winner = 2;
    else
      throw ConfigError("ingest: line " + std::to_string(line_no) +
                        ": unknown winner token '" + w + "'");
    records.push_back(std::move(rec));
  }
  return records;
}

void append_battles(std::vector<Battle>& battles, const DesignAtom& atom, int winner,
                    TiePolicy tie_policy, long& ties_dropped) {
  if (winner == 2) {
    if (tie_policy == TiePolicy::Drop) {
      ++ties_dropped;
      return;
    }
    battles.push_back({atom, 1, 0.5});
    battles.push_back({atom, 0, 0.5});
    return;
  }
  battles.push_back({atom, winner == 0 ? 1 : 0, 1.0});
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows, const char* what) {
  if (!rows.is_array() || rows.empty())
    throw ConfigError(std::string("model: ") + what + " must be a non-empty array");
  const size_t n_cols = rows[0].size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(n_cols));
  for (size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].is_array() || rows[i].size() != n_cols)
      throw ConfigError(std::string("model: ragged rows in ") + what);
    for (size_t j = 0; j < n_cols; ++j) m(i, j) = rows[i][j].get<double>();
  }
  return m;
}

int levenshtein(const std::string& a, const std::string& b) {
  const size_t n = a.size(), m = b.size();
  std::vector<int> prev(m + 1), cur(m + 1);
  std::iota(prev.begin(), prev.end(), 0);
  for (size_t i = 1; i <= n; ++i) {
    cur[0] = static_cast<int>(i);
    for (size_t j = 1; j <= m; ++j) {
      const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

int name_index(const std::string& name, const std::vector<std::string>& table,
               const char* what) {
  const auto it = std::find(table.begin(), table.end(), name);
  if (it != table.end()) return static_cast<int>(it - table.begin());
  std::string msg = std::string("unknown ") + what + " '" + name + "'";
  const std::vector<std::string> near = nearest_names(name, table);
  if (!near.empty()) {
    msg += "; nearest:";
    for (const std::string& s : near) msg += " " + s;
  }
  throw ConfigError(msg);
}

double z_quantile(double level) {
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("confidence level must be in (0, 1)");
  return normal_quantile(0.5 + 0.5 * level);
}

}  // namespace

IngestResult ingest_battle_log(std::istream& in, const IngestOptions& options) {
  const std::vector<LogRecord> records = parse_log(in);

  std::map<std::string, long> counts;
  for (const LogRecord& r : records) {
    ++counts[r.a];
    ++counts[r.b];
  }
  std::vector<std::pair<std::string, long>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) {
    if (x.second != y.second) return x.second > y.second;
    return x.first < y.first;
  });
  if (options.top_k > 0 && options.top_k < static_cast<int>(ranked.size()))
    ranked.resize(options.top_k);

  IngestResult out;
  out.rows_read = static_cast<long>(records.size());
  std::map<std::string, int> model_index;
  for (const auto& [name, count] : ranked) {
    model_index.emplace(name, static_cast<int>(out.model_names.size()));
    out.model_names.push_back(name);
  }

  auto mapped_category = [&](const std::string& raw) -> const std::string& {
    const auto it = options.category_map.find(raw);
    return it == options.category_map.end() ? raw : it->second;
  };

  std::map<std::string, int> category_index;
  for (const LogRecord& r : records) {
    if (!model_index.count(r.a) || !model_index.count(r.b)) continue;
    category_index.emplace(mapped_category(r.category), 0);
  }
  for (auto& [name, idx] : category_index) {
    idx = static_cast<int>(out.category_names.size());
    out.category_names.push_back(name);
  }

  out.model_counts.assign(out.model_names.size(), 0);
  for (const LogRecord& r : records) {
    const auto ia = model_index.find(r.a);
    const auto ib = model_index.find(r.b);
    if (ia == model_index.end() || ib == model_index.end()) {
      ++out.rows_filtered;
      continue;
    }
    if (r.a == r.b)
      throw ConfigError("ingest: line " + std::to_string(r.line_no) +
                        ": a model cannot battle itself");
    ++out.model_counts[ia->second];
    ++out.model_counts[ib->second];
    const DesignAtom atom{category_index.at(mapped_category(r.category)), ia->second,
                          ib->second};
    append_battles(out.battles, atom, r.winner, options.tie_policy, out.ties_dropped);
  }
  if (out.battles.empty()) throw ConfigError("ingest: no battles survive filtering");
  return out;
}

std::map<std::string, std::string> parse_category_map(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("category map: line " + std::to_string(line_no) +
                        ": expected raw=mapped");
    auto trim = [](std::string s) {
      const size_t a = s.find_first_not_of(" \t");
      const size_t b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string raw = trim(line.substr(0, eq));
    const std::string mapped = trim(line.substr(eq + 1));
    if (raw.empty() || mapped.empty())
      throw ConfigError("category map: line " + std::to_string(line_no) +
                        ": empty name");
    out[raw] = mapped;
  }
  return out;
}

MappedLog map_battle_log(std::istream& in, const std::vector<std::string>& model_names,
                         const std::vector<std::string>& category_names,
                         TiePolicy tie_policy) {
  const std::vector<LogRecord> records = parse_log(in);
  std::map<std::string, int> model_index, category_index;
  for (int i = 0; i < static_cast<int>(model_names.size()); ++i)
    model_index.emplace(model_names[i], i);
  for (int i = 0; i < static_cast<int>(category_names.size()); ++i)
    category_index.emplace(category_names[i], i);

  MappedLog out;
  out.rows_read = static_cast<long>(records.size());
  for (const LogRecord& r : records) {
    const auto ia = model_index.find(r.a);
    const auto ib = model_index.find(r.b);
    const auto ic = category_index.find(r.category);
    if (ia == model_index.end() || ib == model_index.end() || ic == category_index.end()) {
      ++out.rows_dropped;
      continue;
    }
    const DesignAtom atom{ic->second, ia->second, ib->second};
    append_battles(out.battles, atom, r.winner, tie_policy, out.ties_dropped);
  }
  if (out.battles.empty())
    throw ConfigError("battle log: no rows match the model's name tables");
  return out;
}

std::vector<Battle> subsample_battles(const std::vector<Battle>& battles, double fraction,
                                      std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw ConfigError("subsample: fraction must be in (0, 1]");
  const size_t n = battles.size();
  const size_t k =
      std::max<size_t>(1, static_cast<size_t>(std::llround(fraction * double(n))));
  if (k >= n) return battles;
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  Rng rng(derive_seed(seed, 0x5B));
  for (size_t i = 0; i < k; ++i) {
    const size_t j = i + static_cast<size_t>(rng.below(std::uint64_t(n - i)));
    std::swap(order[i], order[j]);
  }
  order.resize(k);
  std::sort(order.begin(), order.end());
  std::vector<Battle> out;
  out.reserve(k);
  for (size_t idx : order) out.push_back(battles[idx]);
  return out;
}

PersistedModel make_persisted_model(const FitReport& report,
                                    std::vector<std::string> model_names,
                                    std::vector<std::string> category_names,
                                    long n_battles, std::string method,
                                    std::string timestamp, std::uint64_t seed,
                                    double clip_bound) {
  PersistedModel m;
  m.model_names = std::move(model_names);
  m.category_names = std::move(category_names);
  m.rank = report.frame.rank();
  m.u = report.frame.u;
  m.singular_values = report.frame.sigma;
  m.v = report.frame.v;
  m.n_battles = n_battles;
  m.method = std::move(method);
  m.timestamp = std::move(timestamp);
  m.seed = seed;
  m.clip_bound = clip_bound;
  if (static_cast<int>(m.model_names.size()) != m.u.rows() ||
      static_cast<int>(m.category_names.size()) != m.v.rows())
    throw std::invalid_argument("persisted model: name tables do not match the frame");
  return m;
}

std::string model_to_json(const PersistedModel& model) {
  json doc;
  doc["format_version"] = model.format_version;
  doc["model_names"] = model.model_names;
  doc["category_names"] = model.category_names;
  doc["r"] = model.rank;
  doc["U"] = matrix_to_json(model.u);
  json sv = json::array();
  for (Eigen::Index i = 0; i < model.singular_values.size(); ++i)
    sv.push_back(model.singular_values(i));
  doc["singular_values"] = std::move(sv);
  doc["V"] = matrix_to_json(model.v);
  doc["metadata"] = {{"n", model.n_battles},
                     {"method", model.method},
                     {"timestamp", model.timestamp},
                     {"seed", model.seed},
                     {"clip_bound", model.clip_bound}};
  return doc.dump(2) + "\n";
}

PersistedModel model_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model: invalid JSON: ") + e.what());
  }
  try {
    PersistedModel m;
    m.format_version = doc.at("format_version").get<std::string>();
    const size_t dot = m.format_version.find('.');
    if (dot == std::string::npos || m.format_version.substr(0, dot) != "1")
      throw ConfigError("model: unsupported format_version " + m.format_version);
    m.model_names = doc.at("model_names").get<std::vector<std::string>>();
    m.category_names = doc.at("category_names").get<std::vector<std::string>>();
    m.rank = doc.at("r").get<int>();
    m.u = matrix_from_json(doc.at("U"), "U");
    m.v = matrix_from_json(doc.at("V"), "V");
    const json& sv = doc.at("singular_values");
    m.singular_values.resize(static_cast<Eigen::Index>(sv.size()));
    for (size_t i = 0; i < sv.size(); ++i)
      m.singular_values(static_cast<Eigen::Index>(i)) = sv[i].get<double>();
    const json& meta = doc.at("metadata");
    m.n_battles = meta.at("n").get<long>();
    m.method = meta.at("method").get<std::string>();
    m.timestamp = meta.at("timestamp").get<std::string>();
    m.seed = meta.at("seed").get<std::uint64_t>();
    m.clip_bound = meta.at("clip_bound").get<double>();
    if (m.rank < 1 || m.u.cols() != m.rank || m.v.cols() != m.rank ||
        m.singular_values.size() != m.rank)
      throw ConfigError("model: rank does not match the stored factors");
    if (static_cast<int>(m.model_names.size()) != m.u.rows() ||
        static_cast<int>(m.category_names.size()) != m.v.rows())
      throw ConfigError("model: name tables do not match the stored factors");
    return m;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model: missing or mistyped field: ") + e.what());
  }
}

void save_model(const PersistedModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  out << model_to_json(model);
  if (!out) throw ConfigError("write failed: " + path);
}

PersistedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open model file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

ScoreMatrix model_scores(const PersistedModel& model) {
  const Eigen::MatrixXd t =
      model.u * model.singular_values.asDiagonal() * model.v.transpose();
  const double bound =
      std::max({1e-8, model.clip_bound, t.cwiseAbs().maxCoeff()});
  return ScoreMatrix(t, bound);
}

std::string iso_timestamp_utc() {
  const std::time_t now = std::time(nullptr);
  std::tm tm_utc;
  gmtime_r(&now, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

std::vector<std::string> nearest_names(const std::string& name,
                                       const std::vector<std::string>& candidates,
                                       int count) {
  std::vector<std::pair<int, std::string>> scored;
  scored.reserve(candidates.size());
  for (const std::string& c : candidates) scored.emplace_back(levenshtein(name, c), c);
  std::sort(scored.begin(), scored.end());
  std::vector<std::string> out;
  for (int i = 0; i < count && i < static_cast<int>(scored.size()); ++i)
    out.push_back(scored[i].second);
  return out;
}

FunctionalSpec parse_target(const std::string& text,
                            const std::vector<std::string>& model_names,
                            const std::vector<std::string>& category_names) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(text);
  while (std::getline(in, part, ':')) parts.push_back(part);
  if (parts.empty()) throw ConfigError("target: empty specification");
  const std::string& kind = parts[0];
  if (kind == "entry") {
    if (parts.size() != 3)
      throw ConfigError("target: expected entry:MODEL:CATEGORY");
    const int m = name_index(parts[1], model_names, "model");
    const int c = name_index(parts[2], category_names, "category");
    return FunctionalSpec::linear_entry({{m, c, 1.0}});
  }
  if (kind == "winprob" || kind == "contrast") {
    if (parts.size() != 4)
      throw ConfigError("target: expected " + kind + ":MODEL_A:MODEL_B:CATEGORY");
    const int a = name_index(parts[1], model_names, "model");
    const int b = name_index(parts[2], model_names, "model");
    const int c = name_index(parts[3], category_names, "category");
    if (a == b) throw ConfigError("target: degenerate contrast, MODEL_A equals MODEL_B");
    return kind == "winprob" ? FunctionalSpec::win_prob(a, b, c)
                             : FunctionalSpec::category_contrast(a, b, c);
  }
  throw ConfigError("target: unknown kind '" + kind +
                    "' (expected entry, winprob, or contrast)");
}

std::string infer_report_to_json(const InferReport& report) {
  json doc;
  doc["format_version"] = "1.0";
  doc["target"] = report.target;
  doc["method"] = report.method;
  doc["estimate"] = report.estimate;
  doc["se"] = report.se;
  doc["ci"] = {report.ci_low, report.ci_high};
  doc["level"] = report.level;
  doc["n"] = report.n;
  doc["folds"] = report.folds;
  doc["seed"] = report.seed;
  return doc.dump(2) + "\n";
}

InferReport naive_inference(const std::vector<Battle>& battles, int d1, int d2,
                            const FunctionalSpec& spec, double level) {
  spec.check_dims(d1, d2);
  const ScoreMatrix fit = naive_per_task_btl(battles, d1, d2);
  const double z = z_quantile(level);

  const Eigen::MatrixXd grad = functional_gradient(spec, fit.entries());
  double variance = 0.0;
  for (int u = 0; u < d2; ++u) {
    if (grad.col(u).isZero(0.0)) continue;
    Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(d1, d1);
    for (const Battle& b : battles) {
      if (b.atom.category != u) continue;
      const double eta =
          fit.entries()(b.atom.first, u) - fit.entries()(b.atom.second, u);
      const double info = b.weight * fisher_info(eta);
      lap(b.atom.first, b.atom.first) += info;
      lap(b.atom.second, b.atom.second) += info;
      lap(b.atom.first, b.atom.second) -= info;
      lap(b.atom.second, b.atom.first) -= info;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lap);
    const Eigen::VectorXd& lam = eig.eigenvalues();
    const double cut = 1e-10 * std::max(1e-300, lam(lam.size() - 1));
    const Eigen::VectorXd proj = eig.eigenvectors().transpose() * grad.col(u);
    for (Eigen::Index i = 0; i < lam.size(); ++i)
      if (lam(i) > cut) variance += proj(i) * proj(i) / lam(i);
  }

  InferReport report;
  report.method = "naive";
  report.estimate = functional_value(spec, fit.entries());
  report.se = std::sqrt(variance);
  report.ci_low = report.estimate - z * report.se;
  report.ci_high = report.estimate + z * report.se;
  report.level = level;
  double total_weight = 0.0;
  for (const Battle& b : battles) total_weight += b.weight;
  report.n = std::llround(total_weight);
  return report;
}

std::vector<LeaderboardRow> make_leaderboard(const std::vector<Battle>& battles,
                                             const std::vector<std::string>& model_names,
                                             const std::vector<std::string>& category_names,
                                             const CrossFitOptions& options) {
  const int d1 = static_cast<int>(model_names.size());
  const int d2 = static_cast<int>(category_names.size());
  const CrossFitPlan plan = build_crossfit_plan(battles, d1, d2, options);

  std::vector<LeaderboardRow> rows;
  rows.reserve(static_cast<size_t>(d1) * d2);
  for (int c = 0; c < d2; ++c) {
    std::vector<LeaderboardRow> block;
    block.reserve(d1);
    for (int m = 0; m < d1; ++m) {
      const FunctionalSpec spec = FunctionalSpec::linear_entry({{m, c, 1.0}});
      const EstimateReport rep = one_step_from_plan(plan, battles, spec,
                                                    Method::Efficient, options.level,
                                                    std::nullopt);
      LeaderboardRow row;
      row.category = category_names[c];
      row.model = model_names[m];
      row.score = rep.estimate;
      row.se = rep.standard_error;
      row.ci_low = rep.ci_low;
      row.ci_high = rep.ci_high;
      block.push_back(std::move(row));
    }
    std::sort(block.begin(), block.end(), [](const auto& x, const auto& y) {
      if (x.score != y.score) return x.score > y.score;
      return x.model < y.model;
    });
    for (int i = 0; i < static_cast<int>(block.size()); ++i) block[i].rank = i + 1;
    rows.insert(rows.end(), block.begin(), block.end());
  }
  return rows;
}

void write_leaderboard_csv(const std::vector<LeaderboardRow>& rows, std::ostream& out) {
  out << "category,rank,model,score,se,ci_low,ci_high\n";
  const auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  };
  out.precision(17);
  for (const LeaderboardRow& r : rows)
    out << quote(r.category) << ',' << r.rank << ',' << quote(r.model) << ',' << r.score
        << ',' << r.se << ',' << r.ci_low << ',' << r.ci_high << '\n';
}

void write_battles_csv(const std::vector<Battle>& battles,
                       const std::vector<std::string>& model_names,
                       const std::vector<std::string>& category_names, std::ostream& out) {
  out << "model_a,model_b,category,winner\n";
  for (const Battle& b : battles) {
    if (b.weight != 1.0)
      throw ConfigError(
          "write_battles_csv: fractional-weight battles have no winner token");
    out << model_names.at(b.atom.first) << ',' << model_names.at(b.atom.second) << ','
        << category_names.at(b.atom.category) << ','
        << (b.outcome == 1 ? "model_a" : "model_b") << '\n';
  }
}

SimConfig mc_preset(const std::string& name) {
  const FunctionalSpec entry = FunctionalSpec::linear_entry({{0, 0, 1.0}});
  const FunctionalSpec winprob = FunctionalSpec::win_prob(0, 1, 0);
  if (name == "smoke") {
    SimConfig cfg(entry);
    cfg.d1 = cfg.d2 = 60;
    cfg.rank = 3;
    cfg.alpha = 5.0;
    cfg.battles_per_rep = 5400;
    cfg.replications = 100;
    cfg.folds = 6;
    cfg.methods = {Method::Efficient, Method::Whitened};
    cfg.seed = 101;
    return cfg;
  }
  if (name == "table2-entry" || name == "table2-winprob-60k" ||
      name == "table2-winprob-80k") {
    const bool wp = name != "table2-entry";
    SimConfig cfg(wp ? winprob : entry);
    cfg.d1 = cfg.d2 = 200;
    cfg.rank = 5;
    cfg.alpha = 5.0;
    cfg.battles_per_rep = name == "table2-winprob-80k" ? 80000 : 60000;
    cfg.replications = 500;
    cfg.folds = 6;
    cfg.methods = {Method::Efficient, Method::Whitened};
    cfg.seed = name == "table2-entry" ? 42 : (name == "table2-winprob-60k" ? 43 : 44);
    return cfg;
  }
  if (name == "table3-dirichlet") {
    SimConfig cfg(entry);
    cfg.d1 = cfg.d2 = 200;
    cfg.rank = 5;
    cfg.alpha = 5.0;
    cfg.battles_per_rep = 60000;
    cfg.replications = 500;
    cfg.folds = 6;
    cfg.methods = {Method::IpwKnown, Method::IpwEstimated, Method::Efficient,
                   Method::EfficientNonuniform};
    cfg.sampling.kind = SimSampling::Kind::Dirichlet;
    cfg.sampling.concentration = 5.0;
    cfg.seed = 45;
    return cfg;
  }
  throw ConfigError("unknown preset '" + name +
                    "' (smoke, table2-entry, table2-winprob-60k, table2-winprob-80k, "
                    "table3-dirichlet)");
}

}  // namespace arena
