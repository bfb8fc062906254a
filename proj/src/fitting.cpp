#include "arena/fitting.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace arena {

namespace {

double softplus(double eta) {
  if (eta > 0.0) return eta + std::log1p(std::exp(-eta));
  return std::log1p(std::exp(eta));
}

void project_ball(Eigen::VectorXd& theta, double radius) {
  const double n = theta.norm();
  if (n > radius) theta *= radius / n;
}

// Stationarity of the ball-constrained problem: on the boundary an outward
// radial gradient component is blocked by the constraint.
double constrained_stationarity(const Eigen::VectorXd& theta, const Eigen::VectorXd& grad,
                                double radius) {
  const double n = theta.norm();
  if (n < radius * (1.0 - 1e-12)) return grad.norm();
  if (n == 0.0) return grad.norm();
  const double radial = grad.dot(theta) / n;
  if (radial < 0.0) return (grad - (radial / n) * theta).norm();
  return grad.norm();
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

void check_battles(const std::vector<Battle>& battles, int d1, int d2) {
  for (const Battle& b : battles) {
    if (b.atom.category < 0 || b.atom.category >= d2 || b.atom.first < 0 ||
        b.atom.first >= d1 || b.atom.second < 0 || b.atom.second >= d1 ||
        b.atom.first == b.atom.second || (b.outcome != 0 && b.outcome != 1) ||
        !(b.weight > 0.0))
      throw std::invalid_argument("fitting: malformed battle");
  }
}

void check_config(const FitConfig& c, int d1, int d2) {
  if (c.rank < 1 || c.rank > std::min(d1, d2))
    throw std::invalid_argument("fitting: rank out of range");
  if (!(c.clip_bound > 0.0)) throw std::invalid_argument("fitting: clip bound must be positive");
  if (c.ridge < 0.0) throw std::invalid_argument("fitting: ridge must be nonnegative");
}

std::vector<std::vector<int>> group_by_category(const std::vector<Battle>& battles, int d2) {
  std::vector<std::vector<int>> out(d2);
  for (int i = 0; i < static_cast<int>(battles.size()); ++i)
    out[battles[i].atom.category].push_back(i);
  return out;
}

std::vector<std::vector<int>> group_by_model(const std::vector<Battle>& battles, int d1) {
  std::vector<std::vector<int>> out(d1);
  for (int i = 0; i < static_cast<int>(battles.size()); ++i) {
    out[battles[i].atom.first].push_back(i);
    out[battles[i].atom.second].push_back(i);
  }
  return out;
}

// Re-land an iterate in the exact rank-r centered gauge; the returned frame
// reconstructs the entries exactly. When the entry box binds at the rank-r
// variety the truncate/clip alternation stalls above the bound; a terminal
// rescale keeps the rank, the frame, and the centering while landing exactly
// on the box.
TruncationResult finish_rank_r(Eigen::MatrixXd m, int r, double a0) {
  TruncationResult tr = truncate_rank(m, r);
  double prev_peak = std::numeric_limits<double>::infinity();
  for (int sweep = 0; sweep < 40; ++sweep) {
    const double peak = tr.approx.cwiseAbs().maxCoeff();
    if (peak <= a0 + 1e-9) return tr;
    if (peak > prev_peak - 1e-4) break;
    prev_peak = peak;
    tr = truncate_rank(clip_entries(tr.approx, a0), r);
  }
  const double scale = a0 / tr.approx.cwiseAbs().maxCoeff();
  tr.approx *= scale;
  tr.frame.sigma *= scale;
  return tr;
}

}  // namespace

double battle_nll(const std::vector<Battle>& battles, const Eigen::MatrixXd& scores) {
  double f = 0.0;
  for (const Battle& b : battles) {
    const double eta = atom_inner(scores, b.atom);
    f += b.weight * (softplus(eta) - b.outcome * eta);
  }
  return f;
}

NewtonResult logistic_newton(const Eigen::MatrixXd& x, const Eigen::VectorXd& offsets,
                             const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                             Eigen::VectorXd theta0, const NewtonOptions& opt,
                             bool keep_trace) {
  const int n = static_cast<int>(x.rows());
  const int k = static_cast<int>(x.cols());
  if (offsets.size() != n || y.size() != n || w.size() != n || theta0.size() != k)
    throw std::invalid_argument("logistic_newton: inconsistent dimensions");

  auto objective = [&](const Eigen::VectorXd& th) {
    const Eigen::VectorXd eta = x * th + offsets;
    double f = 0.5 * opt.ridge * th.squaredNorm();
    for (int i = 0; i < n; ++i) f += w(i) * (softplus(eta(i)) - y(i) * eta(i));
    return f;
  };

  NewtonResult res;
  project_ball(theta0, opt.ball_radius);
  Eigen::VectorXd theta = std::move(theta0);
  double f = objective(theta);
  if (keep_trace) res.objective_trace.push_back(f);

  double prev_gnorm = std::numeric_limits<double>::infinity();
  int grow_streak = 0;
  bool use_gradient = false;

  for (int iter = 0; iter < opt.max_iter; ++iter) {
    const Eigen::VectorXd eta = x * theta + offsets;
    Eigen::VectorXd sig(n), info(n);
    for (int i = 0; i < n; ++i) {
      sig(i) = sigmoid(eta(i));
      info(i) = sig(i) * sigmoid(-eta(i));
    }
    const Eigen::VectorXd grad =
        x.transpose() * (w.cwiseProduct(sig - y)) + opt.ridge * theta;
    res.stationarity = constrained_stationarity(theta, grad, opt.ball_radius);
    if (res.stationarity < opt.tol) break;

    const double gnorm = grad.norm();
    if (gnorm > 5.0 * prev_gnorm) {
      if (++grow_streak >= 2) use_gradient = true;
    } else {
      grow_streak = 0;
    }
    prev_gnorm = gnorm;

    Eigen::VectorXd dir;
    if (!use_gradient) {
      Eigen::MatrixXd hess = x.transpose() * (w.cwiseProduct(info)).asDiagonal() * x;
      hess.diagonal().array() += opt.ridge + 1e-14;
      dir = -hess.ldlt().solve(grad);
      if (!dir.allFinite()) use_gradient = true;
    }
    if (use_gradient) {
      res.fallback_used = true;
      dir = -grad / std::max(1.0, gnorm);
    }

    bool accepted = false;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      double t = 1.0;
      for (int half = 0; half <= 30; ++half) {
        Eigen::VectorXd cand = theta + t * dir;
        project_ball(cand, opt.ball_radius);
        const double fc = objective(cand);
        if (fc <= f) {
          theta = std::move(cand);
          f = fc;
          accepted = true;
          break;
        }
        t *= 0.5;
      }
      if (!accepted && attempt == 0) {
        // Newton direction unusable under the constraint; retry with gradient.
        res.fallback_used = true;
        dir = -grad / std::max(1.0, gnorm);
      }
    }
    ++res.iterations;
    if (keep_trace) res.objective_trace.push_back(f);
    if (!accepted) break;  // stationary up to line-search resolution
  }

  res.theta = std::move(theta);
  res.objective = f;
  return res;
}

Eigen::VectorXd row_logistic_solve(const Eigen::MatrixXd& features,
                                   const Eigen::VectorXd& offsets,
                                   const Eigen::VectorXd& outcomes,
                                   double ball_radius, double ridge, int max_iter,
                                   double tol, const Eigen::VectorXd* weights) {
  NewtonOptions opt;
  opt.ridge = ridge;
  opt.ball_radius = ball_radius;
  opt.max_iter = max_iter;
  opt.tol = tol;
  const Eigen::VectorXd w =
      weights ? *weights : Eigen::VectorXd::Ones(features.rows());
  NewtonResult res =
      logistic_newton(features, offsets, outcomes, w,
                      Eigen::VectorXd::Zero(features.cols()), opt);
  if (res.iterations >= max_iter && res.stationarity > 100.0 * tol)
    throw std::runtime_error("row_logistic_solve: Newton failed to converge");
  return res.theta;
}

ScoreMatrix spectral_init(const std::vector<Battle>& battles, int d1, int d2, int r,
                          double a0) {
  if (battles.empty()) throw std::invalid_argument("spectral_init: no battles");
  if (r < 1 || r > std::min(d1, d2)) throw std::invalid_argument("spectral_init: bad rank");
  check_battles(battles, d1, d2);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(d1, d2);
  Eigen::MatrixXd count = Eigen::MatrixXd::Zero(d1, d2);
  for (const Battle& b : battles) {
    const double s = b.weight * (b.outcome - 0.5);
    sum(b.atom.first, b.atom.category) += s;
    sum(b.atom.second, b.atom.category) -= s;
    count(b.atom.first, b.atom.category) += b.weight;
    count(b.atom.second, b.atom.category) += b.weight;
  }
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d1, d2);
  for (int u = 0; u < d2; ++u)
    for (int j = 0; j < d1; ++j)
      if (count(j, u) > 0.0) m(j, u) = 4.0 * sum(j, u) / count(j, u);
  const TruncationResult tr = truncate_rank(m, r);
  return ScoreMatrix(center_and_clip(clip_entries(tr.approx, a0), a0), a0);
}

FitReport altmin_fit(const std::vector<Battle>& battles, int d1, int d2,
                     const FitConfig& config) {
  if (battles.empty()) throw std::invalid_argument("altmin_fit: no battles");
  check_config(config, d1, d2);
  check_battles(battles, d1, d2);
  const int r = config.rank;
  const double a0 = config.clip_bound;
  const double ball = 2.0 * a0 * std::sqrt(static_cast<double>(std::max(d1, d2)));

  Timer total;
  Timer spectral_timer;
  ScoreMatrix init = spectral_init(battles, d1, d2, r, a0);
  const double spectral_seconds = spectral_timer.seconds();

  const auto by_cat = group_by_category(battles, d2);
  const auto by_row = group_by_model(battles, d1);

  NewtonOptions opt;
  opt.ridge = config.ridge;
  opt.ball_radius = ball;
  opt.max_iter = config.newton_max_iter;
  opt.tol = config.newton_tol;

  Eigen::MatrixXd t = init.entries();
  int iterations = 0;
  int fallbacks = 0;

  Timer altmin_timer;
  for (int round = 0; round < config.altmin_rounds; ++round) {
    TruncationResult tr = truncate_rank(t, r);
    const Eigen::VectorXd root = tr.frame.sigma.cwiseSqrt();
    Eigen::MatrixXd uf = tr.frame.u * root.asDiagonal();
    Eigen::MatrixXd vf = tr.frame.v * root.asDiagonal();

    // Category factor update: exact solve per column, rows fixed.
    for (int u = 0; u < d2; ++u) {
      const auto& idx = by_cat[u];
      if (idx.empty()) continue;
      const int n = static_cast<int>(idx.size());
      Eigen::MatrixXd x(n, r);
      Eigen::VectorXd y(n), w(n);
      for (int i = 0; i < n; ++i) {
        const Battle& b = battles[idx[i]];
        x.row(i) = uf.row(b.atom.first) - uf.row(b.atom.second);
        y(i) = b.outcome;
        w(i) = b.weight;
      }
      NewtonResult res = logistic_newton(x, Eigen::VectorXd::Zero(n), y, w,
                                         vf.row(u).transpose(), opt);
      vf.row(u) = res.theta.transpose();
      iterations += res.iterations;
      fallbacks += res.fallback_used ? 1 : 0;
    }
    t = uf * vf.transpose();

    // Model factor update: per-row solves against a fixed snapshot of the
    // opponents' scores.
    const Eigen::MatrixXd snapshot = t;
    Eigen::MatrixXd theta = uf;
    for (int j = 0; j < d1; ++j) {
      const auto& idx = by_row[j];
      if (idx.empty()) continue;
      const int n = static_cast<int>(idx.size());
      Eigen::MatrixXd x(n, r);
      Eigen::VectorXd off(n), y(n), w(n);
      for (int i = 0; i < n; ++i) {
        const Battle& b = battles[idx[i]];
        const bool is_first = (b.atom.first == j);
        const int opp = is_first ? b.atom.second : b.atom.first;
        x.row(i) = vf.row(b.atom.category);
        off(i) = -snapshot(opp, b.atom.category);
        y(i) = is_first ? b.outcome : 1 - b.outcome;
        w(i) = b.weight;
      }
      NewtonResult res = logistic_newton(x, off, y, w, uf.row(j).transpose(), opt);
      theta.row(j) = res.theta.transpose();
      iterations += res.iterations;
      fallbacks += res.fallback_used ? 1 : 0;
    }
    t = theta * vf.transpose();

    TruncationResult back = truncate_rank(t, r);
    t = center_and_clip(clip_entries(back.approx, a0), a0);
  }
  const double altmin_seconds = altmin_timer.seconds();

  TruncationResult fin = finish_rank_r(t, r, a0);
  FitReport report{ScoreMatrix(fin.approx, a0), fin.frame};
  report.iterations = iterations;
  report.newton_fallbacks = fallbacks;
  report.final_nll = battle_nll(battles, report.estimate.entries());
  report.stage_seconds["spectral"] = spectral_seconds;
  report.stage_seconds["altmin"] = altmin_seconds;
  report.stage_seconds["total"] = total.seconds();
  return report;
}

FitReport refine_entrywise(const ScoreMatrix& t_init, const std::vector<Battle>& battles,
                           int d1, int d2, const FitConfig& config) {
  if (battles.empty()) throw std::invalid_argument("refine_entrywise: no battles");
  check_config(config, d1, d2);
  check_battles(battles, d1, d2);
  if (t_init.d1() != d1 || t_init.d2() != d2)
    throw std::invalid_argument("refine_entrywise: initializer dimension mismatch");
  const int r = config.rank;
  const double a0 = config.clip_bound;

  Timer total;
  const TruncationResult tr = truncate_rank(t_init.entries(), r);
  const Eigen::VectorXd root = tr.frame.sigma.cwiseSqrt();
  const Eigen::MatrixXd theta_hat = tr.frame.u * root.asDiagonal();  // d1 x r
  const Eigen::MatrixXd a_hat = tr.frame.v * root.asDiagonal();      // d2 x r
  const Eigen::MatrixXd offsets_src = clip_entries(t_init.entries(), a0);

  // Fold 0 is reserved for the initializer when splitting three ways.
  const bool split = (config.refinement_splits == RefinementSplits::ThreeWay);
  auto in_left = [&](int i) { return !split || (i % 3 == 1); };
  auto in_right = [&](int i) { return !split || (i % 3 == 2); };

  NewtonOptions opt;
  opt.ridge = config.ridge;
  opt.max_iter = config.newton_max_iter;
  opt.tol = config.newton_tol;

  FitReport report{t_init, tr.frame};
  int iterations = 0;
  int fallbacks = 0;

  // Model-side solves: offset logistic regression per row, category factor fixed.
  const auto by_row = group_by_model(battles, d1);
  Eigen::MatrixXd theta_tilde = theta_hat;
  opt.ball_radius = 2.0 * a0 * std::sqrt(static_cast<double>(d1));
  for (int u = 0; u < d1; ++u) {
    std::vector<int> idx;
    for (int i : by_row[u])
      if (in_left(i)) idx.push_back(i);
    if (idx.empty()) {
      report.rows_kept_from_init.push_back(u);
      continue;
    }
    const int n = static_cast<int>(idx.size());
    Eigen::MatrixXd x(n, r);
    Eigen::VectorXd off(n), z(n), w(n);
    for (int i = 0; i < n; ++i) {
      const Battle& b = battles[idx[i]];
      const bool is_first = (b.atom.first == u);
      const int opp = is_first ? b.atom.second : b.atom.first;
      x.row(i) = a_hat.row(b.atom.category);
      off(i) = -offsets_src(opp, b.atom.category);
      z(i) = is_first ? b.outcome : 1 - b.outcome;
      w(i) = b.weight;
    }
    NewtonResult res = logistic_newton(x, off, z, w, theta_hat.row(u).transpose(), opt);
    theta_tilde.row(u) = res.theta.transpose();
    iterations += res.iterations;
    fallbacks += res.fallback_used ? 1 : 0;
  }

  const Eigen::MatrixXd theta_bar = center_columns(theta_tilde);

  // Category-side solves: plain logistic regression on pairwise differences.
  const auto by_cat = group_by_category(battles, d2);
  Eigen::MatrixXd a_tilde = a_hat;
  opt.ball_radius = 2.0 * a0 * std::sqrt(static_cast<double>(d2));
  for (int j = 0; j < d2; ++j) {
    std::vector<int> idx;
    for (int i : by_cat[j])
      if (in_right(i)) idx.push_back(i);
    if (idx.empty()) {
      report.cols_kept_from_init.push_back(j);
      continue;
    }
    const int n = static_cast<int>(idx.size());
    Eigen::MatrixXd x(n, r);
    Eigen::VectorXd y(n), w(n);
    for (int i = 0; i < n; ++i) {
      const Battle& b = battles[idx[i]];
      x.row(i) = theta_bar.row(b.atom.first) - theta_bar.row(b.atom.second);
      y(i) = b.outcome;
      w(i) = b.weight;
    }
    NewtonResult res = logistic_newton(x, Eigen::VectorXd::Zero(n), y, w,
                                       a_hat.row(j).transpose(), opt);
    a_tilde.row(j) = res.theta.transpose();
    iterations += res.iterations;
    fallbacks += res.fallback_used ? 1 : 0;
  }

  TruncationResult fin = finish_rank_r(theta_bar * a_tilde.transpose(), r, a0);
  report.estimate = ScoreMatrix(fin.approx, a0);
  report.frame = fin.frame;
  report.iterations = iterations;
  report.newton_fallbacks = fallbacks;
  report.final_nll = battle_nll(battles, report.estimate.entries());
  report.stage_seconds["refine"] = total.seconds();
  return report;
}

FitReport fit_pipeline(const std::vector<Battle>& battles, int d1, int d2,
                       const FitConfig& config) {
  FitReport base = altmin_fit(battles, d1, d2, config);
  FitReport refined = refine_entrywise(base.estimate, battles, d1, d2, config);
  refined.iterations += base.iterations;
  refined.newton_fallbacks += base.newton_fallbacks;
  for (const auto& [k, v] : base.stage_seconds) refined.stage_seconds[k] = v;
  return refined;
}

ScoreMatrix naive_per_task_btl(const std::vector<Battle>& battles, int d1, int d2) {
  check_battles(battles, d1, d2);
  const double ridge = 1e-4;
  const auto by_cat = group_by_category(battles, d2);
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(d1, d2);

  for (int u = 0; u < d2; ++u) {
    const auto& idx = by_cat[u];
    if (idx.empty()) continue;
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(d1);
    auto objective = [&](const Eigen::VectorXd& th) {
      double f = 0.5 * ridge * th.squaredNorm();
      for (int i : idx) {
        const Battle& b = battles[i];
        const double eta = th(b.atom.first) - th(b.atom.second);
        f += b.weight * (softplus(eta) - b.outcome * eta);
      }
      return f;
    };
    double f = objective(theta);
    for (int iter = 0; iter < 60; ++iter) {
      Eigen::VectorXd grad = ridge * theta;
      Eigen::MatrixXd hess = ridge * Eigen::MatrixXd::Identity(d1, d1);
      for (int i : idx) {
        const Battle& b = battles[i];
        const int p = b.atom.first, q = b.atom.second;
        const double eta = theta(p) - theta(q);
        const double resid = b.weight * (sigmoid(eta) - b.outcome);
        grad(p) += resid;
        grad(q) -= resid;
        const double info = b.weight * fisher_info(eta);
        hess(p, p) += info;
        hess(q, q) += info;
        hess(p, q) -= info;
        hess(q, p) -= info;
      }
      if (grad.norm() < 1e-9) break;
      const Eigen::VectorXd dir = -hess.ldlt().solve(grad);
      double step = 1.0;
      for (int half = 0; half <= 30; ++half) {
        const Eigen::VectorXd cand = theta + step * dir;
        const double fc = objective(cand);
        if (fc <= f) {
          theta = cand;
          f = fc;
          break;
        }
        step *= 0.5;
      }
    }
    // recenter over the models seen in this category so the column sums to
    // zero exactly while unseen models keep an exact zero
    std::vector<bool> seen(d1, false);
    for (int i : idx) {
      seen[battles[i].atom.first] = true;
      seen[battles[i].atom.second] = true;
    }
    double sum = 0.0;
    int n_seen = 0;
    for (int j = 0; j < d1; ++j)
      if (seen[j]) {
        sum += theta(j);
        ++n_seen;
      }
    const double shift = sum / n_seen;
    for (int j = 0; j < d1; ++j)
      if (seen[j]) theta(j) -= shift;
    t.col(u) = theta;
  }

  const double bound = std::max(1e-8, t.cwiseAbs().maxCoeff());
  return ScoreMatrix(t, bound);
}

}  // namespace arena
