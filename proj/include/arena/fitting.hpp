#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "arena/geometry.hpp"
#include "arena/pairwise.hpp"

namespace arena {

enum class RefinementSplits { Off, ThreeWay };

struct FitConfig {
  int rank = 1;
  int altmin_rounds = 3;
  double clip_bound = 1.0;  // a0
  int newton_max_iter = 60;
  double newton_tol = 1e-8;
  double ridge = 1e-6;
  RefinementSplits refinement_splits = RefinementSplits::Off;
};

struct FitReport {
  ScoreMatrix estimate;
  TangentFrame frame;
  int iterations = 0;          // Newton iterations summed over subproblems
  double final_nll = 0.0;      // weighted BTL NLL of the estimate on the input battles
  std::map<std::string, double> stage_seconds;
  int newton_fallbacks = 0;    // subproblems that fell back to gradient steps
  std::vector<int> rows_kept_from_init;  // zero-observation rows in refinement
  std::vector<int> cols_kept_from_init;
};

// Constrained ridge logistic regression: eta_i = x_i'theta + offset_i,
// minimize sum_i w_i (softplus(eta_i) - y_i eta_i) + ridge/2 |theta|^2
// over the ball |theta| <= ball_radius. Newton with projected step-halving.
struct NewtonOptions {
  double ridge = 0.0;
  double ball_radius = 1e100;
  int max_iter = 60;
  double tol = 1e-8;
};

struct NewtonResult {
  Eigen::VectorXd theta;
  int iterations = 0;
  bool fallback_used = false;
  double objective = 0.0;
  double stationarity = 0.0;  // projected gradient norm at exit
  std::vector<double> objective_trace;  // filled when trace requested
};

NewtonResult logistic_newton(const Eigen::MatrixXd& x, const Eigen::VectorXd& offsets,
                             const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                             Eigen::VectorXd theta0, const NewtonOptions& opt,
                             bool keep_trace = false);

// Public single-problem wrapper; throws on convergence failure
// (max_iter reached with stationarity > 100 * tol).
Eigen::VectorXd row_logistic_solve(const Eigen::MatrixXd& features,
                                   const Eigen::VectorXd& offsets,
                                   const Eigen::VectorXd& outcomes,
                                   double ball_radius, double ridge,
                                   int max_iter = 60, double tol = 1e-8,
                                   const Eigen::VectorXd* weights = nullptr);

ScoreMatrix spectral_init(const std::vector<Battle>& battles, int d1, int d2, int r,
                          double a0);

FitReport altmin_fit(const std::vector<Battle>& battles, int d1, int d2,
                     const FitConfig& config);

FitReport refine_entrywise(const ScoreMatrix& t_init, const std::vector<Battle>& battles,
                           int d1, int d2, const FitConfig& config);

// altmin_fit followed by refine_entrywise; the standard fitting pipeline.
FitReport fit_pipeline(const std::vector<Battle>& battles, int d1, int d2,
                       const FitConfig& config);

ScoreMatrix naive_per_task_btl(const std::vector<Battle>& battles, int d1, int d2);

// Weighted BTL negative log-likelihood of a score matrix on battles.
double battle_nll(const std::vector<Battle>& battles, const Eigen::MatrixXd& scores);

}  // namespace arena
