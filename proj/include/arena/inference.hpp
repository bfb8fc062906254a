#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "arena/fitting.hpp"
#include "arena/geometry.hpp"
#include "arena/pairwise.hpp"

namespace arena {

enum class Normalization { Empirical, Population };

// Weighted comparison design operator G: per-category weighted Laplacians,
// stored as a flat list of weighted atoms. <H1, G H2> = sum_u h1_u' L_u h2_u.
class InfoOperator {
 public:
  struct WeightedAtom {
    int category;
    int first;
    int second;
    double coef;
  };

  InfoOperator(int d1, int d2, Normalization norm, std::vector<WeightedAtom> atoms);

  int d1() const { return d1_; }
  int d2() const { return d2_; }
  Normalization normalization() const { return norm_; }
  double cpw() const { return 0.5 * d2_ * (d1_ - 1); }
  const std::vector<WeightedAtom>& atoms() const { return atoms_; }

  // Materialize one category's weighted Laplacian.
  Eigen::MatrixXd laplacian(int category) const;

  Eigen::MatrixXd apply(const Eigen::MatrixXd& h) const;

 private:
  int d1_;
  int d2_;
  Normalization norm_;
  std::vector<WeightedAtom> atoms_;
};

InfoOperator build_plugin_G(const std::vector<Battle>& battles, const ScoreMatrix& t_hat);

InfoOperator build_population_G(const ScoreMatrix& truth, const SamplingModel& s);

Eigen::MatrixXd apply_G(const InfoOperator& op, const Eigen::MatrixXd& h);

// Target functional: a fixed sparse linear functional, a win probability, or
// a within-category score contrast.
class FunctionalSpec {
 public:
  enum class Kind { LinearEntry, WinProb, CategoryContrast };

  struct Term {
    int row;
    int col;
    double coef;
  };

  static FunctionalSpec linear_entry(std::vector<Term> terms);
  static FunctionalSpec win_prob(int a, int b, int category);
  static FunctionalSpec category_contrast(int a, int b, int category);

  Kind kind() const { return kind_; }
  const std::vector<Term>& terms() const { return terms_; }
  int a() const { return a_; }
  int b() const { return b_; }
  int category() const { return category_; }

  void check_dims(int d1, int d2) const;

 private:
  FunctionalSpec() = default;
  Kind kind_ = Kind::LinearEntry;
  std::vector<Term> terms_;
  int a_ = 0, b_ = 0, category_ = 0;
};

double functional_value(const FunctionalSpec& spec, const Eigen::MatrixXd& t);

Eigen::MatrixXd functional_gradient(const FunctionalSpec& spec, const Eigen::MatrixXd& t);

// Tangent coordinates (A, C) with H = U A' + Q C V'.
struct Coords {
  Eigen::MatrixXd a;  // d2 x r
  Eigen::MatrixXd c;  // (d1-1) x r
};

Eigen::MatrixXd coords_to_matrix(const TangentFrame& frame, const Coords& coords);
Coords matrix_to_coords(const TangentFrame& frame, const Eigen::MatrixXd& h);

// Coordinate form of the restricted operator. Coordinate layout: A entries
// first, row-major by (category, factor); then C, row-major by (row, factor).
Eigen::MatrixXd build_K(const TangentFrame& frame, const InfoOperator& op);

enum class SolveRoute { Auto, Dense, Iterative };

// Solve P_T G P_T H = P_T Gamma for H in the tangent space. Dense route:
// pseudo-inverse of K (eigendecomposition, relative threshold 1e-8). Iterative
// route: conjugate gradients on the ambient operator. Both verify the residual
// |P_T(G H) - P_T Gamma|_F <= 1e-6 |P_T Gamma|_F.
Eigen::MatrixXd solve_information_equation(const TangentFrame& frame,
                                           const InfoOperator& op,
                                           const Eigen::MatrixXd& gamma,
                                           SolveRoute route = SolveRoute::Auto);

double efficiency_bound(const TangentFrame& frame, const InfoOperator& op,
                        const Eigen::MatrixXd& gamma, SolveRoute route = SolveRoute::Auto);

// Max column l1 norm of the restricted inverse over basis right-hand sides,
// scaled by 1/(2 c_pw). Heuristic bound diagnostic; refuses d1*d2 > 2000.
double entrywise_inverse_diagnostic(const TangentFrame& frame, const InfoOperator& op);

enum class Method { Efficient, Whitened, IpwKnown, IpwEstimated, EfficientNonuniform };

std::string method_name(Method m);

struct EstimateReport {
  double estimate = 0.0;
  double variance = 0.0;        // V-hat, per-observation influence second moment
  double standard_error = 0.0;  // sqrt(V-hat / N)
  double ci_low = 0.0;
  double ci_high = 0.0;
  double level = 0.95;
  int n_used = 0;
  Method method = Method::Efficient;
  int folds = 0;
  bool degenerate_variance = false;
};

struct CrossFitOptions {
  int folds = 6;
  double level = 0.95;
  std::uint64_t seed = 1;
  FitConfig fit;
};

// Cross-fitting plan: per-fold out-of-fold fits and plug-in operators, shared
// across estimators and targets.
struct FoldModel {
  FitReport fit;
  InfoOperator plugin_g;
  SamplingModel estimated_sampling;
};

struct CrossFitPlan {
  int d1 = 0;
  int d2 = 0;
  std::vector<int> fold_of;  // per battle
  std::vector<FoldModel> folds;
  double total_weight = 0.0;
};

CrossFitPlan build_crossfit_plan(const std::vector<Battle>& battles, int d1, int d2,
                                 const CrossFitOptions& options);

EstimateReport one_step_from_plan(const CrossFitPlan& plan,
                                  const std::vector<Battle>& battles,
                                  const FunctionalSpec& spec, Method method,
                                  double level,
                                  const std::optional<SamplingModel>& known_sampling);

EstimateReport efficient_one_step(const std::vector<Battle>& battles, int d1, int d2,
                                  const FunctionalSpec& spec,
                                  const CrossFitOptions& options);

EstimateReport whitened_one_step(const std::vector<Battle>& battles, int d1, int d2,
                                 const FunctionalSpec& spec,
                                 const CrossFitOptions& options);

struct IpwSampling {
  // Known carries the true design; Estimate fits marginals per fold.
  std::optional<SamplingModel> known;
};

EstimateReport ipw_one_step(const std::vector<Battle>& battles, int d1, int d2,
                            const FunctionalSpec& spec, const CrossFitOptions& options,
                            const IpwSampling& sampling);

EstimateReport efficient_nonuniform_one_step(const std::vector<Battle>& battles, int d1,
                                             int d2, const FunctionalSpec& spec,
                                             const CrossFitOptions& options);

// Asymptotic variances at the truth, for calibration ratios.
double oracle_efficient_variance(const ScoreMatrix& truth, const SamplingModel& s,
                                 const FunctionalSpec& spec, int rank);
double oracle_whitened_variance(const ScoreMatrix& truth, const SamplingModel& s,
                                const FunctionalSpec& spec, int rank, bool ipw_weighted);

}  // namespace arena
