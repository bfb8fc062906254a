#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "arena/errors.hpp"
#include "arena/fitting.hpp"
#include "arena/geometry.hpp"
#include "arena/inference.hpp"
#include "arena/pairwise.hpp"
#include "arena/rng.hpp"

using namespace arena;

namespace {

Eigen::MatrixXd rank_r_truth(int d1, int d2, int r, double alpha, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd theta(d1, r), a(d2, r);
  for (int k = 0; k < r; ++k) {
    for (int i = 0; i < d1; ++i) theta(i, k) = rng.normal();
    for (int j = 0; j < d2; ++j) a(j, k) = rng.normal();
  }
  Eigen::MatrixXd t = center_columns(theta * a.transpose());
  t *= alpha / t.cwiseAbs().maxCoeff();
  return t;
}

std::vector<Battle> simulate_battles(const Eigen::MatrixXd& truth,
                                     const SamplingModel& s, int n,
                                     std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Battle> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back(sample_battle(truth, s, rng));
  return out;
}

Eigen::MatrixXd random_matrix(int rows, int cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = rng.normal();
  return m;
}

// documented coordinate layout: A block row-major by (category, factor), then
// C block row-major by (row, factor)
Eigen::VectorXd coords_vec(const Coords& c) {
  const int d2 = static_cast<int>(c.a.rows());
  const int d1m = static_cast<int>(c.c.rows());
  const int r = static_cast<int>(c.a.cols());
  Eigen::VectorXd v((d2 + d1m) * r);
  for (int u = 0; u < d2; ++u)
    for (int k = 0; k < r; ++k) v(u * r + k) = c.a(u, k);
  for (int i = 0; i < d1m; ++i)
    for (int k = 0; k < r; ++k) v(d2 * r + i * r + k) = c.c(i, k);
  return v;
}

// design second-moment operator (no information weighting)
InfoOperator design_second_moment(const SamplingModel& s) {
  std::vector<InfoOperator::WeightedAtom> atoms;
  for (const DesignAtom& a : enumerate_atoms(s.d1(), s.d2()))
    atoms.push_back({a.category, a.first, a.second, atom_probability(s, a)});
  return InfoOperator(s.d1(), s.d2(), Normalization::Population, std::move(atoms));
}

Eigen::MatrixXd ambient_operator_matrix(const TangentFrame& frame,
                                        const InfoOperator& op) {
  const int d1 = frame.d1(), d2 = frame.d2();
  Eigen::MatrixXd m(d1 * d2, d1 * d2);
  Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(d1, d2);
  for (int j = 0; j < d1 * d2; ++j) {
    basis(j % d1, j / d1) = 1.0;
    const Eigen::MatrixXd out =
        tangent_project(frame, op.apply(tangent_project(frame, basis)));
    basis(j % d1, j / d1) = 0.0;
    m.col(j) = Eigen::Map<const Eigen::VectorXd>(out.data(), d1 * d2);
  }
  return m;
}

}  // namespace

TEST_CASE("population information operator at zero scores is a centering scale") {
  for (auto [d1, d2] : {std::pair{3, 2}, std::pair{5, 4}}) {
    const ScoreMatrix zero(Eigen::MatrixXd::Zero(d1, d2), 1.0);
    const InfoOperator g = build_population_G(zero, SamplingModel::uniform(d1, d2));
    Rng rng(13);
    const Eigen::MatrixXd h = random_matrix(d1, d2, rng);
    const double lambda = 1.0 / (2.0 * d2 * (d1 - 1));
    CHECK((g.apply(h) - lambda * center_columns(h)).norm() <= 1e-12);
    CHECK(lambda == doctest::Approx(1.0 / (4.0 * g.cpw())).epsilon(1e-15));

    // literal enumeration, independent of InfoOperator::apply
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d1, d2);
    const SamplingModel s = SamplingModel::uniform(d1, d2);
    for (const DesignAtom& a : enumerate_atoms(d1, d2)) {
      const double coef = atom_probability(s, a) * fisher_info(0.0);
      const double inner = atom_inner(h, a);
      acc(a.first, a.category) += coef * inner;
      acc(a.second, a.category) -= coef * inner;
    }
    CHECK((acc - lambda * center_columns(h)).norm() <= 1e-12);
  }
  // d1 = 3, d2 = 2 pins the scale at exactly 1/8
  CHECK(1.0 / (2.0 * 2 * (3 - 1)) == doctest::Approx(0.125).epsilon(1e-15));
}

TEST_CASE("uniform design second moment inverts the pair count scale") {
  const int d1 = 7, d2 = 3;
  const InfoOperator w = design_second_moment(SamplingModel::uniform(d1, d2));
  Rng rng(29);
  const Eigen::MatrixXd h = random_matrix(d1, d2, rng);
  CHECK((w.cpw() * w.apply(h) - center_columns(h)).norm() <= 1e-12);
}

TEST_CASE("InfoOperator laplacians are PSD with zero row sums") {
  const int d1 = 5, d2 = 2;
  const Eigen::MatrixXd truth = rank_r_truth(d1, d2, 1, 0.9, 5);
  const std::vector<Battle> battles =
      simulate_battles(truth, SamplingModel::uniform(d1, d2), 2000, 50);
  const InfoOperator g = build_plugin_G(battles, ScoreMatrix(truth, 0.9));
  double coef_total = 0.0;
  for (int u = 0; u < d2; ++u) {
    const Eigen::MatrixXd lap = g.laplacian(u);
    CHECK((lap - lap.transpose()).norm() <= 1e-14);
    CHECK(lap.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-14);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lap);
    CHECK(eig.eigenvalues()(0) >= -1e-12);
    coef_total += lap.trace() / 2.0;  // each atom contributes 2*coef to the trace
  }
  // total mass is the average fisher information, at most 1/4
  CHECK(coef_total <= 0.25 + 1e-12);
  CHECK(coef_total > 0.15);  // scores are mild, information near 1/4

  // operator application agrees with the laplacian picture columnwise
  Rng rng(31);
  const Eigen::MatrixXd h = random_matrix(d1, d2, rng);
  const Eigen::MatrixXd out = g.apply(h);
  for (int u = 0; u < d2; ++u)
    CHECK((out.col(u) - g.laplacian(u) * h.col(u)).norm() <= 1e-12);

  CHECK_THROWS_AS(InfoOperator(d1, d2, Normalization::Empirical,
                               {{0, 1, 1, 0.1}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(InfoOperator(d1, d2, Normalization::Empirical,
                               {{0, 0, 1, -0.1}}),
                  std::invalid_argument);
}

TEST_CASE("functional specs evaluate and differentiate correctly") {
  Eigen::MatrixXd t(4, 2);
  t << 0.5, -0.1, -0.3, 0.4, 0.1, -0.5, -0.3, 0.2;
  const FunctionalSpec entry = FunctionalSpec::linear_entry({{1, 0, 2.0}, {1, 0, 1.0}});
  CHECK(functional_value(entry, t) == doctest::Approx(3.0 * t(1, 0)).epsilon(1e-14));
  CHECK(functional_gradient(entry, t)(1, 0) == doctest::Approx(3.0));

  const FunctionalSpec wp = FunctionalSpec::win_prob(0, 2, 1);
  CHECK(functional_value(wp, t) ==
        doctest::Approx(sigmoid(t(0, 1) - t(2, 1))).epsilon(1e-14));
  // numeric gradient oracle
  const Eigen::MatrixXd g = functional_gradient(wp, t);
  const double eps = 1e-6;
  for (int j = 0; j < t.cols(); ++j)
    for (int i = 0; i < t.rows(); ++i) {
      Eigen::MatrixXd hi = t, lo = t;
      hi(i, j) += eps;
      lo(i, j) -= eps;
      const double num = (functional_value(wp, hi) - functional_value(wp, lo)) / (2 * eps);
      CHECK(g(i, j) == doctest::Approx(num).epsilon(1e-6));
    }

  const FunctionalSpec con = FunctionalSpec::category_contrast(3, 1, 0);
  CHECK(functional_value(con, t) == doctest::Approx(t(3, 0) - t(1, 0)).epsilon(1e-14));
  CHECK(functional_gradient(con, t)(3, 0) == 1.0);
  CHECK(functional_gradient(con, t)(1, 0) == -1.0);

  CHECK_THROWS_AS(FunctionalSpec::win_prob(2, 2, 0), std::invalid_argument);
  CHECK_THROWS_AS(FunctionalSpec::category_contrast(1, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(functional_value(FunctionalSpec::win_prob(0, 9, 0), t),
                  std::invalid_argument);
  CHECK_THROWS_AS(FunctionalSpec::linear_entry({}), std::invalid_argument);
}

TEST_CASE("coordinate maps are adjoint and K matches the literal quadratic form") {
  const int d1 = 6, d2 = 4, r = 2;
  const Eigen::MatrixXd truth = rank_r_truth(d1, d2, r, 1.0, 23);
  const TangentFrame frame = truncate_rank(truth, r).frame;
  Rng rng(37);

  // adjointness: <J theta, H> = <theta, J^T H>
  for (int trial = 0; trial < 3; ++trial) {
    Coords theta;
    theta.a = random_matrix(d2, r, rng);
    theta.c = random_matrix(d1 - 1, r, rng);
    const Eigen::MatrixXd h = random_matrix(d1, d2, rng);
    const double lhs = (coords_to_matrix(frame, theta).array() * h.array()).sum();
    const double rhs = coords_vec(theta).dot(coords_vec(matrix_to_coords(frame, h)));
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }

  const InfoOperator g =
      build_population_G(ScoreMatrix(truth, 1.0), SamplingModel::uniform(d1, d2));
  const Eigen::MatrixXd k = build_K(frame, g);
  const int m = (d2 + d1 - 1) * r;
  REQUIRE(k.rows() == m);
  CHECK((k - k.transpose()).norm() <= 1e-12);

  // literal oracle: K = J^T G J with J and G built column by column
  Eigen::MatrixXd j(d1 * d2, m);
  for (int col = 0; col < m; ++col) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
    e(col) = 1.0;
    Coords c;
    c.a.resize(d2, r);
    c.c.resize(d1 - 1, r);
    for (int u = 0; u < d2; ++u)
      for (int kk = 0; kk < r; ++kk) c.a(u, kk) = e(u * r + kk);
    for (int i = 0; i < d1 - 1; ++i)
      for (int kk = 0; kk < r; ++kk) c.c(i, kk) = e(d2 * r + i * r + kk);
    const Eigen::MatrixXd basis = coords_to_matrix(frame, c);
    j.col(col) = Eigen::Map<const Eigen::VectorXd>(basis.data(), d1 * d2);
  }
  Eigen::MatrixXd g_mat(d1 * d2, d1 * d2);
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(d1, d2);
  for (int col = 0; col < d1 * d2; ++col) {
    e(col % d1, col / d1) = 1.0;
    const Eigen::MatrixXd out = g.apply(e);
    e(col % d1, col / d1) = 0.0;
    g_mat.col(col) = Eigen::Map<const Eigen::VectorXd>(out.data(), d1 * d2);
  }
  const Eigen::MatrixXd k_oracle = j.transpose() * g_mat * j;
  CHECK((k - k_oracle).norm() <= 1e-10 * std::max(1.0, k_oracle.norm()));

  // rank of K: overlap between the two coordinate blocks removes r^2
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(k);
  const double cut = 1e-8 * eig.eigenvalues()(m - 1);
  int rank = 0;
  for (int i = 0; i < m; ++i)
    if (eig.eigenvalues()(i) > cut) ++rank;
  CHECK(rank == m - r * r);

  // the coordinate gradient of any target is orthogonal to the null space
  const FunctionalSpec spec = FunctionalSpec::linear_entry({{0, 0, 1.0}});
  const Eigen::VectorXd gvec =
      coords_vec(matrix_to_coords(frame, functional_gradient(spec, truth)));
  for (int i = 0; i < m; ++i)
    if (eig.eigenvalues()(i) <= cut)
      CHECK(std::abs(eig.eigenvectors().col(i).dot(gvec)) <= 1e-8 * gvec.norm());
}

TEST_CASE("information equation solves agree across routes and with the ambient oracle") {
  const int d1 = 12, d2 = 3, r = 2;
  const Eigen::MatrixXd truth = rank_r_truth(d1, d2, r, 1.0, 41);
  const TangentFrame frame = truncate_rank(truth, r).frame;
  const std::vector<Battle> battles =
      simulate_battles(truth, SamplingModel::uniform(d1, d2), 30000, 410);
  const InfoOperator g = build_plugin_G(battles, ScoreMatrix(truth, 1.0));
  const FunctionalSpec spec = FunctionalSpec::win_prob(0, 3, 1);
  const Eigen::MatrixXd gamma = functional_gradient(spec, truth);
  const Eigen::MatrixXd b = tangent_project(frame, gamma);

  const Eigen::MatrixXd dense =
      solve_information_equation(frame, g, gamma, SolveRoute::Dense);
  const Eigen::MatrixXd iter =
      solve_information_equation(frame, g, gamma, SolveRoute::Iterative);
  CHECK((dense - iter).norm() <= 1e-6 * std::max(1.0, dense.norm()));

  // both satisfy the projected equation
  for (const Eigen::MatrixXd& h : {dense, iter}) {
    CHECK((tangent_project(frame, g.apply(h)) - b).norm() <= 1e-6 * b.norm());
    CHECK((tangent_project(frame, h) - h).norm() <= 1e-9 * std::max(1.0, h.norm()));
  }

  // ambient pseudo-inverse oracle
  const Eigen::MatrixXd m = ambient_operator_matrix(frame, g);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  const double cut = 1e-10 * eig.eigenvalues()(m.rows() - 1);
  const Eigen::VectorXd bv = Eigen::Map<const Eigen::VectorXd>(b.data(), d1 * d2);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(d1 * d2);
  for (int i = 0; i < m.rows(); ++i)
    if (eig.eigenvalues()(i) > cut)
      x += eig.eigenvectors().col(i) *
           (eig.eigenvectors().col(i).dot(bv) / eig.eigenvalues()(i));
  const Eigen::MatrixXd oracle = Eigen::Map<const Eigen::MatrixXd>(x.data(), d1, d2);
  CHECK((dense - oracle).norm() <= 1e-6 * std::max(1.0, oracle.norm()));

  // zero target short-circuits
  const Eigen::MatrixXd zero = solve_information_equation(
      frame, g, Eigen::MatrixXd::Zero(d1, d2), SolveRoute::Auto);
  CHECK(zero.norm() == 0.0);
}

TEST_CASE("efficiency bound equals the attained influence second moment") {
  const int d1 = 9, d2 = 3, r = 2;
  const Eigen::MatrixXd truth = rank_r_truth(d1, d2, r, 1.0, 53);
  const ScoreMatrix tm(truth, 1.0);
  const SamplingModel s = SamplingModel::uniform(d1, d2);
  const TangentFrame frame = truncate_rank(truth, r).frame;
  const InfoOperator g = build_population_G(tm, s);
  const FunctionalSpec spec = FunctionalSpec::category_contrast(0, 4, 2);
  const Eigen::MatrixXd gamma = functional_gradient(spec, truth);

  const double bound = efficiency_bound(frame, g, gamma);
  CHECK(bound > 0.0);
  const Eigen::MatrixXd h_star = solve_information_equation(frame, g, gamma);
  // E[ I(eta) <H*, X>^2 ] over the design law
  double attained = 0.0;
  for (const DesignAtom& a : enumerate_atoms(d1, d2)) {
    const double eta = atom_inner(truth, a);
    const double inner = atom_inner(h_star, a);
    attained += atom_probability(s, a) * fisher_info(eta) * inner * inner;
  }
  CHECK(attained == doctest::Approx(bound).epsilon(1e-8));
}

TEST_CASE("whitened direction cancels the plug-in gradient to first order") {
  const int d1 = 5, d2 = 3, r = 2;
  const Eigen::MatrixXd truth = rank_r_truth(d1, d2, r, 0.9, 61);
  const TangentFrame frame = truncate_rank(truth, r).frame;
  const SamplingModel s = SamplingModel::uniform(d1, d2);
  const FunctionalSpec spec = FunctionalSpec::win_prob(1, 3, 0);
  const Eigen::MatrixXd gamma = functional_gradient(spec, truth);
  const Eigen::MatrixXd p_gamma = tangent_project(frame, gamma);
  const double cpw = 0.5 * d2 * (d1 - 1);
  const Eigen::MatrixXd h_ws = cpw * p_gamma;

  // exact algebraic identity: the design second moment undoes the pair scale
  const InfoOperator w = design_second_moment(s);
  CHECK((w.apply(h_ws) - p_gamma).norm() <= 1e-12);

  // numeric population check: plug-in bias is first-order, corrected is not
  Rng rng(67);
  Eigen::MatrixXd delta = tangent_project(frame, random_matrix(d1, d2, rng));
  delta /= delta.norm();
  auto corrected = [&](double t) {
    const Eigen::MatrixXd fitted = truncate_rank(truth + t * delta, r).approx;
    const TangentFrame f = truncate_rank(truth + t * delta, r).frame;
    const Eigen::MatrixXd dir =
        cpw * tangent_project(f, functional_gradient(spec, fitted));
    double correction = 0.0;
    for (const DesignAtom& a : enumerate_atoms(d1, d2)) {
      const double eta_true = atom_inner(truth, a);
      const double eta_fit = atom_inner(fitted, a);
      const double mean_whitened =
          (sigmoid(eta_true) - sigmoid(eta_fit)) / fisher_info(eta_fit);
      correction += atom_probability(s, a) * mean_whitened * atom_inner(dir, a);
    }
    return functional_value(spec, fitted) + correction;
  };
  auto plugin_only = [&](double t) {
    return functional_value(spec, truncate_rank(truth + t * delta, r).approx);
  };
  const double t = 1e-4;
  const double corrected_slope = (corrected(t) - corrected(-t)) / (2 * t);
  const double plugin_slope = (plugin_only(t) - plugin_only(-t)) / (2 * t);
  const double scale =
      std::abs((p_gamma.array() * delta.array()).sum());
  CHECK(std::abs(plugin_slope) > 0.1 * scale);
  CHECK(std::abs(corrected_slope) <= 0.02 * std::abs(plugin_slope));
}

TEST_CASE("oracle variances coincide in the weak-signal limit and order correctly") {
  const int d1 = 8, d2 = 3, r = 2;
  const SamplingModel s = SamplingModel::uniform(d1, d2);
  const FunctionalSpec spec = FunctionalSpec::category_contrast(0, 5, 1);

  // weak signal: whitening is immaterial and both match the closed form
  {
    const Eigen::MatrixXd truth = rank_r_truth(d1, d2, r, 1e-3, 71);
    const ScoreMatrix tm(truth, 1e-3);
    const double v_eff = oracle_efficient_variance(tm, s, spec, r);
    const double v_whit = oracle_whitened_variance(tm, s, spec, r, false);
    CHECK(v_eff == doctest::Approx(v_whit).epsilon(1e-4));
    const TangentFrame frame = truncate_rank(truth, r).frame;
    const Eigen::MatrixXd p_gamma =
        tangent_project(frame, functional_gradient(spec, truth));
    const double cpw = 0.5 * d2 * (d1 - 1);
    const double closed_form = 4.0 * cpw * p_gamma.squaredNorm();
    CHECK(v_eff == doctest::Approx(closed_form).epsilon(1e-4));
  }

  // strong signal: the efficient variance is strictly smaller
  {
    const Eigen::MatrixXd truth = rank_r_truth(d1, d2, r, 1.0, 73);
    const ScoreMatrix tm(truth, 1.0);
    const double v_eff = oracle_efficient_variance(tm, s, spec, r);
    const double v_whit = oracle_whitened_variance(tm, s, spec, r, false);
    CHECK(v_eff > 0.0);
    CHECK(v_eff <= v_whit * (1.0 + 1e-10));
    CHECK(v_whit / v_eff > 1.0001);
  }
}

TEST_CASE("entrywise inverse diagnostic approaches its weak-signal value") {
  const int d1 = 6, d2 = 3, r = 2;
  const Eigen::MatrixXd truth = rank_r_truth(d1, d2, r, 1e-3, 83);
  const TangentFrame frame = truncate_rank(truth, r).frame;
  const InfoOperator g =
      build_population_G(ScoreMatrix(truth, 1e-3), SamplingModel::uniform(d1, d2));
  const double diag = entrywise_inverse_diagnostic(frame, g);
  CHECK(diag > 0.0);
  // weak signal: solves reduce to 4 cpw * projection, so the statistic is
  // twice the largest projected basis l1 norm
  double expected = 0.0;
  Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(d1, d2);
  for (int j = 0; j < d1; ++j)
    for (int u = 0; u < d2; ++u) {
      basis(j, u) = 1.0;
      expected = std::max(expected,
                          2.0 * tangent_project(frame, basis).cwiseAbs().sum());
      basis(j, u) = 0.0;
    }
  CHECK(diag == doctest::Approx(expected).epsilon(0.02));

  CHECK_THROWS_AS(
      entrywise_inverse_diagnostic(truncate_rank(rank_r_truth(60, 40, 1, 1.0, 5), 1).frame,
                                   design_second_moment(SamplingModel::uniform(60, 40))),
      std::invalid_argument);
}

TEST_CASE("cross-fit plan partitions battles evenly and deterministically") {
  const int d1 = 6, d2 = 2, r = 1;
  const Eigen::MatrixXd truth = rank_r_truth(d1, d2, r, 0.8, 91);
  const std::vector<Battle> battles =
      simulate_battles(truth, SamplingModel::uniform(d1, d2), 4001, 910);
  CrossFitOptions opt;
  opt.folds = 4;
  opt.seed = 12;
  opt.fit.rank = r;
  opt.fit.clip_bound = 0.8;
  const CrossFitPlan plan = build_crossfit_plan(battles, d1, d2, opt);
  REQUIRE(static_cast<int>(plan.folds.size()) == 4);
  std::vector<int> sizes(4, 0);
  for (int f : plan.fold_of) sizes[f]++;
  const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
  CHECK(*hi - *lo <= 1);
  CHECK(plan.total_weight == doctest::Approx(4001.0));

  const CrossFitPlan same = build_crossfit_plan(battles, d1, d2, opt);
  CHECK(same.fold_of == plan.fold_of);
  opt.seed = 13;
  const CrossFitPlan other = build_crossfit_plan(battles, d1, d2, opt);
  CHECK(other.fold_of != plan.fold_of);

  CrossFitOptions bad = opt;
  bad.folds = 1;
  CHECK_THROWS_AS(build_crossfit_plan(battles, d1, d2, bad), std::invalid_argument);
  const std::vector<Battle> tiny(battles.begin(), battles.begin() + 5);
  CHECK_THROWS_AS(build_crossfit_plan(tiny, d1, d2, opt), std::invalid_argument);
}

TEST_CASE("one-step estimators are calibrated end to end on a small arena") {
  const int d1 = 8, d2 = 2, r = 1;
  const double alpha = 1.0;
  const Eigen::MatrixXd truth = rank_r_truth(d1, d2, r, alpha, 97);
  const ScoreMatrix tm(truth, alpha);
  const SamplingModel s = SamplingModel::uniform(d1, d2);
  const int n = 20000;
  const std::vector<Battle> battles = simulate_battles(truth, s, n, 970);
  const FunctionalSpec spec = FunctionalSpec::linear_entry({{0, 0, 1.0}});
  const double psi_true = functional_value(spec, truth);

  CrossFitOptions opt;
  opt.folds = 3;
  opt.seed = 5;
  opt.fit.rank = r;
  opt.fit.clip_bound = alpha;
  const CrossFitPlan plan = build_crossfit_plan(battles, d1, d2, opt);

  const EstimateReport eff =
      one_step_from_plan(plan, battles, spec, Method::Efficient, 0.95, std::nullopt);
  const EstimateReport whit =
      one_step_from_plan(plan, battles, spec, Method::Whitened, 0.95, std::nullopt);
  const EstimateReport ipw_known =
      one_step_from_plan(plan, battles, spec, Method::IpwKnown, 0.95, s);
  const EstimateReport ipw_est = one_step_from_plan(plan, battles, spec,
                                                    Method::IpwEstimated, 0.95,
                                                    std::nullopt);
  const EstimateReport nonunif = one_step_from_plan(
      plan, battles, spec, Method::EfficientNonuniform, 0.95, std::nullopt);

  for (const EstimateReport* rep : {&eff, &whit, &ipw_known, &ipw_est, &nonunif}) {
    CHECK(rep->n_used == n);
    CHECK(rep->folds == 3);
    CHECK(rep->standard_error > 0.0);
    CHECK_FALSE(rep->degenerate_variance);
    CHECK(rep->ci_low <= rep->estimate);
    CHECK(rep->estimate <= rep->ci_high);
    CHECK(std::abs(rep->estimate - psi_true) <= 6.0 * rep->standard_error);
  }

  // known-uniform reweighting is a no-op relative to the whitened estimator
  CHECK(ipw_known.estimate == whit.estimate);
  CHECK(ipw_known.standard_error == whit.standard_error);
  // the nonuniform-ready efficient method is the efficient method
  CHECK(nonunif.estimate == eff.estimate);
  CHECK(nonunif.standard_error == eff.standard_error);
  CHECK(nonunif.method == Method::EfficientNonuniform);
  // estimated uniform weights stay close to exact ones
  CHECK(std::abs(ipw_est.estimate - whit.estimate) <= whit.standard_error);

  // reported standard errors track the oracle rates
  const double se_eff_oracle =
      std::sqrt(oracle_efficient_variance(tm, s, spec, r) / n);
  const double se_whit_oracle =
      std::sqrt(oracle_whitened_variance(tm, s, spec, r, false) / n);
  CHECK(eff.standard_error / se_eff_oracle > 0.7);
  CHECK(eff.standard_error / se_eff_oracle < 1.4);
  CHECK(whit.standard_error / se_whit_oracle > 0.7);
  CHECK(whit.standard_error / se_whit_oracle < 1.4);

  // wrappers reproduce the plan-level results
  const EstimateReport eff_wrap = efficient_one_step(battles, d1, d2, spec, opt);
  CHECK(eff_wrap.estimate == eff.estimate);
  CHECK(eff_wrap.standard_error == eff.standard_error);

  CHECK_THROWS_AS(one_step_from_plan(plan, battles, spec, Method::IpwKnown, 0.95,
                                     std::nullopt),
                  std::invalid_argument);
  CHECK_THROWS_AS(one_step_from_plan(plan, battles, spec, Method::Efficient, 1.2,
                                     std::nullopt),
                  std::invalid_argument);
  const std::vector<Battle> wrong(battles.begin(), battles.begin() + 100);
  CHECK_THROWS_AS(one_step_from_plan(plan, wrong, spec, Method::Efficient, 0.95,
                                     std::nullopt),
                  std::invalid_argument);
}

TEST_CASE("method names are stable identifiers") {
  CHECK(method_name(Method::Efficient) == "efficient");
  CHECK(method_name(Method::Whitened) == "whitened");
  CHECK(method_name(Method::IpwKnown) == "ipw_known");
  CHECK(method_name(Method::IpwEstimated) == "ipw_estimated");
  CHECK(method_name(Method::EfficientNonuniform) == "efficient_nonuniform");
}
