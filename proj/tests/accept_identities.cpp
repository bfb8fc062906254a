#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include "accept.hpp"
#include "arena/inference.hpp"

using namespace arena;

namespace {

// criterion 1: algebraic identities on randomized small instances
void exact_identity_suite() {
  Rng rng(101);
  const int draws = 200;
  double worst_pairdiff = 0.0, worst_frob = 0.0, worst_gram = 0.0;
  double worst_idem = 0.0, worst_adj_proj = 0.0, worst_colsum = 0.0;
  double worst_route = 0.0, worst_adj_coord = 0.0;

  for (int t = 0; t < draws; ++t) {
    const int d1 = 2 + static_cast<int>(rng.below(5));  // 2..6
    const int d2 = 1 + static_cast<int>(rng.below(4));  // 1..4
    const int r = 1 + static_cast<int>(rng.below(2));   // 1..2

    // pairwise difference: mean squared gap of a centered vector
    {
      Eigen::VectorXd z = accept::random_matrix(d1, 1, rng);
      z.array() -= z.mean();
      double acc = 0.0;
      int pairs = 0;
      for (int p = 0; p < d1; ++p)
        for (int q = p + 1; q < d1; ++q) {
          acc += (z(p) - z(q)) * (z(p) - z(q));
          ++pairs;
        }
      const double expected = 2.0 * z.squaredNorm() / (d1 - 1);
      worst_pairdiff = std::max(
          worst_pairdiff, std::abs(acc / pairs - expected) / (expected + 1e-300));
    }

    // Frobenius reduction: atom inner products of a column-centered matrix
    {
      const Eigen::MatrixXd h = center_columns(accept::random_matrix(d1, d2, rng));
      double acc = 0.0;
      for (const DesignAtom& a : enumerate_atoms(d1, d2)) {
        const double inner = atom_inner(h, a);
        acc += inner * inner;
      }
      const double expected = d1 * h.squaredNorm();
      worst_frob =
          std::max(worst_frob, std::abs(acc - expected) / (expected + 1e-300));
    }

    // pairwise Gram identity for a row-centered factor
    {
      Eigen::MatrixXd theta = accept::random_matrix(d1, r, rng);
      theta.rowwise() -= theta.colwise().mean();
      Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(r, r);
      for (int p = 0; p < d1; ++p)
        for (int q = p + 1; q < d1; ++q) {
          const Eigen::VectorXd diff = (theta.row(p) - theta.row(q)).transpose();
          gram += diff * diff.transpose();
        }
      const Eigen::MatrixXd expected = d1 * theta.transpose() * theta;
      worst_gram = std::max(worst_gram,
                            (gram - expected).norm() / (expected.norm() + 1e-300));
    }

    if (r >= d1 || r >= std::max(d2, 2)) continue;
    const Eigen::MatrixXd truth = accept::rank_r_truth(d1, d2, r, 1.0, rng.below(1u << 30));
    const TangentFrame frame = truncate_rank(truth, r).frame;

    // tangent projector: idempotent, self-adjoint, lands in the zero-sum gauge
    {
      const Eigen::MatrixXd h1 = accept::random_matrix(d1, d2, rng);
      const Eigen::MatrixXd h2 = accept::random_matrix(d1, d2, rng);
      const Eigen::MatrixXd p1 = tangent_project(frame, h1);
      worst_idem = std::max(worst_idem, (tangent_project(frame, p1) - p1).norm() /
                                            (p1.norm() + 1e-300));
      const double lhs = (p1.array() * h2.array()).sum();
      const double rhs = (h1.array() * tangent_project(frame, h2).array()).sum();
      worst_adj_proj =
          std::max(worst_adj_proj,
                   std::abs(lhs - rhs) / (h1.norm() * h2.norm() + 1e-300));
      worst_colsum = std::max(
          worst_colsum, p1.colwise().sum().cwiseAbs().maxCoeff() / (p1.norm() + 1e-300));
    }

    // operator routes: the coordinate matrix K and apply_G induce one form
    {
      const InfoOperator g =
          build_population_G(ScoreMatrix(truth, 1.0), SamplingModel::uniform(d1, d2));
      const Eigen::MatrixXd k = build_K(frame, g);
      const Coords cx{accept::random_matrix(d2, r, rng),
                      accept::random_matrix(d1 - 1, r, rng)};
      const Coords cy{accept::random_matrix(d2, r, rng),
                      accept::random_matrix(d1 - 1, r, rng)};
      auto pack = [&](const Coords& c) {
        Eigen::VectorXd v(k.rows());
        for (int u = 0; u < d2; ++u)
          for (int j = 0; j < r; ++j) v(u * r + j) = c.a(u, j);
        for (int i = 0; i < d1 - 1; ++i)
          for (int j = 0; j < r; ++j) v(d2 * r + i * r + j) = c.c(i, j);
        return v;
      };
      const Eigen::VectorXd x = pack(cx), y = pack(cy);
      const double via_k = x.dot(k * y);
      const Eigen::MatrixXd mx = coords_to_matrix(frame, cx);
      const Eigen::MatrixXd my = coords_to_matrix(frame, cy);
      const double via_g = (mx.array() * g.apply(my).array()).sum();
      const double scale = std::abs(via_k) + std::abs(via_g) + 1e-12;
      worst_route = std::max(worst_route, std::abs(via_k - via_g) / scale);
    }

    // coordinate maps are adjoint
    {
      const Coords c{accept::random_matrix(d2, r, rng),
                     accept::random_matrix(d1 - 1, r, rng)};
      const Eigen::MatrixXd m = accept::random_matrix(d1, d2, rng);
      const double lhs = (coords_to_matrix(frame, c).array() * m.array()).sum();
      const Coords mc = matrix_to_coords(frame, m);
      const double rhs = (c.a.array() * mc.a.array()).sum() +
                         (c.c.array() * mc.c.array()).sum();
      const double scale = std::abs(lhs) + std::abs(rhs) + 1e-12;
      worst_adj_coord = std::max(worst_adj_coord, std::abs(lhs - rhs) / scale);
    }
  }

  char detail[400];
  std::snprintf(detail, sizeof detail,
                "rel err over %d draws: pairdiff %.2e, frobenius %.2e, gram %.2e, "
                "idem %.2e, proj-adjoint %.2e, colsum %.2e, route %.2e, "
                "coord-adjoint %.2e",
                draws, worst_pairdiff, worst_frob, worst_gram, worst_idem,
                worst_adj_proj, worst_colsum, worst_route, worst_adj_coord);
  const bool ok = worst_pairdiff <= 1e-12 && worst_frob <= 1e-12 &&
                  worst_gram <= 1e-10 && worst_idem <= 1e-10 &&
                  worst_adj_proj <= 1e-10 && worst_colsum <= 1e-10 &&
                  worst_route <= 1e-10 && worst_adj_coord <= 1e-12;
  accept::line(ok, "criterion-1 exact identities", detail);
}

// criterion 2: the influence second moment attains the bound, exhaustively
void oracle_attainment() {
  const auto start = std::chrono::steady_clock::now();
  const int d1 = 4, d2 = 2, r = 1;
  const Eigen::MatrixXd truth = accept::rank_r_truth(d1, d2, r, 1.2, 202);
  const ScoreMatrix tm(truth, 1.2);
  const SamplingModel s = SamplingModel::uniform(d1, d2);
  const TangentFrame frame = truncate_rank(truth, r).frame;
  const InfoOperator g = build_population_G(tm, s);
  const FunctionalSpec spec = FunctionalSpec::linear_entry({{0, 0, 1.0}});
  const Eigen::MatrixXd gamma = functional_gradient(spec, truth);

  const double bound = efficiency_bound(frame, g, gamma);
  const Eigen::MatrixXd h_star = solve_information_equation(frame, g, gamma);
  const double cpw = g.cpw();
  const Eigen::MatrixXd h_ws = cpw * tangent_project(frame, gamma);

  double second_eff = 0.0, second_ws = 0.0;
  for (const DesignAtom& a : enumerate_atoms(d1, d2)) {
    const double pa = atom_probability(s, a);
    const double eta = atom_inner(truth, a);
    const double inner_eff = atom_inner(h_star, a);
    const double inner_ws = atom_inner(h_ws, a);
    for (int y = 0; y <= 1; ++y) {
      const double py = y == 1 ? sigmoid(eta) : 1.0 - sigmoid(eta);
      const double sc = score(y, eta);
      const double ws = whitened_score(y, eta);
      second_eff += pa * py * sc * sc * inner_eff * inner_eff;
      second_ws += pa * py * ws * ws * inner_ws * inner_ws;
    }
  }
  const double v_ws_oracle = oracle_whitened_variance(tm, s, spec, r, false);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  char detail[300];
  std::snprintf(detail, sizeof detail,
                "EIF second moment %.12f vs bound %.12f (rel gap %.2e); "
                "whitened %.12f >= bound, matches oracle %.2e; %.3f s",
                second_eff, bound, std::abs(second_eff - bound) / bound, second_ws,
                std::abs(second_ws - v_ws_oracle) / v_ws_oracle, elapsed);
  const bool ok = std::abs(second_eff - bound) <= 1e-10 * bound &&
                  second_ws >= bound - 1e-12 &&
                  std::abs(second_ws - v_ws_oracle) <= 1e-10 * v_ws_oracle &&
                  elapsed < 1.0;
  accept::line(ok, "criterion-2 oracle attainment", detail);
}

// criterion 3: information-equation residuals on random instances
void information_equation_residuals() {
  Rng rng(303);
  double worst = 0.0;
  int solved = 0;
  for (int t = 0; t < 100; ++t) {
    const int d1 = 8 + static_cast<int>(rng.below(43));  // 8..50
    const int d2 = 2 + static_cast<int>(rng.below(11));  // 2..12
    const int r = 1 + static_cast<int>(rng.below(2));
    const double alpha = 0.5 + 2.5 * (static_cast<double>(rng.below(1000)) / 1000.0);
    const Eigen::MatrixXd truth =
        accept::rank_r_truth(d1, d2, r, alpha, rng.below(1u << 30));
    const TangentFrame frame = truncate_rank(truth, r).frame;
    const InfoOperator g = build_population_G(ScoreMatrix(truth, alpha),
                                              SamplingModel::uniform(d1, d2));
    const Eigen::MatrixXd gamma = accept::random_matrix(d1, d2, rng);
    const SolveRoute route = (t % 2 == 0) ? SolveRoute::Dense : SolveRoute::Iterative;
    const Eigen::MatrixXd h = solve_information_equation(frame, g, gamma, route);
    const Eigen::MatrixXd b = tangent_project(frame, gamma);
    const double residual =
        (tangent_project(frame, g.apply(h)) - b).norm() / (b.norm() + 1e-300);
    worst = std::max(worst, residual);
    ++solved;
  }
  char detail[160];
  std::snprintf(detail, sizeof detail,
                "%d instances solved, worst relative residual %.2e", solved, worst);
  accept::line(solved == 100 && worst <= 1e-6,
               "criterion-3 information equation residual", detail);
}

// criterion 10: the entrywise inverse statistic stays flat in dimension
void dimension_free_diagnostic() {
  std::vector<double> values;
  for (const int d : {10, 20, 40}) {
    const Eigen::MatrixXd truth = accept::rank_r_truth(d, d, 2, 1.0, 1000 + d);
    const TangentFrame frame = truncate_rank(truth, 2).frame;
    const InfoOperator g = build_population_G(
        ScoreMatrix(Eigen::MatrixXd::Zero(d, d), 1.0), SamplingModel::uniform(d, d));
    values.push_back(entrywise_inverse_diagnostic(frame, g));
  }
  const double lo = *std::min_element(values.begin(), values.end());
  const double hi = *std::max_element(values.begin(), values.end());
  char detail[160];
  std::snprintf(detail, sizeof detail,
                "diagnostic at d=10/20/40: %.4f / %.4f / %.4f (spread %.3fx)",
                values[0], values[1], values[2], hi / lo);
  accept::line(hi / lo < 2.0, "criterion-10 dimension-free diagnostic", detail);
}

}  // namespace

int main() {
  exact_identity_suite();
  oracle_attainment();
  information_equation_residuals();
  dimension_free_diagnostic();
  return accept::exit_code();
}
