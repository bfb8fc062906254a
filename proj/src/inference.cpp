#include "arena/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "arena/errors.hpp"
#include "arena/rng.hpp"
#include "arena/stats.hpp"

namespace arena {

namespace {

constexpr std::uint64_t kFoldStream = 0x101;

int coord_dim(const TangentFrame& f) { return (f.d2() + f.d1() - 1) * f.rank(); }

Eigen::VectorXd coords_to_vec(const Coords& c) {
  const int d2 = static_cast<int>(c.a.rows());
  const int d1m = static_cast<int>(c.c.rows());
  const int r = static_cast<int>(c.a.cols());
  Eigen::VectorXd v(static_cast<long>(d2 + d1m) * r);
  for (int u = 0; u < d2; ++u)
    for (int k = 0; k < r; ++k) v(u * r + k) = c.a(u, k);
  for (int i = 0; i < d1m; ++i)
    for (int k = 0; k < r; ++k) v(d2 * r + i * r + k) = c.c(i, k);
  return v;
}

Coords vec_to_coords(const Eigen::VectorXd& v, int d1, int d2, int r) {
  Coords c;
  c.a.resize(d2, r);
  c.c.resize(d1 - 1, r);
  for (int u = 0; u < d2; ++u)
    for (int k = 0; k < r; ++k) c.a(u, k) = v(u * r + k);
  for (int i = 0; i < d1 - 1; ++i)
    for (int k = 0; k < r; ++k) c.c(i, k) = v(d2 * r + i * r + k);
  return c;
}

struct DenseSolve {
  Eigen::MatrixXd h_star;
  double smallest_kept = 0.0;
};

DenseSolve solve_dense(const TangentFrame& frame, const InfoOperator& op,
                       const Eigen::MatrixXd& gamma) {
  const Eigen::MatrixXd k = build_K(frame, op);
  const Eigen::VectorXd g = coords_to_vec(matrix_to_coords(frame, gamma));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(k);
  const Eigen::VectorXd& lam = eig.eigenvalues();
  const Eigen::MatrixXd& vec = eig.eigenvectors();
  const double lam_max = std::max(0.0, lam(lam.size() - 1));
  const double cut = 1e-8 * lam_max;
  const Eigen::VectorXd proj = vec.transpose() * g;
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(g.size());
  double smallest = 0.0;
  for (int i = 0; i < lam.size(); ++i) {
    if (lam(i) <= cut) continue;
    if (smallest == 0.0 || lam(i) < smallest) smallest = lam(i);
    theta += vec.col(i) * (proj(i) / lam(i));
  }
  DenseSolve out;
  out.h_star = coords_to_matrix(
      frame, vec_to_coords(theta, frame.d1(), frame.d2(), frame.rank()));
  out.smallest_kept = smallest;
  return out;
}

Eigen::MatrixXd solve_iterative(const TangentFrame& frame, const InfoOperator& op,
                                const Eigen::MatrixXd& b, double target_norm) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(b.rows(), b.cols());
  Eigen::MatrixXd r = b;
  Eigen::MatrixXd p = r;
  double rs = r.squaredNorm();
  const int max_iter = 5000;
  for (int iter = 0; iter < max_iter && std::sqrt(rs) > target_norm; ++iter) {
    const Eigen::MatrixXd ap = tangent_project(frame, op.apply(p));
    const double pap = (p.array() * ap.array()).sum();
    if (!(pap > 0.0)) break;  // hit a null direction of the restricted operator
    const double alpha = rs / pap;
    x += alpha * p;
    r -= alpha * ap;
    const double rs_new = r.squaredNorm();
    p = r + (rs_new / rs) * p;
    rs = rs_new;
    if ((iter + 1) % 50 == 0) {  // refresh against floating-point drift
      x = tangent_project(frame, x);
      r = b - tangent_project(frame, op.apply(x));
      rs = r.squaredNorm();
    }
  }
  return tangent_project(frame, x);
}

double z_for_level(double level) {
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("confidence level must be in (0,1)");
  return normal_quantile(0.5 + level / 2.0);
}

}  // namespace

InfoOperator::InfoOperator(int d1, int d2, Normalization norm,
                           std::vector<WeightedAtom> atoms)
    : d1_(d1), d2_(d2), norm_(norm), atoms_(std::move(atoms)) {
  if (d1_ < 2 || d2_ < 1) throw std::invalid_argument("InfoOperator: bad dimensions");
  for (const auto& a : atoms_) {
    if (a.category < 0 || a.category >= d2_ || a.first < 0 || a.first >= d1_ ||
        a.second < 0 || a.second >= d1_ || a.first == a.second || !(a.coef >= 0.0))
      throw std::invalid_argument("InfoOperator: malformed weighted atom");
  }
}

Eigen::MatrixXd InfoOperator::laplacian(int category) const {
  if (category < 0 || category >= d2_)
    throw std::out_of_range("InfoOperator::laplacian: bad category");
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(d1_, d1_);
  for (const auto& a : atoms_) {
    if (a.category != category) continue;
    l(a.first, a.first) += a.coef;
    l(a.second, a.second) += a.coef;
    l(a.first, a.second) -= a.coef;
    l(a.second, a.first) -= a.coef;
  }
  return l;
}

Eigen::MatrixXd InfoOperator::apply(const Eigen::MatrixXd& h) const {
  if (h.rows() != d1_ || h.cols() != d2_)
    throw std::invalid_argument("InfoOperator::apply: dimension mismatch");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d1_, d2_);
  for (const auto& a : atoms_) {
    const double v = a.coef * (h(a.first, a.category) - h(a.second, a.category));
    out(a.first, a.category) += v;
    out(a.second, a.category) -= v;
  }
  return out;
}

InfoOperator build_plugin_G(const std::vector<Battle>& battles, const ScoreMatrix& t_hat) {
  if (battles.empty()) throw std::invalid_argument("build_plugin_G: no battles");
  const double clip = 2.0 * t_hat.entry_bound();
  double total = 0.0;
  for (const Battle& b : battles) total += b.weight;
  std::vector<InfoOperator::WeightedAtom> atoms;
  atoms.reserve(battles.size());
  for (const Battle& b : battles) {
    double eta = atom_inner(t_hat.entries(), b.atom);
    eta = std::clamp(eta, -clip, clip);
    atoms.push_back({b.atom.category, b.atom.first, b.atom.second,
                     b.weight * fisher_info(eta) / total});
  }
  return InfoOperator(t_hat.d1(), t_hat.d2(), Normalization::Empirical, std::move(atoms));
}

InfoOperator build_population_G(const ScoreMatrix& truth, const SamplingModel& s) {
  if (truth.d1() != s.d1() || truth.d2() != s.d2())
    throw std::invalid_argument("build_population_G: dimensions do not match");
  std::vector<InfoOperator::WeightedAtom> atoms;
  for (const DesignAtom& a : enumerate_atoms(s.d1(), s.d2())) {
    const double p = atom_probability(s, a);
    if (p <= 0.0) continue;
    const double eta = atom_inner(truth.entries(), a);
    atoms.push_back({a.category, a.first, a.second, p * fisher_info(eta)});
  }
  return InfoOperator(s.d1(), s.d2(), Normalization::Population, std::move(atoms));
}

Eigen::MatrixXd apply_G(const InfoOperator& op, const Eigen::MatrixXd& h) {
  return op.apply(h);
}

FunctionalSpec FunctionalSpec::linear_entry(std::vector<Term> terms) {
  if (terms.empty()) throw std::invalid_argument("FunctionalSpec: empty linear target");
  for (const Term& t : terms)
    if (!std::isfinite(t.coef))
      throw std::invalid_argument("FunctionalSpec: coefficient must be finite");
  FunctionalSpec s;
  s.kind_ = Kind::LinearEntry;
  s.terms_ = std::move(terms);
  return s;
}

FunctionalSpec FunctionalSpec::win_prob(int a, int b, int category) {
  if (a == b) throw std::invalid_argument("FunctionalSpec: degenerate win-probability target");
  FunctionalSpec s;
  s.kind_ = Kind::WinProb;
  s.a_ = a;
  s.b_ = b;
  s.category_ = category;
  return s;
}

FunctionalSpec FunctionalSpec::category_contrast(int a, int b, int category) {
  if (a == b) throw std::invalid_argument("FunctionalSpec: degenerate contrast target");
  FunctionalSpec s;
  s.kind_ = Kind::CategoryContrast;
  s.a_ = a;
  s.b_ = b;
  s.category_ = category;
  return s;
}

void FunctionalSpec::check_dims(int d1, int d2) const {
  auto ok = [&](int row, int col) {
    return row >= 0 && row < d1 && col >= 0 && col < d2;
  };
  if (kind_ == Kind::LinearEntry) {
    for (const Term& t : terms_)
      if (!ok(t.row, t.col))
        throw std::invalid_argument("FunctionalSpec: index outside matrix");
  } else if (!ok(a_, category_) || !ok(b_, category_)) {
    throw std::invalid_argument("FunctionalSpec: index outside matrix");
  }
}

double functional_value(const FunctionalSpec& spec, const Eigen::MatrixXd& t) {
  spec.check_dims(static_cast<int>(t.rows()), static_cast<int>(t.cols()));
  switch (spec.kind()) {
    case FunctionalSpec::Kind::LinearEntry: {
      double v = 0.0;
      for (const auto& term : spec.terms()) v += term.coef * t(term.row, term.col);
      return v;
    }
    case FunctionalSpec::Kind::WinProb:
      return sigmoid(t(spec.a(), spec.category()) - t(spec.b(), spec.category()));
    case FunctionalSpec::Kind::CategoryContrast:
      return t(spec.a(), spec.category()) - t(spec.b(), spec.category());
  }
  throw std::logic_error("functional_value: unknown kind");
}

Eigen::MatrixXd functional_gradient(const FunctionalSpec& spec, const Eigen::MatrixXd& t) {
  spec.check_dims(static_cast<int>(t.rows()), static_cast<int>(t.cols()));
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(t.rows(), t.cols());
  switch (spec.kind()) {
    case FunctionalSpec::Kind::LinearEntry:
      for (const auto& term : spec.terms()) g(term.row, term.col) += term.coef;
      break;
    case FunctionalSpec::Kind::WinProb: {
      const double slope =
          fisher_info(t(spec.a(), spec.category()) - t(spec.b(), spec.category()));
      g(spec.a(), spec.category()) = slope;
      g(spec.b(), spec.category()) = -slope;
      break;
    }
    case FunctionalSpec::Kind::CategoryContrast:
      g(spec.a(), spec.category()) = 1.0;
      g(spec.b(), spec.category()) = -1.0;
      break;
  }
  return g;
}

Eigen::MatrixXd coords_to_matrix(const TangentFrame& frame, const Coords& coords) {
  if (coords.a.rows() != frame.d2() || coords.a.cols() != frame.rank() ||
      coords.c.rows() != frame.d1() - 1 || coords.c.cols() != frame.rank())
    throw std::invalid_argument("coords_to_matrix: dimension mismatch");
  return frame.u * coords.a.transpose() + frame.q * coords.c * frame.v.transpose();
}

Coords matrix_to_coords(const TangentFrame& frame, const Eigen::MatrixXd& h) {
  if (h.rows() != frame.d1() || h.cols() != frame.d2())
    throw std::invalid_argument("matrix_to_coords: dimension mismatch");
  Coords c;
  c.a = h.transpose() * frame.u;
  c.c = frame.q.transpose() * h * frame.v;
  return c;
}

Eigen::MatrixXd build_K(const TangentFrame& frame, const InfoOperator& op) {
  if (frame.d1() != op.d1() || frame.d2() != op.d2())
    throw std::invalid_argument("build_K: dimensions do not match");
  const int d1 = frame.d1();
  const int d2 = frame.d2();
  const int r = frame.rank();
  const int m = coord_dim(frame);
  const int c_off = d2 * r;
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(m, m);

  for (int u = 0; u < d2; ++u) {
    const Eigen::MatrixXd lap = op.laplacian(u);
    if (lap.cwiseAbs().maxCoeff() == 0.0) continue;
    const Eigen::MatrixXd lu = lap * frame.u;                  // d1 x r
    const Eigen::MatrixXd ulu = frame.u.transpose() * lu;      // r x r
    const Eigen::MatrixXd qlu = frame.q.transpose() * lu;      // (d1-1) x r
    const Eigen::MatrixXd qlq = frame.q.transpose() * (lap * frame.q);
    const Eigen::VectorXd vu = frame.v.row(u).transpose();     // r

    k.block(u * r, u * r, r, r) += ulu;
    for (int i = 0; i < d1 - 1; ++i) {
      const Eigen::MatrixXd cross = qlu.row(i).transpose() * vu.transpose();  // r x r
      k.block(u * r, c_off + i * r, r, r) += cross;
      k.block(c_off + i * r, u * r, r, r) += cross.transpose();
    }
    const Eigen::MatrixXd vv = vu * vu.transpose();
    for (int i = 0; i < d1 - 1; ++i)
      for (int j = 0; j < d1 - 1; ++j)
        k.block(c_off + i * r, c_off + j * r, r, r) += qlq(i, j) * vv;
  }
  return k;
}

Eigen::MatrixXd solve_information_equation(const TangentFrame& frame,
                                           const InfoOperator& op,
                                           const Eigen::MatrixXd& gamma,
                                           SolveRoute route) {
  if (frame.d1() != op.d1() || frame.d2() != op.d2() ||
      gamma.rows() != frame.d1() || gamma.cols() != frame.d2())
    throw std::invalid_argument("solve_information_equation: dimension mismatch");
  const Eigen::MatrixXd b = tangent_project(frame, gamma);
  const double b_norm = b.norm();
  if (b_norm == 0.0) return Eigen::MatrixXd::Zero(frame.d1(), frame.d2());

  SolveRoute chosen = route;
  if (chosen == SolveRoute::Auto)
    chosen = (coord_dim(frame) <= 600) ? SolveRoute::Dense : SolveRoute::Iterative;

  Eigen::MatrixXd h_star;
  double smallest_kept = 0.0;
  if (chosen == SolveRoute::Dense) {
    DenseSolve s = solve_dense(frame, op, gamma);
    h_star = std::move(s.h_star);
    smallest_kept = s.smallest_kept;
  } else {
    h_star = solve_iterative(frame, op, b, 1e-9 * b_norm);
  }

  const double residual = (tangent_project(frame, op.apply(h_star)) - b).norm();
  if (residual > 1e-6 * b_norm)
    throw NumericError(
        "solve_information_equation: ill-conditioned information operator "
        "(relative residual " + std::to_string(residual / b_norm) +
        ", smallest retained eigenvalue " + std::to_string(smallest_kept) + ")");
  return h_star;
}

double efficiency_bound(const TangentFrame& frame, const InfoOperator& op,
                        const Eigen::MatrixXd& gamma, SolveRoute route) {
  const Eigen::MatrixXd h_star = solve_information_equation(frame, op, gamma, route);
  const Eigen::MatrixXd b = tangent_project(frame, gamma);
  return std::max(0.0, (b.array() * h_star.array()).sum());
}

double entrywise_inverse_diagnostic(const TangentFrame& frame, const InfoOperator& op) {
  const int d1 = frame.d1();
  const int d2 = frame.d2();
  if (d1 * d2 > 2000)
    throw std::invalid_argument("entrywise_inverse_diagnostic: dimension too large");
  const Eigen::MatrixXd k = build_K(frame, op);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(k);
  const Eigen::VectorXd& lam = eig.eigenvalues();
  const Eigen::MatrixXd& vec = eig.eigenvectors();
  const double cut = 1e-8 * std::max(0.0, lam(lam.size() - 1));

  double max_l1 = 0.0;
  Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(d1, d2);
  for (int j = 0; j < d1; ++j) {
    for (int u = 0; u < d2; ++u) {
      basis(j, u) = 1.0;
      const Eigen::VectorXd g = coords_to_vec(matrix_to_coords(frame, basis));
      basis(j, u) = 0.0;
      Eigen::VectorXd proj = vec.transpose() * g;
      for (int i = 0; i < lam.size(); ++i)
        proj(i) = (lam(i) > cut) ? proj(i) / lam(i) : 0.0;
      const Eigen::MatrixXd h = coords_to_matrix(
          frame, vec_to_coords(vec * proj, d1, d2, frame.rank()));
      max_l1 = std::max(max_l1, h.cwiseAbs().sum());
    }
  }
  return max_l1 / (2.0 * op.cpw());
}

std::string method_name(Method m) {
  switch (m) {
    case Method::Efficient: return "efficient";
    case Method::Whitened: return "whitened";
    case Method::IpwKnown: return "ipw_known";
    case Method::IpwEstimated: return "ipw_estimated";
    case Method::EfficientNonuniform: return "efficient_nonuniform";
  }
  return "unknown";
}

CrossFitPlan build_crossfit_plan(const std::vector<Battle>& battles, int d1, int d2,
                                 const CrossFitOptions& options) {
  const int k = options.folds;
  if (k < 2) throw std::invalid_argument("build_crossfit_plan: need at least 2 folds");
  const int n = static_cast<int>(battles.size());
  if (n < 2 * k) throw std::invalid_argument("build_crossfit_plan: too few battles");

  CrossFitPlan plan;
  plan.d1 = d1;
  plan.d2 = d2;
  plan.fold_of.resize(n);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(derive_seed(options.seed, kFoldStream));
  for (int i = n - 1; i > 0; --i)
    std::swap(perm[i], perm[rng.below(static_cast<std::uint64_t>(i) + 1)]);
  for (int i = 0; i < n; ++i) plan.fold_of[perm[i]] = i % k;

  for (const Battle& b : battles) plan.total_weight += b.weight;

  plan.folds.reserve(k);
  for (int fold = 0; fold < k; ++fold) {
    std::vector<Battle> out_of_fold;
    out_of_fold.reserve(n - n / k);
    for (int i = 0; i < n; ++i)
      if (plan.fold_of[i] != fold) out_of_fold.push_back(battles[i]);
    if (out_of_fold.empty())
      throw NumericError("build_crossfit_plan: fold " + std::to_string(fold) +
                         " has no training data");
    try {
      FitReport fit = fit_pipeline(out_of_fold, d1, d2, options.fit);
      InfoOperator g = build_plugin_G(out_of_fold, fit.estimate);
      SamplingModel est = estimate_sampling(out_of_fold, d1, d2);
      plan.folds.push_back({std::move(fit), std::move(g), std::move(est)});
    } catch (const NumericError&) {
      throw;
    } catch (const std::exception& e) {
      throw NumericError("build_crossfit_plan: fold " + std::to_string(fold) +
                         " fit failed: " + e.what());
    }
  }

  return plan;
}

EstimateReport one_step_from_plan(const CrossFitPlan& plan,
                                  const std::vector<Battle>& battles,
                                  const FunctionalSpec& spec, Method method,
                                  double level,
                                  const std::optional<SamplingModel>& known_sampling) {
  const int k = static_cast<int>(plan.folds.size());
  if (static_cast<int>(battles.size()) != static_cast<int>(plan.fold_of.size()))
    throw std::invalid_argument("one_step_from_plan: plan built for different battles");
  spec.check_dims(plan.d1, plan.d2);
  if (method == Method::IpwKnown && !known_sampling)
    throw std::invalid_argument("one_step_from_plan: ipw_known needs a sampling model");

  const bool whiten = (method == Method::Whitened || method == Method::IpwKnown ||
                       method == Method::IpwEstimated);

  auto make_direction = [&](const FoldModel& fm) {
    const Eigen::MatrixXd gamma = functional_gradient(spec, fm.fit.estimate.entries());
    if (whiten) return Eigen::MatrixXd(fm.plugin_g.cpw() *
                                       tangent_project(fm.fit.frame, gamma));
    return solve_information_equation(fm.fit.frame, fm.plugin_g, gamma);
  };
  auto influence = [&](const FoldModel& fm, const Eigen::MatrixXd& dir, const Battle& b,
                       int i) {
    const double eta = atom_inner(fm.fit.estimate.entries(), b.atom);
    const double inner = atom_inner(dir, b.atom);
    double phi;
    if (whiten) {
      double s_tilde;
      try {
        s_tilde = whitened_score(b.outcome, eta);
      } catch (const std::domain_error& e) {
        throw NumericError("one_step_from_plan: battle " + std::to_string(i) + ": " +
                           e.what());
      }
      phi = s_tilde * inner;
      if (method == Method::IpwKnown || method == Method::IpwEstimated) {
        const SamplingModel& sm = (method == Method::IpwKnown)
                                      ? *known_sampling
                                      : fm.estimated_sampling;
        const double w = importance_weight(sm, b.atom);
        if (w > 1e6)
          throw NumericError("one_step_from_plan: battle " + std::to_string(i) +
                             ": overlap violation (importance weight " +
                             std::to_string(w) + ")");
        phi *= w;
      }
    } else {
      phi = score(b.outcome, eta) * inner;
    }
    return phi;
  };

  std::vector<double> plugin(k), correction(k, 0.0);
  std::vector<Eigen::MatrixXd> direction(k);
  for (int fold = 0; fold < k; ++fold) {
    plugin[fold] = functional_value(spec, plan.folds[fold].fit.estimate.entries());
    direction[fold] = make_direction(plan.folds[fold]);
  }

  const double n_weight = plan.total_weight;
  double second_moment = 0.0;
  for (int i = 0; i < static_cast<int>(battles.size()); ++i) {
    const Battle& b = battles[i];
    const int fold = plan.fold_of[i];
    const double phi = influence(plan.folds[fold], direction[fold], b, i);
    correction[fold] += b.weight * phi;
    second_moment += b.weight * phi * phi;
  }

  EstimateReport report;
  report.method = method;
  report.folds = k;
  report.level = level;
  report.n_used = static_cast<int>(battles.size());
  double psi = 0.0;
  for (int fold = 0; fold < k; ++fold)
    psi += plugin[fold] + (k / n_weight) * correction[fold];
  report.estimate = psi / k;
  report.variance = second_moment / n_weight;
  report.degenerate_variance = (report.variance <= 0.0);
  report.standard_error = std::sqrt(report.variance / n_weight);
  const double z = z_for_level(level);
  report.ci_low = report.estimate - z * report.standard_error;
  report.ci_high = report.estimate + z * report.standard_error;
  return report;
}

EstimateReport efficient_one_step(const std::vector<Battle>& battles, int d1, int d2,
                                  const FunctionalSpec& spec,
                                  const CrossFitOptions& options) {
  const CrossFitPlan plan = build_crossfit_plan(battles, d1, d2, options);
  return one_step_from_plan(plan, battles, spec, Method::Efficient, options.level,
                            std::nullopt);
}

EstimateReport whitened_one_step(const std::vector<Battle>& battles, int d1, int d2,
                                 const FunctionalSpec& spec,
                                 const CrossFitOptions& options) {
  const CrossFitPlan plan = build_crossfit_plan(battles, d1, d2, options);
  return one_step_from_plan(plan, battles, spec, Method::Whitened, options.level,
                            std::nullopt);
}

EstimateReport ipw_one_step(const std::vector<Battle>& battles, int d1, int d2,
                            const FunctionalSpec& spec, const CrossFitOptions& options,
                            const IpwSampling& sampling) {
  const CrossFitPlan plan = build_crossfit_plan(battles, d1, d2, options);
  const Method method = sampling.known ? Method::IpwKnown : Method::IpwEstimated;
  return one_step_from_plan(plan, battles, spec, method, options.level, sampling.known);
}

EstimateReport efficient_nonuniform_one_step(const std::vector<Battle>& battles, int d1,
                                             int d2, const FunctionalSpec& spec,
                                             const CrossFitOptions& options) {
  const CrossFitPlan plan = build_crossfit_plan(battles, d1, d2, options);
  return one_step_from_plan(plan, battles, spec, Method::EfficientNonuniform,
                            options.level, std::nullopt);
}

double oracle_efficient_variance(const ScoreMatrix& truth, const SamplingModel& s,
                                 const FunctionalSpec& spec, int rank) {
  const TangentFrame frame = truncate_rank(truth.entries(), rank).frame;
  const InfoOperator op = build_population_G(truth, s);
  const Eigen::MatrixXd gamma = functional_gradient(spec, truth.entries());
  return efficiency_bound(frame, op, gamma);
}

double oracle_whitened_variance(const ScoreMatrix& truth, const SamplingModel& s,
                                const FunctionalSpec& spec, int rank,
                                bool ipw_weighted) {
  const TangentFrame frame = truncate_rank(truth.entries(), rank).frame;
  const Eigen::MatrixXd gamma = functional_gradient(spec, truth.entries());
  const double cpw = 0.5 * s.d2() * (s.d1() - 1);
  const Eigen::MatrixXd h_ws = cpw * tangent_project(frame, gamma);
  double variance = 0.0;
  for (const DesignAtom& a : enumerate_atoms(s.d1(), s.d2())) {
    const double p = atom_probability(s, a);
    if (p <= 0.0) continue;
    const double eta = atom_inner(truth.entries(), a);
    const double inner = atom_inner(h_ws, a);
    const double w = ipw_weighted ? importance_weight(s, a) : 1.0;
    variance += p * w * w * inner * inner / fisher_info(eta);
  }
  return variance;
}

}  // namespace arena
