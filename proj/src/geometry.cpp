#include "arena/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace arena {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

ScoreMatrix::ScoreMatrix(Eigen::MatrixXd entries, double entry_bound)
    : entries_(std::move(entries)), bound_(entry_bound) {
  require(bound_ > 0.0, "ScoreMatrix: entry bound must be positive");
  const int d1 = static_cast<int>(entries_.rows());
  require(d1 >= 1 && entries_.cols() >= 1, "ScoreMatrix: empty matrix");
  const double col_tol = 1e-8 * d1;
  for (int u = 0; u < entries_.cols(); ++u)
    require(std::abs(entries_.col(u).sum()) <= col_tol,
            "ScoreMatrix: column sums must vanish along the model mode");
  require(entries_.cwiseAbs().maxCoeff() <= bound_ + 1e-8,
          "ScoreMatrix: entry exceeds bound");
}

TangentFrame TangentFrame::make(Eigen::MatrixXd u, Eigen::MatrixXd v,
                                Eigen::MatrixXd q, Eigen::VectorXd sigma) {
  const int d1 = static_cast<int>(u.rows());
  const int r = static_cast<int>(u.cols());
  require(v.cols() == r && sigma.size() == r, "TangentFrame: rank mismatch");
  require(q.rows() == d1 && q.cols() == d1 - 1, "TangentFrame: bad complement basis");
  const double tol = 1e-8;
  require((u.transpose() * u - Eigen::MatrixXd::Identity(r, r)).cwiseAbs().maxCoeff() < tol,
          "TangentFrame: U not orthonormal");
  require((v.transpose() * v - Eigen::MatrixXd::Identity(r, r)).cwiseAbs().maxCoeff() < tol,
          "TangentFrame: V not orthonormal");
  require((q.transpose() * q - Eigen::MatrixXd::Identity(d1 - 1, d1 - 1))
              .cwiseAbs().maxCoeff() < tol,
          "TangentFrame: Q not orthonormal");
  require((Eigen::RowVectorXd::Ones(d1) * u).cwiseAbs().maxCoeff() < tol,
          "TangentFrame: U not orthogonal to the ones vector");
  require((Eigen::RowVectorXd::Ones(d1) * q).cwiseAbs().maxCoeff() < tol,
          "TangentFrame: Q not orthogonal to the ones vector");
  require((sigma.array() >= -1e-12).all(), "TangentFrame: negative singular value");
  TangentFrame f;
  f.u = std::move(u);
  f.v = std::move(v);
  f.q = std::move(q);
  f.sigma = std::move(sigma);
  return f;
}

Eigen::MatrixXd ones_complement_basis(int d) {
  require(d >= 2, "ones_complement_basis: need d >= 2");
  Eigen::VectorXd w = Eigen::VectorXd::Constant(d, 1.0 / std::sqrt(static_cast<double>(d)));
  Eigen::VectorXd v = w;
  v(0) += 1.0;  // reflector sends w to -e1
  const Eigen::MatrixXd house =
      Eigen::MatrixXd::Identity(d, d) - (2.0 / v.squaredNorm()) * (v * v.transpose());
  return house.rightCols(d - 1);
}

Eigen::MatrixXd center_columns(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd out = m;
  out.rowwise() -= m.colwise().mean();
  return out;
}

TruncationResult truncate_rank(const Eigen::MatrixXd& m, int r) {
  require(r >= 1 && r <= std::min(m.rows(), m.cols()), "truncate_rank: bad rank");
  const int d1 = static_cast<int>(m.rows());
  const Eigen::MatrixXd centered = center_columns(m);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();

  Eigen::MatrixXd u = svd.matrixU().leftCols(r);
  Eigen::MatrixXd v = svd.matrixV().leftCols(r);
  Eigen::VectorXd sigma = sv.head(r);

  // Columns past the numerical rank are an arbitrary orthonormal completion
  // and need not avoid the ones direction; rebuild those deterministically.
  const Eigen::MatrixXd q = ones_complement_basis(d1);
  const double rank_tol = 1e-13 * std::max(1.0, sv(0));
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(d1);
  for (int i = 0; i < r; ++i) {
    if (sigma(i) > rank_tol) continue;
    Eigen::VectorXd cand = u.col(i);
    cand -= ones * (ones.dot(cand) / d1);
    for (int j = 0; j < i; ++j) cand -= u.col(j) * u.col(j).dot(cand);
    int next_q = 0;
    while (cand.norm() < 1e-6 && next_q < d1 - 1) {
      cand = q.col(next_q++);
      cand -= ones * (ones.dot(cand) / d1);
      for (int j = 0; j < i; ++j) cand -= u.col(j) * u.col(j).dot(cand);
    }
    require(cand.norm() >= 1e-6, "truncate_rank: cannot complete frame");
    u.col(i) = cand / cand.norm();
    sigma(i) = 0.0;
  }

  TruncationResult out;
  out.approx = u * sigma.asDiagonal() * v.transpose();
  out.ambiguous = (r < sv.size()) &&
                  (sv(r - 1) - sv(r) <= 1e-12 * std::max(1.0, sv(0)));
  out.frame = TangentFrame::make(std::move(u), std::move(v), q, std::move(sigma));
  return out;
}

Eigen::MatrixXd clip_entries(const Eigen::MatrixXd& m, double a0) {
  require(a0 > 0.0, "clip_entries: bound must be positive");
  return m.cwiseMax(-a0).cwiseMin(a0);
}

Eigen::MatrixXd trim_orthonormalize(const Eigen::MatrixXd& vmat, double tau) {
  require(tau > 0.0, "trim_orthonormalize: cap must be positive");
  Eigen::MatrixXd trimmed = vmat;
  for (int i = 0; i < trimmed.rows(); ++i) {
    const double norm = trimmed.row(i).norm();
    if (norm > tau) trimmed.row(i) *= tau / norm;
  }
  const Eigen::MatrixXd gram = trimmed.transpose() * trimmed;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  const Eigen::VectorXd& lam = eig.eigenvalues();
  if (lam(0) <= 1e-12 * std::max(1e-300, lam(lam.size() - 1)))
    throw std::runtime_error("trim_orthonormalize: clipped Gram is rank deficient");
  const Eigen::VectorXd inv_sqrt = lam.array().rsqrt();
  return trimmed * eig.eigenvectors() * inv_sqrt.asDiagonal() *
         eig.eigenvectors().transpose();
}

Eigen::MatrixXd tangent_project(const TangentFrame& frame, const Eigen::MatrixXd& h) {
  require(h.rows() == frame.d1() && h.cols() == frame.d2(),
          "tangent_project: dimension mismatch");
  const Eigen::MatrixXd pu_h = frame.u * (frame.u.transpose() * h);
  const Eigen::MatrixXd h_pv = (h * frame.v) * frame.v.transpose();
  const Eigen::MatrixXd centered_h_pv = center_columns(h_pv);
  const Eigen::MatrixXd pu_h_pv = frame.u * (frame.u.transpose() * h_pv);
  return pu_h + centered_h_pv - pu_h_pv;
}

Eigen::MatrixXd center_and_clip(Eigen::MatrixXd m, double a0, int max_sweeps) {
  require(a0 > 0.0, "center_and_clip: bound must be positive");
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    m = center_columns(m);
    const double excess = m.cwiseAbs().maxCoeff() - a0;
    if (excess <= 1e-12) return m;
    m = clip_entries(m, a0);
  }
  // sweeps exhausted: land exactly (centering is scale invariant)
  m = center_columns(m);
  const double peak = m.cwiseAbs().maxCoeff();
  if (peak > a0) m *= a0 / peak;
  return m;
}

}  // namespace arena
