#pragma once

#include <Eigen/Dense>

namespace arena {

// Latent score matrix: columns (categories) sum to zero along the model mode,
// entries bounded by entry_bound.
class ScoreMatrix {
 public:
  ScoreMatrix(Eigen::MatrixXd entries, double entry_bound);

  const Eigen::MatrixXd& entries() const { return entries_; }
  double entry_bound() const { return bound_; }
  int d1() const { return static_cast<int>(entries_.rows()); }
  int d2() const { return static_cast<int>(entries_.cols()); }

 private:
  Eigen::MatrixXd entries_;
  double bound_;
};

// Frame of the tangent space {U A^T + Q C V^T}: U spans the fitted column
// space (orthogonal to the all-ones vector), V the row space, Q the full
// ones-complement. Build via make() so the orthonormality invariants hold.
struct TangentFrame {
  Eigen::MatrixXd u;       // d1 x r
  Eigen::MatrixXd v;       // d2 x r
  Eigen::MatrixXd q;       // d1 x (d1-1)
  Eigen::VectorXd sigma;   // r

  int d1() const { return static_cast<int>(u.rows()); }
  int d2() const { return static_cast<int>(v.rows()); }
  int rank() const { return static_cast<int>(u.cols()); }

  static TangentFrame make(Eigen::MatrixXd u, Eigen::MatrixXd v,
                           Eigen::MatrixXd q, Eigen::VectorXd sigma);
};

// Deterministic orthonormal basis of the ones-complement in R^d (Householder
// completion of 1/sqrt(d)).
Eigen::MatrixXd ones_complement_basis(int d);

Eigen::MatrixXd center_columns(const Eigen::MatrixXd& m);

struct TruncationResult {
  Eigen::MatrixXd approx;
  TangentFrame frame;
  bool ambiguous = false;  // singular-value tie at the truncation boundary
};

// Best rank-r approximation of the column-centered input, plus its frame.
TruncationResult truncate_rank(const Eigen::MatrixXd& m, int r);

Eigen::MatrixXd clip_entries(const Eigen::MatrixXd& m, double a0);

// Row-norm clip at tau followed by column re-orthonormalization.
Eigen::MatrixXd trim_orthonormalize(const Eigen::MatrixXd& vmat, double tau);

// Orthogonal projection onto the tangent space of the frame.
Eigen::MatrixXd tangent_project(const TangentFrame& frame, const Eigen::MatrixXd& h);

// Alternate column centering and entry clipping until both hold (used to land
// fitted iterates back in the score-matrix gauge).
Eigen::MatrixXd center_and_clip(Eigen::MatrixXd m, double a0, int max_sweeps = 64);

}  // namespace arena
