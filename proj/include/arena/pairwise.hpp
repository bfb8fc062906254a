#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "arena/rng.hpp"

namespace arena {

// Comparison design: models `first` and `second` meet in category `category`.
struct DesignAtom {
  int category = 0;
  int first = 0;
  int second = 0;
};

// One observed comparison. outcome = 1 means `first` won. Ties handled upstream
// may emit fractional weights; all likelihood and score sums respect `weight`.
struct Battle {
  DesignAtom atom;
  int outcome = 0;
  double weight = 1.0;
};

enum class SamplingKind { Uniform, Product };

// Distribution over design atoms: category from pi_category, then a distinct
// model pair, either uniformly over unordered pairs or by two independent
// pi_model draws rejected on collision.
class SamplingModel {
 public:
  static SamplingModel uniform(int d1, int d2);
  static SamplingModel product(std::vector<double> pi_category,
                               std::vector<double> pi_model);

  SamplingKind kind() const { return kind_; }
  int d1() const { return d1_; }
  int d2() const { return d2_; }
  const std::vector<double>& pi_category() const { return pi_category_; }
  const std::vector<double>& pi_model() const { return pi_model_; }

 private:
  SamplingModel() = default;
  SamplingKind kind_ = SamplingKind::Uniform;
  int d1_ = 0;
  int d2_ = 0;
  std::vector<double> pi_category_;
  std::vector<double> pi_model_;
};

double sigmoid(double eta);

// y - sigmoid(eta); the logistic log-likelihood derivative in eta.
double score(int y, double eta);

// sigmoid(eta) * (1 - sigmoid(eta)), computed without cancellation.
double fisher_info(double eta);

// score / fisher_info. |eta| > 36 is treated as saturated and rejected.
double whitened_score(int y, double eta);

// <H, X_atom> = H(first, category) - H(second, category).
double atom_inner(const Eigen::MatrixXd& h, const DesignAtom& atom);

double atom_probability(const SamplingModel& s, const DesignAtom& atom);

// Uniform(atom) / s(atom); identically 1 for a uniform model.
double importance_weight(const SamplingModel& s, const DesignAtom& atom);

Battle sample_battle(const Eigen::MatrixXd& truth, const SamplingModel& s, Rng& rng);

// Add-one-smoothed marginal frequencies, returned as a Product model.
SamplingModel estimate_sampling(const std::vector<Battle>& battles, int d1, int d2);

// Enumerates all d2 * C(d1,2) atoms in (category, first<second) order.
std::vector<DesignAtom> enumerate_atoms(int d1, int d2);

}  // namespace arena
