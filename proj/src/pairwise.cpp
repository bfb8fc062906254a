#include "arena/pairwise.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace arena {

namespace {

void check_probability_vector(const std::vector<double>& p, const char* name) {
  double total = 0.0;
  for (double x : p) {
    if (!(x >= 0.0) || !std::isfinite(x))
      throw std::invalid_argument(std::string(name) + ": entries must be finite and nonnegative");
    total += x;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument(std::string(name) + ": must sum to 1");
}

double collision_mass(const std::vector<double>& pi) {
  double s = 0.0;
  for (double x : pi) s += x * x;
  return s;
}

}  // namespace

SamplingModel SamplingModel::uniform(int d1, int d2) {
  if (d1 < 2 || d2 < 1)
    throw std::invalid_argument("SamplingModel::uniform: need d1 >= 2, d2 >= 1");
  SamplingModel m;
  m.kind_ = SamplingKind::Uniform;
  m.d1_ = d1;
  m.d2_ = d2;
  return m;
}

SamplingModel SamplingModel::product(std::vector<double> pi_category,
                                     std::vector<double> pi_model) {
  if (pi_model.size() < 2 || pi_category.empty())
    throw std::invalid_argument("SamplingModel::product: need >= 2 models, >= 1 category");
  check_probability_vector(pi_category, "pi_category");
  check_probability_vector(pi_model, "pi_model");
  if (collision_mass(pi_model) >= 1.0 - 1e-12)
    throw std::domain_error("SamplingModel::product: pi_model cannot form a distinct pair");
  SamplingModel m;
  m.kind_ = SamplingKind::Product;
  m.d1_ = static_cast<int>(pi_model.size());
  m.d2_ = static_cast<int>(pi_category.size());
  m.pi_category_ = std::move(pi_category);
  m.pi_model_ = std::move(pi_model);
  return m;
}

double sigmoid(double eta) {
  if (!std::isfinite(eta)) throw std::domain_error("sigmoid: eta must be finite");
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double score(int y, double eta) {
  if (y != 0 && y != 1) throw std::domain_error("score: outcome must be 0 or 1");
  return static_cast<double>(y) - sigmoid(eta);
}

double fisher_info(double eta) { return sigmoid(eta) * sigmoid(-eta); }

double whitened_score(int y, double eta) {
  if (!std::isfinite(eta) || std::abs(eta) > 36.0)
    throw std::domain_error("whitened_score: logit saturated (|eta| > 36)");
  return score(y, eta) / fisher_info(eta);
}

double atom_inner(const Eigen::MatrixXd& h, const DesignAtom& atom) {
  if (atom.category < 0 || atom.category >= h.cols() || atom.first < 0 ||
      atom.first >= h.rows() || atom.second < 0 || atom.second >= h.rows())
    throw std::out_of_range("atom_inner: atom indices outside matrix");
  if (atom.first == atom.second)
    throw std::invalid_argument("atom_inner: atom must compare distinct models");
  return h(atom.first, atom.category) - h(atom.second, atom.category);
}

double atom_probability(const SamplingModel& s, const DesignAtom& atom) {
  if (atom.category < 0 || atom.category >= s.d2() || atom.first < 0 ||
      atom.first >= s.d1() || atom.second < 0 || atom.second >= s.d1() ||
      atom.first == atom.second)
    throw std::invalid_argument("atom_probability: invalid atom");
  if (s.kind() == SamplingKind::Uniform) {
    const double pairs = 0.5 * s.d1() * (s.d1() - 1);
    return 1.0 / (s.d2() * pairs);
  }
  const double coll = collision_mass(s.pi_model());
  if (coll >= 1.0 - 1e-12)
    throw std::domain_error("atom_probability: degenerate pi_model, no distinct pair");
  return s.pi_category()[atom.category] * 2.0 * s.pi_model()[atom.first] *
         s.pi_model()[atom.second] / (1.0 - coll);
}

double importance_weight(const SamplingModel& s, const DesignAtom& atom) {
  if (s.kind() == SamplingKind::Uniform) return 1.0;
  const double p = atom_probability(s, atom);
  if (p <= 0.0)
    throw std::domain_error("importance_weight: atom has zero sampling probability");
  const double pairs = 0.5 * s.d1() * (s.d1() - 1);
  return 1.0 / (s.d2() * pairs * p);
}

Battle sample_battle(const Eigen::MatrixXd& truth, const SamplingModel& s, Rng& rng) {
  if (truth.rows() != s.d1() || truth.cols() != s.d2())
    throw std::invalid_argument("sample_battle: truth dimensions do not match sampling model");
  DesignAtom atom;
  if (s.kind() == SamplingKind::Uniform) {
    atom.category = static_cast<int>(rng.below(static_cast<std::uint64_t>(s.d2())));
    const std::uint64_t pairs =
        static_cast<std::uint64_t>(s.d1()) * (s.d1() - 1) / 2;
    std::uint64_t k = rng.below(pairs);
    // Unrank k into the (first < second) pair list.
    int p = 0;
    std::uint64_t remaining = static_cast<std::uint64_t>(s.d1() - 1);
    while (k >= remaining) {
      k -= remaining;
      ++p;
      --remaining;
    }
    atom.first = p;
    atom.second = p + 1 + static_cast<int>(k);
  } else {
    if (collision_mass(s.pi_model()) >= 1.0 - 1e-12)
      throw std::domain_error("sample_battle: degenerate pi_model, cannot form a pair");
    atom.category = rng.categorical(s.pi_category());
    do {
      atom.first = rng.categorical(s.pi_model());
      atom.second = rng.categorical(s.pi_model());
    } while (atom.first == atom.second);
  }
  const double eta = atom_inner(truth, atom);
  Battle b;
  b.atom = atom;
  b.outcome = rng.bernoulli(sigmoid(eta)) ? 1 : 0;
  b.weight = 1.0;
  return b;
}

SamplingModel estimate_sampling(const std::vector<Battle>& battles, int d1, int d2) {
  if (d1 < 2 || d2 < 1) throw std::invalid_argument("estimate_sampling: bad dimensions");
  std::vector<double> cat(d2, 0.0), mod(d1, 0.0);
  double n = 0.0;
  for (const Battle& b : battles) {
    if (b.atom.category < 0 || b.atom.category >= d2 || b.atom.first < 0 ||
        b.atom.first >= d1 || b.atom.second < 0 || b.atom.second >= d1)
      throw std::invalid_argument("estimate_sampling: battle outside dimensions");
    cat[b.atom.category] += b.weight;
    mod[b.atom.first] += b.weight;
    mod[b.atom.second] += b.weight;
    n += b.weight;
  }
  for (int u = 0; u < d2; ++u) cat[u] = (cat[u] + 1.0) / (n + d2);
  for (int j = 0; j < d1; ++j) mod[j] = (mod[j] + 1.0) / (2.0 * n + d1);
  return SamplingModel::product(std::move(cat), std::move(mod));
}

std::vector<DesignAtom> enumerate_atoms(int d1, int d2) {
  std::vector<DesignAtom> out;
  out.reserve(static_cast<std::size_t>(d2) * d1 * (d1 - 1) / 2);
  for (int u = 0; u < d2; ++u)
    for (int p = 0; p < d1; ++p)
      for (int q = p + 1; q < d1; ++q) out.push_back({u, p, q});
  return out;
}

}  // namespace arena
