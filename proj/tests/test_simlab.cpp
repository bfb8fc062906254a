#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "arena/simlab.hpp"
#include "arena/stats.hpp"

using namespace arena;

TEST_CASE("gen_truth lands exactly on the signal scale with the requested rank") {
  Rng rng(1);
  const int d1 = 12, d2 = 5, r = 2;
  const double alpha = 2.5;
  const ScoreMatrix t = gen_truth(d1, d2, r, alpha, rng);
  CHECK(t.entries().cwiseAbs().maxCoeff() == doctest::Approx(alpha).epsilon(1e-12));
  CHECK(t.entries().colwise().sum().cwiseAbs().maxCoeff() <= 1e-8);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(t.entries());
  CHECK(svd.singularValues()(r) < 1e-8);
  CHECK(svd.singularValues()(r - 1) > 1e-3);

  Rng rng_a(7), rng_b(7);
  CHECK((gen_truth(d1, d2, r, alpha, rng_a).entries() -
         gen_truth(d1, d2, r, alpha, rng_b).entries())
            .norm() == 0.0);
  CHECK_THROWS_AS(gen_truth(d1, d2, 0, alpha, rng), std::invalid_argument);
  CHECK_THROWS_AS(gen_truth(d1, d2, r, -1.0, rng), std::invalid_argument);
}

TEST_CASE("dirichlet sampling designs are valid and concentrate correctly") {
  Rng rng(3);
  const SamplingModel s = gen_dirichlet_sampling(10, 4, 5.0, rng);
  REQUIRE(s.kind() == SamplingKind::Product);
  double cat_total = 0.0, model_total = 0.0;
  for (double p : s.pi_category()) cat_total += p;
  for (double p : s.pi_model()) model_total += p;
  CHECK(cat_total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(model_total == doctest::Approx(1.0).epsilon(1e-12));

  // huge concentration: near uniform
  Rng rng2(4);
  const SamplingModel flat = gen_dirichlet_sampling(10, 4, 1e6, rng2);
  for (double p : flat.pi_model()) CHECK(p == doctest::Approx(0.1).epsilon(0.01));

  // concentration 5 at d = 200: probabilities vary by a moderate factor
  std::vector<double> ratios;
  Rng rng3(5);
  for (int draw = 0; draw < 21; ++draw) {
    const SamplingModel m = gen_dirichlet_sampling(200, 200, 5.0, rng3);
    double lo = 1.0, hi = 0.0;
    for (double p : m.pi_model()) {
      lo = std::min(lo, p);
      hi = std::max(hi, p);
    }
    ratios.push_back(hi / lo);
  }
  const double med = median(ratios);
  CHECK(med >= 3.0);
  CHECK(med <= 40.0);
}

TEST_CASE("oracle_se_for dispatches variants consistently") {
  Rng rng(11);
  const ScoreMatrix truth = gen_truth(8, 3, 2, 1.0, rng);
  const SamplingModel uni = SamplingModel::uniform(8, 3);
  const FunctionalSpec spec = FunctionalSpec::linear_entry({{0, 0, 1.0}});
  const int n = 10000;
  const double eff = oracle_se_for(Method::Efficient, truth, uni, spec, 2, n);
  CHECK(eff == oracle_se_for(Method::EfficientNonuniform, truth, uni, spec, 2, n));
  const double whit = oracle_se_for(Method::Whitened, truth, uni, spec, 2, n);
  CHECK(whit == oracle_se_for(Method::IpwKnown, truth, uni, spec, 2, n));
  CHECK(whit == oracle_se_for(Method::IpwEstimated, truth, uni, spec, 2, n));
  CHECK(eff > 0.0);
  CHECK(eff <= whit);
}

TEST_CASE("mc_summary aggregates records and rejects a degenerate oracle") {
  std::vector<RepRecord> recs;
  recs.push_back({Method::Efficient, 0, 1.2, 0.2, 1.0, true, false});
  recs.push_back({Method::Efficient, 1, 0.8, 0.4, -1.0, true, false});
  recs.push_back({Method::Efficient, 2, 2.0, 0.3, 5.0, false, false});
  recs.push_back({Method::Efficient, 3, 0.0, 0.0, 0.0, false, true});  // failed
  recs.push_back({Method::Whitened, 0, 9.9, 9.9, 9.9, true, false});   // other method
  const MethodSummary s = mc_summary(Method::Efficient, 1.0, 0.25, recs);
  CHECK(s.replications == 3);
  CHECK(s.failures == 1);
  CHECK(s.coverage == doctest::Approx(2.0 / 3.0));
  CHECK(s.median_se == doctest::Approx(0.3));
  CHECK(s.se_ratio == doctest::Approx(0.3 / 0.25));
  CHECK(s.mean_abs_z == doctest::Approx(7.0 / 3.0));
  CHECK(s.var_z == doctest::Approx(27.0 / 3.0 - (5.0 / 3.0) * (5.0 / 3.0)));
  CHECK(s.mean_estimate == doctest::Approx(4.0 / 3.0));
  CHECK(s.rmse == doctest::Approx(std::sqrt((0.04 + 0.04 + 1.0) / 3.0)));
  CHECK_THROWS_AS(mc_summary(Method::Efficient, 1.0, 0.0, recs), std::invalid_argument);
}

TEST_CASE("replications on a null truth center the estimate at zero") {
  FunctionalSpec spec = FunctionalSpec::category_contrast(0, 1, 0);
  SimConfig cfg(spec);
  cfg.d1 = 8;
  cfg.d2 = 2;
  cfg.rank = 1;
  cfg.alpha = 0.5;
  cfg.battles_per_rep = 4000;
  cfg.folds = 3;
  cfg.methods = {Method::Efficient};
  cfg.seed = 77;
  const ScoreMatrix zero_truth(Eigen::MatrixXd::Zero(8, 2), 0.5);
  const SamplingModel uni = SamplingModel::uniform(8, 2);
  int fine = 0;
  for (int rep = 0; rep < 5; ++rep) {
    const std::vector<RepRecord> recs = run_replication(cfg, zero_truth, uni, 0.0, rep);
    REQUIRE(recs.size() == 1);
    CHECK_FALSE(recs[0].failed);
    if (std::abs(recs[0].estimate) < 4.0 * recs[0].se) ++fine;
    // covered flag is the |z| <= quantile rule
    const double z_q = normal_quantile(0.975);
    CHECK(recs[0].covered == (std::abs(recs[0].z) <= z_q + 1e-12));
  }
  CHECK(fine >= 4);
}

TEST_CASE("studies are deterministic and independent of worker count") {
  FunctionalSpec spec = FunctionalSpec::linear_entry({{0, 0, 1.0}});
  SimConfig cfg(spec);
  cfg.d1 = 8;
  cfg.d2 = 2;
  cfg.rank = 1;
  cfg.alpha = 1.0;
  cfg.battles_per_rep = 4000;
  cfg.replications = 20;
  cfg.folds = 3;
  cfg.methods = {Method::Efficient, Method::Whitened};
  cfg.seed = 2024;
  cfg.workers = 1;
  const StudyResult a = run_study(cfg);
  cfg.workers = 2;
  const StudyResult b = run_study(cfg);

  REQUIRE(a.records.size() == 40);
  REQUIRE(b.records.size() == 40);
  for (size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].estimate == b.records[i].estimate);
    CHECK(a.records[i].se == b.records[i].se);
    CHECK(a.records[i].method == b.records[i].method);
    CHECK(a.records[i].replication == b.records[i].replication);
    CHECK_FALSE(a.records[i].failed);
  }

  REQUIRE(a.summaries.size() == 2);
  CHECK(a.summaries[0].method == Method::Efficient);
  CHECK(a.summaries[1].method == Method::Whitened);
  for (const MethodSummary& s : a.summaries) {
    CHECK(s.replications == 20);
    CHECK(s.failures == 0);
    CHECK(s.coverage >= 0.7);
    CHECK(s.coverage <= 1.0);
    CHECK(s.median_se > 0.0);
    CHECK(s.se_ratio > 0.5);
    CHECK(s.se_ratio < 2.0);
  }

  // coverage monotonicity in the level, recomputed from the z scores
  const double z90 = normal_quantile(0.95), z99 = normal_quantile(0.995);
  int cov90 = 0, cov99 = 0;
  for (const RepRecord& r : a.records) {
    if (r.method != Method::Efficient) continue;
    cov90 += std::abs(r.z) <= z90 ? 1 : 0;
    cov99 += std::abs(r.z) <= z99 ? 1 : 0;
  }
  CHECK(cov99 >= cov90);
}

TEST_CASE("record and summary exports carry the pinned headers and round-trip") {
  std::vector<RepRecord> recs;
  recs.push_back({Method::Efficient, 0, 1.25, 0.25, 1.0, true, false});
  recs.push_back({Method::Whitened, 0, -0.5, 0.125, -4.0, false, false});
  std::ostringstream out;
  write_records_csv(recs, out);
  std::istringstream in(out.str());
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "method,replication,estimate,se,z,covered");
  int rows = 0;
  int covered_count = 0;
  while (std::getline(in, line)) {
    ++rows;
    // covered flag round-trips as the final 0/1 field
    covered_count += (line.back() == '1') ? 1 : 0;
  }
  CHECK(rows == 2);
  CHECK(covered_count == 1);
  CHECK(out.str().find("1.25") != std::string::npos);
  CHECK(out.str().find("0.125") != std::string::npos);

  MethodSummary s = mc_summary(Method::Efficient, 1.0, 0.2, recs);
  std::ostringstream sum_out;
  write_summary_csv({s}, sum_out);
  std::istringstream sum_in(sum_out.str());
  REQUIRE(std::getline(sum_in, line));
  CHECK(line ==
        "method,replications,failures,coverage,median_se,oracle_se,se_ratio,ks,"
        "mean_abs_z,var_z,mean_estimate,rmse");
  REQUIRE(std::getline(sum_in, line));
  CHECK(line.find("efficient") == 0);
}
