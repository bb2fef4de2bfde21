#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <set>
#include <utility>

#include "liftms/rng.hpp"
#include "liftms/sensing.hpp"

using namespace liftms;

namespace {

Eigen::MatrixXd random_sym(int n, StreamRng& rng) {
  Eigen::MatrixXd g = rng.normal_mat(n, n);
  return 0.5 * (g + g.transpose());
}

}  // namespace

TEST_CASE("pmc support: diagonal plus pairs touching an even 1-based index") {
  // n=4 (1-based): unobserved pairs are exactly (1,3) and (3,1)
  std::set<std::pair<int, int>> unobserved;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (!pmc_pair_observed(i, j)) unobserved.insert({i, j});
  CHECK(unobserved == std::set<std::pair<int, int>>{{0, 2}, {2, 0}});

  // n=6 adds the pairs among 1-based {1,3,5} off the diagonal
  std::set<std::pair<int, int>> un6;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      if (!pmc_pair_observed(i, j)) un6.insert({i, j});
  CHECK(un6 == std::set<std::pair<int, int>>{
                   {0, 2}, {2, 0}, {0, 4}, {4, 0}, {2, 4}, {4, 2}});
}

TEST_CASE("pmc measurements read c_ij * M_ij and b is A(M*)") {
  StreamRng rng(31, 0, "sensing");
  const Eigen::MatrixXd z = rng.normal_mat(5, 1);
  for (bool sqrt_weights : {false, true}) {
    const double rho = 0.17;
    const SensingEnsemble e = pmc_instance(5, rho, z, sqrt_weights);
    REQUIRE(e.m() == 25);
    const double off = sqrt_weights ? std::sqrt(rho) : rho;
    const Eigen::MatrixXd m = random_sym(5, rng);
    const Eigen::VectorXd y = apply_measurements(e, m);
    int k = 0;
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) {
        const double c = pmc_pair_observed(i, j) ? 1.0 : off;
        CHECK(y(k) == doctest::Approx(c * m(i, j)).epsilon(1e-12));
        ++k;
      }
    CHECK((e.b - apply_measurements(e, e.M_star)).norm() <= 1e-12);
  }
}

TEST_CASE("pmc weighted energy identity and rho=1 isometry") {
  StreamRng rng(32, 0, "sensing");
  const Eigen::MatrixXd z = rng.normal_mat(6, 1);
  const SensingEnsemble e = pmc_instance(6, 0.3, z, false);
  const Eigen::MatrixXd m = random_sym(6, rng);
  double want = 0.0;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      want += (pmc_pair_observed(i, j) ? 1.0 : 0.09) * m(i, j) * m(i, j);
  CHECK(apply_measurements(e, m).squaredNorm() ==
        doctest::Approx(want).epsilon(1e-12));

  const SensingEnsemble iso = pmc_instance(6, 1.0, z, false);
  CHECK(apply_measurements(iso, m).squaredNorm() ==
        doctest::Approx(m.squaredNorm()).epsilon(1e-12));
}

TEST_CASE("pmc closed-form constants") {
  StreamRng rng(33, 0, "sensing");
  const Eigen::MatrixXd z = rng.normal_mat(6, 1);

  const SensingEnsemble lit = pmc_instance(6, 0.01, z, false);
  const SmoothnessConstants cl = smoothness_constants(lit);
  CHECK(cl.exact);
  CHECK(cl.L_s == doctest::Approx(1.0));
  CHECK(cl.alpha_s == doctest::Approx(1e-4));
  CHECK(cl.delta == doctest::Approx((1.0 - 1e-4) / (1.0 + 1e-4)));

  const SensingEnsemble sq = pmc_instance(6, 0.01, z, true);
  const SmoothnessConstants cs = smoothness_constants(sq);
  CHECK(cs.exact);
  CHECK(cs.L_s == doctest::Approx(1.0));
  CHECK(cs.alpha_s == doctest::Approx(0.01));
  CHECK(cs.delta == doctest::Approx(0.99 / 1.01));

  const SensingEnsemble one = pmc_instance(6, 1.0, z, false);
  const SmoothnessConstants c1 = smoothness_constants(one);
  CHECK(c1.L_s == doctest::Approx(1.0));
  CHECK(c1.alpha_s == doctest::Approx(1.0));
  CHECK(c1.delta == doctest::Approx(0.0));

  CHECK_THROWS(pmc_instance(6, 0.0, z, false));
}

TEST_CASE("nn instance structure") {
  StreamRng rng(34, 0, "sensing");
  const SensingEnsemble e = nn_quadratic_instance(5, 2, 9, rng);
  REQUIRE(e.m() == 9);
  CHECK(e.has_truth);
  CHECK(e.family == "nn");
  for (int k = 0; k < 9; ++k) {
    // rank-1 PSD measurement matrices, nonnegative labels
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(e.mats[k]);
    CHECK(es.eigenvalues().minCoeff() >= -1e-12);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(e.mats[k]);
    CHECK(svd.singularValues()(1) <= 1e-12 * svd.singularValues()(0));
    CHECK(e.b(k) >= 0.0);
    // b_k = <d d^T, Z Z^T> = |Z^T d|^2
    CHECK(e.b(k) == doctest::Approx(e.mats[k].cwiseProduct(e.M_star).sum())
                        .epsilon(1e-12));
  }
}

TEST_CASE("gaussian instance probe constants bracket the operator") {
  StreamRng rng(35, 0, "sensing");
  const SensingEnsemble e = gaussian_instance(4, 1, 6, rng);
  const SmoothnessConstants c = smoothness_constants(e, 100, 7);
  CHECK_FALSE(c.exact);
  CHECK(c.alpha_s <= c.L_s);
  CHECK(c.alpha_s >= 0.0);
  // the probe values are attained ratios, so they bound a fresh direction
  StreamRng prng(36, 0, "sensing");
  Eigen::MatrixXd x = prng.normal_mat(4, 2);
  Eigen::MatrixXd dir = x * x.transpose();
  dir /= dir.norm();
  const double ratio = apply_measurements(e, dir).squaredNorm();
  CHECK(ratio <= c.L_s * (1.0 + 1e-9));
}

TEST_CASE("ensemble json round trip") {
  StreamRng rng(37, 0, "sensing");
  const SensingEnsemble e = pmc_instance(4, 0.25, rng.normal_mat(4, 1), true);
  const std::string text = ensemble_to_json(e);
  const SensingEnsemble back = ensemble_from_json(text);
  CHECK(back.n == e.n);
  CHECK(back.r == e.r);
  CHECK(back.m() == e.m());
  CHECK(back.family == e.family);
  CHECK(back.has_truth == e.has_truth);
  CHECK((back.b - e.b).norm() == 0.0);
  CHECK((back.M_star - e.M_star).norm() == 0.0);
  for (int k = 0; k < e.m(); ++k)
    CHECK((back.mats[k] - e.mats[k]).norm() == 0.0);
  // serialization is stable
  CHECK(ensemble_to_json(back) == text);

  CHECK_THROWS(ensemble_from_json("{}"));
}

TEST_CASE("global benign bound separates tiny and large truths") {
  StreamRng rng(38, 0, "sensing");
  Eigen::MatrixXd z_small = 1e-4 * rng.normal_mat(4, 1);
  const SensingEnsemble small = pmc_instance(4, 0.5, z_small, false);
  const SmoothnessConstants cs = smoothness_constants(small);
  double lhs = 0.0, rhs = 0.0;
  CHECK(global_benign_norm_bound(small, cs, &lhs, &rhs));
  CHECK(lhs <= rhs);
  CHECK(lhs == doctest::Approx(small.M_star.norm()));

  Eigen::MatrixXd z_big = 50.0 * rng.normal_mat(4, 1);
  const SensingEnsemble big = pmc_instance(4, 0.01, z_big, false);
  CHECK_FALSE(global_benign_norm_bound(big, smoothness_constants(big)));
}
