#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "liftms/rng.hpp"
#include "liftms/sensing.hpp"
#include "liftms/unlifted.hpp"

using namespace liftms;

namespace {

Eigen::MatrixXd oddonly_z(int n, StreamRng& rng) {
  Eigen::MatrixXd z = rng.normal_mat(n, 1);
  for (int i = 1; i < n; i += 2) z.row(i).setZero();
  return z;
}

}  // namespace

TEST_CASE("unlifted gradient matches finite differences") {
  StreamRng rng(41, 0, "unlifted");
  const SensingEnsemble e = gaussian_instance(4, 2, 6, rng);
  const Eigen::MatrixXd x = rng.normal_mat(4, 2);
  const Eigen::MatrixXd g = unlifted_grad(e, x);
  const double h = 1e-6;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 2; ++j) {
      Eigen::MatrixXd xp = x, xm = x;
      xp(i, j) += h;
      xm(i, j) -= h;
      const double fd = (unlifted_loss(e, xp) - unlifted_loss(e, xm)) / (2 * h);
      CHECK(g(i, j) == doctest::Approx(fd).epsilon(1e-5));
    }
}

TEST_CASE("hessian quadform matches second differences and the full matrix") {
  StreamRng rng(42, 0, "unlifted");
  const SensingEnsemble e = gaussian_instance(4, 2, 5, rng);
  const Eigen::MatrixXd x = rng.normal_mat(4, 2);
  const Eigen::MatrixXd hess = unlifted_hessian(e, x);
  CHECK((hess - hess.transpose()).norm() <= 1e-10 * hess.norm());
  for (int probe = 0; probe < 5; ++probe) {
    Eigen::MatrixXd u = rng.normal_mat(4, 2);
    u /= u.norm();
    const double qf = unlifted_hessian_quadform(e, x, u);
    const double h = 1e-4;
    const double fd = (unlifted_loss(e, x + h * u) - 2 * unlifted_loss(e, x) +
                       unlifted_loss(e, x - h * u)) /
                      (h * h);
    CHECK(qf == doctest::Approx(fd).epsilon(1e-5));
    // column-major stacking matches the full Hessian convention
    Eigen::Map<const Eigen::VectorXd> uv(u.data(), u.size());
    CHECK(qf == doctest::Approx(uv.dot(hess * uv)).epsilon(1e-10));
  }
}

TEST_CASE("residual matrix is the matrix-space gradient") {
  StreamRng rng(43, 0, "unlifted");
  const SensingEnsemble e = gaussian_instance(4, 1, 6, rng);
  Eigen::MatrixXd g = rng.normal_mat(4, 4);
  const Eigen::MatrixXd m = 0.5 * (g + g.transpose());
  const Eigen::MatrixXd s = sensing_residual_matrix(e, m);
  Eigen::MatrixXd want = Eigen::MatrixXd::Zero(4, 4);
  const Eigen::VectorXd y = apply_measurements(e, m);
  for (int k = 0; k < e.m(); ++k) want += (y(k) - e.b(k)) * e.mats[k];
  CHECK((s - want).norm() <= 1e-12 * std::max(1.0, want.norm()));
  // at the truth the residual vanishes
  CHECK(sensing_residual_matrix(e, e.M_star).norm() <= 1e-10);
}

TEST_CASE("certification at the ground truth") {
  StreamRng rng(44, 0, "unlifted");
  const SensingEnsemble e = pmc_instance(6, 0.1, rng.normal_mat(6, 1), false);
  StreamRng crng(44, 1, "certify");
  const UnliftedCertificate cert =
      certify_unlifted_point(e, e.Z, 50, 1e-8, 1e-8, crng);
  CHECK(cert.fop_ok);
  CHECK(cert.sop_ok);
  CHECK(cert.grad_norm <= 1e-10);
  CHECK(cert.recovery_error <= 1e-12);
  CHECK(cert.min_quadform >= -1e-8);
}

TEST_CASE("sign_flip_seeds enumerates single-entry flips") {
  Eigen::MatrixXd z(4, 1);
  z << 1.0, 0.0, -2.0, 3.0;
  const auto seeds = sign_flip_seeds(z);
  REQUIRE(seeds.size() == 3);
  for (const auto& s : seeds) {
    CHECK((s.cwiseAbs() - z.cwiseAbs()).norm() == 0.0);
    int flipped = 0;
    for (int i = 0; i < 4; ++i)
      if (s(i, 0) != z(i, 0)) ++flipped;
    CHECK(flipped == 1);
  }
}

TEST_CASE("harvest finds the odd-support sign-flip traps") {
  StreamRng zrng(45, 0, "unlifted");
  const Eigen::MatrixXd z = oddonly_z(6, zrng);
  const SensingEnsemble e = pmc_instance(6, 0.01, z, false);

  HarvestOptions opt;
  opt.target = 3;
  opt.max_attempts = 3;  // seeds only
  opt.grad_tol = 1e-10;
  opt.min_recovery_error = 0.05;
  opt.sop_tol = 1e-8;
  opt.descend_iters = 0;
  opt.seeds = sign_flip_seeds(z);
  StreamRng hrng(45, 1, "harvest");
  const auto points = harvest_spurious(e, opt, hrng);
  REQUIRE(points.size() >= 1);
  for (const auto& hp : points) {
    CHECK(hp.grad_norm <= 1e-10);
    CHECK(hp.recovery_error > 0.05);
    CHECK(hp.lambda_min_hessian >= -1e-8);

    // the stationarity magnitude diagnostics hold at genuine traps
    const MagnitudeChecks mc =
        fop_magnitude_checks(e, smoothness_constants(e), hp.X);
    CHECK(mc.sigma_floor_ok);
    CHECK(mc.descent_eig_ok);
  }
}

TEST_CASE("harvest deduplicates gauge copies") {
  StreamRng zrng(46, 0, "unlifted");
  const Eigen::MatrixXd z = oddonly_z(6, zrng);
  const SensingEnsemble e = pmc_instance(6, 0.01, z, false);
  HarvestOptions opt;
  opt.target = 10;
  opt.max_attempts = 4;
  opt.grad_tol = 1e-10;
  opt.min_recovery_error = 0.05;
  opt.descend_iters = 0;
  // the same trap seeded four ways must not produce four copies
  const Eigen::MatrixXd s = sign_flip_seeds(z)[0];
  opt.seeds = {s, s, -s, -s};
  StreamRng hrng(46, 1, "harvest");
  const auto points = harvest_spurious(e, opt, hrng);
  CHECK(points.size() == 1);  // X, -X share the gram matrix
}
