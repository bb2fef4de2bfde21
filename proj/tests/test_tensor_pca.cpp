#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "liftms/rng.hpp"
#include "liftms/tensor.hpp"
#include "liftms/tensor_pca.hpp"

using namespace liftms;

TEST_CASE("dominant_component recovers an exact rank-1 tensor") {
  StreamRng rng(21, 0, "pca");
  Eigen::VectorXd x = rng.normal_vec(4);
  const DenseTensor t = outer_power(x, 3);
  const Rank1Certificate cert = dominant_component(t);
  // t = |x|^3 * (x/|x|)^{x3}; odd order carries the sign in the direction
  CHECK(std::abs(cert.scale) ==
        doctest::Approx(std::pow(x.norm(), 3)).epsilon(1e-8));
  const Eigen::VectorXd unit = x / x.norm();
  const double align = std::abs(unit.dot(cert.direction));
  CHECK(align == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(cert.residual_fro <= 1e-8 * t.frobenius_norm());
  // reconstruction identity
  DenseTensor recon = outer_power(cert.direction, 3);
  recon.as_vector() *= cert.scale;
  CHECK((recon.as_vector() - t.as_vector()).norm() <=
        1e-8 * t.frobenius_norm());
}

TEST_CASE("even order rank-1 fit fixes the sign in the scale") {
  StreamRng rng(22, 0, "pca");
  Eigen::VectorXd x = rng.normal_vec(3);
  DenseTensor t = outer_power(x, 4);
  t.as_vector() *= -1.0;  // -|x|^4 * (x/|x|)^{x4}: negative scale
  const Rank1Certificate cert = dominant_component(t);
  CHECK(cert.scale < 0.0);
  CHECK(std::abs(cert.scale) ==
        doctest::Approx(std::pow(x.norm(), 4)).epsilon(1e-8));
}

TEST_CASE("deflation_ratio on a planted two-component tensor") {
  // u, v orthonormal: 3 u^{x4} + v^{x4} deflates to ratio 1/3
  Eigen::VectorXd u = Eigen::VectorXd::Zero(4), v = Eigen::VectorXd::Zero(4);
  u(0) = 1.0;
  v(2) = 1.0;
  DenseTensor t = outer_power(u, 4);
  t.as_vector() *= 3.0;
  t.as_vector() += outer_power(v, 4).as_vector();
  Rank1Certificate first, second;
  const double ratio = deflation_ratio(t, {}, &first, &second);
  CHECK(ratio == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
  CHECK(std::abs(first.scale) == doctest::Approx(3.0).epsilon(1e-7));
  CHECK(std::abs(second.scale) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(first.direction.dot(u)) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(std::abs(second.direction.dot(v)) ==
        doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("deflation at an exact rank-1 tensor reaches the noise floor") {
  // the second component of a pure power is optimization residue only; the
  // polish step must push it far below any honest two-component reading
  StreamRng rng(23, 0, "pca");
  Eigen::VectorXd x = rng.normal_vec(4);
  const DenseTensor t = outer_power(x, 3);
  CHECK(deflation_ratio(t) <= 1e-7);
}

TEST_CASE("spectral_norm_oracle frozen values") {
  // diagonal tensor: max_|u| sum_i t_iii u_i^3 at the best axis
  DenseTensor t(3, 3);
  t.at({0, 0, 0}) = 2.0;
  t.at({1, 1, 1}) = -5.0;
  CHECK(spectral_norm_oracle(t) == doctest::Approx(5.0).epsilon(1e-6));

  Eigen::VectorXd x(3);
  x << 0.6, -0.8, 0.0;  // unit
  const DenseTensor p = outer_power(x, 3);
  CHECK(spectral_norm_oracle(p) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("multilinear_map is the all-but-one-mode contraction") {
  StreamRng rng(24, 0, "pca");
  const int d = 3;
  DenseTensor t(3, d);
  for (std::int64_t i = 0; i < t.size(); ++i) t[i] = rng.normal();
  const Eigen::VectorXd v = rng.normal_vec(d);
  const Eigen::VectorXd got = multilinear_map(t, v);
  for (int i = 0; i < d; ++i) {
    double want = 0.0;
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) want += t.at({i, j, k}) * v(j) * v(k);
    CHECK(got(i) == doctest::Approx(want).epsilon(1e-12));
  }
  // at a rank-1 tensor the map is |x|^2-weighted power iteration toward x
  const Eigen::VectorXd x = rng.normal_vec(d);
  const Eigen::VectorXd mapped = multilinear_map(outer_power(x, 3), x);
  CHECK((mapped - x.squaredNorm() * x).norm() <= 1e-12 * mapped.norm());
}

TEST_CASE("dominant_component is deterministic in the config seed") {
  StreamRng rng(25, 0, "pca");
  DenseTensor t = symmetrize([&] {
    DenseTensor raw(3, 3);
    for (std::int64_t i = 0; i < raw.size(); ++i) raw[i] = rng.normal();
    return raw;
  }());
  const Rank1Certificate a = dominant_component(t);
  const Rank1Certificate b = dominant_component(t);
  CHECK(a.scale == b.scale);
  CHECK((a.direction - b.direction).norm() == 0.0);
  CHECK(a.best_restart == b.best_restart);
}
