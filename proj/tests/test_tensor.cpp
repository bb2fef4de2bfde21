#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "liftms/rng.hpp"
#include "liftms/tensor.hpp"

using namespace liftms;

namespace {

DenseTensor random_tensor(int order, int dim, StreamRng& rng) {
  DenseTensor t(order, dim);
  for (std::int64_t i = 0; i < t.size(); ++i) t[i] = rng.normal();
  return t;
}

}  // namespace

TEST_CASE("outer_power matches explicit products") {
  Eigen::VectorXd x(2);
  x << 1.0, 2.0;
  const DenseTensor t2 = outer_power(x, 2);
  CHECK(t2[0] == 1.0);
  CHECK(t2[1] == 2.0);
  CHECK(t2[2] == 2.0);
  CHECK(t2[3] == 4.0);

  StreamRng rng(11, 0, "tensor");
  Eigen::VectorXd y = rng.normal_vec(3);
  const DenseTensor t3 = outer_power(y, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        CHECK(t3.at({i, j, k}) == doctest::Approx(y(i) * y(j) * y(k)).epsilon(1e-14));
  CHECK(t3.frobenius_norm() ==
        doctest::Approx(std::pow(y.norm(), 3)).epsilon(1e-12));
}

TEST_CASE("offset is the row-major Horner form") {
  DenseTensor t(3, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k)
        CHECK(t.offset({i, j, k}) == (std::int64_t(i) * 4 + j) * 4 + k);
  CHECK_THROWS(t.offset({0, 0}));
  CHECK_THROWS(t.offset({0, 0, 4}));
}

TEST_CASE("mode_product contracts the chosen axis") {
  StreamRng rng(12, 0, "tensor");
  const DenseTensor t = random_tensor(3, 3, rng);
  Eigen::MatrixXd m = rng.normal_mat(2, 3);
  for (int mode = 0; mode < 3; ++mode) {
    const DenseTensor out = mode_product(t, m, mode);
    REQUIRE(out.dims()[mode] == 2);
    for (int a = 0; a < out.dims()[0]; ++a)
      for (int b = 0; b < out.dims()[1]; ++b)
        for (int c = 0; c < out.dims()[2]; ++c) {
          double want = 0.0;
          for (int j = 0; j < 3; ++j) {
            std::vector<int> idx = {a, b, c};
            const int row = idx[mode];
            idx[mode] = j;
            want += m(row, j) * t.at(idx);
          }
          CHECK(out.at({a, b, c}) == doctest::Approx(want).epsilon(1e-13));
        }
  }
  CHECK_THROWS(mode_product(t, m, 3));
  CHECK_THROWS(mode_product(t, Eigen::MatrixXd::Zero(2, 2), 0));
}

TEST_CASE("inner_full is the flat dot product") {
  StreamRng rng(13, 0, "tensor");
  const DenseTensor a = random_tensor(4, 2, rng);
  const DenseTensor b = random_tensor(4, 2, rng);
  double want = 0.0;
  for (std::int64_t i = 0; i < a.size(); ++i) want += a[i] * b[i];
  CHECK(inner_full(a, b) == doctest::Approx(want).epsilon(1e-14));
  CHECK_THROWS(inner_full(a, random_tensor(3, 2, rng)));
}

TEST_CASE("asymmetry and symmetrize") {
  // [[0,1],[0,0]]: the swap is [[0,0],[1,0]], difference norm sqrt(2)
  DenseTensor t(2, 2);
  t.at({0, 1}) = 1.0;
  CHECK(asymmetry(t) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  const DenseTensor s = symmetrize(t);
  CHECK(s.at({0, 0}) == 0.0);
  CHECK(s.at({0, 1}) == doctest::Approx(0.5));
  CHECK(s.at({1, 0}) == doctest::Approx(0.5));
  CHECK(s.at({1, 1}) == 0.0);
  CHECK(asymmetry(s) == doctest::Approx(0.0));

  StreamRng rng(14, 0, "tensor");
  const DenseTensor r = symmetrize(random_tensor(3, 3, rng));
  CHECK(asymmetry(r) <= 1e-14);
  // symmetrizing twice changes nothing
  const DenseTensor rr = symmetrize(r);
  CHECK((rr.as_vector() - r.as_vector()).norm() <= 1e-14 * r.frobenius_norm());
  // rank-1 powers are symmetric by construction
  CHECK(asymmetry(outer_power(rng.normal_vec(3), 4)) <= 1e-14);
}

TEST_CASE("operator_power_apply equals the dense Kronecker power") {
  StreamRng rng(15, 0, "tensor");
  const int d = 2, l = 3, steps = 7;
  const double eta = 0.37;
  Eigen::MatrixXd g = rng.normal_mat(d, d);
  const Eigen::MatrixXd u = 0.5 * (g + g.transpose());
  const DenseTensor w0 = random_tensor(l, d, rng);

  // K[(i,j,k),(a,b,c)] = U(i,a) U(j,b) U(k,c), row-major flattening
  const int total = 8;
  Eigen::MatrixXd kron(total, total);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int a = 0; a < d; ++a)
          for (int b = 0; b < d; ++b)
            for (int c = 0; c < d; ++c)
              kron((i * d + j) * d + k, (a * d + b) * d + c) =
                  u(i, a) * u(j, b) * u(k, c);
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(total, total) + eta * kron;
  Eigen::VectorXd want = w0.as_vector();
  for (int s = 0; s < steps; ++s) want = m * want;

  const DenseTensor got = operator_power_apply(u, eta, steps, w0);
  CHECK((Eigen::VectorXd(got.as_vector()) - want).norm() <=
        1e-10 * want.norm());

  // steps = 0 is the identity
  const DenseTensor same = operator_power_apply(u, eta, 0, w0);
  CHECK((same.as_vector() - w0.as_vector()).norm() == 0.0);
  CHECK_THROWS(operator_power_apply(g, eta, 1, w0));  // not symmetric
}

TEST_CASE("integer_power handles exact small cases") {
  CHECK(integer_power(-2.0, 3) == -8.0);
  CHECK(integer_power(0.0, 0) == 1.0);
  CHECK(integer_power(3.0, 0) == 1.0);
  CHECK(integer_power(2.0, 10) == 1024.0);
  CHECK(integer_power(-1.0, 7) == -1.0);
  CHECK_THROWS(integer_power(2.0, -1));
}
