#include "liftms/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace liftms {

namespace {

std::int64_t checked_total(const std::vector<int>& dims) {
  std::int64_t total = 1;
  for (int d : dims) {
    if (d <= 0) throw std::invalid_argument("tensor dims must be positive");
    if (total > (std::int64_t(1) << 40) / d)
      throw std::invalid_argument("tensor too large");
    total *= d;
  }
  return total;
}

std::vector<std::int64_t> row_major_strides(const std::vector<int>& dims) {
  std::vector<std::int64_t> s(dims.size(), 1);
  for (int k = static_cast<int>(dims.size()) - 2; k >= 0; --k)
    s[k] = s[k + 1] * dims[k + 1];
  return s;
}

constexpr int kMaxPermOrder = 6;

}  // namespace

DenseTensor::DenseTensor(int order, int dim) {
  if (order < 0) throw std::invalid_argument("order must be >= 0");
  dims_.assign(order, dim);
  data_.assign(checked_total(dims_), 0.0);
}

DenseTensor::DenseTensor(std::vector<int> dims) : dims_(std::move(dims)) {
  data_.assign(checked_total(dims_), 0.0);
}

bool DenseTensor::cubic() const {
  for (int d : dims_)
    if (d != dims_[0]) return false;
  return true;
}

int DenseTensor::dim() const {
  if (dims_.empty()) return 0;
  if (!cubic()) throw std::logic_error("dim() on non-cubic tensor");
  return dims_[0];
}

std::int64_t DenseTensor::offset(const std::vector<int>& idx) const {
  if (idx.size() != dims_.size())
    throw std::invalid_argument("index order mismatch");
  std::int64_t off = 0;
  for (size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] < 0 || idx[k] >= dims_[k])
      throw std::out_of_range("tensor index out of range");
    off = off * dims_[k] + idx[k];
  }
  return off;
}

void DenseTensor::set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

double DenseTensor::frobenius_norm() const { return as_vector().norm(); }

DenseTensor outer_power(const Eigen::VectorXd& x, int order) {
  if (order < 1) throw std::invalid_argument("outer_power needs order >= 1");
  const int d = static_cast<int>(x.size());
  if (d == 0) throw std::invalid_argument("outer_power of empty vector");
  DenseTensor out(order, d);
  out.as_vector().segment(0, d) = x;
  std::int64_t cur = d;
  for (int k = 1; k < order; ++k) {
    // grow in place from the back: out[0..cur*d) = kron(out[0..cur), x)
    for (std::int64_t i = cur - 1; i >= 0; --i) {
      const double v = out[i];
      double* dst = out.data() + i * d;
      for (int j = d - 1; j >= 0; --j) dst[j] = v * x(j);
    }
    cur *= d;
  }
  return out;
}

DenseTensor mode_product(const DenseTensor& t, const Eigen::MatrixXd& m,
                         int mode) {
  const auto& dims = t.dims();
  if (mode < 0 || mode >= t.order())
    throw std::invalid_argument("mode out of range");
  const int dmode = dims[mode];
  if (m.cols() != dmode)
    throw std::invalid_argument("matrix cols must match the mode's dim");
  const int p = static_cast<int>(m.rows());

  std::int64_t outer = 1, inner = 1;
  for (int k = 0; k < mode; ++k) outer *= dims[k];
  for (int k = mode + 1; k < t.order(); ++k) inner *= dims[k];

  std::vector<int> odims = dims;
  odims[mode] = p;
  DenseTensor out(odims);

  using RowMat =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  if (mode == 0) {
    Eigen::Map<const RowMat> src(t.data(), dmode, inner);
    Eigen::Map<RowMat> dst(out.data(), p, inner);
    dst.noalias() = m * src;
  } else if (mode == t.order() - 1) {
    Eigen::Map<const RowMat> src(t.data(), outer, dmode);
    Eigen::Map<RowMat> dst(out.data(), outer, p);
    dst.noalias() = src * m.transpose();
  } else {
    for (std::int64_t o = 0; o < outer; ++o) {
      Eigen::Map<const RowMat> src(t.data() + o * dmode * inner, dmode, inner);
      Eigen::Map<RowMat> dst(out.data() + o * p * inner, p, inner);
      dst.noalias() = m * src;
    }
  }
  return out;
}

double inner_full(const DenseTensor& a, const DenseTensor& b) {
  if (a.dims() != b.dims()) throw std::invalid_argument("shape mismatch");
  return a.as_vector().dot(b.as_vector());
}

namespace {

// Sum of squared differences between t and its axis permutation, where
// perm_strides[j] is the stride of input axis j under the permutation.
double perm_diff_sq(const DenseTensor& t,
                    const std::vector<std::int64_t>& perm_strides) {
  const int l = t.order();
  const int d = t.dims()[0];
  std::vector<int> idx(l, 0);
  std::int64_t off_in = 0;
  double acc = 0.0;
  const double* x = t.data();
  const std::int64_t total = t.size();
  for (std::int64_t flat = 0; flat < total; ++flat) {
    const double diff = x[flat] - x[off_in];
    acc += diff * diff;
    // odometer increment, keeping the permuted offset in sync
    for (int k = l - 1; k >= 0; --k) {
      if (++idx[k] < d) {
        off_in += perm_strides[k];
        break;
      }
      idx[k] = 0;
      off_in -= perm_strides[k] * (d - 1);
    }
  }
  return acc;
}

void require_permutable(const DenseTensor& t, const char* who) {
  if (!t.cubic()) throw std::invalid_argument(std::string(who) + ": cubic only");
  if (t.order() > kMaxPermOrder)
    throw std::invalid_argument(std::string(who) + ": order > 6 unsupported");
  if (t.order() == 0) throw std::invalid_argument(std::string(who) + ": empty");
}

}  // namespace

double asymmetry(const DenseTensor& t) {
  require_permutable(t, "asymmetry");
  const int l = t.order();
  const auto strides = row_major_strides(t.dims());
  std::vector<int> perm(l);
  std::iota(perm.begin(), perm.end(), 0);
  const double norm = t.frobenius_norm();
  const double floor = std::numeric_limits<double>::min();
  double worst = 0.0;
  while (std::next_permutation(perm.begin(), perm.end())) {
    // output axis k reads input axis perm[k]; stride of digit j is
    // strides[position of j in perm]
    std::vector<std::int64_t> pstr(l);
    for (int k = 0; k < l; ++k) pstr[perm[k]] = strides[k];
    worst = std::max(worst, perm_diff_sq(t, pstr));
  }
  return std::sqrt(worst) / std::max(norm, floor);
}

DenseTensor symmetrize(const DenseTensor& t) {
  require_permutable(t, "symmetrize");
  const int l = t.order();
  const int d = t.dims()[0];
  const auto strides = row_major_strides(t.dims());
  std::vector<int> perm(l);
  std::iota(perm.begin(), perm.end(), 0);
  DenseTensor out(t.dims());
  std::int64_t count = 0;
  do {
    std::vector<std::int64_t> pstr(l);
    for (int k = 0; k < l; ++k) pstr[perm[k]] = strides[k];
    std::vector<int> idx(l, 0);
    std::int64_t off_in = 0;
    const std::int64_t total = t.size();
    for (std::int64_t flat = 0; flat < total; ++flat) {
      out[flat] += t[off_in];
      for (int k = l - 1; k >= 0; --k) {
        if (++idx[k] < d) {
          off_in += pstr[k];
          break;
        }
        idx[k] = 0;
        off_in -= pstr[k] * (d - 1);
      }
    }
    ++count;
  } while (std::next_permutation(perm.begin(), perm.end()));
  out.as_vector() /= static_cast<double>(count);
  return out;
}

double integer_power(double base, std::int64_t e) {
  if (e < 0) throw std::invalid_argument("integer_power: negative exponent");
  double result = 1.0, b = base;
  for (std::int64_t k = e; k > 0; k >>= 1) {
    if (k & 1) result *= b;
    b *= b;
  }
  return result;
}

DenseTensor operator_power_apply(const Eigen::MatrixXd& u, double eta,
                                 std::int64_t steps, const DenseTensor& w0) {
  if (u.rows() != u.cols()) throw std::invalid_argument("U must be square");
  if (!w0.cubic() || w0.dims().empty() || w0.dims()[0] != u.rows())
    throw std::invalid_argument("w0 must be cubic over U's dimension");
  const double unorm = u.norm();
  if ((u - u.transpose()).norm() > 1e-8 * std::max(unorm, 1.0))
    throw std::invalid_argument("U must be symmetric");
  if (steps < 0) throw std::invalid_argument("steps must be >= 0");
  if (steps == 0) return w0;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(u);
  const Eigen::MatrixXd v = es.eigenvectors();
  const Eigen::VectorXd sig = es.eigenvalues();
  const int l = w0.order();
  const int d = w0.dims()[0];

  DenseTensor w = w0;
  const Eigen::MatrixXd vt = v.transpose();
  for (int mode = 0; mode < l; ++mode) w = mode_product(w, vt, mode);

  // scale each coefficient by (1 + eta * prod_t sig[p_t])^steps
  std::vector<int> idx(l, 0);
  std::vector<double> prefix(l + 1, 1.0);
  const std::int64_t total = w.size();
  std::int64_t flat = 0;
  while (flat < total) {
    for (int k = 0; k < l; ++k) prefix[k + 1] = prefix[k] * sig(idx[k]);
    w[flat] *= integer_power(1.0 + eta * prefix[l], steps);
    ++flat;
    for (int k = l - 1; k >= 0; --k) {
      if (++idx[k] < d) break;
      idx[k] = 0;
    }
  }

  for (int mode = 0; mode < l; ++mode) w = mode_product(w, v, mode);
  return w;
}

}  // namespace liftms
