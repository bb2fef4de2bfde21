#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace liftms {

// Dense real tensor with flat row-major storage. The domain API works with
// cubic tensors (all axes share one dim); general shapes show up only as
// contraction intermediates.
class DenseTensor {
 public:
  DenseTensor() = default;
  DenseTensor(int order, int dim);
  explicit DenseTensor(std::vector<int> dims);

  int order() const { return static_cast<int>(dims_.size()); }
  bool cubic() const;
  int dim() const;  // requires cubic
  const std::vector<int>& dims() const { return dims_; }
  std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](std::int64_t i) { return data_[i]; }
  double operator[](std::int64_t i) const { return data_[i]; }

  // Horner / row-major flat offset of a multi-index.
  std::int64_t offset(const std::vector<int>& idx) const;
  double at(const std::vector<int>& idx) const { return data_[offset(idx)]; }
  double& at(const std::vector<int>& idx) { return data_[offset(idx)]; }

  void set_zero();
  double frobenius_norm() const;

  Eigen::Map<const Eigen::VectorXd> as_vector() const {
    return Eigen::Map<const Eigen::VectorXd>(data_.data(), size());
  }
  Eigen::Map<Eigen::VectorXd> as_vector() {
    return Eigen::Map<Eigen::VectorXd>(data_.data(), size());
  }

 private:
  std::vector<int> dims_;
  std::vector<double> data_;
};

// x^{\otimes order}; order >= 1.
DenseTensor outer_power(const Eigen::VectorXd& x, int order);

// Contract `mode` of t (0-based) against the rows of m (p x dims[mode]):
// out[..., i, ...] = sum_j m(i, j) * t[..., j, ...]. The mode's dim becomes p.
DenseTensor mode_product(const DenseTensor& t, const Eigen::MatrixXd& m,
                         int mode);

// Full inner product; shapes must match.
double inner_full(const DenseTensor& a, const DenseTensor& b);

// max over axis permutations of ||t - t∘sigma||_F / max(||t||_F, tiny).
// Cubic tensors of order <= 6 only.
double asymmetry(const DenseTensor& t);

// Average of t over all axis permutations. Cubic, order <= 6.
DenseTensor symmetrize(const DenseTensor& t);

// Apply (I + eta * U^{x l as a mode-wise operator})^steps to w0 through the
// eigendecomposition of the symmetric matrix U. steps >= 0.
DenseTensor operator_power_apply(const Eigen::MatrixXd& u, double eta,
                                 std::int64_t steps, const DenseTensor& w0);

// base^e for integer e >= 0 (exact for negative bases).
double integer_power(double base, std::int64_t e);

}  // namespace liftms
