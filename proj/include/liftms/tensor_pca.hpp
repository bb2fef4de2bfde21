#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "liftms/tensor.hpp"

namespace liftms {

struct PcaConfig {
  double learning_rate = 0.05;
  int epochs = 2000;
  double gradnorm_epsilon = 1e-8;
  int restarts = 5;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 20240917ull;
  std::uint64_t stream = 0;  // extra key so nested uses stay independent
};

// Best rank-1 description of a symmetric tensor: t ~ scale * direction^{x k},
// direction unit norm, scale signed.
struct Rank1Certificate {
  double scale = 0.0;
  Eigen::VectorXd direction;
  double residual_fro = 0.0;
  double fit_loss = 0.0;    // achieved value of the rank-1 fitting loss
  double grad_norm = 0.0;   // gradient norm at exit of the winning restart
  bool converged = false;   // gradient tolerance reached within the epoch cap
  int best_restart = 0;
};

Rank1Certificate dominant_component(const DenseTensor& t,
                                    const PcaConfig& cfg = {});

// ||second component|| / ||first component|| after one deflation step.
double deflation_ratio(const DenseTensor& t, const PcaConfig& cfg = {},
                       Rank1Certificate* first_out = nullptr,
                       Rank1Certificate* second_out = nullptr);

// Deterministic grid + ascent estimate of max_{|u|=1} |<t, u^{x k}>|.
// Small dims only (dim <= 4).
double spectral_norm_oracle(const DenseTensor& t, int grid_points = 10000);

// Contraction of t against v on all modes but the first; the multilinear map
// whose fixed points are the tensor eigenvectors.
Eigen::VectorXd multilinear_map(const DenseTensor& t, const Eigen::VectorXd& v);

}  // namespace liftms
