#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "liftms/lifted.hpp"
#include "liftms/sensing.hpp"
#include "liftms/tensor_pca.hpp"

namespace liftms {

enum class Algorithm { gd, adam, pgd, custom_gd };

const char* algorithm_name(Algorithm a);
Algorithm algorithm_from_name(const std::string& name);

struct OptimizerConfig {
  Algorithm algorithm = Algorithm::gd;
  double learning_rate = -1.0;  // <= 0: auto from the top operator spectrum
  double lr_gain = 0.15;        // numerator of the auto rate
  std::int64_t max_iters = 1000;
  double grad_tol = 0.0;  // > 0: stop once |g| <= grad_tol * (1 + loss_0)

  double adam_beta1 = 0.9, adam_beta2 = 0.999, adam_eps = 1e-8;

  double pgd_radius = 1e-3;  // 0 keeps the iterates bitwise equal to gd
  std::int64_t pgd_t_thres = 50;
  double pgd_g_thres = -1.0;  // <= 0: 1e-6 * (1 + loss_0)

  double custom_g_thres = -1.0;  // <= 0: 1e-6 * (1 + loss_0)
  int custom_buffer_limit = 10;
  std::int64_t custom_min_iters = 100;
  int max_failed_escapes = 0;  // > 0: stop after this many rejected escapes
  double armijo_beta = 1e-4;
  double backtrack_gamma = 0.5;
  double escape_eta0 = 1.0;

  std::int64_t log_every = 1;    // trajectory sampling stride
  std::int64_t ratio_every = 0;  // deflation-ratio stride; 0 disables (costly)
  PcaConfig pca;                 // escape read-out / ratio fitting

  std::uint64_t seed_master = 20240917ull;
  std::uint64_t trial = 0;
};

struct TrajectoryPoint {
  std::int64_t iter = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  double asymmetry = 0.0;  // 0 for matrix-space runs
  double ratio = 0.0;      // deflation ratio of the iterate; 0 when not tracked
};

struct EscapeEvent {
  std::int64_t iter = 0;
  double step = 0.0;  // 0 when the backtrack floored out
  double loss_before = 0.0;
  double loss_after = 0.0;
  int backtracks = 0;
  bool accepted = false;
};

struct RunResult {
  std::vector<TrajectoryPoint> trajectory;
  DenseTensor w_final;      // lifted runs
  Eigen::MatrixXd x_final;  // matrix-space runs
  double final_loss = 0.0;
  double final_grad_norm = 0.0;
  std::int64_t iters = 0;  // update steps taken
  double learning_rate_used = 0.0;
  std::vector<EscapeEvent> escapes;
  bool stopped_early = false;
};

// Saddle-escape probe: fit the rank-1 read-out X of w, then move along
// (min eigvec of S(X X^T)) x (sigma_r right singular vector), outer-powered.
// When xhat is non-null the read-out factor is written there.
DenseTensor lifted_escape_direction(const LiftedProblem& p,
                                    const SensingEnsemble& e,
                                    const DenseTensor& w, const PcaConfig& pca,
                                    Eigen::MatrixXd* xhat = nullptr);
Eigen::MatrixXd unlifted_escape_direction(const SensingEnsemble& e,
                                          const Eigen::MatrixXd& x);

// gain / (4 sigma_1^l) resp. gain / (2 sigma_1): the step size that puts the
// early linear phase at a fixed per-iteration growth.
double auto_learning_rate_lifted(double sigma1, int l, double gain);
double auto_learning_rate_unlifted(const SensingEnsemble& e, double gain);

RunResult run_lifted(const LiftedProblem& p, const SensingEnsemble& e,
                     const LiftedInit& init, const OptimizerConfig& cfg);
RunResult run_unlifted(const SensingEnsemble& e, const Eigen::MatrixXd& x0,
                       const OptimizerConfig& cfg);

}  // namespace liftms
