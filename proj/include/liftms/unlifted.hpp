#pragma once

#include <Eigen/Dense>
#include <vector>

#include "liftms/rng.hpp"
#include "liftms/sensing.hpp"

namespace liftms {

// f(X) = 0.5 * |A(X X^T) - b|^2 over n x r factors.
double unlifted_loss(const SensingEnsemble& e, const Eigen::MatrixXd& X);

// grad f(X) = 2 * S(X X^T) * X with S(M) = sum_k (<A_k, M> - b_k) A_k.
Eigen::MatrixXd unlifted_grad(const SensingEnsemble& e,
                              const Eigen::MatrixXd& X);

// S(M) above; the matrix-space gradient of 0.5|A(M)-b|^2.
Eigen::MatrixXd sensing_residual_matrix(const SensingEnsemble& e,
                                        const Eigen::MatrixXd& M);

// d^2/dt^2 f(X + tU) = 2<S(XX^T), UU^T> + |A(XU^T + UX^T)|^2.
double unlifted_hessian_quadform(const SensingEnsemble& e,
                                 const Eigen::MatrixXd& X,
                                 const Eigen::MatrixXd& U);

// Full Hessian of f over column-major vec(X):
// 4 sum_k vec(A_k X) vec(A_k X)^T + 2 I_r (x) S(X X^T).
Eigen::MatrixXd unlifted_hessian(const SensingEnsemble& e,
                                 const Eigen::MatrixXd& X);

struct UnliftedCertificate {
  double fop_residual = 0.0;        // |S(XX^T) X|_F
  double grad_norm = 0.0;           // |grad f(X)|_F
  double min_quadform = 0.0;        // min over probed directions
  double analytic_quadform = 0.0;   // at the (min-eig, sigma_r) candidate
  double lambda_min_residual = 0.0; // lambda_min(S(XX^T))
  double sigma_r = 0.0;             // smallest singular value of X
  double recovery_error = 0.0;      // |XX^T - M*|_F when truth is known
  bool fop_ok = false;
  bool sop_ok = false;
};

UnliftedCertificate certify_unlifted_point(const SensingEnsemble& e,
                                           const Eigen::MatrixXd& X,
                                           int num_directions, double fop_tol,
                                           double sop_tol, StreamRng& rng);

// Stationary-point magnitude diagnostics against instance constants.
struct MagnitudeChecks {
  double sigma_floor_lhs = 0.0;   // lambda_r(X X^T)
  double sigma_floor_rhs = 0.0;   // sqrt(2 L / (r alpha)) |M*|_F
  bool sigma_floor_ok = false;
  double descent_eig_lhs = 0.0;   // lambda_min(S(X X^T))
  double descent_eig_rhs = 0.0;   // -alpha |XX^T - M*|^2 / (2 tr M*)
  bool descent_eig_ok = false;
};

MagnitudeChecks fop_magnitude_checks(const SensingEnsemble& e,
                                     const SmoothnessConstants& c,
                                     const Eigen::MatrixXd& X);

struct HarvestOptions {
  int target = 5;
  int max_attempts = 200;
  double grad_tol = 1e-10;       // on |grad f|
  double min_recovery_error = 0.05;  // 0 keeps every critical point found
  int max_iters = 200000;
  double init_scale = 1.0;
  int r_search = 0;              // 0 -> ensemble r
  bool deduplicate = true;
  bool newton_polish = true;     // damped Newton after the descent phase
  int descend_iters = 5000;      // pre-Newton descent budget; 0 jumps straight
                                 // to Newton (critical-point enumeration)
  double sop_tol = -1.0;         // >= 0: require lambda_min(Hessian) >= -tol
  std::vector<Eigen::MatrixXd> seeds;  // structured starts, tried first
};

struct HarvestedPoint {
  Eigen::MatrixXd X;
  double fop_residual = 0.0;
  double grad_norm = 0.0;
  double recovery_error = 0.0;
  double loss = 0.0;
  double lambda_min_hessian = 0.0;
};

// Multi-start search for critical points: line-search GD into a basin, then
// (by default) a damped Newton polish to tiny gradients. Keeps points at
// least min_recovery_error away from the ground truth; sop_tol >= 0 further
// restricts to second-order points. Structured seeds are run before random
// starts and skip the descent phase.
std::vector<HarvestedPoint> harvest_spurious(const SensingEnsemble& e,
                                             const HarvestOptions& opt,
                                             StreamRng& rng);

// Single sign-flip seeds Z with one nonzero entry negated; the classic trap
// pattern for entrywise-weighted instances.
std::vector<Eigen::MatrixXd> sign_flip_seeds(const Eigen::MatrixXd& Z,
                                             double min_abs = 1e-12);

}  // namespace liftms
