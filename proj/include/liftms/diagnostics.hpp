#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "liftms/lifted.hpp"
#include "liftms/sensing.hpp"
#include "liftms/tensor.hpp"
#include "liftms/tensor_pca.hpp"

namespace liftms {

// ---- trajectory decomposition w_t = w~_t - E_t -----------------------------

struct DecompositionRow {
  std::int64_t iter = 0;
  double w_norm = 0.0;        // |w_t|_F
  double linear_norm = 0.0;   // |w~_t|_F, the pure power-iteration part
  double error_fro = 0.0;     // |E_t|_F with E_t = w~_t - w_t
  double error_spec = 0.0;    // rank-1 fit estimate of |E_t| (<= error_fro)
  double deflation = 0.0;     // measured deflation ratio of w_t
  double predicted = 0.0;     // spectral-gap ratio bound at t
};

struct DecompositionReport {
  std::vector<DecompositionRow> rows;
  double eta_eff = 0.0;  // 4 * step size: growth rate of the linear phase
};

// Decomposes recorded plain-GD iterates (iter, w_t) against the linearized
// trajectory w~_t = (I + eta' U^{x l})^t w0 with eta' = 4 * step_size folding
// in the gradient constant, so the split is an identity of the iteration.
// Iterates need not include t = 0 and may be in any order; rows come out
// sorted by t.
DecompositionReport trajectory_decomposition(
    const LiftedProblem& p,
    const std::vector<std::pair<std::int64_t, DenseTensor>>& iterates,
    const DenseTensor& w0, double step_size, const LiftedInit& init,
    const PcaConfig& pca = {});

// Runs plain GD from init.w0 at the given step size (<= 0: auto), recording
// the requested checkpoints, then decomposes them.
DecompositionReport decompose_gd_run(const LiftedProblem& p,
                                     const LiftedInit& init, double step_size,
                                     const std::vector<std::int64_t>& checkpoints,
                                     const PcaConfig& pca = {});

std::string decomposition_report_csv(const DecompositionReport& rep);
std::string decomposition_report_text(const DecompositionReport& rep);

// ---- alignment-ratio predictor ---------------------------------------------

// (|x0|^l (1+eta*s2^l)^t) / (|v1.x0|^l (1+eta*s1^l)^t); eta is the effective
// step (gradient constant folded in). v1.x0 = 0 -> +inf.
double ratio_predictor(double sigma1, double sigma2, double eta_eff, int l,
                       const Eigen::VectorXd& x0, const Eigen::VectorXd& v1,
                       std::int64_t t);
double ratio_predictor(double sigma1, double sigma2, double eta_eff, int l,
                       double x0_norm, double align, std::int64_t t);

// Smallest t with predicted ratio <= kappa:
// ceil(ln(x0_norm^l/(kappa align^l)) / ln((1+eta s1^l)/(1+eta s2^l))), >= 1.
// sigma1 == sigma2 (no gap) -> nullopt.
std::optional<std::int64_t> alignment_time(double kappa, int l, double eta_eff,
                                           double sigma1, double sigma2,
                                           double x0_norm, double align);

// ---- stationary-point certificates -----------------------------------------

struct SaddleCertificate {
  Rank1Certificate pca;          // dominant rank-1 fit of w
  Eigen::MatrixXd x_hat;         // n x r factor read out of the fit
  double fop_residual = 0.0;     // |S(X^X^T) X^|_F of the read-out
  double lambda_min_residual = 0.0;  // min eigenvalue of S(X^X^T)
  double kappa_estimate = 0.0;   // deflation ratio at w
  double kappa_threshold = 0.0;  // 1 / |M*|_F^2 reference scale
  // Escape condition on the unit dominant direction X^u = mat(x^), |x^| = 1
  // (the rank-1 fit is w ~ scale * x^{x l}; scale stays out of the condition).
  double condition_lhs = 0.0;    // |M* - X^u X^u^T|_F^2
  double condition_rhs = 0.0;    // (L/alpha) lambda_r(X^u X^u^T) tr(M*)
  double kappa_term = 0.0;       // r * kappa^{1/l}, constant-1 convention
  bool escape_condition_ok = false;  // lhs >= rhs + kappa_term
  double beta_value = 0.0;
  bool has_beta = false;
  std::optional<int> minimal_odd_l;  // needs beta < 1
  double quadform_at_delta = 0.0;    // at the problem's l, escape direction
  std::optional<double> quadform_at_minimal_l;  // rank-1 closed form
  double global_bound_lhs = 0.0;  // |M*|_F
  double global_bound_rhs = 0.0;  // benign-landscape scale bound
  bool global_bound_ok = false;
  bool partial = false;  // truth or constants missing: quadform + FOP only
};

// Smallest odd integer strictly above 1/(1 - log2(2 beta)); beta must be in
// [0, 1), otherwise nullopt.
std::optional<int> minimal_odd_level(double beta);

SaddleCertificate certify_lifted_point(const LiftedProblem& p,
                                       const DenseTensor& w,
                                       const SmoothnessConstants& constants,
                                       const PcaConfig& pca = {});

std::string certificate_text(const SaddleCertificate& c);

}  // namespace liftms
