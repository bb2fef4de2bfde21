#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "liftms/rng.hpp"
#include "liftms/sensing.hpp"
#include "liftms/tensor.hpp"
#include "liftms/tensor_pca.hpp"

namespace liftms {

enum class LiftedStrategy { auto_select, reference, gram, staged };

const char* strategy_name(LiftedStrategy s);
LiftedStrategy strategy_from_name(const std::string& name);

// Order-l tensor objective over w in R^{(nr)^l}:
//   h(w) = | y(w) - b^{x l} |_F^2,  y_{k1..kl}(w) = <w, (A~_{k1} x ... x A~_{kl}) w>
// with lifted matrices A~_k = I_r (x) A_k acting mode-wise. Evaluations are
// routed through one of three strategies that must agree numerically:
//   reference - direct loops over all index tuples (tests / tiny shapes)
//   gram      - Gram matrix H = sum_k vec(A~_k) vec(A~_k)^T over pair tensors
//   staged    - mode-wise contraction against the factored (eigen) stack
struct LiftedProblem {
  int n = 0, r = 1, l = 1, m = 0, d = 0;  // d = n*r
  std::vector<Eigen::MatrixXd> A;         // lifted d x d matrices
  Eigen::VectorXd b;
  double b_norm_sq = 0.0;
  Eigen::MatrixXd U;  // sum_k b_k A~_k; equals the truth-weighted operator
  Eigen::MatrixXd M_star;
  Eigen::MatrixXd Z;
  bool has_truth = false;
  SmoothnessConstants constants;

  LiftedStrategy requested = LiftedStrategy::auto_select;
  LiftedStrategy resolved = LiftedStrategy::reference;
  std::int64_t mem_budget_bytes = (std::int64_t(2) << 30);

  // staged cache: rows of E are sqrt(|sigma|)-scaled eigenvectors of the A~_k
  Eigen::MatrixXd stack_e;          // R x d
  std::vector<double> stack_sign;   // sign of the eigenvalue per row
  std::vector<int> stack_owner;     // row -> k, nondecreasing
  std::vector<int> stack_seg;       // per-k row ranges, size m + 1
  DenseTensor b_outer;              // b^{x l}, kept when staged is resolved
  // gram cache
  Eigen::MatrixXd gram_h;  // d^2 x d^2
  std::vector<std::int64_t> pair_off_a, pair_off_b;  // pair-index offsets

  int stack_rows() const { return static_cast<int>(stack_e.rows()); }
};

// Budget comes from LIFTMS_GRAM_BUDGET_BYTES when set (bytes), else 2 GiB.
std::int64_t default_memory_budget();

LiftedProblem make_lifted(const SensingEnsemble& e, int l,
                          LiftedStrategy strategy = LiftedStrategy::auto_select,
                          std::int64_t mem_budget_bytes = 0);

double lifted_loss(const LiftedProblem& p, const DenseTensor& w);
DenseTensor lifted_grad(const LiftedProblem& p, const DenseTensor& w);
std::pair<double, DenseTensor> lifted_loss_grad(const LiftedProblem& p,
                                                const DenseTensor& w);

// y(w) as an order-l tensor over m.
DenseTensor lifted_measurements(const LiftedProblem& p, const DenseTensor& w);

// Hessian quadratic form along delta.
double lifted_hessian_quadform(const LiftedProblem& p, const DenseTensor& w,
                               const DenseTensor& delta);

// sum over tuples of y_{k...}(w) * (A~ mode products of w): the cubic term of
// the gradient (the b-independent part divided by 4).
DenseTensor quartic_term_apply(const LiftedProblem& p, const DenseTensor& w);

// Quadform at rank-1 w = x^{x l_eval}, delta = dvec^{x l_eval}, evaluated in
// closed form; l_eval may differ from p.l.
double lifted_quadform_rank1(const LiftedProblem& p, int l_eval,
                             const Eigen::VectorXd& x,
                             const Eigen::VectorXd& dvec);

// vec/unstack between R^{nr} (column-major) and n x r factors.
Eigen::VectorXd stack_factor(const Eigen::MatrixXd& X);
Eigen::MatrixXd unstack_factor(const Eigen::VectorXd& x, int n, int r);

struct LiftedInit {
  DenseTensor w0;         // epsilon * x0^{x l}
  Eigen::VectorXd x0;     // v1 + g
  Eigen::VectorXd v1;     // unit top eigenvector of U, sign-fixed
  double v1_dot_x0 = 0.0;
  double sigma1 = 0.0;    // top two singular values of U
  double sigma2 = 0.0;
};

// rho_init <= 0 resolves to 1/(n r) (std dev of the Gaussian perturbation).
LiftedInit init_lifted(const LiftedProblem& p, double epsilon, double rho_init,
                       StreamRng& rng);

struct RecoveredFactor {
  Eigen::MatrixXd X;  // n x r
  Rank1Certificate cert;
};

// Rank-1 read-out of a lifted iterate: x = sign(scale)|scale|^{1/l} * dir.
RecoveredFactor recover_factor(const LiftedProblem& p, const DenseTensor& w,
                               const PcaConfig& cfg = {});

}  // namespace liftms
