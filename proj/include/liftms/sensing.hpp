#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "liftms/rng.hpp"

namespace liftms {

struct SmoothnessConstants {
  double L_s = 0.0;      // restricted smoothness
  double alpha_s = 0.0;  // restricted strong convexity
  double delta = 0.0;    // (L - alpha) / (L + alpha)
  bool exact = false;    // closed form vs probe estimate
};

// b_k = <A_k, M*> with symmetric sensing matrices A_k; ground truth carried
// along when the instance was synthesized.
struct SensingEnsemble {
  int n = 0;
  int r = 1;
  std::vector<Eigen::MatrixXd> mats;  // m symmetric n x n matrices
  Eigen::VectorXd b;
  Eigen::MatrixXd M_star;  // n x n, valid when has_truth
  Eigen::MatrixXd Z;       // n x r,  valid when has_truth
  bool has_truth = false;
  std::string family = "custom";  // pmc | nn | gaussian | custom
  double pmc_rho = 1.0;
  bool pmc_sqrt_weights = false;

  int m() const { return static_cast<int>(mats.size()); }
};

// Weighted entrywise family over all ordered index pairs (m = n^2): weight 1
// on the diagonal and on any pair touching an even (1-based) index, rho
// elsewhere (sqrt(rho) when sqrt_weights is set).
SensingEnsemble pmc_instance(int n, double rho, const Eigen::MatrixXd& Z,
                             bool sqrt_weights = false);
bool pmc_pair_observed(int i, int j);  // 0-based indices

// A_i = d_i d_i^T with standard normal d_i; b_i = |Z^T d_i|^2; Z ~ N(0,1)^{n x r}.
SensingEnsemble nn_quadratic_instance(int n, int r, int m, StreamRng& rng);

// Symmetrized Gaussian matrices; generic test family.
SensingEnsemble gaussian_instance(int n, int r, int m, StreamRng& rng);

Eigen::VectorXd apply_measurements(const SensingEnsemble& e,
                                   const Eigen::MatrixXd& M);

// Closed form for the PMC family, probe estimate (random symmetric rank<=2r
// directions) otherwise.
SmoothnessConstants smoothness_constants(const SensingEnsemble& e,
                                         int num_probes = 200,
                                         std::uint64_t seed = 4242);

// Scale bound under which every second-order point of the search problem is
// global for the instance's constants: |M*|_F <= 2*sqrt(2)/(tau*sqrt(r)) *
// alpha^{5/2} / ((L+alpha)^2 sqrt(L)), tau = cond(M*).
bool global_benign_norm_bound(const SensingEnsemble& e,
                              const SmoothnessConstants& c, double* lhs = nullptr,
                              double* rhs = nullptr);
bool global_benign_norm_bound(const Eigen::MatrixXd& m_star, int r,
                              const SmoothnessConstants& c, double* lhs = nullptr,
                              double* rhs = nullptr);

std::string ensemble_to_json(const SensingEnsemble& e);
SensingEnsemble ensemble_from_json(const std::string& text);
void save_ensemble(const SensingEnsemble& e, const std::string& path);
SensingEnsemble load_ensemble(const std::string& path);

}  // namespace liftms
