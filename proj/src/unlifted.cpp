#include "liftms/unlifted.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace liftms {

double unlifted_loss(const SensingEnsemble& e, const Eigen::MatrixXd& X) {
  const Eigen::MatrixXd M = X * X.transpose();
  return 0.5 * (apply_measurements(e, M) - e.b).squaredNorm();
}

Eigen::MatrixXd sensing_residual_matrix(const SensingEnsemble& e,
                                        const Eigen::MatrixXd& M) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(e.n, e.n);
  for (int k = 0; k < e.m(); ++k) {
    const double resid = e.mats[k].cwiseProduct(M).sum() - e.b(k);
    s += resid * e.mats[k];
  }
  return s;
}

Eigen::MatrixXd unlifted_grad(const SensingEnsemble& e,
                              const Eigen::MatrixXd& X) {
  return 2.0 * sensing_residual_matrix(e, X * X.transpose()) * X;
}

double unlifted_hessian_quadform(const SensingEnsemble& e,
                                 const Eigen::MatrixXd& X,
                                 const Eigen::MatrixXd& U) {
  const Eigen::MatrixXd s = sensing_residual_matrix(e, X * X.transpose());
  const Eigen::MatrixXd cross = X * U.transpose() + U * X.transpose();
  return 2.0 * s.cwiseProduct(U * U.transpose()).sum() +
         apply_measurements(e, cross).squaredNorm();
}

Eigen::MatrixXd unlifted_hessian(const SensingEnsemble& e,
                                 const Eigen::MatrixXd& X) {
  const int n = e.n;
  const int r = static_cast<int>(X.cols());
  const int d = n * r;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d);
  for (int k = 0; k < e.m(); ++k) {
    const Eigen::MatrixXd ax = e.mats[k] * X;
    const Eigen::Map<const Eigen::VectorXd> s_k(ax.data(), d);
    h.noalias() += 4.0 * s_k * s_k.transpose();
  }
  const Eigen::MatrixXd s = sensing_residual_matrix(e, X * X.transpose());
  for (int j = 0; j < r; ++j) h.block(j * n, j * n, n, n) += 2.0 * s;
  return h;
}

UnliftedCertificate certify_unlifted_point(const SensingEnsemble& e,
                                           const Eigen::MatrixXd& X,
                                           int num_directions, double fop_tol,
                                           double sop_tol, StreamRng& rng) {
  UnliftedCertificate cert;
  const Eigen::MatrixXd s = sensing_residual_matrix(e, X * X.transpose());
  cert.fop_residual = (s * X).norm();
  cert.grad_norm = 2.0 * cert.fop_residual;
  cert.fop_ok = cert.fop_residual <= fop_tol;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  cert.lambda_min_residual = es.eigenvalues()(0);
  const Eigen::VectorXd u = es.eigenvectors().col(0);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      X, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const int r = static_cast<int>(X.cols());
  cert.sigma_r = svd.singularValues()(r - 1);
  const Eigen::VectorXd q = svd.matrixV().col(r - 1);

  const Eigen::MatrixXd candidate = u * q.transpose();
  cert.analytic_quadform = unlifted_hessian_quadform(e, X, candidate);

  double min_q = cert.analytic_quadform;
  for (int i = 0; i < num_directions; ++i) {
    Eigen::MatrixXd dir = rng.normal_mat(e.n, r);
    dir /= std::max(dir.norm(), std::numeric_limits<double>::min());
    min_q = std::min(min_q, unlifted_hessian_quadform(e, X, dir));
  }
  cert.min_quadform = min_q;
  cert.sop_ok = min_q >= -sop_tol;

  if (e.has_truth)
    cert.recovery_error = (X * X.transpose() - e.M_star).norm();
  return cert;
}

MagnitudeChecks fop_magnitude_checks(const SensingEnsemble& e,
                                     const SmoothnessConstants& c,
                                     const Eigen::MatrixXd& X) {
  if (!e.has_truth)
    throw std::invalid_argument("fop_magnitude_checks: needs ground truth");
  MagnitudeChecks mc;
  const Eigen::MatrixXd M = X * X.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  const int r = static_cast<int>(X.cols());
  mc.sigma_floor_lhs = es.eigenvalues()(e.n - r);  // lambda_r(X X^T)
  mc.sigma_floor_rhs =
      std::sqrt(2.0 * c.L_s / (r * std::max(c.alpha_s, 1e-300))) *
      e.M_star.norm();
  mc.sigma_floor_ok = mc.sigma_floor_lhs < mc.sigma_floor_rhs;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es2(
      sensing_residual_matrix(e, M));
  mc.descent_eig_lhs = es2.eigenvalues()(0);
  const double tr = e.M_star.trace();
  mc.descent_eig_rhs =
      -c.alpha_s * (M - e.M_star).squaredNorm() / (2.0 * std::max(tr, 1e-300));
  mc.descent_eig_ok = mc.descent_eig_lhs <= mc.descent_eig_rhs + 1e-9;
  return mc;
}

namespace {

// Backtracking line-search gradient descent to a tiny gradient.
struct GdResult {
  Eigen::MatrixXd X;
  double loss = 0.0;
  double grad_norm = 0.0;
  int iters = 0;
};

GdResult descend(const SensingEnsemble& e, Eigen::MatrixXd X, double grad_tol,
                 int max_iters) {
  double step = 1e-2;
  double loss = unlifted_loss(e, X);
  int it = 0;
  for (; it < max_iters; ++it) {
    const Eigen::MatrixXd g = unlifted_grad(e, X);
    const double gn = g.norm();
    if (gn <= grad_tol || !std::isfinite(loss)) break;
    step *= 2.0;
    bool moved = false;
    while (step > 1e-18) {
      Eigen::MatrixXd cand = X - step * g;
      const double cl = unlifted_loss(e, cand);
      if (cl <= loss - 1e-4 * step * gn * gn) {
        X = std::move(cand);
        loss = cl;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  GdResult res;
  res.grad_norm = unlifted_grad(e, X).norm();
  res.X = std::move(X);
  res.loss = loss;
  res.iters = it;
  return res;
}

// Damped Newton (Levenberg) on vec(X); accepts a step only when the gradient
// norm drops, so it converges to whatever critical point owns the basin --
// saddles included, which plain descent can never reach exactly.
bool newton_to_critical(const SensingEnsemble& e, Eigen::MatrixXd& X,
                        double grad_tol, int max_iters) {
  const int n = static_cast<int>(X.rows());
  const int r = static_cast<int>(X.cols());
  const int d = n * r;
  double mu = 1e-6;
  for (int it = 0; it < max_iters; ++it) {
    const Eigen::MatrixXd g_mat = unlifted_grad(e, X);
    const double gn = g_mat.norm();
    if (gn <= grad_tol) return true;
    const Eigen::Map<const Eigen::VectorXd> g(g_mat.data(), d);
    const Eigen::MatrixXd h = unlifted_hessian(e, X);
    bool accepted = false;
    for (int tries = 0; tries < 60; ++tries) {
      const Eigen::VectorXd dx =
          (h + mu * Eigen::MatrixXd::Identity(d, d)).ldlt().solve(-g);
      Eigen::MatrixXd cand = X;
      cand += Eigen::Map<const Eigen::MatrixXd>(dx.data(), n, r);
      if (unlifted_grad(e, cand).norm() < gn) {
        X = std::move(cand);
        mu = std::max(mu * 0.3, 1e-12);
        accepted = true;
        break;
      }
      mu *= 10.0;
    }
    if (!accepted) return false;
  }
  return unlifted_grad(e, X).norm() <= grad_tol;
}

}  // namespace

std::vector<Eigen::MatrixXd> sign_flip_seeds(const Eigen::MatrixXd& Z,
                                             double min_abs) {
  std::vector<Eigen::MatrixXd> seeds;
  for (int j = 0; j < Z.cols(); ++j)
    for (int i = 0; i < Z.rows(); ++i)
      if (std::abs(Z(i, j)) > min_abs) {
        Eigen::MatrixXd s = Z;
        s(i, j) = -s(i, j);
        seeds.push_back(std::move(s));
      }
  return seeds;
}

std::vector<HarvestedPoint> harvest_spurious(const SensingEnsemble& e,
                                             const HarvestOptions& opt,
                                             StreamRng& rng) {
  if (!e.has_truth)
    throw std::invalid_argument("harvest_spurious: needs ground truth");
  const int r = opt.r_search > 0 ? opt.r_search : e.r;
  const int num_seeds = static_cast<int>(opt.seeds.size());
  std::vector<HarvestedPoint> found;
  for (int attempt = 0;
       attempt < opt.max_attempts &&
       static_cast<int>(found.size()) < opt.target;
       ++attempt) {
    const bool seeded = attempt < num_seeds;
    Eigen::MatrixXd X;
    if (seeded) {
      X = opt.seeds[attempt];
    } else {
      // alternate broad and tiny inits for basin diversity
      const double scale = opt.init_scale * ((attempt % 3 == 2) ? 1e-3 : 1.0);
      X = scale * rng.normal_mat(e.n, r) / std::sqrt(static_cast<double>(e.n));
    }
    double loss = 0.0, gn = 0.0;
    if (opt.newton_polish) {
      // seeds sit near their target already; random starts descend first
      if (!seeded && opt.descend_iters > 0) {
        GdResult res = descend(e, std::move(X), std::max(opt.grad_tol, 1e-8),
                               std::min(opt.max_iters, opt.descend_iters));
        X = std::move(res.X);
      }
      if (!newton_to_critical(e, X, opt.grad_tol,
                              std::min(opt.max_iters, 500)))
        continue;
      loss = unlifted_loss(e, X);
      gn = unlifted_grad(e, X).norm();
    } else {
      GdResult res = descend(e, std::move(X), opt.grad_tol, opt.max_iters);
      X = std::move(res.X);
      loss = res.loss;
      gn = res.grad_norm;
    }
    if (gn > opt.grad_tol) continue;
    const double err = (X * X.transpose() - e.M_star).norm();
    if (err <= opt.min_recovery_error) continue;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(unlifted_hessian(e, X));
    const double lmin = es.eigenvalues()(0);
    if (opt.sop_tol >= 0.0 && lmin < -opt.sop_tol) continue;
    if (opt.deduplicate) {
      bool dup = false;
      const Eigen::MatrixXd M = X * X.transpose();
      for (const auto& hp : found) {
        if ((hp.X * hp.X.transpose() - M).norm() <=
            1e-6 * std::max(1.0, M.norm())) {
          dup = true;
          break;
        }
      }
      if (dup) continue;
    }
    HarvestedPoint hp;
    hp.fop_residual =
        (sensing_residual_matrix(e, X * X.transpose()) * X).norm();
    hp.grad_norm = gn;
    hp.recovery_error = err;
    hp.loss = loss;
    hp.lambda_min_hessian = lmin;
    hp.X = std::move(X);
    found.push_back(std::move(hp));
  }
  return found;
}

}  // namespace liftms
