#include "liftms/diagnostics.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "liftms/optimize.hpp"

namespace liftms {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Unlifted sensing residual S(M) rebuilt from the lifted blocks: every A~_k
// is I_r (x) A_k, so A_k sits in the top-left n x n corner.
Eigen::MatrixXd residual_from_lifted(const LiftedProblem& p,
                                     const Eigen::MatrixXd& m) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(p.n, p.n);
  for (int k = 0; k < p.m; ++k) {
    const Eigen::MatrixXd a = p.A[k].topLeftCorner(p.n, p.n);
    s += (a.cwiseProduct(m).sum() - p.b(k)) * a;
  }
  return s;
}

}  // namespace

DecompositionReport trajectory_decomposition(
    const LiftedProblem& p,
    const std::vector<std::pair<std::int64_t, DenseTensor>>& iterates,
    const DenseTensor& w0, double step_size, const LiftedInit& init,
    const PcaConfig& pca) {
  if (step_size <= 0)
    throw std::invalid_argument("trajectory_decomposition: step_size > 0");
  DecompositionReport rep;
  rep.eta_eff = 4.0 * step_size;  // gradient constant folded into the rate

  std::vector<std::size_t> order(iterates.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return iterates[a].first < iterates[b].first;
  });

  for (std::size_t i : order) {
    const std::int64_t t = iterates[i].first;
    const DenseTensor& wt = iterates[i].second;
    if (t < 0) throw std::invalid_argument("trajectory_decomposition: t >= 0");
    if (wt.order() != w0.order() || wt.size() != w0.size())
      throw std::invalid_argument("trajectory_decomposition: shape mismatch");

    DenseTensor lin = operator_power_apply(p.U, rep.eta_eff, t, w0);
    DenseTensor err = lin;
    err.as_vector() -= wt.as_vector();

    DecompositionRow row;
    row.iter = t;
    row.w_norm = wt.frobenius_norm();
    row.linear_norm = lin.frobenius_norm();
    row.error_fro = err.frobenius_norm();
    row.error_spec = std::abs(dominant_component(err, pca).scale);
    row.deflation = deflation_ratio(wt, pca);
    row.predicted = ratio_predictor(init.sigma1, init.sigma2, rep.eta_eff,
                                    p.l, init.x0, init.v1, t);
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

DecompositionReport decompose_gd_run(const LiftedProblem& p,
                                     const LiftedInit& init, double step_size,
                                     const std::vector<std::int64_t>& checkpoints,
                                     const PcaConfig& pca) {
  const double lr = step_size > 0
                        ? step_size
                        : auto_learning_rate_lifted(init.sigma1, p.l, 0.15);
  std::vector<std::int64_t> marks = checkpoints;
  std::sort(marks.begin(), marks.end());
  marks.erase(std::unique(marks.begin(), marks.end()), marks.end());
  if (!marks.empty() && marks.front() < 0)
    throw std::invalid_argument("decompose_gd_run: checkpoints >= 0");

  std::vector<std::pair<std::int64_t, DenseTensor>> iterates;
  DenseTensor w = init.w0;
  std::size_t next = 0;
  const std::int64_t last = marks.empty() ? 0 : marks.back();
  for (std::int64_t t = 0; t <= last; ++t) {
    if (next < marks.size() && marks[next] == t) {
      iterates.emplace_back(t, w);
      ++next;
    }
    if (t == last) break;
    DenseTensor g = lifted_grad(p, w);
    w.as_vector() -= lr * g.as_vector();
  }
  return trajectory_decomposition(p, iterates, init.w0, lr, init, pca);
}

std::string decomposition_report_csv(const DecompositionReport& rep) {
  std::ostringstream out;
  out << "iter,w_norm,linear_norm,error_fro,error_spec,deflation,predicted\n";
  for (const auto& r : rep.rows) {
    out << r.iter << ',' << fmt(r.w_norm) << ',' << fmt(r.linear_norm) << ','
        << fmt(r.error_fro) << ',' << fmt(r.error_spec) << ','
        << fmt(r.deflation) << ',' << fmt(r.predicted) << '\n';
  }
  return out.str();
}

std::string decomposition_report_text(const DecompositionReport& rep) {
  std::ostringstream out;
  out << "trajectory split w_t = linear_t - E_t  (effective rate "
      << fmt(rep.eta_eff) << ")\n";
  for (const auto& r : rep.rows) {
    out << "  t=" << r.iter << "  |w|=" << fmt(r.w_norm)
        << "  |linear|=" << fmt(r.linear_norm)
        << "  |E|_F=" << fmt(r.error_fro) << "  |E|_fit=" << fmt(r.error_spec)
        << "  ratio=" << fmt(r.deflation) << "  predicted=" << fmt(r.predicted)
        << '\n';
  }
  return out.str();
}

double ratio_predictor(double sigma1, double sigma2, double eta_eff, int l,
                       double x0_norm, double align, std::int64_t t) {
  if (sigma1 < sigma2 || sigma2 < 0)
    throw std::invalid_argument("ratio_predictor: needs sigma1 >= sigma2 >= 0");
  if (t < 0) throw std::invalid_argument("ratio_predictor: t >= 0");
  align = std::abs(align);
  if (align == 0.0) return std::numeric_limits<double>::infinity();
  const double top = 1.0 + eta_eff * integer_power(sigma1, l);
  const double bot = 1.0 + eta_eff * integer_power(sigma2, l);
  const double base = bot / top;  // <= 1, stable to raise to large t
  return integer_power(x0_norm, l) / integer_power(align, l) *
         std::pow(base, static_cast<double>(t));
}

double ratio_predictor(double sigma1, double sigma2, double eta_eff, int l,
                       const Eigen::VectorXd& x0, const Eigen::VectorXd& v1,
                       std::int64_t t) {
  return ratio_predictor(sigma1, sigma2, eta_eff, l, x0.norm(),
                         std::abs(v1.dot(x0)), t);
}

std::optional<std::int64_t> alignment_time(double kappa, int l, double eta_eff,
                                           double sigma1, double sigma2,
                                           double x0_norm, double align) {
  if (!(kappa > 0.0) || kappa >= 1.0)
    throw std::invalid_argument("alignment_time: kappa in (0,1)");
  if (sigma1 < sigma2 || sigma2 < 0)
    throw std::invalid_argument("alignment_time: needs sigma1 >= sigma2 >= 0");
  if (eta_eff <= 0) throw std::invalid_argument("alignment_time: eta > 0");
  align = std::abs(align);
  if (sigma1 == sigma2 || align == 0.0) return std::nullopt;
  const double num = l * (std::log(x0_norm) - std::log(align)) - std::log(kappa);
  const double den = std::log1p(eta_eff * integer_power(sigma1, l)) -
                     std::log1p(eta_eff * integer_power(sigma2, l));
  if (!(den > 0)) return std::nullopt;
  const double t = std::ceil(num / den);
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(t));
}

std::optional<int> minimal_odd_level(double beta) {
  if (!(beta >= 0.0) || beta >= 1.0) return std::nullopt;
  double bound = 0.0;
  if (beta > 0.0) bound = 1.0 / (1.0 - std::log2(2.0 * beta));
  int lv = static_cast<int>(std::floor(bound)) + 1;  // smallest int > bound
  if (lv < 1) lv = 1;
  if (lv % 2 == 0) ++lv;
  return lv;
}

SaddleCertificate certify_lifted_point(const LiftedProblem& p,
                                       const DenseTensor& w,
                                       const SmoothnessConstants& constants,
                                       const PcaConfig& pca) {
  SaddleCertificate cert;
  Rank1Certificate second;
  cert.kappa_estimate = deflation_ratio(w, pca, &cert.pca, &second);

  const double mag = std::pow(std::abs(cert.pca.scale), 1.0 / p.l);
  const double coef =
      (p.l % 2 == 1 && cert.pca.scale < 0.0) ? -mag : mag;
  const Eigen::VectorXd xvec = coef * cert.pca.direction;
  cert.x_hat = unstack_factor(xvec, p.n, p.r);

  const Eigen::MatrixXd gram = cert.x_hat * cert.x_hat.transpose();
  const Eigen::MatrixXd s = residual_from_lifted(p, gram);
  cert.fop_residual = (s * cert.x_hat).norm();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  cert.lambda_min_residual = es.eigenvalues()(0);

  // The escape condition lives on the unit dominant direction: the fit reads
  // w ~ scale * xhat^{(x)l} with |xhat| = 1, and the condition compares M*
  // against mat(xhat) mat(xhat)^T, not against the rescaled factor.
  const Eigen::MatrixXd x_unit = unstack_factor(cert.pca.direction, p.n, p.r);
  const Eigen::MatrixXd gram_unit = x_unit * x_unit.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eu(
      residual_from_lifted(p, gram_unit));
  const Eigen::VectorXd u = eu.eigenvectors().col(0);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      x_unit, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd q = svd.matrixV().col(p.r - 1);
  const double sigma_r = svd.singularValues()(p.r - 1);
  const Eigen::VectorXd dvec = stack_factor(u * q.transpose());

  cert.quadform_at_delta =
      lifted_hessian_quadform(p, w, outer_power(dvec, p.l));

  const bool have_constants = constants.L_s > 0 && constants.alpha_s > 0;
  if (!p.has_truth || !have_constants) {
    cert.partial = true;
    return cert;
  }

  const double m_star_sq = p.M_star.squaredNorm();
  cert.kappa_threshold = m_star_sq > 0 ? 1.0 / m_star_sq : 0.0;
  const double lam_r = sigma_r * sigma_r;
  const double trace = p.M_star.trace();
  cert.condition_lhs = (p.M_star - gram_unit).squaredNorm();
  cert.condition_rhs =
      (constants.L_s / constants.alpha_s) * lam_r * trace;
  cert.kappa_term =
      p.r * std::pow(std::max(cert.kappa_estimate, 0.0), 1.0 / p.l);
  cert.escape_condition_ok =
      cert.condition_lhs >= cert.condition_rhs + cert.kappa_term;

  const double denom = constants.alpha_s * cert.condition_lhs - cert.kappa_term;
  if (denom > 0) {
    cert.beta_value = constants.L_s * trace * lam_r / denom;
    cert.has_beta = true;
    cert.minimal_odd_l = minimal_odd_level(cert.beta_value);
    if (cert.minimal_odd_l) {
      cert.quadform_at_minimal_l =
          lifted_quadform_rank1(p, *cert.minimal_odd_l, xvec, dvec);
    }
  }

  cert.global_bound_ok =
      global_benign_norm_bound(p.M_star, p.r, constants,
                               &cert.global_bound_lhs, &cert.global_bound_rhs);
  return cert;
}

std::string certificate_text(const SaddleCertificate& c) {
  std::ostringstream out;
  out << "rank-1 fit: scale=" << fmt(c.pca.scale)
      << " residual=" << fmt(c.pca.residual_fro)
      << " grad_norm=" << fmt(c.pca.grad_norm) << '\n';
  out << "read-out factor: fop_residual=" << fmt(c.fop_residual)
      << " lambda_min_residual=" << fmt(c.lambda_min_residual) << '\n';
  out << "kappa: estimate=" << fmt(c.kappa_estimate)
      << " threshold=" << fmt(c.kappa_threshold) << '\n';
  out << "quadform along escape direction: " << fmt(c.quadform_at_delta)
      << '\n';
  if (c.partial) {
    out << "partial certificate: ground truth or constants unavailable\n";
    return out.str();
  }
  out << "escape condition: lhs=" << fmt(c.condition_lhs)
      << " rhs=" << fmt(c.condition_rhs) << " + kappa_term="
      << fmt(c.kappa_term) << " (r*kappa^{1/l}, constant-1 convention) -> "
      << (c.escape_condition_ok ? "holds" : "does not hold") << '\n';
  if (c.has_beta) {
    out << "beta=" << fmt(c.beta_value);
    if (c.minimal_odd_l) {
      out << "  minimal odd level=" << *c.minimal_odd_l;
      if (c.quadform_at_minimal_l)
        out << "  quadform there=" << fmt(*c.quadform_at_minimal_l);
    } else {
      out << "  minimal odd level undefined (beta >= 1)";
    }
    out << '\n';
  } else {
    out << "beta undefined (nonpositive denominator)\n";
  }
  out << "global-from-local bound: |M*|_F=" << fmt(c.global_bound_lhs)
      << " vs " << fmt(c.global_bound_rhs) << " -> "
      << (c.global_bound_ok ? "holds" : "does not hold") << '\n';
  return out.str();
}

}  // namespace liftms
