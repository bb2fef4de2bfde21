#include "liftms/tensor_pca.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "liftms/rng.hpp"

namespace liftms {

Eigen::VectorXd multilinear_map(const DenseTensor& t,
                                const Eigen::VectorXd& v) {
  if (!t.cubic() || t.order() < 1)
    throw std::invalid_argument("multilinear_map: cubic tensor required");
  if (v.size() != t.dims()[0])
    throw std::invalid_argument("multilinear_map: size mismatch");
  Eigen::MatrixXd row = v.transpose();  // 1 x d
  DenseTensor cur = t;
  for (int mode = t.order() - 1; mode >= 1; --mode)
    cur = mode_product(cur, row, mode);
  // remaining shape (d, 1, ..., 1)
  return Eigen::Map<const Eigen::VectorXd>(cur.data(), t.dims()[0]);
}

namespace {

struct FitState {
  Eigen::VectorXd v;
  double lambda = 0.0;
  double loss = std::numeric_limits<double>::infinity();
  double grad_norm = std::numeric_limits<double>::infinity();
  bool converged = false;
};

// Minimize loss(lambda, v) = lambda^2 ||v||^{2k} - 2 lambda <t, v^{x k}>
// with bias-corrected moment updates.
FitState fit_once(const DenseTensor& t, const PcaConfig& cfg, StreamRng& rng) {
  const int d = t.dims()[0];
  const int k = t.order();

  FitState st;
  st.v = rng.normal_vec(d) / std::sqrt(static_cast<double>(d));
  st.lambda = 0.001 * rng.normal();

  Eigen::VectorXd m = Eigen::VectorXd::Zero(d + 1);
  Eigen::VectorXd s = Eigen::VectorXd::Zero(d + 1);
  Eigen::VectorXd grad(d + 1);
  double b1t = 1.0, b2t = 1.0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double vsq = st.v.squaredNorm();
    const double vpow2k2 = integer_power(vsq, k - 1);  // ||v||^{2(k-1)}
    const double vpow2k = vpow2k2 * vsq;               // ||v||^{2k}
    const Eigen::VectorXd tv = multilinear_map(t, st.v);
    const double form = tv.dot(st.v);  // <t, v^{x k}>

    grad.head(d) = 2.0 * st.lambda * st.lambda * k * vpow2k2 * st.v -
                   2.0 * st.lambda * k * tv;
    grad(d) = 2.0 * st.lambda * vpow2k - 2.0 * form;
    st.grad_norm = grad.norm();
    st.loss = st.lambda * st.lambda * vpow2k - 2.0 * st.lambda * form;
    if (st.grad_norm <= cfg.gradnorm_epsilon) {
      st.converged = true;
      break;
    }

    b1t *= cfg.adam_beta1;
    b2t *= cfg.adam_beta2;
    m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * grad;
    s = cfg.adam_beta2 * s + (1.0 - cfg.adam_beta2) * grad.cwiseProduct(grad);
    const Eigen::VectorXd mhat = m / (1.0 - b1t);
    const Eigen::VectorXd shat = s / (1.0 - b2t);
    const Eigen::VectorXd step =
        mhat.cwiseQuotient(shat.cwiseSqrt().array().matrix() +
                           Eigen::VectorXd::Constant(d + 1, cfg.adam_eps));
    st.v -= cfg.learning_rate * step.head(d);
    st.lambda -= cfg.learning_rate * step(d);
  }

  // refresh exit quantities
  const double vsq = st.v.squaredNorm();
  const double vpow2k = integer_power(vsq, k);
  const Eigen::VectorXd tv = multilinear_map(t, st.v);
  const double form = tv.dot(st.v);
  st.loss = st.lambda * st.lambda * vpow2k - 2.0 * st.lambda * form;
  return st;
}

double form_value(const DenseTensor& t, const Eigen::VectorXd& u) {
  return multilinear_map(t, u).dot(u);
}

// Projected gradient ascent on |<t, u^{x k}>| from a given start; monotone,
// so it can only improve the start it is handed. In-out on u.
double refine_direction(const DenseTensor& t, Eigen::VectorXd& u) {
  const int k = t.order();
  u.normalize();
  double val = form_value(t, u);
  double step = 0.5;
  for (int it = 0; it < 300; ++it) {
    const double sign = (val >= 0.0) ? 1.0 : -1.0;
    Eigen::VectorXd g = sign * static_cast<double>(k) * multilinear_map(t, u);
    g -= g.dot(u) * u;  // tangent projection
    if (g.norm() <= 1e-13 * (1.0 + std::abs(val))) break;
    bool moved = false;
    while (step > 1e-14) {
      Eigen::VectorXd cand = (u + step * g).normalized();
      const double cval = form_value(t, cand);
      if (std::abs(cval) > std::abs(val)) {
        u = cand;
        val = cval;
        step *= 1.5;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  return std::abs(val);
}

}  // namespace

Rank1Certificate dominant_component(const DenseTensor& t,
                                    const PcaConfig& cfg) {
  if (!t.cubic() || t.order() < 1)
    throw std::invalid_argument("dominant_component: cubic tensor required");
  const int d = t.dims()[0];

  FitState best;
  int best_restart = 0;
  for (int restart = 0; restart < std::max(1, cfg.restarts); ++restart) {
    StreamRng rng(cfg.seed, cfg.stream * 1000003ull + restart, "tensor_pca");
    FitState st = fit_once(t, cfg, rng);
    if (st.loss < best.loss) {
      best = st;
      best_restart = restart;
    }
  }

  Rank1Certificate cert;
  cert.best_restart = best_restart;
  cert.converged = best.converged;
  cert.grad_norm = best.grad_norm;
  cert.fit_loss = best.loss;

  const double vnorm = best.v.norm();
  if (!(vnorm > 0.0) || !std::isfinite(vnorm)) {
    cert.scale = 0.0;
    cert.direction = Eigen::VectorXd::Unit(d, 0);
    cert.residual_fro = t.frobenius_norm();
    return cert;
  }
  cert.direction = best.v / vnorm;
  // polish the winner: ascent on |<t, u^{x k}>| is monotone, so this only
  // sharpens the fit (near-rank-1 inputs deflate to machine floor this way)
  refine_direction(t, cert.direction);
  // the coefficient has a closed form given the direction (and |scale| <=
  // |t|_F follows from Cauchy-Schwarz)
  cert.scale = multilinear_map(t, cert.direction).dot(cert.direction);

  const double tnorm_sq = t.as_vector().squaredNorm();
  const double res_sq = tnorm_sq - cert.scale * cert.scale;
  cert.residual_fro = std::sqrt(std::max(res_sq, 0.0));
  return cert;
}

double deflation_ratio(const DenseTensor& t, const PcaConfig& cfg,
                       Rank1Certificate* first_out,
                       Rank1Certificate* second_out) {
  Rank1Certificate first = dominant_component(t, cfg);
  DenseTensor rest = t;
  if (first.scale != 0.0) {
    DenseTensor comp = outer_power(first.direction, t.order());
    rest.as_vector() -= first.scale * comp.as_vector();
  }
  PcaConfig cfg2 = cfg;
  cfg2.stream = cfg.stream * 7919ull + 1ull;
  Rank1Certificate second = dominant_component(rest, cfg2);
  const double floor = std::numeric_limits<double>::min();
  const double ratio =
      std::abs(second.scale) / std::max(std::abs(first.scale), floor);
  if (first_out) *first_out = std::move(first);
  if (second_out) *second_out = std::move(second);
  return ratio;
}

double spectral_norm_oracle(const DenseTensor& t, int grid_points) {
  if (!t.cubic() || t.order() < 1)
    throw std::invalid_argument("spectral_norm_oracle: cubic tensor required");
  const int d = t.dims()[0];
  if (d > 4)
    throw std::invalid_argument("spectral_norm_oracle: dim <= 4 only");
  if (d == 1) return std::abs(t[0]);

  // deterministic grid: fixed-seed directions plus the coordinate axes
  StreamRng rng(0x5eedu, 0, "spectral_grid");
  double best_raw = 0.0;
  Eigen::VectorXd best_u = Eigen::VectorXd::Unit(d, 0);
  std::vector<Eigen::VectorXd> top_starts;
  auto consider = [&](const Eigen::VectorXd& u) {
    const double v = std::abs(form_value(t, u));
    if (v > best_raw) {
      best_raw = v;
      best_u = u;
    }
  };
  for (int i = 0; i < d; ++i) consider(Eigen::VectorXd::Unit(d, i));

  // keep a handful of the strongest grid points for refinement
  const int keep = 8;
  std::vector<std::pair<double, Eigen::VectorXd>> pool;
  for (int i = 0; i < std::max(grid_points, 16); ++i) {
    Eigen::VectorXd u = rng.normal_vec(d).normalized();
    const double v = std::abs(form_value(t, u));
    if (static_cast<int>(pool.size()) < keep) {
      pool.emplace_back(v, u);
      std::sort(pool.begin(), pool.end(),
                [](const auto& a, const auto& b) { return a.first > b.first; });
    } else if (v > pool.back().first) {
      pool.back() = {v, u};
      std::sort(pool.begin(), pool.end(),
                [](const auto& a, const auto& b) { return a.first > b.first; });
    }
  }

  double best = refine_direction(t, best_u);
  for (auto& [v, u] : pool) best = std::max(best, refine_direction(t, u));
  return best;
}

}  // namespace liftms
