#include "liftms/optimize.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "liftms/unlifted.hpp"

namespace liftms {
namespace {

Eigen::VectorXd ball_noise(StreamRng& rng, int dim, double radius) {
  Eigen::VectorXd g = rng.normal_vec(dim);
  const double nrm = g.norm();
  if (nrm == 0.0) return Eigen::VectorXd::Zero(dim);
  const double u = rng.uniform();
  return (radius * std::pow(u, 1.0 / dim) / nrm) * g;
}

}  // namespace

const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::gd: return "gd";
    case Algorithm::adam: return "adam";
    case Algorithm::pgd: return "pgd";
    case Algorithm::custom_gd: return "custom_gd";
  }
  return "gd";
}

Algorithm algorithm_from_name(const std::string& name) {
  if (name == "gd") return Algorithm::gd;
  if (name == "adam") return Algorithm::adam;
  if (name == "pgd") return Algorithm::pgd;
  if (name == "custom_gd") return Algorithm::custom_gd;
  throw std::invalid_argument("unknown algorithm: " + name);
}

double auto_learning_rate_lifted(double sigma1, int l, double gain) {
  const double denom = 4.0 * integer_power(sigma1, l);
  return denom > 0.0 ? gain / denom : 1e-2;
}

double auto_learning_rate_unlifted(const SensingEnsemble& e, double gain) {
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(e.n, e.n);
  for (int k = 0; k < e.m(); ++k) u += e.b(k) * e.mats[k];
  const double sigma1 =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(u).eigenvalues()
          .cwiseAbs()
          .maxCoeff();
  const double denom = 2.0 * sigma1;
  return denom > 0.0 ? gain / denom : 1e-2;
}

Eigen::MatrixXd unlifted_escape_direction(const SensingEnsemble& e,
                                          const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd s = sensing_residual_matrix(e, x * x.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  const Eigen::VectorXd u = es.eigenvectors().col(0);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd q = svd.matrixV().col(x.cols() - 1);
  return u * q.transpose();
}

DenseTensor lifted_escape_direction(const LiftedProblem& p,
                                    const SensingEnsemble& e,
                                    const DenseTensor& w, const PcaConfig& pca,
                                    Eigen::MatrixXd* xhat) {
  RecoveredFactor rec = recover_factor(p, w, pca);
  if (xhat) *xhat = rec.X;
  const Eigen::MatrixXd dir = unlifted_escape_direction(e, rec.X);
  return outer_power(stack_factor(dir), p.l);
}

namespace {

// One optimizer driver over an abstract flat state; both geometries share the
// algorithm semantics, only evaluation and escape proposals differ.
struct LiftedGeom {
  const LiftedProblem& p;
  const SensingEnsemble& e;
  const LiftedInit& init;
  DenseTensor w;
  DenseTensor grad;

  std::int64_t dim() const { return w.size(); }
  Eigen::Map<Eigen::VectorXd> state() { return w.as_vector(); }
  Eigen::Map<Eigen::VectorXd> grad_vec() { return grad.as_vector(); }
  std::pair<double, double> eval() {
    auto lg = lifted_loss_grad(p, w);
    grad = std::move(lg.second);
    return {lg.first, grad.as_vector().norm()};
  }
  double loss_along(const Eigen::VectorXd& dir, double step) {
    DenseTensor c = w;
    c.as_vector() += step * dir;
    return lifted_loss(p, c);
  }
  Eigen::VectorXd escape_dir(const PcaConfig& pca) {
    DenseTensor t = lifted_escape_direction(p, e, w, pca);
    return t.as_vector();
  }
  double point_asymmetry() const { return p.l <= 6 ? asymmetry(w) : 0.0; }
  // Rank-1 dominance proxy: second deflated component over the first.
  double point_ratio(const PcaConfig& pca) const {
    return deflation_ratio(w, pca);
  }
};

struct MatrixGeom {
  const SensingEnsemble& e;
  Eigen::MatrixXd x;
  Eigen::MatrixXd grad;

  std::int64_t dim() const { return x.size(); }
  Eigen::Map<Eigen::VectorXd> state() {
    return Eigen::Map<Eigen::VectorXd>(x.data(), x.size());
  }
  Eigen::Map<Eigen::VectorXd> grad_vec() {
    return Eigen::Map<Eigen::VectorXd>(grad.data(), grad.size());
  }
  std::pair<double, double> eval() {
    grad = unlifted_grad(e, x);
    return {unlifted_loss(e, x), grad.norm()};
  }
  double loss_along(const Eigen::VectorXd& dir, double step) {
    Eigen::MatrixXd c = x;
    Eigen::Map<Eigen::VectorXd>(c.data(), c.size()) += step * dir;
    return unlifted_loss(e, c);
  }
  Eigen::VectorXd escape_dir(const PcaConfig&) {
    const Eigen::MatrixXd d = unlifted_escape_direction(e, x);
    return Eigen::Map<const Eigen::VectorXd>(d.data(), d.size());
  }
  double point_asymmetry() const { return 0.0; }
  double point_ratio(const PcaConfig&) const { return 0.0; }
};

template <class Geom>
RunResult drive(Geom& geom, const OptimizerConfig& cfg, double lr) {
  RunResult out;
  out.learning_rate_used = lr;
  const std::int64_t nw = geom.dim();

  Eigen::VectorXd m1, m2;
  if (cfg.algorithm == Algorithm::adam) {
    m1 = Eigen::VectorXd::Zero(nw);
    m2 = Eigen::VectorXd::Zero(nw);
  }
  StreamRng noise_rng(cfg.seed_master, cfg.trial, "pgd_noise");

  double loss0 = 0.0, g_small = 0.0, stop_tol = 0.0;
  bool escape_armed = false;
  int buffer = 0, failed_escapes = 0;
  std::int64_t last_noise = -(cfg.pgd_t_thres + 1);
  std::int64_t adam_steps = 0;
  std::int64_t last_logged = -1;

  auto log_point = [&](std::int64_t iter, double loss, double gnorm,
                       bool force) {
    if (!force && !(cfg.log_every > 0 && iter % cfg.log_every == 0)) return;
    if (iter == last_logged) return;
    TrajectoryPoint tp;
    tp.iter = iter;
    tp.loss = loss;
    tp.grad_norm = gnorm;
    tp.asymmetry = geom.point_asymmetry();
    tp.ratio = (cfg.ratio_every > 0 &&
                (force || iter % cfg.ratio_every == 0))
                   ? geom.point_ratio(cfg.pca)
                   : 0.0;
    out.trajectory.push_back(tp);
    last_logged = iter;
  };

  for (std::int64_t iter = 0;; ++iter) {
    auto [loss, gnorm] = geom.eval();
    if (iter == 0) {
      loss0 = loss;
      const double ref = 1e-6 * (1.0 + loss0);
      g_small = cfg.algorithm == Algorithm::pgd
                    ? (cfg.pgd_g_thres > 0 ? cfg.pgd_g_thres : ref)
                    : (cfg.custom_g_thres > 0 ? cfg.custom_g_thres : ref);
      stop_tol = cfg.grad_tol > 0 ? cfg.grad_tol * (1.0 + loss0) : 0.0;
    }
    log_point(iter, loss, gnorm, false);

    const bool converged = stop_tol > 0 && gnorm <= stop_tol;
    const bool exhausted_escapes =
        cfg.max_failed_escapes > 0 && failed_escapes >= cfg.max_failed_escapes;
    if (iter >= cfg.max_iters || converged || exhausted_escapes) {
      log_point(iter, loss, gnorm, true);
      out.final_loss = loss;
      out.final_grad_norm = gnorm;
      out.stopped_early = converged || exhausted_escapes;
      break;
    }

    switch (cfg.algorithm) {
      case Algorithm::gd:
        geom.state() -= lr * geom.grad_vec();
        break;
      case Algorithm::adam: {
        ++adam_steps;
        const Eigen::Map<Eigen::VectorXd> gv = geom.grad_vec();
        m1 = cfg.adam_beta1 * m1 + (1.0 - cfg.adam_beta1) * gv;
        m2 = (cfg.adam_beta2 * m2.array() +
              (1.0 - cfg.adam_beta2) * gv.array().square())
                 .matrix();
        const double c1 =
            1.0 - std::pow(cfg.adam_beta1, double(adam_steps));
        const double c2 =
            1.0 - std::pow(cfg.adam_beta2, double(adam_steps));
        geom.state().array() -=
            lr * (m1.array() / c1) / ((m2.array() / c2).sqrt() + cfg.adam_eps);
        break;
      }
      case Algorithm::pgd: {
        if (cfg.pgd_radius > 0 && gnorm <= g_small &&
            iter - last_noise > cfg.pgd_t_thres) {
          geom.state() +=
              ball_noise(noise_rng, static_cast<int>(nw), cfg.pgd_radius);
          last_noise = iter;
        }
        geom.state() -= lr * geom.grad_vec();
        break;
      }
      case Algorithm::custom_gd: {
        if (gnorm < g_small && iter > cfg.custom_min_iters) {
          if (escape_armed) {
            EscapeEvent ev;
            ev.iter = iter;
            ev.loss_before = loss;
            Eigen::VectorXd delta = geom.escape_dir(cfg.pca);
            const double lp = geom.loss_along(delta, cfg.escape_eta0);
            const double lm = geom.loss_along(delta, -cfg.escape_eta0);
            if (lm < lp) delta = -delta;
            const double gdot = geom.grad_vec().dot(delta);
            double eta = cfg.escape_eta0;
            double cand = std::min(lp, lm);
            while (cand > loss + cfg.armijo_beta * eta * gdot) {
              eta *= cfg.backtrack_gamma;
              ++ev.backtracks;
              if (eta < 1e-12 * cfg.escape_eta0) {
                eta = 0.0;
                break;
              }
              cand = geom.loss_along(delta, eta);
            }
            if (eta > 0.0) {
              geom.state() += eta * delta;
              ev.accepted = true;
              ev.step = eta;
              ev.loss_after = cand;
            } else {
              ev.accepted = false;
              ev.loss_after = loss;
              ++failed_escapes;
            }
            out.escapes.push_back(ev);
            escape_armed = false;
            buffer = 0;
          } else {
            ++buffer;
            if (buffer >= cfg.custom_buffer_limit) {
              escape_armed = true;
              buffer = 0;
            }
            geom.state() -= lr * geom.grad_vec();
          }
        } else {
          geom.state() -= lr * geom.grad_vec();
          escape_armed = false;
        }
        break;
      }
    }
    ++out.iters;
  }
  return out;
}

}  // namespace

RunResult run_lifted(const LiftedProblem& p, const SensingEnsemble& e,
                     const LiftedInit& init, const OptimizerConfig& cfg) {
  LiftedGeom geom{p, e, init, init.w0, DenseTensor()};
  const double lr =
      cfg.learning_rate > 0
          ? cfg.learning_rate
          : auto_learning_rate_lifted(init.sigma1, p.l, cfg.lr_gain);
  RunResult out = drive(geom, cfg, lr);
  out.w_final = std::move(geom.w);
  return out;
}

RunResult run_unlifted(const SensingEnsemble& e, const Eigen::MatrixXd& x0,
                       const OptimizerConfig& cfg) {
  MatrixGeom geom{e, x0, Eigen::MatrixXd()};
  const double lr = cfg.learning_rate > 0
                        ? cfg.learning_rate
                        : auto_learning_rate_unlifted(e, cfg.lr_gain);
  RunResult out = drive(geom, cfg, lr);
  out.x_final = std::move(geom.x);
  return out;
}

}  // namespace liftms
