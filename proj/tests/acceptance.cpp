// Acceptance gate: twelve checks, one [PASS]/[FAIL] line each.
// Run with no arguments for the full gate or with a single index (1..12).
#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "liftms/diagnostics.hpp"
#include "liftms/experiment.hpp"
#include "liftms/lifted.hpp"
#include "liftms/optimize.hpp"
#include "liftms/rng.hpp"
#include "liftms/sensing.hpp"
#include "liftms/tensor.hpp"
#include "liftms/tensor_pca.hpp"
#include "liftms/unlifted.hpp"

using namespace liftms;

namespace {

double rel_diff(double a, double b, double floor_at = 1.0) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor_at});
}

double rel_vec(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double scale = std::max({a.norm(), b.norm(), 1e-12});
  return (a - b).norm() / scale;
}

DenseTensor random_tensor(int order, int dim, StreamRng& rng) {
  DenseTensor t(order, dim);
  for (std::int64_t i = 0; i < t.size(); ++i) t[i] = rng.normal();
  return t;
}

Eigen::MatrixXd oddonly_truth(int n, int r, std::uint64_t seed) {
  StreamRng rng(seed, 0, "truth");
  Eigen::MatrixXd z = rng.normal_mat(n, r);
  for (int i = 1; i < n; i += 2) z.row(i).setZero();
  return z;
}

// the decoupled rank-2 family: odd-supported main column, small
// even-supported second column; its single-sign-flip points are spurious
// second-order traps of the entrywise-weighted objective
SensingEnsemble trap_family_instance(double rho, double d2) {
  const int n = 6;
  Eigen::VectorXd z1(n), z2(n);
  z1 << 1.2, 0.0, -0.9, 0.0, 1.1, 0.0;
  z2 << 0.0, 0.8, 0.0, -1.0, 0.0, 0.6;
  z2.normalize();
  Eigen::MatrixXd z(n, 2);
  z.col(0) = z1;
  z.col(1) = std::sqrt(d2) * z2;
  return pmc_instance(n, rho, z, false);
}

// ---- c1: lifted gradient and quadform against finite differences ----------

bool crit1() {
  int grad_fail = 0, quad_fail = 0;
  double worst_grad = 0.0, worst_quad = 0.0;
  for (int i = 0; i < 50; ++i) {
    StreamRng rng(77, static_cast<std::uint64_t>(i), "c1");
    const int n = 1 + static_cast<int>(rng.uniform_index(3));
    const int r = 1 + static_cast<int>(rng.uniform_index(2));
    const int m = 1 + static_cast<int>(rng.uniform_index(5));
    const SensingEnsemble e = gaussian_instance(n, r, m, rng);
    const LiftedProblem p = make_lifted(e, 3);
    DenseTensor w = random_tensor(3, p.d, rng);

    const DenseTensor g = lifted_grad(p, w);
    const double h = 1e-5;
    Eigen::VectorXd g_fd(w.size());
    for (std::int64_t j = 0; j < w.size(); ++j) {
      DenseTensor wp = w, wm = w;
      wp[j] += h;
      wm[j] -= h;
      g_fd(j) = (lifted_loss(p, wp) - lifted_loss(p, wm)) / (2.0 * h);
    }
    const double gd = rel_vec(Eigen::VectorXd(g.as_vector()), g_fd);
    worst_grad = std::max(worst_grad, gd);
    if (gd > 1e-6) ++grad_fail;

    for (int dir = 0; dir < 3; ++dir) {
      DenseTensor delta = random_tensor(3, p.d, rng);
      delta.as_vector() /= std::max(delta.frobenius_norm(), 1e-300);
      const double qf = lifted_hessian_quadform(p, w, delta);
      const double hh = 1e-3;  // second differences cancel ~1e-16*loss/h^2
      DenseTensor wp = w, wm = w;
      wp.as_vector() += hh * delta.as_vector();
      wm.as_vector() -= hh * delta.as_vector();
      const double fd = (lifted_loss(p, wp) - 2.0 * lifted_loss(p, w) +
                         lifted_loss(p, wm)) /
                        (hh * hh);
      const double qd = rel_diff(qf, fd);
      worst_quad = std::max(worst_quad, qd);
      if (qd > 1e-5) ++quad_fail;
    }
  }
  std::printf("  c1: worst grad rel %.2e (tol 1e-6), worst quadform rel %.2e "
              "(tol 1e-5)\n",
              worst_grad, worst_quad);
  return grad_fail == 0 && quad_fail == 0;
}

// ---- c2: the three evaluation strategies agree -----------------------------

bool crit2() {
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    StreamRng rng(78, static_cast<std::uint64_t>(i), "c2");
    const int l = 1 + (i % 3);
    const int max_d = l == 3 ? 4 : (l == 2 ? 6 : 8);
    SensingEnsemble e;
    const int fam = i % 3;
    if (fam == 0) {
      const int n = 2 + static_cast<int>(rng.uniform_index(2));  // pmc: m = n^2
      e = pmc_instance(n, 0.3, rng.normal_mat(n, 1), i % 2 == 0);
    } else {
      int n = 2 + static_cast<int>(rng.uniform_index(3));
      int r = 1 + static_cast<int>(rng.uniform_index(2));
      while (n * r > max_d) (r > 1 ? r : n) -= 1;
      const int m = 2 + static_cast<int>(rng.uniform_index(5));
      e = fam == 1 ? nn_quadratic_instance(n, r, m, rng)
                   : gaussian_instance(n, r, m, rng);
    }
    if (e.n * e.r > max_d) continue;
    DenseTensor w = random_tensor(l, e.n * e.r, rng);

    double loss[3];
    Eigen::VectorXd grad[3];
    const LiftedStrategy strategies[3] = {LiftedStrategy::reference,
                                          LiftedStrategy::gram,
                                          LiftedStrategy::staged};
    for (int s = 0; s < 3; ++s) {
      const LiftedProblem p = make_lifted(e, l, strategies[s]);
      auto [lv, gv] = lifted_loss_grad(p, w);
      loss[s] = lv;
      grad[s] = gv.as_vector();
    }
    for (int a = 0; a < 3; ++a)
      for (int b = a + 1; b < 3; ++b) {
        worst = std::max(worst, rel_diff(loss[a], loss[b]));
        worst = std::max(worst, rel_vec(grad[a], grad[b]));
      }
  }
  std::printf("  c2: worst pairwise strategy disagreement %.2e (tol 1e-9)\n",
              worst);
  return worst <= 1e-9;
}

// ---- c3: harvested first-order points lift to first-order points -----------

bool crit3() {
  const Eigen::MatrixXd z = oddonly_truth(6, 1, 4242);
  const SensingEnsemble e = pmc_instance(6, 0.01, z, false);
  HarvestOptions opt;
  opt.target = 12;
  opt.max_attempts = 80;
  opt.grad_tol = 1e-10;
  opt.min_recovery_error = 0.0;  // every critical point counts here
  opt.descend_iters = 0;
  opt.seeds = sign_flip_seeds(z);
  StreamRng rng(4242, 0, "c3_harvest");
  const std::vector<HarvestedPoint> points = harvest_spurious(e, opt, rng);

  const LiftedProblem p = make_lifted(e, 3);
  int lifted_ok = 0;
  double worst = 0.0;
  for (const auto& hp : points) {
    const DenseTensor w = outer_power(stack_factor(hp.X), 3);
    const DenseTensor g = lifted_grad(p, w);
    const DenseTensor quartic = quartic_term_apply(p, w);
    // grad = 4 (G - U); relative to the larger of the two pieces
    const double g_norm = g.frobenius_norm();
    const double quartic_norm = quartic.frobenius_norm();
    Eigen::VectorXd upart = quartic.as_vector() - 0.25 * g.as_vector();
    const double scale =
        4.0 * std::max({quartic_norm, upart.norm(), 1e-12});
    const double rel = g_norm / scale;
    worst = std::max(worst, rel);
    if (rel <= 1e-8) ++lifted_ok;
  }
  std::printf("  c3: %d harvested points (need >= 5), worst lifted-gradient "
              "rel %.2e (tol 1e-8)\n",
              static_cast<int>(points.size()), worst);
  return static_cast<int>(points.size()) >= 5 &&
         lifted_ok == static_cast<int>(points.size());
}

// ---- c4: ground-truth lifts are second-order points -------------------------

bool crit4() {
  double worst = 0.0;
  for (int which = 0; which < 2; ++which) {
    StreamRng rng(91, static_cast<std::uint64_t>(which), "c4");
    const SensingEnsemble e =
        which == 0 ? pmc_instance(6, 0.01, rng.normal_mat(6, 1), false)
                   : nn_quadratic_instance(6, 1, 12, rng);
    for (int l : {1, 3}) {
      const LiftedProblem p = make_lifted(e, l);
      const DenseTensor w = outer_power(stack_factor(e.Z), l);
      for (int dir = 0; dir < 200; ++dir) {
        DenseTensor delta = random_tensor(l, p.d, rng);
        delta.as_vector() /= std::max(delta.frobenius_norm(), 1e-300);
        worst = std::min(worst, lifted_hessian_quadform(p, w, delta));
      }
    }
  }
  std::printf("  c4: min quadform at truth lifts %.2e (tol -1e-10)\n", worst);
  return worst >= -1e-10;
}

// ---- c5: spurious traps carry a working escape certificate -----------------

bool crit5() {
  const SensingEnsemble e = trap_family_instance(0.1, 0.08);
  HarvestOptions opt;
  opt.target = 4;
  opt.max_attempts = 12;
  opt.grad_tol = 1e-10;
  opt.min_recovery_error = 0.05;
  opt.sop_tol = 1e-8;
  opt.descend_iters = 0;
  opt.seeds = sign_flip_seeds(e.Z);
  StreamRng rng(4242, 0, "c5_harvest");
  const std::vector<HarvestedPoint> points = harvest_spurious(e, opt, rng);

  const LiftedProblem p = make_lifted(e, 3);
  const SmoothnessConstants constants = smoothness_constants(e);
  int certified = 0;
  for (const auto& hp : points) {
    const DenseTensor w = outer_power(stack_factor(hp.X), 3);
    const SaddleCertificate cert = certify_lifted_point(p, w, constants);
    const bool premise = cert.escape_condition_ok && cert.has_beta &&
                         cert.beta_value < 1.0 && cert.minimal_odd_l &&
                         cert.quadform_at_minimal_l;
    if (!premise) continue;
    if (*cert.quadform_at_minimal_l < 0.0) {
      ++certified;
      std::printf("  c5: SOP err=%.3f lmin(H)=%.2e beta=%.3f level=%d "
                  "quadform=%.3e\n",
                  hp.recovery_error, hp.lambda_min_hessian, cert.beta_value,
                  *cert.minimal_odd_l, *cert.quadform_at_minimal_l);
    }
  }
  std::printf("  c5: %d harvested spurious SOPs, %d certified escapes "
              "(need >= 3)\n",
              static_cast<int>(points.size()), certified);
  return certified >= 3;
}

// ---- c6: plain lifted GD keeps iterates symmetric ---------------------------

bool crit6() {
  ExperimentConfig cfg;  // defaults: pmc n=10 r=1 rho=0.01 l=3 eps=1e-7
  StreamRng zrng(cfg.seed, 0, "instance");
  // trial-0 instance of the default run: odd-support truth, as the driver
  Eigen::MatrixXd z = zrng.normal_mat(cfg.n, cfg.r);
  for (int i = 1; i < cfg.n; i += 2) z.row(i).setZero();
  const SensingEnsemble e = pmc_instance(cfg.n, cfg.rho, z, false);
  const LiftedProblem p = make_lifted(e, cfg.l);
  StreamRng irng(cfg.seed, 0, "init");
  const LiftedInit init = init_lifted(p, cfg.epsilon, cfg.rho_init, irng);
  OptimizerConfig oc;
  oc.algorithm = Algorithm::gd;
  oc.max_iters = 500;
  oc.log_every = 1;
  const RunResult res = run_lifted(p, e, init, oc);
  double worst = 0.0;
  for (const auto& pt : res.trajectory) worst = std::max(worst, pt.asymmetry);
  std::printf("  c6: %d checkpoints, worst asymmetry %.2e (tol 1e-10)\n",
              static_cast<int>(res.trajectory.size()), worst);
  return !res.trajectory.empty() && worst <= 1e-10;
}

// ---- c7: late checkpoints are rank-1 dominated ------------------------------

bool crit7() {
  const SensingEnsemble e = pmc_instance(8, 0.01, oddonly_truth(8, 1, 31), false);
  const LiftedProblem p = make_lifted(e, 3);
  StreamRng irng(31, 0, "c7_init");
  const LiftedInit init = init_lifted(p, 1e-5, -1.0, irng);
  std::vector<std::int64_t> checkpoints;
  for (std::int64_t t = 20; t <= 180; t += 20) checkpoints.push_back(t);
  const DecompositionReport rep = decompose_gd_run(p, init, -1.0, checkpoints);
  bool ok = true;
  double worst_late = 0.0;
  for (const auto& row : rep.rows) {
    std::printf("  c7: t=%3lld deflation=%.4f predicted=%.4g\n",
                static_cast<long long>(row.iter), row.deflation, row.predicted);
    if (row.iter >= 100) {
      worst_late = std::max(worst_late, row.deflation);
      if (row.deflation > 0.1) ok = false;
    }
  }
  std::printf("  c7: worst deflation at t >= 100: %.4f (tol 0.1)\n",
              worst_late);
  return ok && rep.rows.size() == checkpoints.size();
}

// ---- c8: the error term scales like the init cubed --------------------------

bool crit8() {
  const SensingEnsemble e = pmc_instance(8, 0.01, oddonly_truth(8, 1, 31), false);
  const LiftedProblem p = make_lifted(e, 3);
  const std::vector<std::int64_t> checkpoints = {20};
  double err[2];
  for (int half = 0; half < 2; ++half) {
    StreamRng irng(31, 0, "c8_init");  // same key -> same direction draw
    const double eps = half == 0 ? 1e-5 : 0.5e-5;
    const LiftedInit init = init_lifted(p, eps, -1.0, irng);
    const DecompositionReport rep =
        decompose_gd_run(p, init, -1.0, checkpoints);
    err[half] = rep.rows.at(0).error_fro;
  }
  const double ratio = err[0] / std::max(err[1], 1e-300);
  std::printf("  c8: |E_20(eps)| / |E_20(eps/2)| = %.3f (window [4, 16])\n",
              ratio);
  return ratio >= 4.0 && ratio <= 16.0;
}

// ---- c9: lifted beats the unlifted baseline on matched seeds ----------------

bool crit9() {
  ExperimentConfig cfg;
  cfg.experiment = "pmc";
  cfg.n = 10;
  cfg.r = 1;
  cfg.rho = 0.01;
  cfg.l = 3;
  cfg.epsilon = 1e-7;
  cfg.trials = 10;
  cfg.seed = 20240917ull;
  cfg.algorithm.algorithm = Algorithm::custom_gd;
  cfg.algorithm.max_iters = 1500;
  // no gradient stop: the relative threshold keys off the lifted initial
  // loss ~ |b|^(2l), which dwarfs the tiny-initialization gradient; rejected
  // escapes are the meaningful termination signal here
  cfg.algorithm.grad_tol = 0.0;
  cfg.algorithm.max_failed_escapes = 3;
  const ExperimentReport rep = run_experiment(cfg);
  const int lifted = static_cast<int>(
      rep.success_rate("lifted_custom_gd") *
      rep.trial_count("lifted_custom_gd") + 0.5);
  const int unlifted = static_cast<int>(
      rep.success_rate("unlifted_custom_gd") *
      rep.trial_count("unlifted_custom_gd") + 0.5);
  std::printf("  c9: lifted %d/10 vs unlifted %d/10 (need lifted >= "
              "unlifted + 5)\n",
              lifted, unlifted);
  return lifted >= unlifted + 5;
}

// ---- c10: quadratic-activation fit, lifted vs overparametrized baseline -----

bool crit10() {
  ExperimentConfig cfg;
  cfg.experiment = "nn";
  cfg.n = 8;
  cfg.r = 1;
  cfg.m = 20;
  cfg.l = 3;
  cfg.epsilon = 1e-5;
  cfg.trials = 10;
  cfg.seed = 20240917ull;
  cfg.algorithm.algorithm = Algorithm::adam;
  cfg.algorithm.learning_rate = 0.01;
  cfg.algorithm.max_iters = 30000;
  cfg.algorithm.grad_tol = 0.0;  // run the full budget; see nn preset note
  const ExperimentReport rep = run_experiment(cfg);
  const double lifted = rep.success_rate("lifted_adam");
  const double unlifted = rep.success_rate("unlifted_adam");
  std::printf("  c10: lifted rate %.2f (need >= 0.7), baseline rate %.2f "
              "(need <= 0.2)\n",
              lifted, unlifted);
  return lifted >= 0.7 && unlifted <= 0.2;
}

// ---- c11: the rank-1 fit reaches the tensor spectral norm -------------------

bool crit11() {
  double worst_gap = 0.0;
  for (int i = 0; i < 30; ++i) {
    StreamRng rng(123, static_cast<std::uint64_t>(i), "c11");
    const DenseTensor t = symmetrize(random_tensor(3, 3, rng));
    const double fit = std::abs(dominant_component(t).scale);
    const double oracle = spectral_norm_oracle(t);
    worst_gap = std::max(worst_gap, oracle - fit);
  }
  std::printf("  c11: worst oracle - fit gap %.3e (tol 1e-2)\n", worst_gap);
  return worst_gap <= 1e-2;
}

// ---- c12: the measurement operator is the expected weighted sum -------------

bool crit12() {
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    StreamRng rng(55, static_cast<std::uint64_t>(i), "c12");
    const int n = 4 + static_cast<int>(rng.uniform_index(3));
    const bool sqrt_weights = i % 2 == 0;
    const double rho = 0.01 + 0.3 * rng.uniform();
    const SensingEnsemble e =
        pmc_instance(n, rho, rng.normal_mat(n, 1), sqrt_weights);
    Eigen::MatrixXd g = rng.normal_mat(n, n);
    const Eigen::MatrixXd m = 0.5 * (g + g.transpose());
    const double lhs = apply_measurements(e, m).squaredNorm();
    const double w_off = sqrt_weights ? rho : rho * rho;
    double rhs = 0.0;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        rhs += (pmc_pair_observed(a, b) ? 1.0 : w_off) * m(a, b) * m(a, b);
    worst = std::max(worst, rel_diff(lhs, rhs, 1e-12));
  }
  // rho = 1: the operator is an isometry on symmetric matrices
  StreamRng rng(56, 0, "c12_iso");
  const SensingEnsemble iso = pmc_instance(5, 1.0, rng.normal_mat(5, 1), false);
  Eigen::MatrixXd g = rng.normal_mat(5, 5);
  const Eigen::MatrixXd m = 0.5 * (g + g.transpose());
  const double iso_gap =
      rel_diff(apply_measurements(iso, m).squaredNorm(), m.squaredNorm());
  std::printf("  c12: worst weighted-sum rel %.2e, isometry rel %.2e "
              "(tol 1e-10)\n",
              worst, iso_gap);
  return worst <= 1e-10 && iso_gap <= 1e-10;
}

struct Criterion {
  int id;
  const char* label;
  bool (*fn)();
};

const Criterion kCriteria[] = {
    {1, "lifted gradient and quadform match finite differences", crit1},
    {2, "reference/gram/staged strategies agree", crit2},
    {3, "harvested first-order points stay first-order after lifting", crit3},
    {4, "ground-truth lifts are second-order points", crit4},
    {5, "spurious traps certify an escape at the minimal odd level", crit5},
    {6, "plain lifted GD keeps iterates symmetric", crit6},
    {7, "late GD checkpoints are rank-1 dominated", crit7},
    {8, "linearization error scales cubically in the init size", crit8},
    {9, "lifted beats unlifted on matched perturbed-completion seeds", crit9},
    {10, "lifted beats the overparametrized baseline on quadratic nets",
     crit10},
    {11, "rank-1 fit attains the spectral norm on random tensors", crit11},
    {12, "measurement operator is the expected weighted sum", crit12},
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  if (argc > 1) only = std::atoi(argv[1]);
  bool all_ok = true;
  for (const Criterion& c : kCriteria) {
    if (only != 0 && c.id != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    const bool ok = c.fn();
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    std::printf("[%s] criterion %d: %s (%.1fs)\n", ok ? "PASS" : "FAIL", c.id,
                c.label, secs);
    all_ok = all_ok && ok;
  }
  return all_ok ? 0 : 1;
}
