#include "liftms/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <utility>

#include <json.hpp>

#include "liftms/rng.hpp"

namespace liftms {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void validate(const ExperimentConfig& c) {
  if (c.experiment != "pmc" && c.experiment != "nn" && c.experiment != "custom")
    throw std::invalid_argument("config: experiment must be pmc|nn|custom");
  if (c.experiment == "custom" && c.instance_file.empty())
    throw std::invalid_argument("config: custom experiment needs instance_file");
  if (c.n < 1 || c.r < 1) throw std::invalid_argument("config: n, r >= 1");
  if (c.experiment == "nn" && c.m < 1)
    throw std::invalid_argument("config: nn needs m >= 1");
  if (c.l < 1) throw std::invalid_argument("config: l >= 1");
  if (c.trials < 1) throw std::invalid_argument("config: trials >= 1");
  if (!(c.success_threshold > 0))
    throw std::invalid_argument("config: success_threshold > 0");
  if (!(c.epsilon > 0)) throw std::invalid_argument("config: epsilon > 0");
  if (!c.run_lifted && !c.run_unlifted)
    throw std::invalid_argument("config: at least one arm must run");
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (!j.is_object()) throw std::invalid_argument("config: expected an object");
  ExperimentConfig c;
  OptimizerConfig& a = c.algorithm;
  std::vector<std::string> unknown;
  for (const auto& item : j.items()) {
    const std::string& k = item.key();
    const nlohmann::json& v = item.value();
    if (k == "experiment") c.experiment = v.get<std::string>();
    else if (k == "n") c.n = v.get<int>();
    else if (k == "r") c.r = v.get<int>();
    else if (k == "m") c.m = v.get<int>();
    else if (k == "rho") c.rho = v.get<double>();
    else if (k == "sqrt_weights") c.sqrt_weights = v.get<bool>();
    else if (k == "l") c.l = v.get<int>();
    else if (k == "epsilon") c.epsilon = v.get<double>();
    else if (k == "rho_init") c.rho_init = v.get<double>();
    else if (k == "algorithm") a.algorithm = algorithm_from_name(v.get<std::string>());
    else if (k == "learning_rate") a.learning_rate = v.get<double>();
    else if (k == "lr_gain") a.lr_gain = v.get<double>();
    else if (k == "max_iters") a.max_iters = v.get<std::int64_t>();
    else if (k == "grad_tol") a.grad_tol = v.get<double>();
    else if (k == "adam_beta1") a.adam_beta1 = v.get<double>();
    else if (k == "adam_beta2") a.adam_beta2 = v.get<double>();
    else if (k == "adam_eps") a.adam_eps = v.get<double>();
    else if (k == "pgd_radius") a.pgd_radius = v.get<double>();
    else if (k == "pgd_t_thres") a.pgd_t_thres = v.get<std::int64_t>();
    else if (k == "pgd_g_thres") a.pgd_g_thres = v.get<double>();
    else if (k == "custom_g_thres") a.custom_g_thres = v.get<double>();
    else if (k == "custom_buffer_limit") a.custom_buffer_limit = v.get<int>();
    else if (k == "custom_min_iters") a.custom_min_iters = v.get<std::int64_t>();
    else if (k == "max_failed_escapes") a.max_failed_escapes = v.get<int>();
    else if (k == "armijo_beta") a.armijo_beta = v.get<double>();
    else if (k == "backtrack_gamma") a.backtrack_gamma = v.get<double>();
    else if (k == "escape_eta0") a.escape_eta0 = v.get<double>();
    else if (k == "pca_learning_rate") a.pca.learning_rate = v.get<double>();
    else if (k == "pca_epochs") a.pca.epochs = v.get<int>();
    else if (k == "pca_restarts") a.pca.restarts = v.get<int>();
    else if (k == "pca_gradnorm_epsilon") a.pca.gradnorm_epsilon = v.get<double>();
    else if (k == "strategy") c.strategy = strategy_from_name(v.get<std::string>());
    else if (k == "mem_budget_bytes") c.mem_budget_bytes = v.get<std::int64_t>();
    else if (k == "run_lifted") c.run_lifted = v.get<bool>();
    else if (k == "run_unlifted") c.run_unlifted = v.get<bool>();
    else if (k == "trials") c.trials = v.get<int>();
    else if (k == "success_threshold") c.success_threshold = v.get<double>();
    else if (k == "seed") c.seed = v.get<std::uint64_t>();
    else if (k == "checkpoint_every") c.checkpoint_every = v.get<std::int64_t>();
    else if (k == "ratio_every") c.ratio_every = v.get<std::int64_t>();
    else if (k == "output_dir") c.output_dir = v.get<std::string>();
    else if (k == "label") c.label = v.get<std::string>();
    else if (k == "instance_file") c.instance_file = v.get<std::string>();
    else if (k == "zero_wall_ms") c.zero_wall_ms = v.get<bool>();
    else unknown.push_back(k);
  }
  if (!unknown.empty()) {
    std::string msg = "config: unknown keys:";
    for (const auto& k : unknown) msg += " " + k;
    throw std::invalid_argument(msg);
  }
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str());
}

std::string config_to_json(const ExperimentConfig& c) {
  const OptimizerConfig& a = c.algorithm;
  nlohmann::ordered_json j;
  j["experiment"] = c.experiment;
  j["n"] = c.n;
  j["r"] = c.r;
  j["m"] = c.m;
  j["rho"] = c.rho;
  j["sqrt_weights"] = c.sqrt_weights;
  j["l"] = c.l;
  j["epsilon"] = c.epsilon;
  j["rho_init"] = c.rho_init;
  j["algorithm"] = algorithm_name(a.algorithm);
  j["learning_rate"] = a.learning_rate;
  j["lr_gain"] = a.lr_gain;
  j["max_iters"] = a.max_iters;
  j["grad_tol"] = a.grad_tol;
  j["adam_beta1"] = a.adam_beta1;
  j["adam_beta2"] = a.adam_beta2;
  j["adam_eps"] = a.adam_eps;
  j["pgd_radius"] = a.pgd_radius;
  j["pgd_t_thres"] = a.pgd_t_thres;
  j["pgd_g_thres"] = a.pgd_g_thres;
  j["custom_g_thres"] = a.custom_g_thres;
  j["custom_buffer_limit"] = a.custom_buffer_limit;
  j["custom_min_iters"] = a.custom_min_iters;
  j["max_failed_escapes"] = a.max_failed_escapes;
  j["armijo_beta"] = a.armijo_beta;
  j["backtrack_gamma"] = a.backtrack_gamma;
  j["escape_eta0"] = a.escape_eta0;
  j["pca_learning_rate"] = a.pca.learning_rate;
  j["pca_epochs"] = a.pca.epochs;
  j["pca_restarts"] = a.pca.restarts;
  j["pca_gradnorm_epsilon"] = a.pca.gradnorm_epsilon;
  j["strategy"] = strategy_name(c.strategy);
  j["mem_budget_bytes"] = c.mem_budget_bytes;
  j["run_lifted"] = c.run_lifted;
  j["run_unlifted"] = c.run_unlifted;
  j["trials"] = c.trials;
  j["success_threshold"] = c.success_threshold;
  j["seed"] = c.seed;
  j["checkpoint_every"] = c.checkpoint_every;
  j["ratio_every"] = c.ratio_every;
  j["output_dir"] = c.output_dir;
  j["label"] = c.label;
  j["instance_file"] = c.instance_file;
  j["zero_wall_ms"] = c.zero_wall_ms;
  return j.dump(2) + "\n";
}

double ExperimentReport::success_rate(const std::string& tag) const {
  int hits = 0, total = 0;
  for (const auto& t : results)
    if (t.row.algorithm == tag) {
      ++total;
      hits += t.row.success ? 1 : 0;
    }
  return total > 0 ? static_cast<double>(hits) / total : 0.0;
}

int ExperimentReport::trial_count(const std::string& tag) const {
  int total = 0;
  for (const auto& t : results)
    if (t.row.algorithm == tag) ++total;
  return total;
}

namespace {

SensingEnsemble make_instance(const ExperimentConfig& cfg, int trial) {
  if (cfg.experiment == "pmc") {
    StreamRng rng(cfg.seed, static_cast<std::uint64_t>(trial), "instance");
    // Truth supported on the partially-observed coordinates (1-based odd
    // rows). This is the hard family: every support sign pattern is a
    // spurious second-order point, ~2^(n/2) of them, and plain factored
    // descent lands on a wrong pattern with high probability. Full-support
    // truths make the completion easy and show no lifted/unlifted gap.
    Eigen::MatrixXd z = rng.normal_mat(cfg.n, cfg.r);
    for (int i = 1; i < cfg.n; i += 2) z.row(i).setZero();
    return pmc_instance(cfg.n, cfg.rho, z, cfg.sqrt_weights);
  }
  if (cfg.experiment == "nn") {
    StreamRng rng(cfg.seed, static_cast<std::uint64_t>(trial), "instance");
    return nn_quadratic_instance(cfg.n, cfg.r, cfg.m, rng);
  }
  return load_ensemble(cfg.instance_file);
}

OptimizerConfig arm_optimizer(const ExperimentConfig& cfg, int trial) {
  OptimizerConfig oc = cfg.algorithm;
  oc.seed_master = cfg.seed;
  oc.trial = static_cast<std::uint64_t>(trial);
  oc.log_every = cfg.checkpoint_every;
  oc.ratio_every = cfg.ratio_every;
  return oc;
}

TrialRow base_row(const ExperimentConfig& cfg, const SensingEnsemble& e,
                  int trial) {
  TrialRow row;
  row.experiment = cfg.experiment;
  row.n = e.n;
  row.m = e.m();
  row.l = cfg.l;
  row.epsilon = cfg.epsilon;
  row.seed = cfg.seed;
  row.trial = trial;
  return row;
}

void finish_row(TrialRow& row, const SensingEnsemble& e,
                const Eigen::MatrixXd& x, double threshold) {
  if (e.has_truth) {
    row.recovery_error = (x * x.transpose() - e.M_star).norm();
    row.success = row.recovery_error <= threshold;
  } else {
    row.recovery_error = std::numeric_limits<double>::quiet_NaN();
    row.success = false;
  }
}

struct TwoLayerResult {
  Eigen::MatrixXd M;  // X diag(a) X^T at the last iterate
  std::int64_t iters = 0;
  std::vector<TrajectoryPoint> trajectory;
};

// Standard two-layer quadratic-activation training: hidden weights and the
// output layer both learn, from conventional 1/sqrt(n)-scale values. With a
// trainable output layer the model spans indefinite X diag(a) X^T, so unlike
// the PSD-constrained factorization it interpolates freely when m is small.
TwoLayerResult train_two_layer_nn(const SensingEnsemble& e,
                                  const OptimizerConfig& oc, StreamRng& rng) {
  const int n = e.n;
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  Eigen::MatrixXd X = scale * rng.normal_mat(n, n);
  Eigen::VectorXd a = scale * rng.normal_vec(n);
  const double lr = oc.learning_rate > 0 ? oc.learning_rate : 1e-2;
  const bool adam = oc.algorithm == Algorithm::adam;

  Eigen::MatrixXd mx = Eigen::MatrixXd::Zero(n, n), vx = mx;
  Eigen::VectorXd ma = Eigen::VectorXd::Zero(n), va = ma;
  TwoLayerResult out;
  double stop_tol = 0.0;
  for (std::int64_t t = 1; t <= oc.max_iters; ++t) {
    const Eigen::MatrixXd model = X * a.asDiagonal() * X.transpose();
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
    double loss = 0.0;
    for (std::size_t k = 0; k < e.mats.size(); ++k) {
      const double resid = e.mats[k].cwiseProduct(model).sum() - e.b(k);
      s += resid * e.mats[k];
      loss += resid * resid;
    }
    const Eigen::MatrixXd gx = 4.0 * s * X * a.asDiagonal();
    Eigen::VectorXd ga(n);
    for (int j = 0; j < n; ++j) ga(j) = 2.0 * X.col(j).dot(s * X.col(j));
    const double gnorm = std::sqrt(gx.squaredNorm() + ga.squaredNorm());
    if (t == 1)
      stop_tol = oc.grad_tol > 0 ? oc.grad_tol * (1.0 + loss) : 0.0;
    if ((oc.log_every > 0 && (t - 1) % oc.log_every == 0) ||
        t == oc.max_iters || (stop_tol > 0 && gnorm <= stop_tol))
      out.trajectory.push_back({t - 1, loss, gnorm, 0.0, 0.0});
    out.iters = t;
    if (stop_tol > 0 && gnorm <= stop_tol) break;
    if (adam) {
      mx = oc.adam_beta1 * mx + (1 - oc.adam_beta1) * gx;
      vx = oc.adam_beta2 * vx + (1 - oc.adam_beta2) * gx.cwiseProduct(gx);
      ma = oc.adam_beta1 * ma + (1 - oc.adam_beta1) * ga;
      va = oc.adam_beta2 * va + (1 - oc.adam_beta2) * ga.cwiseProduct(ga);
      const double c1 = 1.0 - std::pow(oc.adam_beta1, static_cast<double>(t));
      const double c2 = 1.0 - std::pow(oc.adam_beta2, static_cast<double>(t));
      X -= (lr * (mx / c1).array() / ((vx / c2).array().sqrt() + oc.adam_eps))
               .matrix();
      a -= (lr * (ma / c1).array() / ((va / c2).array().sqrt() + oc.adam_eps))
               .matrix();
    } else {  // gd; the saddle-escape variants reduce to it on this model
      X -= lr * gx;
      a -= lr * ga;
    }
  }
  out.M = X * a.asDiagonal() * X.transpose();
  return out;
}

std::vector<TrialResult> run_trial(const ExperimentConfig& cfg, int trial) {
  using clock = std::chrono::steady_clock;
  std::vector<TrialResult> out;
  const SensingEnsemble e = make_instance(cfg, trial);

  if (cfg.run_lifted) {
    const auto t0 = clock::now();
    LiftedProblem p = make_lifted(e, cfg.l, cfg.strategy, cfg.mem_budget_bytes);
    StreamRng rng(cfg.seed, static_cast<std::uint64_t>(trial), "init");
    const LiftedInit init = init_lifted(p, cfg.epsilon, cfg.rho_init, rng);
    const OptimizerConfig oc = arm_optimizer(cfg, trial);
    RunResult res = run_lifted(p, e, init, oc);
    const RecoveredFactor rec = recover_factor(p, res.w_final, oc.pca);
    TrialResult tr;
    tr.row = base_row(cfg, e, trial);
    tr.row.r = cfg.r;
    tr.row.algorithm = std::string("lifted_") + algorithm_name(oc.algorithm);
    tr.row.iters = res.iters;
    finish_row(tr.row, e, rec.X, cfg.success_threshold);
    tr.row.wall_ms =
        std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    tr.trajectory = std::move(res.trajectory);
    out.push_back(std::move(tr));
  }

  if (cfg.run_unlifted) {
    const auto t0 = clock::now();
    const OptimizerConfig oc = arm_optimizer(cfg, trial);
    StreamRng rng(cfg.seed, static_cast<std::uint64_t>(trial), "init_unlifted");
    TrialResult tr;
    tr.row = base_row(cfg, e, trial);
    tr.row.algorithm = std::string("unlifted_") + algorithm_name(oc.algorithm);
    if (cfg.experiment == "nn") {
      // baseline = standard network training: n hidden units, both layers
      // learn, conventional init scale
      TwoLayerResult res = train_two_layer_nn(e, oc, rng);
      tr.row.r = e.n;
      tr.row.iters = res.iters;
      if (e.has_truth) {
        tr.row.recovery_error = (res.M - e.M_star).norm();
        tr.row.success = tr.row.recovery_error <= cfg.success_threshold;
      } else {
        tr.row.recovery_error = std::numeric_limits<double>::quiet_NaN();
        tr.row.success = false;
      }
      tr.trajectory = std::move(res.trajectory);
    } else {
      // matched-rank factorization from the same small scale as the lifted arm
      const Eigen::MatrixXd x0 = cfg.epsilon * rng.normal_mat(e.n, cfg.r);
      RunResult res = run_unlifted(e, x0, oc);
      tr.row.r = cfg.r;
      tr.row.iters = res.iters;
      finish_row(tr.row, e, res.x_final, cfg.success_threshold);
      tr.trajectory = std::move(res.trajectory);
    }
    tr.row.wall_ms =
        std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    out.push_back(std::move(tr));
  }
  return out;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg, int threads) {
  validate(cfg);
  const int trials = cfg.trials;
  std::vector<std::vector<TrialResult>> buckets(trials);
  if (threads <= 1) {
    for (int t = 0; t < trials; ++t) buckets[t] = run_trial(cfg, t);
  } else {
    std::atomic<int> next{0};
    auto worker = [&] {
      for (;;) {
        const int t = next.fetch_add(1);
        if (t >= trials) break;
        buckets[t] = run_trial(cfg, t);
      }
    };
    std::vector<std::thread> pool;
    const int count = std::min(threads, trials);
    pool.reserve(count);
    for (int i = 0; i < count; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  ExperimentReport rep;
  for (auto& bucket : buckets)
    for (auto& tr : bucket) rep.results.push_back(std::move(tr));
  return rep;
}

std::string report_csv(const ExperimentReport& rep, bool zero_wall_ms) {
  std::ostringstream out;
  out << "experiment,n,r,m,l,epsilon,algorithm,seed,trial,success,"
         "recovery_error,iters,wall_ms\n";
  for (const auto& t : rep.results) {
    const TrialRow& r = t.row;
    out << r.experiment << ',' << r.n << ',' << r.r << ',' << r.m << ','
        << r.l << ',' << fmt(r.epsilon) << ',' << r.algorithm << ',' << r.seed
        << ',' << r.trial << ',' << (r.success ? 1 : 0) << ','
        << fmt(r.recovery_error) << ',' << r.iters << ','
        << fmt(zero_wall_ms ? 0.0 : r.wall_ms) << '\n';
  }
  return out.str();
}

std::string trajectory_csv(const ExperimentReport& rep,
                           const std::string& algorithm_tag) {
  std::ostringstream out;
  out << "trial,iter,loss,grad_norm,asymmetry,ratio\n";
  for (const auto& t : rep.results) {
    if (t.row.algorithm != algorithm_tag) continue;
    for (const auto& pt : t.trajectory) {
      out << t.row.trial << ',' << pt.iter << ',' << fmt(pt.loss) << ','
          << fmt(pt.grad_norm) << ',' << fmt(pt.asymmetry) << ','
          << fmt(pt.ratio) << '\n';
    }
  }
  return out.str();
}

std::vector<std::string> write_experiment_artifacts(const ExperimentConfig& cfg,
                                                    const ExperimentReport& rep,
                                                    const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  std::vector<std::string> written;

  auto dump = [&](const std::string& name, const std::string& body) {
    const std::string path = (fs::path(out_dir) / name).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << body;
    written.push_back(path);
  };

  dump("report.csv", report_csv(rep, cfg.zero_wall_ms));

  std::set<std::string> tags;
  for (const auto& t : rep.results)
    if (!t.trajectory.empty()) tags.insert(t.row.algorithm);
  for (const auto& tag : tags)
    dump("trajectory_" + tag + ".csv", trajectory_csv(rep, tag));

  nlohmann::ordered_json manifest;
  manifest["version"] = kVersion;
  manifest["config"] = nlohmann::ordered_json::parse(config_to_json(cfg));
  dump("manifest.json", manifest.dump(2) + "\n");
  return written;
}

std::vector<std::string> preset_names() {
  return {"figure1_n", "figure1_eps", "figure2_algorithms", "table1a",
          "table1b"};
}

namespace {

ExperimentConfig pmc_preset_base() {
  ExperimentConfig c;
  c.experiment = "pmc";
  c.r = 1;
  c.rho = 0.01;
  c.l = 3;
  c.algorithm.algorithm = Algorithm::custom_gd;
  c.algorithm.max_iters = 1500;
  c.algorithm.grad_tol = 1e-9;
  c.algorithm.max_failed_escapes = 3;
  return c;
}

ExperimentConfig nn_preset_base(int r) {
  ExperimentConfig c;
  c.experiment = "nn";
  c.r = r;
  c.l = 3;
  c.epsilon = 1e-5;
  c.algorithm.algorithm = Algorithm::adam;
  c.algorithm.learning_rate = 0.01;
  // full ADAM budget: the relative gradient stop is scaled by the lifted
  // initial loss ~ |b|^(2l), far too lax a bar for these runs
  c.algorithm.max_iters = 30000;
  c.algorithm.grad_tol = 0.0;
  return c;
}

}  // namespace

std::vector<ExperimentConfig> preset_configs(const std::string& name,
                                             bool full_grid) {
  std::vector<ExperimentConfig> out;
  const int trials = full_grid ? 10 : 3;
  if (name == "figure1_n") {
    const std::vector<int> ns = full_grid ? std::vector<int>{8, 10, 12}
                                          : std::vector<int>{6, 8};
    for (int n : ns) {
      ExperimentConfig c = pmc_preset_base();
      c.n = n;
      c.epsilon = 1e-7;
      c.trials = trials;
      c.label = name;
      out.push_back(c);
    }
  } else if (name == "figure1_eps") {
    for (double eps : {1e-3, 1e-5, 1e-7}) {
      ExperimentConfig c = pmc_preset_base();
      c.n = full_grid ? 10 : 8;
      c.epsilon = eps;
      c.trials = trials;
      c.label = name;
      out.push_back(c);
    }
  } else if (name == "figure2_algorithms") {
    for (Algorithm a :
         {Algorithm::custom_gd, Algorithm::gd, Algorithm::pgd, Algorithm::adam}) {
      ExperimentConfig c = pmc_preset_base();
      c.n = full_grid ? 10 : 8;
      c.epsilon = full_grid ? 1e-7 : 1e-5;
      c.trials = trials;
      c.run_unlifted = false;
      c.algorithm.algorithm = a;
      if (a == Algorithm::adam) c.algorithm.learning_rate = 0.01;
      c.label = name;
      out.push_back(c);
    }
  } else if (name == "table1a" || name == "table1b") {
    const bool second = name == "table1b";
    const std::vector<int> ns =
        full_grid ? std::vector<int>{8, 10, 12} : std::vector<int>{8};
    const std::vector<int> ms = second ? std::vector<int>{30, 40, 50}
                                       : std::vector<int>{20, 30, 40};
    for (int n : ns)
      for (int m : ms) {
        ExperimentConfig c = nn_preset_base(second ? 2 : 1);
        c.n = n;
        c.m = m;
        c.trials = trials;
        c.label = name;
        out.push_back(c);
      }
  } else {
    throw std::invalid_argument("unknown preset: " + name);
  }
  return out;
}

}  // namespace liftms
