#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "liftms/diagnostics.hpp"
#include "liftms/experiment.hpp"
#include "liftms/lifted.hpp"
#include "liftms/optimize.hpp"
#include "liftms/sensing.hpp"
#include "liftms/svg_plot.hpp"
#include "liftms/unlifted.hpp"

namespace fs = std::filesystem;
using namespace liftms;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spit(const std::string& path, const std::string& body) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << body;
}

DenseTensor tensor_from_json_text(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  const int order = j.at("order").get<int>();
  const int dim = j.at("dim").get<int>();
  DenseTensor t(order, dim);
  const auto& data = j.at("data");
  if (static_cast<std::int64_t>(data.size()) != t.size())
    throw std::runtime_error("point file: data length mismatch");
  for (std::int64_t i = 0; i < t.size(); ++i)
    t.data()[i] = data[static_cast<std::size_t>(i)].get<double>();
  return t;
}

std::string tensor_to_json_text(const DenseTensor& t) {
  if (!t.cubic()) throw std::runtime_error("only cubic tensors serialize");
  nlohmann::ordered_json j;
  j["order"] = t.order();
  j["dim"] = t.dim();
  nlohmann::json data = nlohmann::json::array();
  for (std::int64_t i = 0; i < t.size(); ++i) data.push_back(t.data()[i]);
  j["data"] = std::move(data);
  return j.dump() + "\n";
}

int cmd_run(const std::string& config_path, const std::string& preset,
            bool full_grid, const std::string& out_dir, int threads) {
  if (config_path.empty() == preset.empty()) {
    std::cerr << "run: provide exactly one of --config or --preset\n";
    return 1;
  }
  if (!config_path.empty()) {
    ExperimentConfig cfg = load_config(config_path);
    const std::string dir = out_dir.empty() ? cfg.output_dir : out_dir;
    const ExperimentReport rep = run_experiment(cfg, threads);
    for (const auto& path : write_experiment_artifacts(cfg, rep, dir))
      std::cout << "wrote " << path << "\n";
    for (const auto& tag : {std::string("lifted_"), std::string("unlifted_")})
      for (const auto& t : rep.results)
        if (t.row.algorithm.rfind(tag, 0) == 0) {
          std::cout << t.row.algorithm << " success rate "
                    << rep.success_rate(t.row.algorithm) << "\n";
          break;
        }
    return 0;
  }

  const std::vector<ExperimentConfig> sweep = preset_configs(preset, full_grid);
  const std::string dir = out_dir.empty() ? preset : out_dir;
  fs::create_directories(dir);
  std::string merged;
  nlohmann::ordered_json manifest;
  manifest["version"] = kVersion;
  manifest["preset"] = preset;
  manifest["full_grid"] = full_grid;
  manifest["configs"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    const ExperimentConfig& cfg = sweep[i];
    const ExperimentReport rep = run_experiment(cfg, threads);
    const std::string csv = report_csv(rep, cfg.zero_wall_ms);
    if (merged.empty())
      merged = csv;
    else
      merged += csv.substr(csv.find('\n') + 1);  // drop repeated header
    char sub[16];
    std::snprintf(sub, sizeof(sub), "cfg%02zu", i);
    for (const auto& path :
         write_experiment_artifacts(cfg, rep, (fs::path(dir) / sub).string()))
      std::cout << "wrote " << path << "\n";
    manifest["configs"].push_back(
        nlohmann::ordered_json::parse(config_to_json(cfg)));
  }
  spit((fs::path(dir) / "report.csv").string(), merged);
  spit((fs::path(dir) / "manifest.json").string(), manifest.dump(2) + "\n");
  std::cout << "wrote " << (fs::path(dir) / "report.csv").string() << "\n";
  return 0;
}

int cmd_ratio_trace(const std::string& config_path, const std::string& out_dir,
                    const std::vector<std::int64_t>& grid_arg) {
  ExperimentConfig cfg = load_config(config_path);
  std::vector<std::int64_t> grid = grid_arg;
  if (grid.empty()) {
    const std::int64_t stride =
        cfg.checkpoint_every > 0 ? cfg.checkpoint_every : 20;
    for (int i = 1; i <= 9; ++i) grid.push_back(stride * i);
  }
  const std::string dir = out_dir.empty() ? cfg.output_dir : out_dir;
  fs::create_directories(dir);
  for (int trial = 0; trial < cfg.trials; ++trial) {
    SensingEnsemble e;
    if (cfg.experiment == "pmc") {
      StreamRng rng(cfg.seed, static_cast<std::uint64_t>(trial), "instance");
      e = pmc_instance(cfg.n, cfg.rho, rng.normal_mat(cfg.n, cfg.r),
                       cfg.sqrt_weights);
    } else if (cfg.experiment == "nn") {
      StreamRng rng(cfg.seed, static_cast<std::uint64_t>(trial), "instance");
      e = nn_quadratic_instance(cfg.n, cfg.r, cfg.m, rng);
    } else {
      e = load_ensemble(cfg.instance_file);
    }
    LiftedProblem p = make_lifted(e, cfg.l, cfg.strategy, cfg.mem_budget_bytes);
    StreamRng rng(cfg.seed, static_cast<std::uint64_t>(trial), "init");
    const LiftedInit init = init_lifted(p, cfg.epsilon, cfg.rho_init, rng);
    const DecompositionReport rep = decompose_gd_run(
        p, init, cfg.algorithm.learning_rate, grid, cfg.algorithm.pca);
    char name[48];
    std::snprintf(name, sizeof(name), "ratio_trace_trial%02d.csv", trial);
    const std::string path = (fs::path(dir) / name).string();
    spit(path, decomposition_report_csv(rep));
    std::cout << "wrote " << path << "\n";
    std::cout << decomposition_report_text(rep);
  }
  return 0;
}

int cmd_certify(const std::string& instance_path, const std::string& point_path,
                const std::string& out_path) {
  const SensingEnsemble e = load_ensemble(instance_path);
  const DenseTensor w = tensor_from_json_text(slurp(point_path));
  if (w.dim() != e.n * e.r) {
    std::cerr << "certify: point dimension " << w.dim()
              << " does not match instance n*r = " << e.n * e.r << "\n";
    return 1;
  }
  const LiftedProblem p = make_lifted(e, w.order());
  const SmoothnessConstants constants = smoothness_constants(e);
  const SaddleCertificate cert = certify_lifted_point(p, w, constants, {});
  const std::string text = certificate_text(cert);
  std::cout << text;
  if (!out_path.empty()) spit(out_path, text);
  return 0;
}

int cmd_plot(const std::vector<std::string>& inputs,
             const std::string& out_dir) {
  if (inputs.empty()) {
    std::cerr << "plot: no input CSVs\n";
    return 1;
  }
  fs::create_directories(out_dir);
  for (const auto& in : inputs) {
    const std::string text = slurp(in);
    const std::string header = text.substr(0, text.find('\n'));
    const std::string svg = header.rfind("experiment,", 0) == 0
                                ? plot_report_csv(text)
                                : plot_ratio_csv(text);
    const std::string out =
        (fs::path(out_dir) / (fs::path(in).stem().string() + ".svg")).string();
    spit(out, svg);
    std::cout << "wrote " << out << "\n";
  }
  return 0;
}

int cmd_harvest(int n, int r, double rho, int count, std::uint64_t seed,
                const std::string& out_dir, const std::string& z_pattern,
                double d2, bool flip_seeds, double sop_tol, double min_err,
                int descend_iters, bool no_newton) {
  StreamRng zrng(seed, 0, "instance");
  Eigen::MatrixXd Z;
  if (z_pattern == "oddonly") {
    // truth supported on odd (1-based) coordinates only: the observation
    // pattern then never sees the off-diagonal signs directly and single
    // sign flips become genuine traps
    Z = zrng.normal_mat(n, r);
    for (int i = 1; i < n; i += 2) Z.row(i).setZero();
  } else if (z_pattern == "decoupled") {
    // rank-2 variant: odd-supported main column plus a small even-supported
    // one, so the two blocks never mix and the flip traps gain a clean
    // second direction of size d2
    if (r != 2) throw CLI::ValidationError("--z-pattern decoupled needs r=2");
    Z = Eigen::MatrixXd::Zero(n, 2);
    Eigen::VectorXd g1 = zrng.normal_vec(n), g2 = zrng.normal_vec(n);
    for (int i = 0; i < n; i += 2) Z(i, 0) = g1(i);
    Eigen::VectorXd even = Eigen::VectorXd::Zero(n);
    for (int i = 1; i < n; i += 2) even(i) = g2(i);
    even.normalize();
    Z.col(1) = std::sqrt(d2) * even;
  } else if (z_pattern == "gaussian") {
    Z = zrng.normal_mat(n, r);
  } else {
    throw CLI::ValidationError("--z-pattern: gaussian | oddonly | decoupled");
  }
  const SensingEnsemble e = pmc_instance(n, rho, Z);
  HarvestOptions opt;
  opt.target = count;
  opt.sop_tol = sop_tol;
  opt.min_recovery_error = min_err;
  opt.descend_iters = descend_iters;
  opt.newton_polish = !no_newton;
  if (flip_seeds) opt.seeds = sign_flip_seeds(Z);
  StreamRng hrng(seed, 0, "harvest");
  const std::vector<HarvestedPoint> points = harvest_spurious(e, opt, hrng);
  fs::create_directories(out_dir);
  const std::string ipath = (fs::path(out_dir) / "instance.json").string();
  save_ensemble(e, ipath);
  std::cout << "wrote " << ipath << "\n";

  nlohmann::ordered_json j;
  j["n"] = n;
  j["r"] = r;
  j["rho"] = rho;
  j["points"] = nlohmann::json::array();
  for (const auto& hp : points) {
    nlohmann::ordered_json pj;
    pj["fop_residual"] = hp.fop_residual;
    pj["grad_norm"] = hp.grad_norm;
    pj["recovery_error"] = hp.recovery_error;
    pj["loss"] = hp.loss;
    pj["lambda_min_hessian"] = hp.lambda_min_hessian;
    nlohmann::json x = nlohmann::json::array();
    for (int c = 0; c < hp.X.cols(); ++c)
      for (int i = 0; i < hp.X.rows(); ++i) x.push_back(hp.X(i, c));
    pj["x_col_major"] = std::move(x);
    j["points"].push_back(std::move(pj));
  }
  const std::string ppath = (fs::path(out_dir) / "points.json").string();
  spit(ppath, j.dump(2) + "\n");
  std::cout << "wrote " << ppath << " (" << points.size() << " points)\n";

  // lifted coordinates of the first point, ready for `certify`
  if (!points.empty()) {
    const DenseTensor w = outer_power(stack_factor(points[0].X), 3);
    const std::string wpath = (fs::path(out_dir) / "point0_l3.json").string();
    spit(wpath, tensor_to_json_text(w));
    std::cout << "wrote " << wpath << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lifted matrix sensing experiments"};
  app.require_subcommand(1);

  std::string config_path, preset, out_dir, instance_path, point_path;
  bool full_grid = false;
  int threads = 1;
  std::vector<std::int64_t> grid;
  std::vector<std::string> inputs;
  int n = 6, r = 1, count = 5;
  double rho = 0.01;
  std::uint64_t seed = 20240917ull;

  CLI::App* run = app.add_subcommand("run", "run a trial batch");
  run->add_option("--config", config_path, "config JSON path");
  run->add_option("--preset", preset, "named sweep preset");
  run->add_flag("--full-grid", full_grid, "full grid instead of desk scale");
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--threads", threads, "trial pool size");

  CLI::App* trace = app.add_subcommand(
      "ratio-trace", "deflation-ratio trace of plain GD checkpoints");
  trace->add_option("--config", config_path, "config JSON path")->required();
  trace->add_option("--out", out_dir, "output directory");
  trace->add_option("--checkpoints", grid, "iteration grid (default 20..180)");

  CLI::App* certify =
      app.add_subcommand("certify", "stationary-point certificate");
  std::string cert_out;
  certify->add_option("--instance", instance_path, "ensemble JSON path")
      ->required();
  certify->add_option("--point", point_path, "lifted point JSON path")
      ->required();
  certify->add_option("--out", cert_out, "also write the text here");

  CLI::App* plot = app.add_subcommand("plot", "render CSVs to SVG");
  plot->add_option("csv", inputs, "report/trajectory/ratio CSVs");
  plot->add_option("--out", out_dir, "output directory")->default_val(".");

  CLI::App* harvest = app.add_subcommand(
      "harvest-spurious", "collect spurious second-order points (pmc)");
  std::string z_pattern = "oddonly";
  double d2 = 0.08, sop_tol = -1.0, min_err = 0.05;
  int descend_iters = 5000;
  bool flip_seeds = false, no_newton = false;
  harvest->add_option("--n", n, "matrix size");
  harvest->add_option("--r", r, "factor rank");
  harvest->add_option("--rho", rho, "off-support weight");
  harvest->add_option("--count", count, "points to collect");
  harvest->add_option("--seed", seed, "master seed");
  harvest->add_option("--z-pattern", z_pattern,
                      "truth support: gaussian | oddonly | decoupled");
  harvest->add_option("--d2", d2, "second-column energy (decoupled)");
  harvest->add_flag("--flip-seeds", flip_seeds,
                    "seed starts with single sign flips of the truth");
  harvest->add_option("--sop-tol", sop_tol,
                      ">= 0: keep only lambda_min(Hessian) >= -tol");
  harvest->add_option("--min-err", min_err,
                      "minimum recovery error to keep (0 keeps all)");
  harvest->add_option("--descend-iters", descend_iters,
                      "descent budget before the Newton polish (0: none)");
  harvest->add_flag("--no-newton", no_newton, "plain descent only");
  harvest->add_option("--out", out_dir, "output directory")->default_val(".");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return cmd_run(config_path, preset, full_grid, out_dir, threads);
    if (trace->parsed()) return cmd_ratio_trace(config_path, out_dir, grid);
    if (certify->parsed())
      return cmd_certify(instance_path, point_path, cert_out);
    if (plot->parsed()) return cmd_plot(inputs, out_dir);
    if (harvest->parsed())
      return cmd_harvest(n, r, rho, count, seed, out_dir, z_pattern, d2,
                         flip_seeds, sop_tol, min_err, descend_iters,
                         no_newton);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
