#include "liftms/sensing.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace liftms {

bool pmc_pair_observed(int i, int j) {
  // 1-based evens are odd 0-based indices
  return i == j || (i % 2 == 1) || (j % 2 == 1);
}

SensingEnsemble pmc_instance(int n, double rho, const Eigen::MatrixXd& Z,
                             bool sqrt_weights) {
  if (n <= 0 || Z.rows() != n) throw std::invalid_argument("pmc_instance: bad Z");
  if (rho < 0.0) throw std::invalid_argument("pmc_instance: rho must be >= 0");
  SensingEnsemble e;
  e.n = n;
  e.r = static_cast<int>(Z.cols());
  e.Z = Z;
  e.M_star = Z * Z.transpose();
  e.has_truth = true;
  e.family = "pmc";
  e.pmc_rho = rho;
  e.pmc_sqrt_weights = sqrt_weights;
  const double off_weight = sqrt_weights ? std::sqrt(rho) : rho;
  e.mats.reserve(static_cast<size_t>(n) * n);
  Eigen::VectorXd b(n * n);
  int k = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j, ++k) {
      const double c = pmc_pair_observed(i, j) ? 1.0 : off_weight;
      Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
      a(i, j) += 0.5 * c;
      a(j, i) += 0.5 * c;
      b(k) = c * e.M_star(i, j);
      e.mats.push_back(std::move(a));
    }
  }
  e.b = b;
  return e;
}

SensingEnsemble nn_quadratic_instance(int n, int r, int m, StreamRng& rng) {
  if (n <= 0 || r <= 0 || m <= 0)
    throw std::invalid_argument("nn_quadratic_instance: bad sizes");
  SensingEnsemble e;
  e.n = n;
  e.r = r;
  e.Z = rng.normal_mat(n, r);
  e.M_star = e.Z * e.Z.transpose();
  e.has_truth = true;
  e.family = "nn";
  e.mats.reserve(m);
  Eigen::VectorXd b(m);
  for (int k = 0; k < m; ++k) {
    const Eigen::VectorXd d = rng.normal_vec(n);
    e.mats.push_back(d * d.transpose());
    b(k) = (e.Z.transpose() * d).squaredNorm();
  }
  e.b = b;
  return e;
}

SensingEnsemble gaussian_instance(int n, int r, int m, StreamRng& rng) {
  if (n <= 0 || r <= 0 || m <= 0)
    throw std::invalid_argument("gaussian_instance: bad sizes");
  SensingEnsemble e;
  e.n = n;
  e.r = r;
  e.Z = rng.normal_mat(n, r);
  e.M_star = e.Z * e.Z.transpose();
  e.has_truth = true;
  e.family = "gaussian";
  e.mats.reserve(m);
  Eigen::VectorXd b(m);
  for (int k = 0; k < m; ++k) {
    const Eigen::MatrixXd g = rng.normal_mat(n, n);
    e.mats.push_back(0.5 * (g + g.transpose()));
    b(k) = e.mats.back().cwiseProduct(e.M_star).sum();
  }
  e.b = b;
  return e;
}

Eigen::VectorXd apply_measurements(const SensingEnsemble& e,
                                   const Eigen::MatrixXd& M) {
  Eigen::VectorXd out(e.m());
  for (int k = 0; k < e.m(); ++k)
    out(k) = e.mats[k].cwiseProduct(M).sum();
  return out;
}

SmoothnessConstants smoothness_constants(const SensingEnsemble& e,
                                         int num_probes, std::uint64_t seed) {
  SmoothnessConstants c;
  if (e.family == "pmc") {
    const double off = e.pmc_sqrt_weights ? std::sqrt(e.pmc_rho) : e.pmc_rho;
    const double wmax = std::max(1.0, off);
    const double wmin = std::min(1.0, off);
    c.L_s = wmax * wmax;
    c.alpha_s = wmin * wmin;
    c.exact = true;
  } else {
    StreamRng rng(seed, 0, "smoothness_probe");
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (int p = 0; p < num_probes; ++p) {
      const Eigen::MatrixXd g1 = rng.normal_mat(e.n, e.r);
      const Eigen::MatrixXd g2 = rng.normal_mat(e.n, e.r);
      Eigen::MatrixXd d = g1 * g2.transpose() + g2 * g1.transpose();
      const double dn = d.norm();
      if (dn <= 0.0) continue;
      const double ratio = apply_measurements(e, d).squaredNorm() / (dn * dn);
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
    c.L_s = hi;
    c.alpha_s = std::isfinite(lo) ? lo : 0.0;
    c.exact = false;
  }
  const double denom = c.L_s + c.alpha_s;
  c.delta = denom > 0.0 ? (c.L_s - c.alpha_s) / denom : 0.0;
  return c;
}

bool global_benign_norm_bound(const Eigen::MatrixXd& m_star, int r,
                              const SmoothnessConstants& c, double* lhs,
                              double* rhs) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m_star);
  const Eigen::VectorXd ev = es.eigenvalues();
  const int n = (int)m_star.rows();
  const double lam_max = ev(n - 1);
  const double lam_r = ev(n - r);  // r-th largest
  const double tau = lam_r > 0.0 ? lam_max / lam_r
                                 : std::numeric_limits<double>::infinity();
  const double l = std::max(c.L_s, std::numeric_limits<double>::min());
  const double sum = c.L_s + c.alpha_s;
  const double bound = 2.0 * std::sqrt(2.0) / (tau * std::sqrt((double)r)) *
                       std::pow(c.alpha_s, 2.5) / (sum * sum * std::sqrt(l));
  const double norm = m_star.norm();
  if (lhs) *lhs = norm;
  if (rhs) *rhs = bound;
  return norm <= bound;
}

bool global_benign_norm_bound(const SensingEnsemble& e,
                              const SmoothnessConstants& c, double* lhs,
                              double* rhs) {
  if (!e.has_truth)
    throw std::invalid_argument("global_benign_norm_bound: needs ground truth");
  return global_benign_norm_bound(e.M_star, e.r, c, lhs, rhs);
}

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const int rows = static_cast<int>(j.size());
  const int cols = rows > 0 ? static_cast<int>(j.at(0).size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (static_cast<int>(j.at(i).size()) != cols)
      throw std::invalid_argument("ragged matrix in json");
    for (int jj = 0; jj < cols; ++jj) m(i, jj) = j.at(i).at(jj).get<double>();
  }
  return m;
}

}  // namespace

std::string ensemble_to_json(const SensingEnsemble& e) {
  nlohmann::json j;
  j["n"] = e.n;
  j["r"] = e.r;
  j["m"] = e.m();
  nlohmann::json mats = nlohmann::json::array();
  for (const auto& a : e.mats) mats.push_back(matrix_to_json(a));
  j["mats"] = std::move(mats);
  nlohmann::json b = nlohmann::json::array();
  for (int k = 0; k < e.b.size(); ++k) b.push_back(e.b(k));
  j["b"] = std::move(b);
  j["family"] = e.family;
  j["pmc_rho"] = e.pmc_rho;
  j["pmc_sqrt_weights"] = e.pmc_sqrt_weights;
  if (e.has_truth) {
    j["Z"] = matrix_to_json(e.Z);
    j["M_star"] = matrix_to_json(e.M_star);
  }
  return j.dump(1);
}

SensingEnsemble ensemble_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  SensingEnsemble e;
  e.n = j.at("n").get<int>();
  e.r = j.at("r").get<int>();
  const int m = j.at("m").get<int>();
  e.family = j.value("family", std::string("custom"));
  e.pmc_rho = j.value("pmc_rho", 1.0);
  e.pmc_sqrt_weights = j.value("pmc_sqrt_weights", false);
  for (const auto& a : j.at("mats")) {
    Eigen::MatrixXd mat = matrix_from_json(a);
    if (mat.rows() != e.n || mat.cols() != e.n)
      throw std::invalid_argument("sensing matrix has wrong shape");
    if ((mat - mat.transpose()).norm() > 1e-10 * std::max(1.0, mat.norm()))
      throw std::invalid_argument("sensing matrix must be symmetric");
    e.mats.push_back(std::move(mat));
  }
  if (e.m() != m) throw std::invalid_argument("m does not match mats");
  const auto& b = j.at("b");
  if (static_cast<int>(b.size()) != m)
    throw std::invalid_argument("b has wrong length");
  e.b.resize(m);
  for (int k = 0; k < m; ++k) e.b(k) = b.at(k).get<double>();
  if (j.contains("Z") && j.contains("M_star")) {
    e.Z = matrix_from_json(j.at("Z"));
    e.M_star = matrix_from_json(j.at("M_star"));
    e.has_truth = true;
  }
  return e;
}

void save_ensemble(const SensingEnsemble& e, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << ensemble_to_json(e);
}

SensingEnsemble load_ensemble(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ensemble_from_json(ss.str());
}

}  // namespace liftms
