#include "liftms/lifted.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <functional>
#include <cstdlib>
#include <iostream>
#include <stdexcept>
#include <string>

namespace liftms {
namespace {

Eigen::MatrixXd lift_matrix(const Eigen::MatrixXd& a, int r) {
  const int n = static_cast<int>(a.rows());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n * r, n * r);
  for (int c = 0; c < r; ++c) out.block(c * n, c * n, n, n) = a;
  return out;
}

void check_shape(const LiftedProblem& p, const DenseTensor& w,
                 const char* what) {
  if (w.order() != p.l || !w.cubic() || w.dim() != p.d)
    throw std::invalid_argument(std::string(what) +
                                ": tensor shape does not match the problem");
}

// base^e as int64 when it fits under `limit`, else nullopt-like false.
bool pow_fits(std::int64_t base, int e, std::int64_t limit, std::int64_t* out) {
  std::int64_t v = 1;
  for (int i = 0; i < e; ++i) {
    if (base != 0 && v > limit / base) return false;
    v *= base;
  }
  if (out) *out = v;
  return true;
}

template <class F>
void for_each_tuple(int l, int m, F&& f) {
  std::vector<int> k(l, 0);
  while (true) {
    f(k);
    int t = l - 1;
    while (t >= 0) {
      if (++k[t] < m) break;
      k[t] = 0;
      --t;
    }
    if (t < 0) break;
  }
}

// ---- reference strategy: direct loops over measurement tuples ----

DenseTensor tuple_operator_apply(const LiftedProblem& p, const DenseTensor& w,
                                 const std::vector<int>& k) {
  DenseTensor t = w;
  for (int mode = 0; mode < p.l; ++mode)
    t = mode_product(t, p.A[k[mode]], mode);
  return t;
}

double reference_eval(const LiftedProblem& p, const DenseTensor& w,
                      DenseTensor* grad) {
  double loss = 0.0;
  if (grad) {
    *grad = DenseTensor(p.l, p.d);
    grad->set_zero();
  }
  for_each_tuple(p.l, p.m, [&](const std::vector<int>& k) {
    DenseTensor t = tuple_operator_apply(p, w, k);
    double bprod = 1.0;
    for (int mode = 0; mode < p.l; ++mode) bprod *= p.b(k[mode]);
    const double resid = inner_full(w, t) - bprod;
    loss += resid * resid;
    if (grad) grad->as_vector() += (4.0 * resid) * t.as_vector();
  });
  return loss;
}

DenseTensor reference_measurements(const LiftedProblem& p,
                                   const DenseTensor& w) {
  DenseTensor y(p.l, p.m);
  for_each_tuple(p.l, p.m, [&](const std::vector<int>& k) {
    DenseTensor t = tuple_operator_apply(p, w, k);
    y.at(k) = inner_full(w, t);
  });
  return y;
}

double reference_quadform(const LiftedProblem& p, const DenseTensor& w,
                          const DenseTensor& delta) {
  double acc = 0.0;
  for_each_tuple(p.l, p.m, [&](const std::vector<int>& k) {
    DenseTensor bw = tuple_operator_apply(p, w, k);
    DenseTensor bd = tuple_operator_apply(p, delta, k);
    double bprod = 1.0;
    for (int mode = 0; mode < p.l; ++mode) bprod *= p.b(k[mode]);
    const double y = inner_full(w, bw);
    const double qdw = inner_full(delta, bw);
    const double qdd = inner_full(delta, bd);
    acc += 8.0 * qdw * qdw + 4.0 * (y - bprod) * qdd;
  });
  return acc;
}

DenseTensor reference_quartic(const LiftedProblem& p, const DenseTensor& w) {
  DenseTensor out(p.l, p.d);
  out.set_zero();
  for_each_tuple(p.l, p.m, [&](const std::vector<int>& k) {
    DenseTensor t = tuple_operator_apply(p, w, k);
    out.as_vector() += inner_full(w, t) * t.as_vector();
  });
  return out;
}

// ---- staged strategy: contraction against the factored eigen stack ----

DenseTensor stack_apply(const LiftedProblem& p, const DenseTensor& w) {
  DenseTensor t = w;
  for (int mode = 0; mode < p.l; ++mode)
    t = mode_product(t, p.stack_e, mode);
  return t;
}

DenseTensor stack_unapply(const LiftedProblem& p, const DenseTensor& h) {
  const Eigen::MatrixXd et = p.stack_e.transpose();
  DenseTensor t = h;
  for (int mode = 0; mode < p.l; ++mode) t = mode_product(t, et, mode);
  return t;
}

// Visit all (l-1)-digit prefixes of stack-row tuples; fn gets the flat base of
// the row block, the measurement-tensor offset of the owner prefix, and the
// prefix sign product. The last digit is handled inside fn via owner segments.
template <class F>
void walk_prefixes(const LiftedProblem& p, F&& fn) {
  const int l = p.l, m = p.m;
  const int R = p.stack_rows();
  if (R == 0) return;
  std::vector<std::int64_t> mpow(l);
  mpow[l - 1] = 1;
  for (int t = l - 2; t >= 0; --t) mpow[t] = mpow[t + 1] * m;
  if (l == 1) {
    fn(std::int64_t(0), std::int64_t(0), 1.0);
    return;
  }
  const auto& sign = p.stack_sign;
  const auto& owner = p.stack_owner;
  std::int64_t nprefix = 1;
  for (int t = 0; t < l - 1; ++t) nprefix *= R;
  std::vector<int> digit(l - 1, 0);
  double sprefix = 1.0;
  std::int64_t ypre = 0;
  for (int t = 0; t < l - 1; ++t) {
    sprefix *= sign[0];
    ypre += owner[0] * mpow[t];
  }
  for (std::int64_t it = 0; it < nprefix; ++it) {
    fn(it * R, ypre, sprefix);
    if (it + 1 == nprefix) break;
    int t = l - 2;  // last prefix digit runs fastest (row-major)
    while (true) {
      const int old = digit[t];
      if (old + 1 < R) {
        digit[t] = old + 1;
        sprefix *= sign[old] * sign[old + 1];
        ypre += std::int64_t(owner[old + 1] - owner[old]) * mpow[t];
        break;
      }
      digit[t] = 0;
      sprefix *= sign[old] * sign[0];
      ypre += std::int64_t(owner[0] - owner[old]) * mpow[t];
      --t;
    }
  }
}

// y[k tuple] += sum over matching row tuples of sign-product * a * b
void aggregate_pairs(const LiftedProblem& p, const double* a, const double* b,
                     double* y) {
  const auto& sign = p.stack_sign;
  const auto& seg = p.stack_seg;
  const int m = p.m;
  walk_prefixes(p, [&](std::int64_t base, std::int64_t ypre, double sprefix) {
    const double* pa = a + base;
    const double* pb = b + base;
    double* yr = y + ypre;
    for (int k = 0; k < m; ++k) {
      double acc = 0.0;
      for (int c = seg[k]; c < seg[k + 1]; ++c) acc += sign[c] * pa[c] * pb[c];
      yr[k] += sprefix * acc;
    }
  });
}

// h[row tuple] = sign-product * r[owner tuple] * g[row tuple]
void scale_by_tuple(const LiftedProblem& p, const double* r, const double* g,
                    double* h) {
  const auto& sign = p.stack_sign;
  const auto& seg = p.stack_seg;
  const int m = p.m;
  walk_prefixes(p, [&](std::int64_t base, std::int64_t ypre, double sprefix) {
    const double* pg = g + base;
    double* ph = h + base;
    const double* rr = r + ypre;
    for (int k = 0; k < m; ++k) {
      const double rv = sprefix * rr[k];
      for (int c = seg[k]; c < seg[k + 1]; ++c) ph[c] = sign[c] * rv * pg[c];
    }
  });
}

double staged_eval(const LiftedProblem& p, const DenseTensor& w,
                   DenseTensor* grad) {
  DenseTensor g = stack_apply(p, w);
  DenseTensor resid = p.b_outer;
  resid.as_vector() *= -1.0;
  aggregate_pairs(p, g.data(), g.data(), resid.data());
  const double loss = resid.as_vector().squaredNorm();
  if (grad) {
    DenseTensor h = g;
    scale_by_tuple(p, resid.data(), g.data(), h.data());
    *grad = stack_unapply(p, h);
    grad->as_vector() *= 4.0;
  }
  return loss;
}

DenseTensor staged_measurements(const LiftedProblem& p, const DenseTensor& w) {
  DenseTensor g = stack_apply(p, w);
  DenseTensor y(p.l, p.m);
  aggregate_pairs(p, g.data(), g.data(), y.data());
  return y;
}

double staged_quadform(const LiftedProblem& p, const DenseTensor& w,
                       const DenseTensor& delta) {
  DenseTensor gw = stack_apply(p, w);
  DenseTensor gd = stack_apply(p, delta);
  DenseTensor resid = p.b_outer;
  resid.as_vector() *= -1.0;
  aggregate_pairs(p, gw.data(), gw.data(), resid.data());
  DenseTensor cross(p.l, p.m);
  aggregate_pairs(p, gw.data(), gd.data(), cross.data());
  DenseTensor dd(p.l, p.m);
  aggregate_pairs(p, gd.data(), gd.data(), dd.data());
  return 8.0 * cross.as_vector().squaredNorm() +
         4.0 * resid.as_vector().dot(dd.as_vector());
}

DenseTensor staged_quartic(const LiftedProblem& p, const DenseTensor& w) {
  DenseTensor g = stack_apply(p, w);
  DenseTensor y(p.l, p.m);
  aggregate_pairs(p, g.data(), g.data(), y.data());
  DenseTensor h = g;
  scale_by_tuple(p, y.data(), g.data(), h.data());
  return stack_unapply(p, h);
}

// ---- gram strategy: pair tensors against H = sum_k vec(A~_k) vec(A~_k)^T ----

DenseTensor pair_tensor(const LiftedProblem& p, const DenseTensor& ta,
                        const DenseTensor& tb) {
  DenseTensor out(p.l, p.d * p.d);
  const double* a = ta.data();
  const double* b = tb.data();
  double* o = out.data();
  const std::int64_t nd = ta.size();
  for (std::int64_t i = 0; i < nd; ++i) {
    const double ai = a[i];
    const std::int64_t base = p.pair_off_a[i];
    for (std::int64_t j = 0; j < nd; ++j) o[base + p.pair_off_b[j]] = ai * b[j];
  }
  return out;
}

DenseTensor pair_contract(const LiftedProblem& p, const DenseTensor& m,
                          const DenseTensor& w) {
  DenseTensor out(p.l, p.d);
  const double* md = m.data();
  const double* wd = w.data();
  double* o = out.data();
  const std::int64_t nd = w.size();
  for (std::int64_t i = 0; i < nd; ++i) {
    double acc = 0.0;
    const std::int64_t base = p.pair_off_a[i];
    for (std::int64_t j = 0; j < nd; ++j)
      acc += wd[j] * md[base + p.pair_off_b[j]];
    o[i] = acc;
  }
  return out;
}

DenseTensor gram_all_modes(const LiftedProblem& p, const DenseTensor& t) {
  DenseTensor out = t;
  for (int mode = 0; mode < p.l; ++mode)
    out = mode_product(out, p.gram_h, mode);
  return out;
}

DenseTensor truth_all_modes(const LiftedProblem& p, const DenseTensor& t) {
  DenseTensor out = t;
  for (int mode = 0; mode < p.l; ++mode) out = mode_product(out, p.U, mode);
  return out;
}

double gram_eval(const LiftedProblem& p, const DenseTensor& w,
                 DenseTensor* grad) {
  DenseTensor pw = pair_tensor(p, w, w);
  DenseTensor mw = gram_all_modes(p, pw);
  DenseTensor uw = truth_all_modes(p, w);
  const double ynorm2 = pw.as_vector().dot(mw.as_vector());
  const double cross = w.as_vector().dot(uw.as_vector());
  const double loss = ynorm2 - 2.0 * cross + integer_power(p.b_norm_sq, p.l);
  if (grad) {
    *grad = pair_contract(p, mw, w);
    grad->as_vector() = 4.0 * (grad->as_vector() - uw.as_vector());
  }
  return loss;
}

double gram_quadform(const LiftedProblem& p, const DenseTensor& w,
                     const DenseTensor& delta) {
  DenseTensor pdw = pair_tensor(p, delta, w);
  DenseTensor mdw = gram_all_modes(p, pdw);
  const double term1 = 8.0 * pdw.as_vector().dot(mdw.as_vector());
  DenseTensor pww = pair_tensor(p, w, w);
  DenseTensor mww = gram_all_modes(p, pww);
  DenseTensor pdd = pair_tensor(p, delta, delta);
  DenseTensor ud = truth_all_modes(p, delta);
  const double term2 = 4.0 * (pdd.as_vector().dot(mww.as_vector()) -
                              delta.as_vector().dot(ud.as_vector()));
  return term1 + term2;
}

DenseTensor gram_quartic(const LiftedProblem& p, const DenseTensor& w) {
  DenseTensor pw = pair_tensor(p, w, w);
  DenseTensor mw = gram_all_modes(p, pw);
  return pair_contract(p, mw, w);
}

}  // namespace

const char* strategy_name(LiftedStrategy s) {
  switch (s) {
    case LiftedStrategy::auto_select: return "auto";
    case LiftedStrategy::reference: return "reference";
    case LiftedStrategy::gram: return "gram";
    case LiftedStrategy::staged: return "staged";
  }
  return "auto";
}

LiftedStrategy strategy_from_name(const std::string& name) {
  if (name == "auto" || name == "auto_select") return LiftedStrategy::auto_select;
  if (name == "reference") return LiftedStrategy::reference;
  if (name == "gram") return LiftedStrategy::gram;
  if (name == "staged") return LiftedStrategy::staged;
  throw std::invalid_argument("unknown lifted strategy: " + name);
}

std::int64_t default_memory_budget() {
  if (const char* s = std::getenv("LIFTMS_GRAM_BUDGET_BYTES")) {
    char* end = nullptr;
    const long long v = std::strtoll(s, &end, 10);
    if (end != s && v > 0) return static_cast<std::int64_t>(v);
  }
  return std::int64_t(2) << 30;  // 2 GiB
}

LiftedProblem make_lifted(const SensingEnsemble& e, int l,
                          LiftedStrategy strategy,
                          std::int64_t mem_budget_bytes) {
  if (l < 1) throw std::invalid_argument("lifted order must be >= 1");
  if (e.m() == 0) throw std::invalid_argument("empty sensing ensemble");
  LiftedProblem p;
  p.n = e.n;
  p.r = e.r;
  p.l = l;
  p.m = e.m();
  p.d = e.n * e.r;
  p.A.reserve(p.m);
  for (const auto& a : e.mats) p.A.push_back(lift_matrix(a, e.r));
  p.b = e.b;
  p.b_norm_sq = e.b.squaredNorm();
  p.U = Eigen::MatrixXd::Zero(p.d, p.d);
  for (int k = 0; k < p.m; ++k) p.U += e.b(k) * p.A[k];
  p.M_star = e.M_star;
  p.Z = e.Z;
  p.has_truth = e.has_truth;
  p.constants = smoothness_constants(e);
  p.requested = strategy;
  p.mem_budget_bytes =
      mem_budget_bytes > 0 ? mem_budget_bytes : default_memory_budget();

  // factored eigen stack (cheap; also serves measurement evaluation)
  std::vector<Eigen::VectorXd> rows;
  for (int k = 0; k < p.m; ++k) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(e.mats[k]);
    const double top = es.eigenvalues().cwiseAbs().maxCoeff();
    const double tol = 1e-12 * std::max(top, 1e-300);
    for (int j = 0; j < e.n; ++j) {
      const double sig = es.eigenvalues()(j);
      if (std::abs(sig) <= tol) continue;
      const double scale = std::sqrt(std::abs(sig));
      for (int c = 0; c < p.r; ++c) {
        Eigen::VectorXd row = Eigen::VectorXd::Zero(p.d);
        row.segment(c * e.n, e.n) = scale * es.eigenvectors().col(j);
        rows.push_back(std::move(row));
        p.stack_sign.push_back(sig > 0 ? 1.0 : -1.0);
        p.stack_owner.push_back(k);
      }
    }
  }
  const int R = static_cast<int>(rows.size());
  p.stack_e.resize(R, p.d);
  for (int i = 0; i < R; ++i) p.stack_e.row(i) = rows[i].transpose();
  p.stack_seg.assign(p.m + 1, 0);
  {
    int idx = 0;
    for (int k = 0; k <= p.m; ++k) {
      while (idx < R && p.stack_owner[idx] < k) ++idx;
      p.stack_seg[k] = idx;
    }
  }

  // strategy resolution: cost in fused multiply-adds, memory in bytes
  const double dd = p.d, mm = p.m, rr = R, ll = p.l;
  const double r_l = std::pow(rr, ll), m_l = std::pow(mm, ll);
  const double staged_cost = (3.0 * dd + 8.0) * r_l + 4.0 * m_l;
  const double gram_cost =
      ll * std::pow(dd, 2.0 * ll + 2.0) + 4.0 * std::pow(dd, 2.0 * ll);
  const double staged_mem = (2.0 * r_l + 2.0 * m_l + std::pow(dd, ll)) * 8.0;
  const double gram_mem = (2.0 * std::pow(dd, 2.0 * ll) + dd * dd * dd * dd) * 8.0;
  const double budget = static_cast<double>(p.mem_budget_bytes);
  const bool staged_ok = staged_mem <= budget;
  const bool gram_ok = gram_mem <= budget;

  switch (strategy) {
    case LiftedStrategy::reference:
      p.resolved = LiftedStrategy::reference;
      break;
    case LiftedStrategy::staged:
      if (!staged_ok)
        throw std::runtime_error("staged strategy needs more than the memory budget");
      p.resolved = LiftedStrategy::staged;
      break;
    case LiftedStrategy::gram:
      if (gram_ok) {
        p.resolved = LiftedStrategy::gram;
      } else if (staged_ok) {
        std::cerr << "[liftms] gram workspace (" << gram_mem
                  << " bytes) exceeds the memory budget; using staged\n";
        p.resolved = LiftedStrategy::staged;
      } else {
        throw std::runtime_error("gram strategy needs more than the memory budget");
      }
      break;
    case LiftedStrategy::auto_select:
      if (staged_ok && (!gram_ok || staged_cost <= gram_cost))
        p.resolved = LiftedStrategy::staged;
      else if (gram_ok)
        p.resolved = LiftedStrategy::gram;
      else {
        std::cerr << "[liftms] no fast strategy fits the memory budget; "
                     "falling back to reference loops\n";
        p.resolved = LiftedStrategy::reference;
      }
      break;
  }

  if (p.resolved == LiftedStrategy::gram) {
    const int bigd = p.d * p.d;
    p.gram_h = Eigen::MatrixXd::Zero(bigd, bigd);
    Eigen::VectorXd a(bigd);
    for (int k = 0; k < p.m; ++k) {
      for (int i = 0; i < p.d; ++i)
        for (int j = 0; j < p.d; ++j) a(i * p.d + j) = p.A[k](i, j);
      p.gram_h.selfadjointView<Eigen::Lower>().rankUpdate(a);
    }
    p.gram_h.triangularView<Eigen::StrictlyUpper>() =
        p.gram_h.transpose().triangularView<Eigen::StrictlyUpper>();
    // pair-index offsets: p_t = i_t * d + j_t merged over D = d^2
    std::int64_t nd = 1;
    if (!pow_fits(p.d, p.l, std::int64_t(1) << 62, &nd))
      throw std::runtime_error("gram pair index overflows");
    p.pair_off_a.assign(nd, 0);
    p.pair_off_b.assign(nd, 0);
    std::vector<std::int64_t> stride_b(p.l);
    stride_b[p.l - 1] = 1;
    for (int t = p.l - 2; t >= 0; --t)
      stride_b[t] = stride_b[t + 1] * std::int64_t(bigd);
    for (std::int64_t lin = 0; lin < nd; ++lin) {
      std::int64_t rem = lin, oa = 0, ob = 0;
      for (int t = p.l - 1; t >= 0; --t) {
        const std::int64_t digit = rem % p.d;
        rem /= p.d;
        oa += digit * p.d * stride_b[t];
        ob += digit * stride_b[t];
      }
      p.pair_off_a[lin] = oa;
      p.pair_off_b[lin] = ob;
    }
  }
  if (p.resolved == LiftedStrategy::staged) p.b_outer = outer_power(p.b, p.l);
  return p;
}

double lifted_loss(const LiftedProblem& p, const DenseTensor& w) {
  check_shape(p, w, "lifted_loss");
  switch (p.resolved) {
    case LiftedStrategy::staged: return staged_eval(p, w, nullptr);
    case LiftedStrategy::gram: return gram_eval(p, w, nullptr);
    default: return reference_eval(p, w, nullptr);
  }
}

DenseTensor lifted_grad(const LiftedProblem& p, const DenseTensor& w) {
  return lifted_loss_grad(p, w).second;
}

std::pair<double, DenseTensor> lifted_loss_grad(const LiftedProblem& p,
                                                const DenseTensor& w) {
  check_shape(p, w, "lifted_loss_grad");
  DenseTensor grad;
  double loss = 0.0;
  switch (p.resolved) {
    case LiftedStrategy::staged: loss = staged_eval(p, w, &grad); break;
    case LiftedStrategy::gram: loss = gram_eval(p, w, &grad); break;
    default: loss = reference_eval(p, w, &grad); break;
  }
  return {loss, std::move(grad)};
}

DenseTensor lifted_measurements(const LiftedProblem& p, const DenseTensor& w) {
  check_shape(p, w, "lifted_measurements");
  if (p.resolved == LiftedStrategy::reference)
    return reference_measurements(p, w);
  // the stack exists for every strategy; fall back to loops when its
  // workspace would not fit
  std::int64_t r_l = 0, m_l = 0;
  const bool fits =
      pow_fits(p.stack_rows(), p.l, p.mem_budget_bytes / 8, &r_l) &&
      pow_fits(p.m, p.l, p.mem_budget_bytes / 8, &m_l) &&
      (r_l + m_l) <= p.mem_budget_bytes / 8;
  return fits ? staged_measurements(p, w) : reference_measurements(p, w);
}

double lifted_hessian_quadform(const LiftedProblem& p, const DenseTensor& w,
                               const DenseTensor& delta) {
  check_shape(p, w, "lifted_hessian_quadform");
  check_shape(p, delta, "lifted_hessian_quadform");
  switch (p.resolved) {
    case LiftedStrategy::staged: return staged_quadform(p, w, delta);
    case LiftedStrategy::gram: return gram_quadform(p, w, delta);
    default: return reference_quadform(p, w, delta);
  }
}

DenseTensor quartic_term_apply(const LiftedProblem& p, const DenseTensor& w) {
  check_shape(p, w, "quartic_term_apply");
  switch (p.resolved) {
    case LiftedStrategy::staged: return staged_quartic(p, w);
    case LiftedStrategy::gram: return gram_quartic(p, w);
    default: return reference_quartic(p, w);
  }
}

double lifted_quadform_rank1(const LiftedProblem& p, int l_eval,
                             const Eigen::VectorXd& x,
                             const Eigen::VectorXd& dvec) {
  if (x.size() != p.d || dvec.size() != p.d)
    throw std::invalid_argument("lifted_quadform_rank1: bad vector length");
  double sq = 0.0, sad = 0.0, sbd = 0.0;
  for (int k = 0; k < p.m; ++k) {
    const Eigen::VectorXd ax = p.A[k] * x;
    const Eigen::VectorXd av = p.A[k] * dvec;
    const double qk = dvec.dot(ax);
    sq += qk * qk;
    sad += x.dot(ax) * dvec.dot(av);
    sbd += p.b(k) * dvec.dot(av);
  }
  return 8.0 * integer_power(sq, l_eval) +
         4.0 * (integer_power(sad, l_eval) - integer_power(sbd, l_eval));
}

Eigen::VectorXd stack_factor(const Eigen::MatrixXd& x) {
  return Eigen::Map<const Eigen::VectorXd>(x.data(), x.size());
}

Eigen::MatrixXd unstack_factor(const Eigen::VectorXd& x, int n, int r) {
  if (x.size() != std::int64_t(n) * r)
    throw std::invalid_argument("unstack_factor: bad vector length");
  return Eigen::Map<const Eigen::MatrixXd>(x.data(), n, r);
}

LiftedInit init_lifted(const LiftedProblem& p, double epsilon, double rho_init,
                       StreamRng& rng) {
  LiftedInit out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p.U);
  const Eigen::VectorXd evs = es.eigenvalues();
  std::vector<double> mags(p.d);
  for (int i = 0; i < p.d; ++i) mags[i] = std::abs(evs(i));
  const int top = std::abs(evs(0)) > std::abs(evs(p.d - 1)) ? 0 : p.d - 1;
  std::sort(mags.begin(), mags.end(), std::greater<double>());
  out.sigma1 = mags[0];
  out.sigma2 = p.d > 1 ? mags[1] : 0.0;
  Eigen::VectorXd v1 = es.eigenvectors().col(top);
  const double mx = v1.cwiseAbs().maxCoeff();
  for (int i = 0; i < p.d; ++i) {
    if (std::abs(v1(i)) > 1e-12 * mx) {
      if (v1(i) < 0) v1 = -v1;
      break;
    }
  }
  out.v1 = v1;
  const double rho = rho_init > 0 ? rho_init : 1.0 / (double(p.n) * p.r);
  out.x0 = v1 + rho * rng.normal_vec(p.d);
  out.v1_dot_x0 = v1.dot(out.x0);
  out.w0 = outer_power(out.x0, p.l);
  out.w0.as_vector() *= epsilon;
  return out;
}

RecoveredFactor recover_factor(const LiftedProblem& p, const DenseTensor& w,
                               const PcaConfig& cfg) {
  check_shape(p, w, "recover_factor");
  RecoveredFactor out;
  out.cert = dominant_component(w, cfg);
  const double mag = std::pow(std::abs(out.cert.scale), 1.0 / p.l);
  const double coef =
      (p.l % 2 == 1 && out.cert.scale < 0.0) ? -mag : mag;
  out.X = unstack_factor(coef * out.cert.direction, p.n, p.r);
  return out;
}

}  // namespace liftms
