#include "latlab/green.hpp"

#include <fftw3.h>

#include <Eigen/IterativeLinearSolvers>
#include <cmath>
#include <map>
#include <mutex>

#include "latlab/rng.hpp"

namespace latlab {

namespace {

Eigen::SparseMatrix<double> neg_laplacian(const LatticeDomain& d, int drop) {
  // -Delta = degree matrix minus adjacency, multiplicity-weighted; the
  // vertex `drop` (or none if < 0) is removed to ground the kernel.
  int n = d.n - (drop >= 0 ? 1 : 0);
  auto idx = [&](int j) { return j > drop && drop >= 0 ? j - 1 : j; };
  std::vector<Eigen::Triplet<double>> tr;
  for (const Edge& e : d.edges) {
    bool keep_u = e.u != drop, keep_v = e.v != drop;
    if (keep_u) tr.emplace_back(idx(e.u), idx(e.u), e.mult);
    if (keep_v) tr.emplace_back(idx(e.v), idx(e.v), e.mult);
    if (keep_u && keep_v) {
      tr.emplace_back(idx(e.u), idx(e.v), -double(e.mult));
      tr.emplace_back(idx(e.v), idx(e.u), -double(e.mult));
    }
  }
  Eigen::SparseMatrix<double> m(n, n);
  m.setFromTriplets(tr.begin(), tr.end());
  return m;
}

}  // namespace

GreenOperator::GreenOperator(const LatticeDomain& dom, int dense_cutoff,
                             double cg_tol)
    : dom_(&dom), use_llt_(dom.n <= dense_cutoff), cg_tol_(cg_tol) {
  lap_red_ = neg_laplacian(dom, dom.n - 1);
  if (use_llt_) {
    llt_ = std::make_unique<
        Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>>();
    llt_->compute(lap_red_);
    if (llt_->info() != Eigen::Success)
      fail("FactorizationFailure", "Cholesky of the grounded -Delta failed");
  }
  // Probe the defining property: -Delta applied after the solve must
  // reproduce mean-zero inputs.
  Rng rng(0xC0FFEE);
  for (int probe = 0; probe < 3; ++probe) {
    std::vector<double> f(dom.n);
    double mean = 0;
    for (double& v : f) mean += (v = rng.uniform(-1.0, 1.0));
    mean /= dom.n;
    for (double& v : f) v -= mean;
    auto x = apply(f);
    auto lx = laplacian_apply(dom, x);
    double err = 0;
    for (int j = 0; j < dom.n; ++j) err = std::max(err, std::abs(-lx[j] - f[j]));
    if (err > 1e-8)
      fail("SingularBeyondKernel", "pseudoinverse residual ", err,
           " exceeds 1e-8 on probe");
  }
}

Eigen::VectorXd GreenOperator::solve_centered(const Eigen::VectorXd& f0) const {
  int n = dom_->n;
  Eigen::VectorXd rhs = f0.head(n - 1);
  Eigen::VectorXd xr;
  if (use_llt_) {
    xr = llt_->solve(rhs);
  } else {
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>,
                             Eigen::Lower | Eigen::Upper>
        cg;
    cg.setTolerance(cg_tol_);
    cg.setMaxIterations(8 * n);
    cg.compute(lap_red_);
    xr = cg.solve(rhs);
    if (cg.info() != Eigen::Success)
      fail("SingularBeyondKernel", "conjugate gradients did not converge");
  }
  Eigen::VectorXd x(n);
  x.head(n - 1) = xr;
  x[n - 1] = 0.0;
  x.array() -= x.mean();
  return x;
}

std::vector<double> GreenOperator::apply(const std::vector<double>& f) const {
  if (static_cast<int>(f.size()) != dom_->n)
    fail("DimensionMismatch", "f has ", f.size(), " entries, domain has ",
         dom_->n);
  Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(f.data(), f.size());
  v.array() -= v.mean();
  Eigen::VectorXd x = solve_centered(v);
  return std::vector<double>(x.data(), x.data() + x.size());
}

double GreenOperator::entry(int i, int j) const {
  if (i < 0 || i >= dom_->n || j < 0 || j >= dom_->n)
    fail("UnknownVertex", "kernel index out of range");
  std::vector<double> e(dom_->n, 0.0);
  e[j] = 1.0;
  return apply(e)[i];
}

double GreenOperator::quad(const std::vector<double>& f) const {
  auto x = apply(f);
  double s = 0;
  for (int j = 0; j < dom_->n; ++j) s += f[j] * x[j];
  return s;
}

Eigen::MatrixXd dense_green(const GreenOperator& G) {
  int n = G.domain().n;
  Eigen::MatrixXd g(n, n);
  std::vector<double> e(n, 0.0);
  for (int j = 0; j < n; ++j) {
    e[j] = 1.0;
    auto col = G.apply(e);
    e[j] = 0.0;
    for (int i = 0; i < n; ++i) g(i, j) = col[i];
  }
  return g;
}

double quadratic_form(const GreenOperator& G, const std::vector<double>& f) {
  double sum = 0, amax = 0;
  for (double v : f) {
    sum += v;
    amax = std::max(amax, std::abs(v));
  }
  if (std::abs(sum) > 1e-12 * std::max(1.0, amax * f.size()))
    fail("NotMeanZero", "test function sums to ", sum);
  return G.quad(f);
}

const std::vector<double>& periodic_green_table(int L2) {
  if (L2 < 2 || L2 % 2 != 0)
    fail("OddPeriodicSide", "torus side ", L2, " must be even and > 1");
  static std::mutex mu;
  static std::map<int, std::vector<double>> cache;
  std::lock_guard<std::mutex> lk(mu);
  auto it = cache.find(L2);
  if (it != cache.end()) return it->second;

  // Eigenvalues of -Delta on the torus are lam(p,q) = 4 - 2cos(2pi p/L2)
  // - 2cos(2pi q/L2); the kernel is the inverse transform of 1/lam with
  // the zero mode dropped, which also makes the table mean-zero.
  int n = L2 * L2;
  fftw_complex* buf = fftw_alloc_complex(n);
  for (int p = 0; p < L2; ++p)
    for (int q = 0; q < L2; ++q) {
      double lam = 4.0 - 2.0 * std::cos(2.0 * kPi * p / L2) -
                   2.0 * std::cos(2.0 * kPi * q / L2);
      int i = p * L2 + q;
      buf[i][0] = (p == 0 && q == 0) ? 0.0 : 1.0 / lam;
      buf[i][1] = 0.0;
    }
  fftw_plan plan =
      fftw_plan_dft_2d(L2, L2, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
  std::vector<double> table(n);
  for (int i = 0; i < n; ++i) table[i] = buf[i][0] / n;
  fftw_free(buf);
  return cache.emplace(L2, std::move(table)).first->second;
}

double periodic_green(int L2, int t, int s) {
  const auto& tab = periodic_green_table(L2);
  int tt = ((t % L2) + L2) % L2, ss = ((s % L2) + L2) % L2;
  return tab[tt * L2 + ss];
}

std::vector<double> reflect_T_fp(const std::vector<double>& f, int L) {
  if (static_cast<int>(f.size()) != L * L)
    fail("DimensionMismatch", "f has ", f.size(), " entries, expected ", L * L);
  int L2 = 2 * L;
  std::vector<double> out(L2 * L2);
  for (int a = 0; a < L2; ++a)
    for (int b = 0; b < L2; ++b) {
      int ra = std::min(a, L2 - 1 - a), rb = std::min(b, L2 - 1 - b);
      out[a * L2 + b] = f[ra * L + rb];
    }
  return out;
}

DifferenceOps difference_ops(int L2) {
  if (L2 < 2 || L2 % 2 != 0)
    fail("OddPeriodicSide", "torus side ", L2, " must be even and > 1");
  DifferenceOps ops;
  ops.L2 = L2;
  int n = L2 * L2;
  std::vector<Eigen::Triplet<double>> t1, t2;
  for (int a = 0; a < L2; ++a)
    for (int b = 0; b < L2; ++b) {
      int j = a * L2 + b;
      t1.emplace_back(j, j, 1.0);
      t1.emplace_back(j, ((a + L2 - 1) % L2) * L2 + b, -1.0);
      t2.emplace_back(j, j, 1.0);
      t2.emplace_back(j, a * L2 + (b + L2 - 1) % L2, -1.0);
    }
  ops.d1.resize(n, n);
  ops.d2.resize(n, n);
  ops.d1.setFromTriplets(t1.begin(), t1.end());
  ops.d2.setFromTriplets(t2.begin(), t2.end());
  return ops;
}

DualityPair make_duality_pair(int L, int y0, int y1) {
  if (y0 < 0 || y0 >= L || y1 < 0) fail("UnknownVertex", "y out of range");
  if (y1 >= L - 1)
    fail("BadRow", "stripe column y1=", y1, " needs y1 < L-1=", L - 1);
  DualityPair p;
  p.L = L;
  p.y = {y0, y1};
  p.f_y.assign(L * L, 0.0);
  for (int a = y0; a < L; ++a) {
    p.f_y[a * L + y1] = 1.0;
    p.f_y[a * L + y1 + 1] = -1.0;
  }
  int L2 = 2 * L;
  p.F_y.assign(L2 * L2, 0.0);
  // F picks up +1 on column y1 and -1 on its mirror 2L-2-y1, within the
  // reflected row range, so that the backward b-difference reproduces the
  // reflected stripe pair.
  for (int a = y0; a <= L2 - 1 - y0; ++a) {
    p.F_y[a * L2 + y1] = 1.0;
    p.F_y[a * L2 + (L2 - 2 - y1)] = -1.0;
  }
  return p;
}

namespace {

// Sparse inner product <u, G v> through the translation-invariant kernel.
double green_pair_form(int L2, const std::vector<std::pair<int, double>>& u,
                       const std::vector<std::pair<int, double>>& v) {
  const auto& tab = periodic_green_table(L2);
  double s = 0;
  for (auto [ju, cu] : u)
    for (auto [jv, cv] : v) {
      int at = ju / L2 - jv / L2, bt = ju % L2 - jv % L2;
      at = ((at % L2) + L2) % L2;
      bt = ((bt % L2) + L2) % L2;
      s += cu * cv * tab[at * L2 + bt];
    }
  return s;
}

std::vector<std::pair<int, double>> sparse_d1(const std::vector<double>& F,
                                              int L2) {
  std::vector<std::pair<int, double>> out;
  for (int a = 0; a < L2; ++a)
    for (int b = 0; b < L2; ++b) {
      double v = F[a * L2 + b] - F[((a + L2 - 1) % L2) * L2 + b];
      if (v != 0.0) out.push_back({a * L2 + b, v});
    }
  return out;
}

}  // namespace

StripeBound claim_green_lower(const GreenOperator& G_free, int y0, int y1,
                              double log_coeff) {
  const LatticeDomain& dom = G_free.domain();
  if (dom.kind != Kind::Free)
    fail("PreconditionViolated", "stripe bound needs a free-boundary domain");
  int L = dom.L, L2 = 2 * L;
  DualityPair p = make_duality_pair(L, y0, y1);

  StripeBound r;
  r.lhs = quadratic_form(G_free, p.f_y);

  // Restriction of F to the embedded L-square, extended by zero.
  std::vector<double> Fr(L2 * L2, 0.0);
  for (int a = 0; a < L; ++a)
    for (int b = 0; b < L; ++b) Fr[a * L2 + b] = p.F_y[a * L2 + b];
  auto dF = sparse_d1(p.F_y, L2);
  auto dFr = sparse_d1(Fr, L2);
  r.cross = green_pair_form(L2, dFr, dF);
  r.d1F_form = green_pair_form(L2, dF, dF);
  r.bound = (L - y0) - log_coeff * std::log(static_cast<double>(L - y0 + 1));
  return r;
}

StripeBound claim_green_lower(int L, int y0, int y1, double log_coeff) {
  auto dom = build_domain(Kind::Free, L);
  GreenOperator G(dom);
  return claim_green_lower(G, y0, y1, log_coeff);
}

}  // namespace latlab
