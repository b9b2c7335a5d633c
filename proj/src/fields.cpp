#include "latlab/fields.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>

namespace latlab {
namespace {

constexpr int kAngleGrid = 4096;  // rotator heat-bath resolution, power of two
constexpr double kShellTrust = 1e-10;
constexpr double kShiftResidual = 1e-10;

void check_vertex(const LatticeDomain& d, int v, const char* what) {
  if (v < 0 || v >= d.n) fail("UnknownVertex", what, " ", v, " is not a vertex");
}

void check_size(const LatticeDomain& d, const std::vector<double>& f,
                const char* what) {
  if (static_cast<int>(f.size()) != d.n)
    fail("DimensionMismatch", what, " has ", f.size(), " entries, domain has ",
         d.n);
}

void check_mean_zero(const std::vector<double>& f) {
  double s = 0, scale = 0;
  for (double x : f) {
    s += x;
    scale += std::abs(x);
  }
  if (std::abs(s) > 1e-9 * std::max(1.0, scale))
    fail("NotMeanZero", "test function sums to ", s);
}

// Product of per-vertex weights at phi + sigma.
double weight_product(const ModelParams& p, const std::vector<double>& phi,
                      const std::vector<double>* sigma) {
  double prod = 1;
  for (size_t j = 0; j < phi.size(); ++j)
    prod *= p.weights[j](phi[j] + (sigma ? (*sigma)[j] : 0.0));
  return prod;
}

void check_weights_present(const LatticeDomain& d, const ModelParams& p) {
  if (p.weights.empty())
    fail("ConfigInvalid", "per-vertex weights are required here");
  if (static_cast<int>(p.weights.size()) != d.n)
    fail("DimensionMismatch", "got ", p.weights.size(),
         " weights for a domain of ", d.n, " vertices");
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Ratio of means with a batch-means error over per-batch ratios; the
// estimate itself uses every sample.
McEstimate ratio_estimate(const std::vector<double>& num,
                          const std::vector<double>& den) {
  constexpr int kBatches = 32;
  long long n = static_cast<long long>(num.size());
  if (n < kBatches)
    fail("PreconditionViolated", "batch means need at least 32 values, got ",
         n);
  double ns = 0, ds = 0;
  for (long long i = 0; i < n; ++i) {
    ns += num[i];
    ds += den[i];
  }
  long long bs = n / kBatches;
  double mean = ns / ds, var = 0;
  for (int b = 0; b < kBatches; ++b) {
    double bn = 0, bd = 0;
    for (long long i = b * bs; i < (b + 1) * bs; ++i) {
      bn += num[i];
      bd += den[i];
    }
    double r = bn / bd;
    var += (r - mean) * (r - mean);
  }
  var /= kBatches * (kBatches - 1.0);
  return {mean, std::sqrt(var), n};
}

}  // namespace

void validate_field(const LatticeDomain& d, const FieldConfig& c) {
  check_vertex(d, c.v, "normalization vertex");
  auto need = [&](size_t got, const char* kind) {
    if (static_cast<int>(got) != d.n)
      fail("DimensionMismatch", kind, " configuration has ", got,
           " heights, domain has ", d.n);
  };
  switch (c.kind) {
    case FieldKind::Gff:
      need(c.real.size(), "free-field");
      if (c.real[c.v] < -kPi || c.real[c.v] >= kPi)
        fail("ConfigInvalid", "height at the normalization vertex is ",
             c.real[c.v], ", outside [-pi, pi)");
      break;
    case FieldKind::Iv:
      need(c.ints.size(), "integer-height");
      if (c.ints[c.v] != 0)
        fail("ConfigInvalid", "integer height at the normalization vertex is ",
             c.ints[c.v], ", not 0");
      break;
    case FieldKind::Villain:
      need(c.real.size(), "rotator");
      if (d.z < 0 || c.v != d.z)
        fail("ConfigInvalid",
             "rotator configurations normalize at the wired vertex");
      if (c.real[c.v] != 0.0)
        fail("ConfigInvalid", "rotator height at the wired vertex is ",
             c.real[c.v], ", not 0");
      for (int j = 0; j < d.n; ++j)
        if (c.real[j] < -kPi || c.real[j] >= kPi)
          fail("ConfigInvalid", "rotator height at vertex ", j,
               " is outside [-pi, pi)");
      break;
  }
}

void validate_params(const LatticeDomain& d, const ModelParams& p) {
  if (!(p.beta > 0)) fail("ConfigInvalid", "beta must be positive");
  check_vertex(d, p.v, "normalization vertex");
  if (p.k_cutoff < 1)
    fail("ConfigInvalid", "enumeration cutoff must be at least 1");
  if (p.m_cut < 1)
    fail("ConfigInvalid", "wrapped-Gaussian cut must be at least 1");
  if (!p.weights.empty() && static_cast<int>(p.weights.size()) != d.n)
    fail("DimensionMismatch", "got ", p.weights.size(),
         " weights for a domain of ", d.n, " vertices");
}

McEstimate batch_mean_estimate(const std::vector<double>& values) {
  constexpr int kBatches = 32;
  long long n = static_cast<long long>(values.size());
  if (n < kBatches)
    fail("PreconditionViolated", "batch means need at least 32 values, got ",
         n);
  double mean = 0;
  for (double x : values) mean += x;
  mean /= static_cast<double>(n);
  long long bs = n / kBatches;
  double var = 0;
  for (int b = 0; b < kBatches; ++b) {
    double m = 0;
    for (long long i = b * bs; i < (b + 1) * bs; ++i) m += values[i];
    m /= static_cast<double>(bs);
    var += (m - mean) * (m - mean);
  }
  var /= kBatches * (kBatches - 1.0);
  return {mean, std::sqrt(var), n};
}

ShiftField make_shift(const GreenOperator& G, double beta, int v,
                      const std::vector<double>& f) {
  const LatticeDomain& d = G.domain();
  if (!(beta > 0)) fail("ConfigInvalid", "beta must be positive");
  check_vertex(d, v, "normalization vertex");
  check_size(d, f, "test function");
  check_mean_zero(f);
  std::vector<double> s = G.apply(f);
  ShiftField out;
  out.v = v;
  out.sigma.resize(d.n);
  double pin = s[v];
  for (int j = 0; j < d.n; ++j) out.sigma[j] = (s[j] - pin) / beta;
  std::vector<double> lap = laplacian_apply(d, out.sigma);
  double res = 0;
  for (int j = 0; j < d.n; ++j)
    res = std::max(res, std::abs(-lap[j] - f[j] / beta));
  out.residual = res;
  if (res > kShiftResidual)
    fail("SingularBeyondKernel", "tilt residual ", res, " exceeds ",
         kShiftResidual);
  return out;
}

ShiftField make_shift(const LatticeDomain& d, const ModelParams& p,
                      const std::vector<double>& f) {
  validate_params(d, p);
  GreenOperator G(d);
  return make_shift(G, p.beta, p.v, f);
}

GffSampler::GffSampler(const LatticeDomain& d, const ModelParams& p,
                       uint64_t stream)
    : dom_(&d), beta_(p.beta), v_(p.v), rng_(p.seed, stream) {
  validate_params(d, p);
  spot_.assign(d.n, -1);
  int rows = 0;
  for (int j = 0; j < d.n; ++j)
    if (j != v_) spot_[j] = rows++;
  std::vector<Eigen::Triplet<double>> trip;
  for (const Edge& e : d.edges) {
    if (e.u != v_ && e.v != v_) {
      trip.emplace_back(spot_[e.u], spot_[e.v], -double(e.mult));
      trip.emplace_back(spot_[e.v], spot_[e.u], -double(e.mult));
    }
  }
  for (int j = 0; j < d.n; ++j)
    if (j != v_) trip.emplace_back(spot_[j], spot_[j], double(d.degree[j]));
  Eigen::SparseMatrix<double> lap(rows, rows);
  lap.setFromTriplets(trip.begin(), trip.end());
  llt_.compute(lap);
  if (llt_.info() != Eigen::Success)
    fail("FactorizationFailure",
         "Cholesky of the pinned interaction matrix failed");
  xi_.resize(rows);
}

void GffSampler::draw(std::vector<double>& phi) {
  // Precision beta * L factors through L = P' U' U P: the pinned part is
  // P' U^{-1} xi / sqrt(beta), independent of the uniform height at v.
  for (int i = 0; i < xi_.size(); ++i) xi_[i] = rng_.normal();
  Eigen::VectorXd psi = llt_.permutationPinv() * llt_.matrixU().solve(xi_);
  psi /= std::sqrt(beta_);
  double base = rng_.uniform(-kPi, kPi);
  phi.resize(dom_->n);
  for (int j = 0; j < dom_->n; ++j)
    phi[j] = base + (j == v_ ? 0.0 : psi[spot_[j]]);
}

FieldConfig GffSampler::draw() {
  FieldConfig c;
  c.kind = FieldKind::Gff;
  c.v = v_;
  draw(c.real);
  return c;
}

std::vector<FieldConfig> sample_gff(const LatticeDomain& d,
                                    const ModelParams& p, int n_samples) {
  if (n_samples < 0) fail("PreconditionViolated", "negative sample count");
  GffSampler s(d, p);
  std::vector<FieldConfig> out;
  out.reserve(n_samples);
  for (int i = 0; i < n_samples; ++i) out.push_back(s.draw());
  return out;
}

namespace {

// Direct sum over the height cube, depth-first in breadth-first vertex
// order so every new height interacts only with already-set neighbors.
struct IvDirectSum {
  const LatticeDomain& d;
  double beta;
  int K;
  const std::vector<double>& f;
  std::vector<int> order, pos;
  std::vector<std::vector<std::pair<int, int>>> back;  // (earlier slot, mult)
  std::vector<int> val;
  double z = 0, s_exp = 0, s_sq = 0, z_shell = 0;

  IvDirectSum(const LatticeDomain& dd, double b, int kk,
              const std::vector<double>& ff, int v)
      : d(dd), beta(b), K(kk), f(ff) {
    std::vector<int> dist = distances_from(d, {v});
    for (int j = 0; j < d.n; ++j) order.push_back(j);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b2) { return dist[a] < dist[b2]; });
    pos.assign(d.n, -1);
    for (int i = 0; i < d.n; ++i) pos[order[i]] = i;
    back.resize(d.n);
    for (int i = 0; i < d.n; ++i)
      for (auto [nb, mult] : d.adj[order[i]])
        if (pos[nb] < i) back[i].emplace_back(pos[nb], mult);
    val.assign(d.n, 0);
  }

  void run(int slot, double energy, double mf, bool shell) {
    if (slot == d.n) {
      double w = std::exp(-0.5 * beta * energy);
      z += w;
      s_exp += w * std::exp(mf);
      s_sq += w * mf * mf;
      if (shell) z_shell += w;
      return;
    }
    for (int m = -K; m <= K; ++m) {
      val[slot] = m;
      double de = 0;
      for (auto [bk, mult] : back[slot]) {
        double diff = m - val[bk];
        de += mult * diff * diff;
      }
      run(slot + 1, energy + de, mf + m * f[order[slot]],
          shell || std::abs(m) == K);
    }
  }
};

// Column-by-column transfer recursion for free-boundary squares. Per
// boundary state the pass carries the weight sum, the first two moments of
// the running <m,f>, and the e^{<m,f>} sum, each split by whether the
// prefix touched the height cut. The inter-column coupling factorizes over
// rows, so it is applied as L banded one-row contractions instead of one
// dense state-by-state pass; that is what pushes the reachable state count
// well past the direct route.
IvEnumeration iv_transfer(const LatticeDomain& d, const ModelParams& p,
                          const std::vector<double>& f) {
  int L = d.L, K = p.k_cutoff, width = 2 * K + 1;
  long long n_states = 1;
  for (int a = 0; a < L; ++a) n_states *= width;
  std::vector<int> vals(n_states * L);  // state digits, flat for locality
  for (long long s = 0; s < n_states; ++s) {
    long long t = s;
    for (int a = 0; a < L; ++a) {
      vals[s * L + a] = int(t % width) - K;
      t /= width;
    }
  }
  std::vector<double> w1(2 * width);
  for (int delta = -2 * K; delta <= 2 * K; ++delta)
    w1[delta + 2 * K] = std::exp(-0.5 * p.beta * delta * delta);

  // Accumulators indexed [shell][state]: z, first moment a, second moment b
  // of the running pairing, and the exponential sum c.
  auto zero = [&] {
    return std::array<std::vector<double>, 2>{
        std::vector<double>(n_states, 0.0), std::vector<double>(n_states, 0.0)};
  };
  auto z = zero(), a = zero(), b = zero(), c = zero();

  std::vector<double> wcol(n_states), xcol(n_states);
  std::vector<char> scol(n_states), ok(n_states);
  auto column = [&](int col) {
    int va = (p.v % L == col) ? p.v / L : -1;  // pinned row in this column
    for (long long s = 0; s < n_states; ++s) {
      const int* mv = &vals[s * L];
      ok[s] = (va < 0 || mv[va] == 0);
      double e = 0, x = 0;
      bool sh = false;
      for (int row = 0; row < L; ++row) {
        if (row + 1 < L) {
          double diff = mv[row] - mv[row + 1];
          e += diff * diff;
        }
        x += mv[row] * f[d.index(row, col)];
        sh = sh || std::abs(mv[row]) == K;
      }
      wcol[s] = std::exp(-0.5 * p.beta * e);
      xcol[s] = x;
      scol[s] = sh;
    }
  };

  column(0);
  for (long long s = 0; s < n_states; ++s) {
    if (!ok[s]) continue;
    int sh = scol[s];
    z[sh][s] = wcol[s];
    a[sh][s] = wcol[s] * xcol[s];
    b[sh][s] = wcol[s] * xcol[s] * xcol[s];
    c[sh][s] = wcol[s] * std::exp(xcol[s]);
  }

  // (T V)[t] = sum_s prod_row w1[s_row - t_row] V[s], applied one row
  // digit at a time; digit `row` has stride width^row in the state index.
  std::vector<double> slice_in(width), slice_out(width);
  auto couple = [&](std::vector<double>& v) {
    long long stride = 1;
    for (int row = 0; row < L; ++row) {
      for (long long high = 0; high < n_states; high += stride * width)
        for (long long low = 0; low < stride; ++low) {
          for (int q = 0; q < width; ++q)
            slice_in[q] = v[high + q * stride + low];
          for (int q = 0; q < width; ++q) {
            double acc = 0;
            for (int r = 0; r < width; ++r)
              acc += w1[r - q + 2 * K] * slice_in[r];
            slice_out[q] = acc;
          }
          for (int q = 0; q < width; ++q)
            v[high + q * stride + low] = slice_out[q];
        }
      stride *= width;
    }
  };

  for (int col = 1; col < L; ++col) {
    column(col);
    for (int sh = 0; sh < 2; ++sh) {
      couple(z[sh]);
      couple(a[sh]);
      couple(b[sh]);
      couple(c[sh]);
    }
    auto zn = zero(), an = zero(), bn = zero(), cn = zero();
    for (long long t = 0; t < n_states; ++t) {
      if (!ok[t]) continue;
      double w = wcol[t], x = xcol[t], ex = std::exp(x);
      for (int sh = 0; sh < 2; ++sh) {
        int nh = sh | scol[t];
        zn[nh][t] += w * z[sh][t];
        an[nh][t] += w * (a[sh][t] + x * z[sh][t]);
        bn[nh][t] += w * (b[sh][t] + 2 * x * a[sh][t] + x * x * z[sh][t]);
        cn[nh][t] += w * ex * c[sh][t];
      }
    }
    z = std::move(zn);
    a = std::move(an);
    b = std::move(bn);
    c = std::move(cn);
  }

  double zt = 0, zs = 0, sq = 0, ce = 0;
  for (int sh = 0; sh < 2; ++sh)
    for (long long s = 0; s < n_states; ++s) {
      zt += z[sh][s];
      sq += b[sh][s];
      ce += c[sh][s];
      if (sh) zs += z[sh][s];
    }
  IvEnumeration out;
  out.z = zt;
  out.moment_exp = ce / zt;
  out.moment_sq = sq / zt;
  out.shell_mass = zs / zt;
  out.trustworthy = out.shell_mass < kShellTrust;
  return out;
}

}  // namespace

IvEnumeration enumerate_iv(const LatticeDomain& d, const ModelParams& p,
                           const std::vector<double>& f) {
  validate_params(d, p);
  check_size(d, f, "test function");
  int K = p.k_cutoff;
  double direct_bits = (d.n - 1) * std::log2(2.0 * K + 1);
  if (direct_bits <= 28) {
    IvDirectSum sum(d, p.beta, K, f, p.v);
    sum.val[sum.pos[p.v]] = 0;
    // The pinned vertex sits first in the order; start past it.
    sum.run(1, 0.0, 0.0, false);
    IvEnumeration out;
    out.z = sum.z;
    out.moment_exp = sum.s_exp / sum.z;
    out.moment_sq = sum.s_sq / sum.z;
    out.shell_mass = sum.z_shell / sum.z;
    out.trustworthy = out.shell_mass < kShellTrust;
    return out;
  }
  double col_states = std::pow(2.0 * K + 1, d.kind == Kind::Free ? d.L : 99);
  if (d.kind == Kind::Free && col_states <= 20000) return iv_transfer(d, p, f);
  fail("StateSpaceTooLarge", "direct sum needs ", direct_bits,
       " bits of states and the column recursion needs ", col_states,
       " states per column");
}

IvSampler::IvSampler(const LatticeDomain& d, const ModelParams& p,
                     uint64_t stream)
    : dom_(&d), beta_(p.beta), v_(p.v), rng_(p.seed, stream) {
  validate_params(d, p);
  m_.assign(d.n, 0);
}

void IvSampler::sweep() {
  const LatticeDomain& d = *dom_;
  for (int j = 0; j < d.n; ++j) {
    if (j == v_) continue;
    double wdeg = d.degree[j], acc = 0;
    for (auto [nb, mult] : d.adj[j]) acc += double(mult) * double(m_[nb]);
    double mu = acc / wdeg;
    double sd = 1.0 / std::sqrt(beta_ * wdeg);
    long long lo = llround(std::ceil(mu - 12.0 * sd));
    long long hi = llround(std::floor(mu + 12.0 * sd));
    if (lo > hi) lo = hi = llround(mu);
    double total = 0;
    double u = rng_.uniform();
    // Two passes, weight sum then inverse CDF, keep the draw allocation-free.
    for (long long t = lo; t <= hi; ++t)
      total += std::exp(-0.5 * beta_ * wdeg * (t - mu) * (t - mu));
    double target = u * total, run = 0;
    long long pick = hi;
    for (long long t = lo; t <= hi; ++t) {
      run += std::exp(-0.5 * beta_ * wdeg * (t - mu) * (t - mu));
      if (run >= target) {
        pick = t;
        break;
      }
    }
    m_[j] = pick;
  }
}

FieldConfig IvSampler::config() const {
  FieldConfig c;
  c.kind = FieldKind::Iv;
  c.v = v_;
  c.ints = m_;
  return c;
}

std::vector<FieldConfig> iv_mcmc(const LatticeDomain& d, const ModelParams& p,
                                 int steps) {
  if (steps < 0) fail("PreconditionViolated", "negative sweep count");
  IvSampler s(d, p);
  std::vector<FieldConfig> out;
  out.reserve(steps);
  for (int i = 0; i < steps; ++i) {
    s.sweep();
    out.push_back(s.config());
  }
  return out;
}

McEstimate weighted_partition(const LatticeDomain& d, const ModelParams& p,
                              const std::vector<double>& sigma,
                              int n_samples) {
  validate_params(d, p);
  check_weights_present(d, p);
  const std::vector<double>* sp = nullptr;
  if (!sigma.empty()) {
    check_size(d, sigma, "shift");
    sp = &sigma;
  }
  GffSampler g(d, p);
  std::vector<double> phi, vals(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    g.draw(phi);
    vals[i] = weight_product(p, phi, sp);
  }
  return batch_mean_estimate(vals);
}

McEstimate weighted_ratio(const LatticeDomain& d, const ModelParams& p,
                          const std::vector<double>& sigma, int n_samples) {
  validate_params(d, p);
  check_weights_present(d, p);
  const std::vector<double>* sp = nullptr;
  if (!sigma.empty()) {
    check_size(d, sigma, "shift");
    sp = &sigma;
  }
  GffSampler g(d, p);
  std::vector<double> phi, num(n_samples), den(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    g.draw(phi);
    num[i] = weight_product(p, phi, sp);
    den[i] = weight_product(p, phi, nullptr);
  }
  return ratio_estimate(num, den);
}

TiltReport weighted_exp_moment(const LatticeDomain& d, const ModelParams& p,
                               const std::vector<double>& f, int n_samples) {
  validate_params(d, p);
  check_weights_present(d, p);
  check_size(d, f, "test function");
  GreenOperator G(d);
  TiltReport r;
  r.quad = quadratic_form(G, f);
  r.shift = make_shift(G, p.beta, p.v, f);
  r.ratio = weighted_ratio(d, p, r.shift.sigma, n_samples);
  double pre = std::exp(r.quad / (2.0 * p.beta));
  r.estimate = {pre * r.ratio.estimate, pre * r.ratio.se, r.ratio.n};
  return r;
}

McEstimate weighted_exp_moment_direct(const LatticeDomain& d,
                                      const ModelParams& p,
                                      const std::vector<double>& f,
                                      int n_samples) {
  validate_params(d, p);
  check_weights_present(d, p);
  check_size(d, f, "test function");
  check_mean_zero(f);
  GffSampler g(d, p);
  std::vector<double> phi, num(n_samples), den(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    g.draw(phi);
    double w = weight_product(p, phi, nullptr);
    num[i] = w * std::exp(dot(phi, f));
    den[i] = w;
  }
  return ratio_estimate(num, den);
}

McEstimate cosine_tilt_moment(const LatticeDomain& d, const ModelParams& p,
                              double eta, const std::vector<double>& f,
                              int n_samples) {
  validate_params(d, p);
  check_size(d, f, "test function");
  check_mean_zero(f);
  if (eta < 0) fail("PreconditionViolated", "tilt strength must be >= 0");
  GffSampler g(d, p);
  std::vector<double> phi, num(n_samples), den(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    g.draw(phi);
    double cossum = 0;
    for (double x : phi) cossum += std::cos(x);
    double w = std::exp(eta * cossum);
    num[i] = w * std::exp(dot(phi, f));
    den[i] = w;
  }
  return ratio_estimate(num, den);
}

double cosine_tilt_pair_moment(const LatticeDomain& d, double beta, int v,
                               double eta, const std::vector<double>& f,
                               int grid_points) {
  if (d.n != 2 || d.edges.size() != 1)
    fail("PreconditionViolated",
         "the quadrature oracle handles two-vertex graphs only");
  if (!(beta > 0)) fail("ConfigInvalid", "beta must be positive");
  if (eta < 0) fail("PreconditionViolated", "tilt strength must be >= 0");
  check_vertex(d, v, "normalization vertex");
  check_size(d, f, "test function");
  check_mean_zero(f);
  if (grid_points < 8) fail("PreconditionViolated", "grid too coarse");
  int w = 1 - v;  // the free vertex
  double mult = d.edges[0].mult;
  // Height at v over one period, gradient t = phi_w - phi_v over a range
  // holding all but e^{-32} of the Gaussian mass; both rules equispaced.
  double span = 8.0 / std::sqrt(beta * mult) + kPi;
  int tn = grid_points * 8;
  double hv = 2.0 * kPi / grid_points, ht = 2.0 * span / tn;
  double num = 0, den = 0;
  for (int i = 0; i < grid_points; ++i) {
    double pv = -kPi + (i + 0.5) * hv;
    for (int k = 0; k <= tn; ++k) {
      double t = -span + k * ht;
      double trap = (k == 0 || k == tn) ? 0.5 : 1.0;
      double wgt = trap *
                   std::exp(-0.5 * beta * mult * t * t +
                            eta * (std::cos(pv) + std::cos(pv + t)));
      num += wgt * std::exp(t * f[w]);
      den += wgt;
    }
  }
  return num / den;
}

VillainSampler::VillainSampler(const LatticeDomain& d, const ModelParams& p,
                               uint64_t stream)
    : dom_(&d), rng_(p.seed, stream) {
  validate_params(d, p);
  if (d.kind != Kind::Zero)
    fail("PreconditionViolated",
         "the rotator chain runs on wired-boundary domains");
  table_.resize(kAngleGrid);
  double h = 2.0 * kPi / kAngleGrid;
  for (int i = 0; i < kAngleGrid; ++i) {
    double t = i * h;
    if (i > kAngleGrid / 2) t -= 2.0 * kPi;
    double s = 0;
    for (int m = -p.m_cut; m <= p.m_cut; ++m) {
      double arg = t + 2.0 * kPi * m;
      s += std::exp(-0.5 * p.beta * arg * arg);
    }
    table_[i] = s;
  }
  tail_ = 4.0 * std::exp(-2.0 * kPi * kPi * p.beta * p.m_cut * p.m_cut);
  grid_.assign(d.n, 0);  // grid index 0 is the angle 0, all heights start flat
  dens_.resize(kAngleGrid);
  cum_.resize(kAngleGrid);
}

void VillainSampler::sweep() {
  const LatticeDomain& d = *dom_;
  constexpr int mask = kAngleGrid - 1;
  for (int j = 0; j < d.n; ++j) {
    if (j == d.z) continue;
    for (int i = 0; i < kAngleGrid; ++i) dens_[i] = 1.0;
    for (auto [nb, mult] : d.adj[j]) {
      int off = grid_[nb];
      for (int c = 0; c < mult; ++c)
        for (int i = 0; i < kAngleGrid; ++i)
          dens_[i] *= table_[(i - off) & mask];
    }
    double run = 0;
    for (int i = 0; i < kAngleGrid; ++i) {
      run += dens_[i];
      cum_[i] = run;
    }
    int pick;
    double u = rng_.uniform();
    if (run > 0 && std::isfinite(run)) {
      pick = int(std::lower_bound(cum_.begin(), cum_.end(), u * run) -
                 cum_.begin());
      if (pick >= kAngleGrid) pick = kAngleGrid - 1;
    } else {
      // Conditional mass underflowed; fall back to its mode.
      pick = int(std::max_element(dens_.begin(), dens_.end()) - dens_.begin());
    }
    grid_[j] = pick;
  }
}

double VillainSampler::height(int j) const {
  double a = grid_[j] * (2.0 * kPi / kAngleGrid);
  return a >= kPi ? a - 2.0 * kPi : a;
}

FieldConfig VillainSampler::config() const {
  FieldConfig c;
  c.kind = FieldKind::Villain;
  c.v = dom_->z;
  c.real.resize(dom_->n);
  for (int j = 0; j < dom_->n; ++j) c.real[j] = height(j);
  return c;
}

VillainEstimate villain_estimate(const LatticeDomain& d, const ModelParams& p,
                                 int x, int steps, int burn_in) {
  check_vertex(d, x, "observable vertex");
  if (d.kind == Kind::Zero && x == d.z)
    fail("PreconditionViolated",
         "the observable vertex is the wired vertex itself");
  if (steps < 32 || burn_in < 0)
    fail("PreconditionViolated", "need at least 32 recorded sweeps");
  VillainSampler s(d, p);
  for (int i = 0; i < burn_in; ++i) s.sweep();
  std::vector<double> cosv(steps), sinv(steps);
  for (int i = 0; i < steps; ++i) {
    s.sweep();
    double a = s.height(x);
    cosv[i] = std::cos(a);
    sinv[i] = std::sin(a);
  }
  VillainEstimate out;
  out.cos_x = batch_mean_estimate(cosv);
  out.sin_x = batch_mean_estimate(sinv);
  out.tail_bound = s.tail_bound();
  return out;
}

double villain_quadrature_cos(const LatticeDomain& d, double beta, int x,
                              int grid_points, int m_cut) {
  if (d.kind != Kind::Zero || d.n != 5)
    fail("StateSpaceTooLarge",
         "the tensor quadrature handles the four-free-site wired domain");
  if (!(beta > 0)) fail("ConfigInvalid", "beta must be positive");
  if (m_cut < 1) fail("ConfigInvalid", "wrapped-Gaussian cut must be >= 1");
  if (grid_points < 8 || grid_points % 2 != 0)
    fail("PreconditionViolated", "grid count must be even and >= 8");
  check_vertex(d, x, "observable vertex");
  if (x == d.z)
    fail("PreconditionViolated",
         "the observable vertex is the wired vertex itself");
  int G = grid_points;
  std::vector<double> tab(G);
  double h = 2.0 * kPi / G;
  for (int i = 0; i < G; ++i) {
    double t = i * h;
    if (i > G / 2) t -= 2.0 * kPi;
    double s = 0;
    for (int m = -m_cut; m <= m_cut; ++m) {
      double arg = t + 2.0 * kPi * m;
      s += std::exp(-0.5 * beta * arg * arg);
    }
    tab[i] = s;
  }
  auto angle = [&](int i) {
    double a = i * h;
    return a >= kPi ? a - 2.0 * kPi : a;
  };
  std::array<int, 5> idx{};
  idx[d.z] = 0;  // grid index 0 is the angle 0 of the wired vertex
  double num = 0, den = 0;
  for (int i0 = 0; i0 < G; ++i0)
    for (int i1 = 0; i1 < G; ++i1)
      for (int i2 = 0; i2 < G; ++i2)
        for (int i3 = 0; i3 < G; ++i3) {
          idx[0] = i0;
          idx[1] = i1;
          idx[2] = i2;
          idx[3] = i3;
          double w = 1;
          for (const Edge& e : d.edges) {
            double te = tab[(idx[e.u] - idx[e.v] + G) % G];
            for (int c = 0; c < e.mult; ++c) w *= te;
          }
          num += w * std::cos(angle(idx[x]));
          den += w;
        }
  return num / den;
}

}  // namespace latlab
