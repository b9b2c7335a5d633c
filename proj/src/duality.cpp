#include "latlab/duality.hpp"

#include <cmath>
#include <complex>
#include <map>
#include <queue>
#include <utility>

#include "latlab/common.hpp"

namespace latlab {

namespace {

// Shared construction-time sanity net: the crossing list must unroll every
// primal slot exactly once and touch every dual edge exactly once.
void verify_crossings(const DualLattice& dl) {
  int slots = 2 * dl.L * (dl.L + 1);
  if (static_cast<int>(dl.crossings.size()) != slots)
    fail("PropertyViolation", "dual lattice has ", dl.crossings.size(),
         " crossings, expected ", slots);
  std::map<std::pair<int, int>, int> dual_seen, primal_seen;
  for (const EdgeCrossing& c : dl.crossings) {
    dual_seen[{std::min(c.dual_from, c.dual_to),
               std::max(c.dual_from, c.dual_to)}]++;
    primal_seen[{std::min(c.from, c.to), std::max(c.from, c.to)}]++;
  }
  for (const Edge& e : dl.graph.edges)
    if (dual_seen[{e.u, e.v}] != 1)
      fail("PropertyViolation", "dual edge ", e.u, "-", e.v, " crossed ",
           dual_seen[{e.u, e.v}], " times");
  for (const Edge& e : dl.primal.edges)
    if (primal_seen[{e.u, e.v}] != e.mult)
      fail("PropertyViolation", "primal edge ", e.u, "-", e.v, " covers ",
           primal_seen[{e.u, e.v}], " slots, multiplicity is ", e.mult);
}

}  // namespace

DualLattice dual_lattice(int L) {
  if (L <= 1) fail("PreconditionViolated", "dual lattice needs side L > 1");
  DualLattice dl;
  dl.L = L;
  dl.primal = build_domain(Kind::Zero, L);
  dl.graph = build_domain(Kind::Free, L + 1);
  dl.coords.resize(dl.graph.n);
  for (int p = 0; p <= L; ++p)
    for (int q = 0; q <= L; ++q)
      dl.coords[dl.graph.index(p, q)] = {p - 0.5, q - 0.5};

  auto pr = [&](int a, int b) { return dl.primal.index(a, b); };
  auto du = [&](int p, int q) { return dl.graph.index(p, q); };
  int z = dl.primal.z;
  // Free horizontal slots point toward smaller first coordinate; rotating
  // that arrow a quarter turn clockwise orients the crossing dual edge
  // toward larger second coordinate. The other cases follow the same turn.
  for (int b = 0; b < L; ++b)
    for (int a = 0; a + 1 < L; ++a)
      dl.crossings.push_back(
          {pr(a + 1, b), pr(a, b), du(a + 1, b), du(a + 1, b + 1)});
  for (int a = 0; a < L; ++a)
    for (int b = 0; b + 1 < L; ++b)
      dl.crossings.push_back(
          {pr(a, b + 1), pr(a, b), du(a + 1, b + 1), du(a, b + 1)});
  for (int b = 0; b < L; ++b)  // wired slots beyond the far first coordinate
    dl.crossings.push_back({z, pr(L - 1, b), du(L, b), du(L, b + 1)});
  for (int b = 0; b < L; ++b)  // beyond the near first coordinate
    dl.crossings.push_back({z, pr(0, b), du(0, b + 1), du(0, b)});
  for (int a = 0; a < L; ++a)  // beyond the near second coordinate
    dl.crossings.push_back({z, pr(a, 0), du(a, 0), du(a + 1, 0)});
  for (int a = 0; a < L; ++a)  // beyond the far second coordinate
    dl.crossings.push_back({z, pr(a, L - 1), du(a + 1, L), du(a, L)});

  verify_crossings(dl);
  return dl;
}

long long OrientedEdgeField::divergence(int j) const {
  long long out = 0;
  for (size_t s = 0; s < n.size(); ++s) {
    if (dl->crossings[s].from == j) out += n[s];
    if (dl->crossings[s].to == j) out -= n[s];
  }
  return out;
}

std::vector<long long> OrientedEdgeField::dual_heights(int v) const {
  if (dl == nullptr || n.size() != dl->crossings.size())
    fail("DimensionMismatch", "edge field carries ", n.size(),
         " values, dual lattice has ", dl ? dl->crossings.size() : 0,
         " slots");
  if (v < 0 || v >= dl->graph.n)
    fail("UnknownVertex", "dual vertex ", v, " not in 0..", dl->graph.n - 1);
  std::vector<long long> div(dl->primal.n, 0);
  for (size_t s = 0; s < n.size(); ++s) {
    div[dl->crossings[s].from] += n[s];
    div[dl->crossings[s].to] -= n[s];
  }
  for (int j = 0; j < dl->primal.n; ++j)
    if (div[j] != 0)
      fail("PreconditionViolated", "flow has net outflow ", div[j],
           " at primal vertex ", j, ", not a dual gradient");

  std::vector<std::vector<std::pair<int, int>>> adj(dl->graph.n);
  for (size_t s = 0; s < n.size(); ++s) {
    adj[dl->crossings[s].dual_from].push_back(
        {dl->crossings[s].dual_to, static_cast<int>(s)});
    adj[dl->crossings[s].dual_to].push_back(
        {dl->crossings[s].dual_from, static_cast<int>(s)});
  }
  std::vector<long long> m(dl->graph.n, 0);
  std::vector<char> seen(dl->graph.n, 0);
  std::queue<int> bfs;
  bfs.push(v);
  seen[v] = 1;
  while (!bfs.empty()) {
    int cur = bfs.front();
    bfs.pop();
    for (auto [nb, s] : adj[cur]) {
      if (seen[nb]) continue;
      seen[nb] = 1;
      m[nb] = cur == dl->crossings[s].dual_from ? m[cur] - n[s] : m[cur] + n[s];
      bfs.push(nb);
    }
  }
  // Zero divergence makes every off-tree slot consistent; anything else
  // would be a construction bug, not a caller error.
  for (size_t s = 0; s < n.size(); ++s)
    if (m[dl->crossings[s].dual_from] - m[dl->crossings[s].dual_to] != n[s])
      fail("PropertyViolation", "slot ", s,
           " disagrees with the reconstructed heights");
  return m;
}

OrientedEdgeField edge_field_from_heights(const DualLattice& dl,
                                          const std::vector<long long>& m) {
  if (static_cast<int>(m.size()) != dl.graph.n)
    fail("DimensionMismatch", "height field has ", m.size(),
         " entries, dual graph has ", dl.graph.n);
  OrientedEdgeField out;
  out.dl = &dl;
  out.n.reserve(dl.crossings.size());
  for (const EdgeCrossing& c : dl.crossings)
    out.n.push_back(m[c.dual_from] - m[c.dual_to]);
  return out;
}

std::vector<int> defect_path(const DualLattice& dl, int x0, int x1) {
  int L = dl.L;
  if (x0 < 0 || x0 >= L || x1 < 0 || x1 >= L)
    fail("UnknownVertex", "site (", x0, ",", x1, ") not on the side-", L,
         " square");
  std::vector<int> chi(dl.crossings.size(), 0);
  int marked = 0;
  for (size_t s = 0; s < dl.crossings.size(); ++s) {
    const EdgeCrossing& c = dl.crossings[s];
    for (int t = x0; t + 1 < L; ++t)
      if (c.from == dl.primal.index(t + 1, x1) &&
          c.to == dl.primal.index(t, x1))
        chi[s] = 1;
    if (c.from == dl.primal.z && c.to == dl.primal.index(L - 1, x1) &&
        c.dual_from == dl.graph.index(L, x1) &&
        c.dual_to == dl.graph.index(L, x1 + 1))
      chi[s] = 1;
    marked += chi[s];
  }
  if (marked != L - x0)
    fail("PropertyViolation", "defect line marked ", marked,
         " slots, expected ", L - x0);
  return chi;
}

FourierWeight fourier_edge_weight(double theta, double beta, double chi,
                                  int n_cut) {
  if (!(beta > 0)) fail("PreconditionViolated", "beta must be positive");
  if (n_cut < 1) fail("PreconditionViolated", "cutoff must be at least 1");
  const std::complex<double> I(0, 1);
  FourierWeight out;
  for (int m = -n_cut; m <= n_cut; ++m) {
    double u = theta + 2 * kPi * m;
    out.lhs += std::exp(-0.5 * beta * u * u) * std::exp(-I * (chi * u));
  }
  double amp = 1.0 / std::sqrt(2 * kPi * beta);
  for (int n = -n_cut; n <= n_cut; ++n) {
    double q = (n + chi) * (n + chi) / (2 * beta);
    out.rhs += amp * std::exp(-q) * std::exp(I * (double(n) * theta));
  }
  // Both truncations decay super-geometrically; eighty extra terms push the
  // analytic remainder below the smallest positive double.
  for (int k = n_cut + 1; k <= n_cut + 80; ++k) {
    double up = theta + 2 * kPi * k, dn = theta - 2 * kPi * k;
    out.tail += std::exp(-0.5 * beta * up * up) + std::exp(-0.5 * beta * dn * dn);
    out.tail += amp * (std::exp(-(k + chi) * (k + chi) / (2 * beta)) +
                       std::exp(-(-k + chi) * (-k + chi) / (2 * beta)));
  }
  return out;
}

namespace {

// Tilt carried by the defect line, as a linear functional on the dual
// heights: each marked slot contributes -(height difference)/beta.
std::vector<double> defect_functional(const DualLattice& dl,
                                      const std::vector<int>& chi,
                                      double beta) {
  std::vector<double> f(dl.graph.n, 0.0);
  for (size_t s = 0; s < chi.size(); ++s)
    if (chi[s]) {
      f[dl.crossings[s].dual_from] -= 1.0 / beta;
      f[dl.crossings[s].dual_to] += 1.0 / beta;
    }
  return f;
}

}  // namespace

DualityReport duality_check(int L, double beta, int x0, int x1,
                            const DualityOptions& opt) {
  if (!(beta > 0)) fail("PreconditionViolated", "beta must be positive");
  DualLattice dl = dual_lattice(L);
  std::vector<int> chi = defect_path(dl, x0, x1);
  std::vector<double> f = defect_functional(dl, chi, beta);
  double cst = std::exp(-(L - x0) / (2.0 * beta));

  DualityReport rep;
  rep.L = L;
  rep.beta = beta;
  rep.x0 = x0;
  rep.x1 = x1;
  int x = dl.primal.index(x0, x1);

  ModelParams dual_p;
  dual_p.beta = 1.0 / beta;
  dual_p.v = 0;
  dual_p.k_cutoff = opt.k_cutoff;
  dual_p.seed = opt.seed;

  if (L == 2) {
    rep.exact = true;
    rep.villain =
        villain_quadrature_cos(dl.primal, beta, x, opt.grid, opt.m_cut);
    rep.iv = cst * enumerate_iv(dl.graph, dual_p, f).moment_exp;
  } else {
    ModelParams rot_p;
    rot_p.beta = beta;
    rot_p.v = dl.primal.z;
    rot_p.seed = opt.seed;
    rot_p.m_cut = opt.m_cut;
    VillainEstimate ve = villain_estimate(dl.primal, rot_p, x,
                                          static_cast<int>(opt.steps),
                                          static_cast<int>(opt.burn_in));
    rep.villain = ve.cos_x.estimate;
    rep.villain_se = ve.cos_x.se;

    IvSampler chain(dl.graph, dual_p, 1);
    for (long long i = 0; i < opt.burn_in; ++i) chain.sweep();
    std::vector<double> vals(opt.steps);
    for (long long i = 0; i < opt.steps; ++i) {
      chain.sweep();
      double mf = 0;
      for (int j = 0; j < dl.graph.n; ++j) mf += chain.heights()[j] * f[j];
      vals[i] = std::exp(mf);
    }
    McEstimate est = batch_mean_estimate(vals);
    rep.iv = cst * est.estimate;
    rep.iv_se = cst * est.se;
  }
  rep.diff = rep.villain - rep.iv;
  return rep;
}

PartitionMatch dual_partition_match(double beta, const DualityOptions& opt) {
  if (!(beta > 0)) fail("PreconditionViolated", "beta must be positive");
  int G = opt.grid;
  if (G < 8 || G % 2 != 0)
    fail("PreconditionViolated", "quadrature grid must be even and >= 8");
  DualLattice dl = dual_lattice(2);

  // Wrapped Gaussian edge weight on the angle grid, via the identity's
  // untwisted left side.
  std::vector<double> tab(G);
  for (int i = 0; i < G; ++i)
    tab[i] =
        fourier_edge_weight(2 * kPi * i / G, beta, 0.0, opt.m_cut).lhs.real();

  const LatticeDomain& d = dl.primal;
  double h = 2 * kPi / G;
  double z_sum = 0;
  std::array<int, 5> idx{};
  idx[d.z] = 0;  // wired angle pinned to zero
  for (idx[0] = 0; idx[0] < G; ++idx[0])
    for (idx[1] = 0; idx[1] < G; ++idx[1])
      for (idx[2] = 0; idx[2] < G; ++idx[2])
        for (idx[3] = 0; idx[3] < G; ++idx[3]) {
          double w = 1;
          for (const Edge& e : d.edges) {
            double we = tab[(idx[e.u] - idx[e.v] + G) % G];
            for (int c = 0; c < e.mult; ++c) w *= we;
          }
          z_sum += w;
        }

  PartitionMatch out;
  out.villain_z = z_sum * h * h * h * h;

  ModelParams dual_p;
  dual_p.beta = 1.0 / beta;
  dual_p.v = 0;
  dual_p.k_cutoff = opt.k_cutoff;
  double heights_z =
      enumerate_iv(dl.graph, dual_p, std::vector<double>(dl.graph.n, 0.0)).z;
  double slots = static_cast<double>(dl.crossings.size());
  out.iv_z = std::pow(2 * kPi * beta, -slots / 2) *
             std::pow(2 * kPi, dl.L * dl.L) * heights_z;
  out.rel_diff = std::abs(out.villain_z - out.iv_z) / out.villain_z;
  return out;
}

}  // namespace latlab
