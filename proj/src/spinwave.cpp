#include "latlab/spinwave.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "latlab/common.hpp"
#include "latlab/derived_constants.hpp"

namespace latlab {

namespace {

constexpr int kLogProfileScale = 10;  // first scale that uses the log profile

void check_field(const LatticeDomain& d, const std::vector<double>& a) {
  if (static_cast<int>(a.size()) != d.n)
    fail("PreconditionViolated", "field has ", a.size(), " entries on ", d.n,
         " vertices");
}

void check_same_domain(const LatticeDomain& d, const ChargeDensity& rho) {
  if (rho.dom != &d)
    fail("PreconditionViolated", "density lives on a different domain");
}

void check_beta(double beta) {
  if (!(beta > 0)) fail("PreconditionViolated", "beta must be positive");
}

// Exact flatness of the wave across every neighbour component.
void check_component_flatness(const std::vector<double>& a,
                              const ComponentGeometry& geom,
                              const char* what) {
  for (size_t i = 0; i < geom.comps.size(); ++i) {
    const auto& verts = geom.comps[i].verts;
    for (int v : verts)
      if (a[v] != a[verts.front()])
        fail("PropertyViolation", what, " not constant on neighbour component ",
             i);
  }
}

}  // namespace

double spinwave_energy(const LatticeDomain& d, const std::vector<double>& a,
                       const ChargeDensity& rho, double beta) {
  check_field(d, a);
  check_same_domain(d, rho);
  check_beta(beta);
  double pairing = 0;
  for (auto [j, q] : rho.supp) pairing += double(q) * a[j];
  return pairing - 0.5 * beta * dirichlet_energy(d, a);
}

std::vector<ChargeDensity> comparable_neighbors(
    const std::vector<ChargeDensity>& pool, const ChargeDensity& target) {
  std::vector<ChargeDensity> out;
  for (const auto& r : pool) {
    if (r.dom != target.dom)
      fail("PreconditionViolated", "pool density lives on a different domain");
    if (!r.neutral()) continue;
    if (r.d > 2 * target.d) continue;
    if (r.supp == target.supp) continue;
    out.push_back(r);
  }
  return out;
}

ComponentGeometry component_geometry(const LatticeDomain& d,
                                     const std::vector<ChargeDensity>& neighbors,
                                     const ChargeDensity& target,
                                     const CoverConfig& cfg) {
  check_same_domain(d, target);
  cfg.validate();
  std::vector<char> in_union(d.n, 0);
  for (const auto& r : neighbors) {
    check_same_domain(d, r);
    for (int v : center_and_D(r).D_plus) in_union[v] = 1;
  }

  ComponentGeometry geom;
  std::vector<char> seen(d.n, 0);
  for (int start = 0; start < d.n; ++start) {
    if (!in_union[start] || seen[start]) continue;
    PlateauComponent comp;
    std::queue<int> q;
    seen[start] = 1;
    q.push(start);
    while (!q.empty()) {
      int j = q.front();
      q.pop();
      comp.verts.push_back(j);
      for (auto [l, m] : d.adj[j]) {
        (void)m;
        if (in_union[l] && !seen[l]) {
          seen[l] = 1;
          q.push(l);
        }
      }
    }
    std::sort(comp.verts.begin(), comp.verts.end());
    for (int j : comp.verts)
      for (auto [l, m] : d.adj[j]) {
        (void)m;
        if (!in_union[l]) comp.ext_boundary.push_back(l);
      }
    std::sort(comp.ext_boundary.begin(), comp.ext_boundary.end());
    comp.ext_boundary.erase(
        std::unique(comp.ext_boundary.begin(), comp.ext_boundary.end()),
        comp.ext_boundary.end());
    comp.diam = d.set_diameter(comp.verts);
    geom.comps.push_back(std::move(comp));
  }

  auto support = target.support_vertices();
  for (size_t i = 0; i < geom.comps.size(); ++i) {
    const auto& e = geom.comps[i];
    if (e.diam < 4)
      fail("PropertyViolation", "d(E) >= 4 fails for component ", i,
           " (diameter ", e.diam, ")");
    if (e.ext_boundary.size() > 64ull * e.diam)
      fail("PropertyViolation", "|ext(E)| <= 64 d(E) fails for component ", i,
           " (", e.ext_boundary.size(), " > 64*", e.diam, ")");
    double need = cfg.M / 128.0 * std::pow(double(e.diam), cfg.alpha);
    int dist = d.set_distance(e.verts, support);
    if (need > dist)
      fail("PropertyViolation",
           "(M/128) d(E)^alpha <= dist(E, target) fails for component ", i,
           " (", need, " > ", dist, ")");
  }
  for (size_t i = 0; i < geom.comps.size(); ++i)
    for (size_t j = i + 1; j < geom.comps.size(); ++j) {
      const auto& e1 = geom.comps[i];
      const auto& e2 = geom.comps[j];
      double need = cfg.M / 25.0 *
                    std::pow(double(std::min(e1.diam, e2.diam)), cfg.alpha);
      double have = d.set_distance(e1.verts, e2.verts) + e1.diam + e2.diam;
      if (need > have)
        fail("PropertyViolation",
             "(M/25) min(d)^alpha <= dist + d(E) + d(E') fails for components ",
             i, " and ", j, " (", need, " > ", have, ")");
    }
  return geom;
}

SpinWave build_a0(const LatticeDomain& d, const ChargeDensity& target,
                  double beta) {
  check_same_domain(d, target);
  check_beta(beta);
  if (!target.neutral())
    fail("NotNeutral", "base wave needs a neutral density, charge is ",
         target.Q);

  std::vector<int> side(d.n, 1);
  try {
    for (int v : bipartition(d).first) side[v] = 0;
  } catch (const Error& e) {
    if (e.code == "NotBipartite")
      fail("BipartitionUnavailable", "domain has no two-colouring (", e.what(),
           ")");
    throw;
  }

  long long mass[2] = {0, 0};
  for (auto [j, q] : target.supp) mass[side[j]] += (long long)q * q;
  // Keep the side of the neighbourhood center unless it holds strictly
  // less than half the squared mass; a diameter-1 target splits evenly, so
  // its center side is always kept.
  int keep = side[center_and_D(target).center];
  if (2 * mass[keep] < target.norm2sq) keep = 1 - keep;

  SpinWave w;
  w.dom = &d;
  w.target = target;
  w.beta = beta;
  w.a.assign(d.n, 0.0);
  for (auto [j, q] : target.supp)
    if (side[j] == keep) w.a[j] = double(q) / (double(d.degree[j]) * beta);

  WaveTerm t;
  t.k = -1;
  t.profile = 0;
  t.energy = spinwave_energy(d, w.a, target, beta);
  w.terms.push_back(std::move(t));
  return w;
}

SpinWave build_as(const LatticeDomain& d, const DyadicSquare& s,
                  const ChargeDensity& target, double beta,
                  const ComponentGeometry& geom) {
  check_same_domain(d, target);
  check_beta(beta);
  if (s.k < 1)
    fail("PreconditionViolated", "square waves start at scale 1, got ", s.k);

  long long q = 0;
  for (auto [j, c] : target.supp)
    if (std::binary_search(s.members.begin(), s.members.end(), j)) q += c;
  if (q == 0)
    fail("NeutralRestriction", "square at scale ", s.k, " anchor (", s.a, ",",
         s.b, ") holds no net charge of the target");

  SpinWave w;
  w.dom = &d;
  w.target = target;
  w.beta = beta;
  w.a.assign(d.n, 0.0);
  WaveTerm t;
  t.k = s.k;
  t.anchor_a = s.a;
  t.anchor_b = s.b;
  t.q = q;

  auto dist = distances_from(d, s.members);
  if (s.k < kLogProfileScale) {
    t.profile = 1;
    double amp = std::ldexp(double(q), -(s.k + 3)) / beta;
    for (int j = 0; j < d.n; ++j)
      if (dist[j] <= 1) w.a[j] = amp;
  } else {
    t.profile = 2;
    long long base = 1ll << (s.k - 1);
    long long r1 = base + (1ll << (s.k - 3));
    long long r2 = base + (1ll << (s.k - 2));  // = (6/5) r1
    std::vector<double> u(d.n, 0.0);
    double top = std::log(6.0 / 5.0);
    for (int j = 0; j < d.n; ++j) {
      long long r = dist[j] + base;
      if (r <= r1)
        u[j] = top;
      else if (r < r2)
        u[j] = std::log(double(r2) / double(r));
    }
    // Flatten each neighbour component to the profile value at its anchor:
    // the smallest component vertex on the inner circle, else on the outer
    // circle, else the smallest vertex of the component.
    t.x_flat.resize(geom.comps.size());
    for (size_t i = 0; i < geom.comps.size(); ++i) {
      const auto& verts = geom.comps[i].verts;
      auto on_circle = [&](long long radius) -> int {
        for (int v : verts)
          if (dist[v] + base == radius) return v;
        return -1;
      };
      int x = on_circle(r1);
      if (x < 0) x = on_circle(r2);
      if (x < 0) x = verts.front();
      t.x_flat[i] = x;
      for (int v : verts) u[v] = u[x];
    }
    double grad = dirichlet_energy(d, u);
    if (grad == 0)
      fail("PropertyViolation",
           "log profile is globally constant, domain smaller than the wave");
    double gamma = top * double(q) / (beta * grad);
    for (int j = 0; j < d.n; ++j) w.a[j] = gamma * u[j];
  }

  check_component_flatness(w.a, geom, "square wave");
  t.energy = spinwave_energy(d, w.a, target, beta);
  w.terms.push_back(std::move(t));
  return w;
}

SpinWave assemble_spinwave(const LatticeDomain& d, const ChargeDensity& target,
                           double beta, const MultiscaleCover& cover,
                           const ComponentGeometry& geom) {
  check_same_domain(d, target);
  check_beta(beta);

  SpinWave w = build_a0(d, target, beta);
  // Which summand owns each edge's gradient; energies add exactly only
  // when no edge is claimed twice.
  std::vector<int> owner(d.edges.size(), -1);
  auto claim = [&](const std::vector<double>& part, int id) {
    for (size_t e = 0; e < d.edges.size(); ++e) {
      if (part[d.edges[e].u] == part[d.edges[e].v]) continue;
      if (owner[e] != -1)
        fail("GradientOverlap", "summands ", owner[e], " and ", id,
             " both vary across edge (", d.edges[e].u, ",", d.edges[e].v, ")");
      owner[e] = id;
    }
  };
  claim(w.a, 0);

  int id = 1;
  for (int k = 1; k < int(cover.S.size()); ++k)
    for (int idx : cover.sep[k]) {
      SpinWave part =
          build_as(d, cover.S[k].squares[idx], target, beta, geom);
      claim(part.a, id++);
      for (int j = 0; j < d.n; ++j) w.a[j] += part.a[j];
      w.terms.push_back(std::move(part.terms.front()));
    }

  auto nb = center_and_D(target);
  std::vector<char> in_d(d.n, 0);
  for (int v : nb.D) in_d[v] = 1;
  for (int j = 0; j < d.n; ++j)
    if (w.a[j] != 0 && !in_d[j])
      fail("PropertyViolation",
           "wave support escapes the target neighbourhood at vertex ", j);
  for (const auto& e : d.edges)
    if (w.a[e.u] != w.a[e.v] && !(in_d[e.u] && in_d[e.v]))
      fail("PropertyViolation",
           "gradient support escapes the target neighbourhood on edge (", e.u,
           ",", e.v, ")");
  check_component_flatness(w.a, geom, "assembled wave");
  return w;
}

double spinwave_energy_floor(const ChargeDensity& target,
                             const MultiscaleCover& cover, double beta) {
  check_beta(beta);
  long long separated = 0;
  for (int k = 1; k < int(cover.sep.size()); ++k)
    separated += (long long)cover.sep[k].size();
  return (double(target.norm2sq) / 16.0 + kSpinEnergyRate * separated) / beta;
}

}  // namespace latlab
