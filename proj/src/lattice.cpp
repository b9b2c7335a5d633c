#include "latlab/lattice.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <queue>

namespace latlab {

std::string kind_name(Kind k) {
  switch (k) {
    case Kind::Free: return "free";
    case Kind::Periodic: return "periodic";
    case Kind::Zero: return "zero";
    case Kind::Custom: return "custom";
  }
  return "?";
}

Kind kind_from_name(const std::string& s) {
  if (s == "free") return Kind::Free;
  if (s == "periodic") return Kind::Periodic;
  if (s == "zero") return Kind::Zero;
  fail("ConfigInvalid", "unknown domain kind '", s, "'");
}

// All-pairs BFS table, built once on first distance query. Bounded to
// side <= 64 (4097 vertices -> 64MB of int32 worst case is still too big,
// so the cap is on vertex count, ~17M entries at n=4097 is 67MB; instead
// cap at n <= 2200 which keeps the table under 20MB; larger domains fall
// back to per-query BFS).
struct DistCache {
  std::mutex mu;
  bool built = false;
  std::vector<int32_t> flat;  // n*n when built
};

namespace {
constexpr int kDistCacheMaxVerts = 2200;

void bfs_row(const LatticeDomain& d, int src, int32_t* out) {
  std::fill(out, out + d.n, int32_t{-1});
  std::queue<int> q;
  out[src] = 0;
  q.push(src);
  while (!q.empty()) {
    int j = q.front();
    q.pop();
    for (auto [l, m] : d.adj[j]) {
      (void)m;
      if (out[l] < 0) {
        out[l] = out[j] + 1;
        q.push(l);
      }
    }
  }
}
}  // namespace

void LatticeDomain::finalize() {
  std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
    return std::tie(x.u, x.v) < std::tie(y.u, y.v);
  });
  adj.assign(n, {});
  degree.assign(n, 0);
  for (const Edge& e : edges) {
    adj[e.u].push_back({e.v, e.mult});
    adj[e.v].push_back({e.u, e.mult});
    degree[e.u] += e.mult;
    degree[e.v] += e.mult;
  }
  dist_ = std::make_shared<DistCache>();
  std::vector<int32_t> row(n);
  bfs_row(*this, 0, row.data());
  for (int j = 0; j < n; ++j)
    if (row[j] < 0) fail("ConfigInvalid", "graph is not connected");
}

int LatticeDomain::index(int a, int b) const {
  if (!has_site(a, b)) fail("UnknownVertex", "site (", a, ",", b, ") not in domain");
  return a * L + b;
}

bool LatticeDomain::has_site(int a, int b) const {
  return L > 0 && a >= 0 && a < L && b >= 0 && b < L;
}

int LatticeDomain::distance(int j, int l) const {
  if (j < 0 || j >= n || l < 0 || l >= n)
    fail("UnknownVertex", "vertex index out of range");
  if (j == l) return 0;
  // Free and periodic grids have no shortcut edges, so the (wrapped)
  // taxicab metric is the graph distance; no search needed.
  if (kind == Kind::Free) {
    return std::abs(coord[j][0] - coord[l][0]) +
           std::abs(coord[j][1] - coord[l][1]);
  }
  if (kind == Kind::Periodic) {
    int dx = std::abs(coord[j][0] - coord[l][0]);
    int dy = std::abs(coord[j][1] - coord[l][1]);
    return std::min(dx, L - dx) + std::min(dy, L - dy);
  }
  if (n <= kDistCacheMaxVerts) {
    std::lock_guard<std::mutex> lk(dist_->mu);
    if (!dist_->built) {
      dist_->flat.resize(static_cast<size_t>(n) * n);
      for (int s = 0; s < n; ++s)
        bfs_row(*this, s, dist_->flat.data() + static_cast<size_t>(s) * n);
      dist_->built = true;
    }
    return dist_->flat[static_cast<size_t>(j) * n + l];
  }
  std::vector<int32_t> row(n);
  bfs_row(*this, j, row.data());
  return row[l];
}

int LatticeDomain::set_distance(const std::vector<int>& A,
                                const std::vector<int>& B) const {
  int best = -1;
  for (int j : A)
    for (int l : B) {
      int d = distance(j, l);
      if (best < 0 || d < best) best = d;
    }
  if (best < 0) fail("PreconditionViolated", "set_distance on empty set");
  return best;
}

int LatticeDomain::set_diameter(const std::vector<int>& A) const {
  int best = 0;
  for (size_t i = 0; i < A.size(); ++i)
    for (size_t j = i + 1; j < A.size(); ++j)
      best = std::max(best, distance(A[i], A[j]));
  return best;
}

LatticeDomain build_domain(Kind kind, int L) {
  if (kind == Kind::Custom)
    fail("ConfigInvalid", "custom domains take an explicit edge list");
  if (L <= 1) fail("SideTooSmall", "side L=", L, " must exceed 1");
  if (kind == Kind::Periodic && L % 2 != 0)
    fail("OddPeriodicSide", "periodic side L=", L, " must be even");

  LatticeDomain d;
  d.kind = kind;
  d.L = L;
  d.n = L * L + (kind == Kind::Zero ? 1 : 0);
  d.z = (kind == Kind::Zero) ? L * L : -1;
  d.coord.resize(d.n);
  for (int a = 0; a < L; ++a)
    for (int b = 0; b < L; ++b) d.coord[a * L + b] = {a, b};
  if (d.z >= 0) d.coord[d.z] = {-1, -1};

  std::map<std::pair<int, int>, int> mult;
  auto add = [&](int u, int v, int m) {
    if (u > v) std::swap(u, v);
    mult[{u, v}] += m;
  };
  for (int a = 0; a < L; ++a)
    for (int b = 0; b < L; ++b) {
      int j = a * L + b;
      if (kind == Kind::Periodic) {
        add(j, ((a + 1) % L) * L + b, 1);
        add(j, a * L + (b + 1) % L, 1);
      } else {
        if (a + 1 < L) add(j, (a + 1) * L + b, 1);
        if (b + 1 < L) add(j, a * L + b + 1, 1);
      }
    }
  if (kind == Kind::Zero) {
    // Wire every boundary site to z until its total degree reaches 4.
    std::vector<int> deg(d.n, 0);
    for (auto& [e, m] : mult) {
      deg[e.first] += m;
      deg[e.second] += m;
    }
    for (int j = 0; j < L * L; ++j)
      if (deg[j] < 4) add(j, d.z, 4 - deg[j]);
  }
  for (auto& [e, m] : mult) d.edges.push_back({e.first, e.second, m});
  d.finalize();
  return d;
}

LatticeDomain custom_domain(int n, const std::vector<Edge>& edges) {
  if (n < 1) fail("SideTooSmall", "custom domain needs at least one vertex");
  LatticeDomain d;
  d.kind = Kind::Custom;
  d.L = 0;
  d.n = n;
  d.coord.resize(n);
  for (int i = 0; i < n; ++i) d.coord[i] = {i, 0};
  std::map<std::pair<int, int>, int> mult;
  for (const Edge& e : edges) {
    if (e.u < 0 || e.u >= n || e.v < 0 || e.v >= n || e.u == e.v || e.mult < 1)
      fail("ConfigInvalid", "bad custom edge (", e.u, ",", e.v, ")x", e.mult);
    mult[{std::min(e.u, e.v), std::max(e.u, e.v)}] += e.mult;
  }
  for (auto& [p, m] : mult) d.edges.push_back({p.first, p.second, m});
  d.finalize();
  return d;
}

std::vector<double> laplacian_apply(const LatticeDomain& d,
                                    const std::vector<double>& f) {
  if (static_cast<int>(f.size()) != d.n)
    fail("DimensionMismatch", "f has ", f.size(), " entries, domain has ", d.n);
  std::vector<double> out(d.n, 0.0);
  for (const Edge& e : d.edges) {
    double diff = e.mult * (f[e.v] - f[e.u]);
    out[e.u] += diff;
    out[e.v] -= diff;
  }
  return out;
}

int graph_distance(const LatticeDomain& d, int j, int l) {
  return d.distance(j, l);
}

std::vector<int> distances_from(const LatticeDomain& d,
                                const std::vector<int>& sources) {
  if (sources.empty())
    fail("PreconditionViolated", "distance sweep needs a source vertex");
  std::vector<int> out(d.n, -1);
  std::queue<int> q;
  for (int s : sources) {
    if (s < 0 || s >= d.n) fail("UnknownVertex", "source index out of range");
    if (out[s] != 0) {
      out[s] = 0;
      q.push(s);
    }
  }
  while (!q.empty()) {
    int j = q.front();
    q.pop();
    for (auto [l, m] : d.adj[j]) {
      (void)m;
      if (out[l] < 0) {
        out[l] = out[j] + 1;
        q.push(l);
      }
    }
  }
  return out;
}

std::pair<std::vector<int>, std::vector<int>> bipartition(
    const LatticeDomain& d) {
  std::vector<int> color(d.n, -1);
  std::queue<int> q;
  color[0] = 0;
  q.push(0);
  while (!q.empty()) {
    int j = q.front();
    q.pop();
    for (auto [l, m] : d.adj[j]) {
      (void)m;
      if (color[l] < 0) {
        color[l] = 1 - color[j];
        q.push(l);
      } else if (color[l] == color[j]) {
        fail("NotBipartite", "odd cycle through vertices ", j, " and ", l);
      }
    }
  }
  // Canonical side: (a+b) even lands in Omega1 (vertex 0 has a+b=0 on grids).
  int keep = color[0];
  std::pair<std::vector<int>, std::vector<int>> parts;
  for (int j = 0; j < d.n; ++j)
    (color[j] == keep ? parts.first : parts.second).push_back(j);
  return parts;
}

std::vector<DyadicSquare> enumerate_squares(const LatticeDomain& d, int k) {
  if (d.kind == Kind::Custom)
    fail("ConfigInvalid", "dyadic squares need a grid domain");
  if (k < 0) fail("PreconditionViolated", "square scale must be nonnegative");
  std::vector<DyadicSquare> out;
  long long side = 1LL << std::min(k, 30);
  if (side > d.L) {
    DyadicSquare s;
    s.k = k;
    s.a = 0;
    s.b = 0;
    s.members.resize(d.n);
    for (int j = 0; j < d.n; ++j) s.members[j] = j;
    out.push_back(std::move(s));
    return out;
  }
  int w = static_cast<int>(side);
  bool wrap = d.kind == Kind::Periodic;
  if (wrap && w == d.L) {
    // Every anchor yields the full torus; keep the single distinct square.
    DyadicSquare s;
    s.k = k;
    s.a = 0;
    s.b = 0;
    s.members.resize(d.n);
    for (int j = 0; j < d.n; ++j) s.members[j] = j;
    out.push_back(std::move(s));
    return out;
  }
  for (int a = 0; a < d.L; ++a)
    for (int b = 0; b < d.L; ++b) {
      DyadicSquare s;
      s.k = k;
      s.a = a;
      s.b = b;
      for (int da = 0; da < w; ++da)
        for (int db = 0; db < w; ++db) {
          int c = a + da, e = b + db;
          if (wrap) {
            c %= d.L;
            e %= d.L;
          } else if (c >= d.L || e >= d.L) {
            continue;
          }
          s.members.push_back(c * d.L + e);
        }
      std::sort(s.members.begin(), s.members.end());
      out.push_back(std::move(s));
    }
  return out;
}

double dirichlet_energy(const LatticeDomain& d, const std::vector<double>& f) {
  if (static_cast<int>(f.size()) != d.n)
    fail("DimensionMismatch", "f has ", f.size(), " entries, domain has ", d.n);
  double s = 0.0;
  for (const Edge& e : d.edges) {
    double diff = f[e.u] - f[e.v];
    s += e.mult * diff * diff;
  }
  return s;
}

}  // namespace latlab
