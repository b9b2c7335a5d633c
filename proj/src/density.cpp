#include "latlab/density.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <set>

namespace latlab {

int ChargeDensity::charge_at(int vertex) const {
  auto it = std::lower_bound(
      supp.begin(), supp.end(), std::make_pair(vertex, INT32_MIN));
  return (it != supp.end() && it->first == vertex) ? it->second : 0;
}

std::vector<int> ChargeDensity::support_vertices() const {
  std::vector<int> v;
  v.reserve(supp.size());
  for (auto& [j, q] : supp) v.push_back(j);
  return v;
}

ChargeDensity make_density(const LatticeDomain& dom,
                           const std::map<int, int>& values) {
  ChargeDensity rho;
  rho.dom = &dom;
  for (auto& [j, q] : values) {
    if (j < 0 || j >= dom.n)
      fail("UnknownVertex", "density vertex ", j, " out of range");
    if (q == 0) continue;
    rho.supp.push_back({j, q});
    rho.Q += q;
    rho.norm2sq += static_cast<long long>(q) * q;
    rho.norm1 += std::abs(q);
  }
  if (rho.supp.empty())
    fail("PreconditionViolated", "density must not be identically zero");
  auto verts = rho.support_vertices();
  rho.d = dom.set_diameter(verts);
  return rho;
}

int density_distance(const ChargeDensity& r1, const ChargeDensity& r2) {
  if (r1.dom != r2.dom)
    fail("PreconditionViolated", "densities live on different domains");
  return r1.dom->set_distance(r1.support_vertices(), r2.support_vertices());
}

bool supports_disjoint(const ChargeDensity& r1, const ChargeDensity& r2) {
  auto a = r1.supp.begin();
  auto b = r2.supp.begin();
  while (a != r1.supp.end() && b != r2.supp.end()) {
    if (a->first == b->first) return false;
    if (a->first < b->first)
      ++a;
    else
      ++b;
  }
  return true;
}

ChargeDensity density_combine(const ChargeDensity& r1, int sign,
                              const ChargeDensity& r2) {
  if (r1.dom != r2.dom)
    fail("PreconditionViolated", "densities live on different domains");
  if (sign != 1 && sign != -1)
    fail("PreconditionViolated", "combine sign must be +1 or -1");
  if (!supports_disjoint(r1, r2))
    fail("OverlappingSupports", "combined densities must have disjoint supports");
  std::map<int, int> v;
  for (auto& [j, q] : r1.supp) v[j] = q;
  for (auto& [j, q] : r2.supp) v[j] = sign * q;
  return make_density(*r1.dom, v);
}

DensityNeighborhood center_and_D(const ChargeDensity& rho) {
  const LatticeDomain& dom = *rho.dom;
  auto verts = rho.support_vertices();
  DensityNeighborhood nb;
  for (int j : verts) {
    bool realizes = false;
    for (int l : verts)
      if (dom.distance(j, l) == rho.d) {
        realizes = true;
        break;
      }
    if (realizes) {
      nb.center = j;
      break;  // vertices sorted, so the first hit is lexicographic
    }
  }
  for (int v = 0; v < dom.n; ++v)
    if (v == nb.center || dom.distance(v, nb.center) < 2 * rho.d)
      nb.D.push_back(v);
  std::set<int> plus(nb.D.begin(), nb.D.end());
  for (int v : nb.D)
    for (auto [u, m] : dom.adj[v]) {
      (void)m;
      plus.insert(u);
    }
  nb.D_plus.assign(plus.begin(), plus.end());
  return nb;
}

double CoverConfig::b() const { return alpha + 3 + std::log2(double(M)); }
double CoverConfig::k0() const { return (alpha + b()) / (alpha - 1); }
double CoverConfig::sep_threshold(int k) const {
  return 2.0 * double(M) * std::pow(2.0, alpha * (k + 1));
}
int CoverConfig::top_scale(int d) const {
  if (d < 1) fail("PreconditionViolated", "top scale needs diameter >= 1");
  return static_cast<int>(
      std::ceil(std::log2(double(M)) + alpha * std::log2(double(d)) - 1e-9));
}
void CoverConfig::validate() const {
  if (!(alpha > 1.5 && alpha < 2.0))
    fail("ConfigInvalid", "alpha=", alpha, " outside (3/2, 2)");
  if (M < 2 || (M & (M - 1)) != 0)
    fail("ConfigInvalid", "M=", M, " must be a power of two >= 2");
}

namespace {

struct Cand {
  int a = 0, b = 0;
  uint64_t mask = 0;
  std::vector<int> members;
};

// Candidate squares restricted to canonical anchors (all pairs of support
// coordinates); any cover can be shifted onto these without growing.
std::vector<Cand> build_candidates(const ChargeDensity& rho, int k,
                                   const std::vector<DyadicSquare>& prefer) {
  const LatticeDomain& dom = *rho.dom;
  int L = dom.L;
  long long w = 1LL << std::min(k, 30);
  std::vector<Cand> out;
  if (w > L) {
    Cand c;
    c.mask = (rho.supp.size() >= 64) ? ~uint64_t{0}
                                     : ((uint64_t{1} << rho.supp.size()) - 1);
    c.members.resize(dom.n);
    for (int j = 0; j < dom.n; ++j) c.members[j] = j;
    out.push_back(std::move(c));
    return out;
  }
  std::set<int> xs, ys;
  for (auto& [j, q] : rho.supp) {
    (void)q;
    xs.insert(dom.coord[j][0]);
    ys.insert(dom.coord[j][1]);
  }
  bool wrap = dom.kind == Kind::Periodic;
  std::vector<Cand> raw;
  for (const DyadicSquare& ps : prefer) {
    Cand c;
    c.a = ps.a;
    c.b = ps.b;
    c.members = ps.members;
    for (size_t i = 0; i < rho.supp.size(); ++i)
      if (std::binary_search(ps.members.begin(), ps.members.end(),
                             rho.supp[i].first))
        c.mask |= uint64_t{1} << i;
    if (c.mask != 0) raw.push_back(std::move(c));
  }
  for (int a : xs)
    for (int b : ys) {
      Cand c;
      c.a = a;
      c.b = b;
      for (size_t i = 0; i < rho.supp.size(); ++i) {
        auto [pa, pb] = dom.coord[rho.supp[i].first];
        int da = pa - a, db = pb - b;
        if (wrap) {
          da = ((da % L) + L) % L;
          db = ((db % L) + L) % L;
        }
        if (da >= 0 && da < w && db >= 0 && db < w)
          c.mask |= uint64_t{1} << i;
      }
      if (c.mask == 0) continue;
      for (int da = 0; da < w; ++da)
        for (int db = 0; db < w; ++db) {
          int ca = a + da, cb = b + db;
          if (wrap) {
            ca %= L;
            cb %= L;
          } else if (ca >= L || cb >= L) {
            continue;
          }
          c.members.push_back(ca * L + cb);
        }
      std::sort(c.members.begin(), c.members.end());
      c.members.erase(std::unique(c.members.begin(), c.members.end()),
                      c.members.end());
      raw.push_back(std::move(c));
    }
  // One representative per coverage mask: a preferred member set if one
  // matches, otherwise the lexicographically smallest anchor.
  std::sort(raw.begin(), raw.end(), [](const Cand& x, const Cand& y) {
    return std::tie(x.a, x.b) < std::tie(y.a, y.b);
  });
  std::map<uint64_t, int> seen;
  for (auto& c : raw) {
    bool is_pref =
        std::any_of(prefer.begin(), prefer.end(),
                    [&](const DyadicSquare& p) { return p.members == c.members; });
    auto it = seen.find(c.mask);
    if (it == seen.end()) {
      seen[c.mask] = static_cast<int>(out.size());
      out.push_back(std::move(c));
    } else if (is_pref) {
      out[it->second] = std::move(c);
    }
  }
  return out;
}

struct CoverSearch {
  const std::vector<Cand>* cands = nullptr;
  const std::vector<DyadicSquare>* prefer = nullptr;
  int nsupp = 0;
  uint64_t full = 0;
  std::vector<std::vector<int>> by_point;
  int max_pop = 1;
  int best_size = 0;
  long long nodes = 0;
  static constexpr long long kNodeBudget = 4000000;

  // Tie-break state for the enumeration pass.
  bool have_choice = false;
  int best_missing = 0;
  std::vector<std::pair<int, int>> best_anchors;
  std::vector<int> best_cover;

  int pick_point(uint64_t covered) const {
    int best = -1, score = INT32_MAX;
    for (int p = 0; p < nsupp; ++p) {
      if (covered & (uint64_t{1} << p)) continue;
      int c = static_cast<int>(by_point[p].size());
      if (c < score) {
        score = c;
        best = p;
      }
    }
    return best;
  }

  int lb(uint64_t covered) const {
    int rem = __builtin_popcountll(full & ~covered);
    return (rem + max_pop - 1) / max_pop;
  }

  void minimize(uint64_t covered, int depth) {
    if (++nodes > kNodeBudget) return;
    if (covered == full) {
      best_size = std::min(best_size, depth);
      return;
    }
    if (depth + lb(covered) >= best_size) return;
    int p = pick_point(covered);
    for (int ci : by_point[p])
      minimize(covered | (*cands)[ci].mask, depth + 1);
  }

  void enumerate(uint64_t covered, int depth, std::vector<int>& cur) {
    if (++nodes > kNodeBudget) return;
    if (covered == full) {
      if (depth != best_size) return;
      int missing = 0;
      for (const auto& p : *prefer) {
        bool hit = std::any_of(cur.begin(), cur.end(), [&](int ci) {
          return (*cands)[ci].members == p.members;
        });
        if (!hit) ++missing;
      }
      std::vector<std::pair<int, int>> anch;
      for (int ci : cur) anch.push_back({(*cands)[ci].a, (*cands)[ci].b});
      std::sort(anch.begin(), anch.end());
      if (!have_choice || std::tie(missing, anch) <
                              std::tie(best_missing, best_anchors)) {
        have_choice = true;
        best_missing = missing;
        best_anchors = anch;
        best_cover = cur;
      }
      return;
    }
    if (depth + lb(covered) > best_size) return;
    int p = pick_point(covered);
    for (int ci : by_point[p]) {
      cur.push_back(ci);
      enumerate(covered | (*cands)[ci].mask, depth + 1, cur);
      cur.pop_back();
    }
  }
};

ScaleCover cover_search(const ChargeDensity& rho, int k,
                        const std::vector<DyadicSquare>& prefer) {
  if (k < 0) fail("PreconditionViolated", "cover scale must be nonnegative");
  const LatticeDomain& dom = *rho.dom;
  if (dom.kind == Kind::Custom)
    fail("ConfigInvalid", "covers need a grid domain");
  for (auto& [j, q] : rho.supp) {
    (void)q;
    if (j == dom.z)
      fail("PreconditionViolated", "covers need grid-site support");
  }
  if (rho.supp.size() > 64)
    fail("SupportTooLargeForExactCover", "support of ", rho.supp.size(),
         " points exceeds the exact-cover limit 64");

  auto cands = build_candidates(rho, k, prefer);
  CoverSearch s;
  s.cands = &cands;
  s.prefer = &prefer;
  s.nsupp = static_cast<int>(rho.supp.size());
  s.full = (s.nsupp >= 64) ? ~uint64_t{0} : ((uint64_t{1} << s.nsupp) - 1);
  s.by_point.assign(s.nsupp, {});
  for (int ci = 0; ci < static_cast<int>(cands.size()); ++ci)
    for (int p = 0; p < s.nsupp; ++p)
      if (cands[ci].mask & (uint64_t{1} << p)) s.by_point[p].push_back(ci);
  for (const auto& c : cands)
    s.max_pop = std::max(s.max_pop, __builtin_popcountll(c.mask));
  s.best_size = s.nsupp + 1;
  s.minimize(0, 0);
  s.nodes = 0;
  std::vector<int> cur;
  s.enumerate(0, 0, cur);

  ScaleCover out;
  out.k = k;
  out.certified = true;
  out.doubling_conflict = !prefer.empty() && s.best_missing > 0;
  for (int ci : s.best_cover) {
    DyadicSquare sq;
    sq.k = k;
    sq.a = cands[ci].a;
    sq.b = cands[ci].b;
    sq.members = cands[ci].members;
    out.squares.push_back(std::move(sq));
  }
  std::sort(out.squares.begin(), out.squares.end(),
            [](const DyadicSquare& x, const DyadicSquare& y) {
              return std::tie(x.a, x.b) < std::tie(y.a, y.b);
            });
  return out;
}

}  // namespace

ScaleCover minimal_cover(const ChargeDensity& rho, int k) {
  return cover_search(rho, k, {});
}

ScaleCover minimal_cover_preferring(
    const ChargeDensity& rho, int k,
    const std::vector<DyadicSquare>& preferred) {
  return cover_search(rho, k, preferred);
}

std::vector<int> separated_subset(const ChargeDensity& rho, int k,
                                  const ScaleCover& cover,
                                  const CoverConfig& cfg) {
  if (k < 1)
    fail("PreconditionViolated", "separated squares are defined for k >= 1");
  std::vector<int> out;
  int m = static_cast<int>(cover.squares.size());
  if (m <= 1) return out;
  double thr = cfg.sep_threshold(k);
  for (int i = 0; i < m; ++i) {
    bool sep = true;
    for (int j = 0; j < m && sep; ++j) {
      if (i == j) continue;
      if (rho.dom->set_distance(cover.squares[i].members,
                                cover.squares[j].members) < thr)
        sep = false;
    }
    if (sep) out.push_back(i);
  }
  return out;
}

MultiscaleCover build_cover(const ChargeDensity& rho, const CoverConfig& cfg) {
  cfg.validate();
  MultiscaleCover mc;
  if (rho.d == 0) {
    mc.n = 0;
    mc.S.push_back(minimal_cover(rho, 0));
    mc.sep.push_back({});
    mc.A = 0;
    return mc;
  }
  mc.n = cfg.top_scale(rho.d);
  const LatticeDomain& dom = *rho.dom;
  for (int k = 0; k <= mc.n; ++k) {
    std::vector<DyadicSquare> prefer;
    if (k >= 2 && !mc.sep[k - 1].empty() && (1LL << k) <= dom.L) {
      // Double each separated square about its center; the k-scale cover
      // prefers to contain these.
      int h = 1 << (k - 2);
      int w = 1 << k;
      for (int idx : mc.sep[k - 1]) {
        const DyadicSquare& sq = mc.S[k - 1].squares[idx];
        DyadicSquare t;
        t.k = k;
        t.a = sq.a - h;
        t.b = sq.b - h;
        if (dom.kind == Kind::Periodic) {
          t.a = ((t.a % dom.L) + dom.L) % dom.L;
          t.b = ((t.b % dom.L) + dom.L) % dom.L;
          for (int da = 0; da < w; ++da)
            for (int db = 0; db < w; ++db)
              t.members.push_back(((t.a + da) % dom.L) * dom.L +
                                  (t.b + db) % dom.L);
        } else {
          t.a = std::clamp(t.a, 0, std::max(0, dom.L - w));
          t.b = std::clamp(t.b, 0, std::max(0, dom.L - w));
          for (int da = 0; da < w && t.a + da < dom.L; ++da)
            for (int db = 0; db < w && t.b + db < dom.L; ++db)
              t.members.push_back((t.a + da) * dom.L + (t.b + db));
        }
        std::sort(t.members.begin(), t.members.end());
        t.members.erase(std::unique(t.members.begin(), t.members.end()),
                        t.members.end());
        if (std::includes(t.members.begin(), t.members.end(),
                          sq.members.begin(), sq.members.end()))
          prefer.push_back(std::move(t));
      }
    }
    mc.S.push_back(prefer.empty() ? minimal_cover(rho, k)
                                  : minimal_cover_preferring(rho, k, prefer));
    mc.sep.push_back(k >= 1 ? separated_subset(rho, k, mc.S[k], cfg)
                            : std::vector<int>{});
    mc.A += static_cast<long long>(mc.S[k].squares.size());
  }
  return mc;
}

AReport A_functional(const ChargeDensity& rho, const CoverConfig& cfg) {
  auto mc = build_cover(rho, cfg);
  AReport r;
  r.A = mc.A;
  r.lower = std::log2(rho.d + 1.0);
  r.s0 = static_cast<long long>(rho.supp.size());
  for (auto& s : mc.sep) r.sep_total += static_cast<long long>(s.size());
  r.ratio = double(r.A) / double(r.s0 + r.sep_total);
  return r;
}

ScaleRecursion prop21_constants(const CoverConfig& cfg, int k_max) {
  cfg.validate();
  ScaleRecursion r;
  r.k_max = k_max;
  double b = cfg.b(), alpha = cfg.alpha, k0 = cfg.k0();
  r.gamma_first = static_cast<int>(std::ceil(b - 1e-9));
  auto gam = [&](long long k) {
    return static_cast<long long>(std::floor((k - b) / alpha + 1e-9));
  };

  // The series sum_k 2^{-ell(k)} converges slowly; accumulate far past the
  // returned table and close with the analytic tail. The iteration count
  // satisfies ell(k) >= floor(log2(k/k0)/log2(alpha)) (the floor is needed:
  // ell(2048) = 7 while the unfloored expression is 7.55), so each tail term
  // is at most 2 (k0/k)^p with p = 1/log2(alpha) > 1.
  const long long kExt = 1LL << 22;
  std::vector<uint8_t> ell(kExt + 1, 0);
  double sum = 0;
  for (long long k = 0; k <= kExt; ++k) {
    if (k >= r.gamma_first) {
      long long g = gam(k);
      ell[k] = static_cast<uint8_t>(1 + ell[g]);
    }
    sum += std::ldexp(1.0, -int(ell[k]));
  }
  r.sum_2_neg_ell = sum;
  double p = 1.0 / std::log2(alpha);
  r.tail_bound =
      2.0 * std::pow(k0, p) * std::pow(double(kExt), 1.0 - p) / (p - 1.0);

  r.gamma.clear();
  for (int k = r.gamma_first; k <= k_max; ++k)
    r.gamma.push_back(static_cast<int>(gam(k)));
  r.ell.assign(ell.begin(), ell.begin() + k_max + 1);

  r.ratio_term = 4.0 * alpha * alpha / ((alpha - 1.0) * (2.0 - alpha));
  r.D1 = std::max(r.sum_2_neg_ell + r.tail_bound, r.ratio_term);
  return r;
}

std::map<std::pair<int, int>, long long> neutral_edge_decomposition(
    const ChargeDensity& rho) {
  if (!rho.neutral())
    fail("NotNeutral", "edge decomposition needs total charge 0, got ", rho.Q);
  const LatticeDomain& dom = *rho.dom;
  std::map<int, long long> res;
  for (auto& [j, q] : rho.supp) res[j] = q;
  std::map<std::pair<int, int>, long long> c;
  for (;;) {
    int u = -1, w = -1;
    for (auto& [j, q] : res) {
      if (q > 0 && u < 0) u = j;
      if (q < 0 && w < 0) w = j;
    }
    if (u < 0) break;
    // One unit travels u -> w along a shortest path with lexicographic
    // descent; every visited vertex is within 3d/2 of the center, hence
    // inside D(rho).
    const auto dist_to_w = [&](int x) { return dom.distance(x, w); };
    int cur = u;
    while (cur != w) {
      int next = -1;
      for (auto [nb, m] : dom.adj[cur]) {
        (void)m;
        if (dist_to_w(nb) == dist_to_w(cur) - 1 && (next < 0 || nb < next))
          next = nb;
      }
      if (cur < next)
        c[{cur, next}] += 1;
      else
        c[{next, cur}] -= 1;
      cur = next;
    }
    if (--res[u] == 0) res.erase(u);
    if (++res[w] == 0) res.erase(w);
  }
  for (auto it = c.begin(); it != c.end();)
    it = (it->second == 0) ? c.erase(it) : std::next(it);
  return c;
}

}  // namespace latlab
