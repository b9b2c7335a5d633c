#include "latlab/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>

namespace latlab {

namespace {

constexpr double kDistTol = 1e-9;

// Disjoint sorted supports have distinct first vertices, so comparing
// fronts realizes the lexicographic order on support lists.
bool support_before(const EnsembleEntry& a, const EnsembleEntry& b) {
  return a.rho.supp.front().first < b.rho.supp.front().first;
}

std::vector<signed char> eps_combine(const std::vector<signed char>& a,
                                     int sign,
                                     const std::vector<signed char>& b) {
  if (a.size() != b.size())
    fail("PreconditionViolated", "provenance vectors over different roots");
  std::vector<signed char> r(a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    int v = int(a[i]) + sign * int(b[i]);
    if (v < -1 || v > 1)
      fail("PreconditionViolated",
           "one root density feeds both sides of a merge");
    r[i] = static_cast<signed char>(v);
  }
  return r;
}

}  // namespace

void Ensemble::validate() const {
  size_t with_eps = 0;
  for (size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (e.rho.supp.empty())
      fail("PreconditionViolated", "ensemble entry with empty density");
    if (e.rho.dom != entries[0].rho.dom)
      fail("PreconditionViolated", "ensemble spans several domains");
    if (!e.eps.empty()) {
      ++with_eps;
      if (e.eps.size() != entries[0].eps.size())
        fail("PreconditionViolated", "provenance vectors of unequal length");
    }
    for (size_t j = i + 1; j < entries.size(); ++j)
      if (!supports_disjoint(e.rho, entries[j].rho))
        fail("OverlappingSupports", "ensemble densities must not share sites");
  }
  if (with_eps != 0 && with_eps != entries.size())
    fail("PreconditionViolated", "provenance set on only part of the ensemble");
}

bool Ensemble::is_k_ensemble(int k) const {
  if (k < 0) return true;  // supports are disjoint, distances at least 1
  long long lim = 1LL << k;
  for (size_t i = 0; i < entries.size(); ++i)
    for (size_t j = i + 1; j < entries.size(); ++j)
      if (density_distance(entries[i].rho, entries[j].rho) <= lim)
        return false;
  return true;
}

int Ensemble::charged_count() const {
  int c = 0;
  for (const auto& e : entries) c += !e.rho.neutral();
  return c;
}

void reset_provenance(Ensemble& ens) {
  for (size_t i = 0; i < ens.entries.size(); ++i) {
    ens.entries[i].eps.assign(ens.entries.size(), 0);
    ens.entries[i].eps[i] = 1;
    ens.entries[i].merges = 0;
  }
}

double evaluate_ensemble_product(const Ensemble& ens,
                                 const std::vector<double>& psi) {
  double prod = 1.0;
  for (const auto& e : ens.entries) {
    if ((int)psi.size() != e.rho.dom->n)
      fail("PreconditionViolated", "field has ", psi.size(), " entries, domain ",
           e.rho.dom->n);
    double phase = 0;
    for (auto& [j, q] : e.rho.supp) phase += q * psi[j];
    prod *= 1.0 + e.K * std::cos(phase);
  }
  return prod;
}

double EnsembleMixture::coefficient_sum() const {
  double s = 0;
  for (const auto& t : terms) s += t.c;
  return s;
}

double evaluate_mixture(const EnsembleMixture& mix,
                        const std::vector<double>& psi) {
  double s = 0;
  for (const auto& t : mix.terms) s += t.c * evaluate_ensemble_product(t.ens, psi);
  return s;
}

std::array<TrigTerm, 4> trig_merge(double K1, const ChargeDensity& r1,
                                   double K2, const ChargeDensity& r2) {
  ChargeDensity diff = density_combine(r1, -1, r2);
  ChargeDensity sum = density_combine(r1, +1, r2);
  return {{{1.0 / 3, 3 * K1, r1},
           {1.0 / 3, 3 * K2, r2},
           {1.0 / 6, 3 * K1 * K2, diff},
           {1.0 / 6, 3 * K1 * K2, sum}}};
}

namespace {

struct PairChoice {
  int i = -1, j = -1;
};

// Closest pair at distance <= 2^k; scanning support-sorted entries in
// order makes the first strict minimum the (distance, lexicographic
// supports) choice.
PairChoice pick_pair(const std::vector<EnsembleEntry>& es, int k) {
  PairChoice best;
  if (k < 0) return best;
  long long lim = 1LL << k;
  long long best_dist = std::numeric_limits<long long>::max();
  for (int i = 0; i < (int)es.size(); ++i)
    for (int j = i + 1; j < (int)es.size(); ++j) {
      long long d = density_distance(es[i].rho, es[j].rho);
      if (d <= lim && d < best_dist) {
        best = {i, j};
        best_dist = d;
      }
    }
  return best;
}

// Depth-first rewrite of every pair within 2^k. Each node costs one unit
// of budget; running out raises MixtureTooLarge.
struct Expander {
  int k = 0;
  bool drop_zero = false;
  double prune_below = 0;
  bool* lossy = nullptr;
  long long* budget = nullptr;
  std::function<void(double, std::vector<EnsembleEntry>&&)> emit;

  bool keep(const EnsembleEntry& e) const {
    if (drop_zero && e.K == 0) return false;  // the factor is exactly 1
    if (prune_below > 0 && std::abs(e.K) < prune_below) {
      *lossy = true;
      return false;
    }
    return true;
  }

  void rec(double weight, std::vector<EnsembleEntry> es) {
    if (--(*budget) < 0)
      fail("MixtureTooLarge", "expansion exceeded the term budget");
    PairChoice p = pick_pair(es, k);
    if (p.i < 0) {
      emit(weight, std::move(es));
      return;
    }
    for (int survivor : {p.i, p.j}) {  // one factor eliminated, other tripled
      auto es2 = es;
      es2[survivor].K *= 3;
      es2[survivor].merges += 1;
      int gone = survivor == p.i ? p.j : p.i;
      bool kept = keep(es2[survivor]);
      es2.erase(es2.begin() + gone);
      if (!kept) es2.erase(es2.begin() + (survivor > gone ? survivor - 1 : survivor));
      rec(weight / 3, std::move(es2));
    }
    for (int sign : {-1, +1}) {  // the pair fuses into a difference / sum
      EnsembleEntry m;
      m.rho = density_combine(es[p.i].rho, sign, es[p.j].rho);
      m.K = 3 * es[p.i].K * es[p.j].K;
      m.eps = eps_combine(es[p.i].eps, sign, es[p.j].eps);
      m.merges = es[p.i].merges + es[p.j].merges + 1;
      auto es2 = es;
      es2.erase(es2.begin() + p.j);
      es2.erase(es2.begin() + p.i);
      if (keep(m)) {
        auto pos = std::lower_bound(es2.begin(), es2.end(), m, support_before);
        es2.insert(pos, std::move(m));
      }
      rec(weight / 6, std::move(es2));
    }
  }
};

}  // namespace

EnsembleMixture expand_to_k_ensemble(const Ensemble& ens, int k,
                                     long long max_terms) {
  Ensemble root = ens;
  root.validate();
  bool no_eps = true;
  for (const auto& e : root.entries) no_eps = no_eps && e.eps.empty();
  if (no_eps) reset_provenance(root);
  std::sort(root.entries.begin(), root.entries.end(), support_before);

  EnsembleMixture out;
  long long budget = max_terms;
  bool lossy = false;
  Expander ex{k, false, 0, &lossy, &budget,
              [&](double w, std::vector<EnsembleEntry>&& leaf) {
                out.terms.push_back({w, Ensemble{std::move(leaf)}});
              }};
  ex.rec(1.0, root.entries);
  return out;
}

int merge_neighbor_count(const Ensemble& root, const ChargeDensity& rho,
                         int k) {
  long long lim = k < 0 ? 0 : (1LL << k);
  int n = 0;
  for (const auto& e : root.entries)
    n += density_distance(e.rho, rho) <= lim;
  return n;
}

EnsembleMixture weights_to_density_mixture(const LatticeDomain& dom,
                                           const std::vector<TrigWeight>& w,
                                           long long max_terms) {
  if ((int)w.size() != dom.n)
    fail("PreconditionViolated", "need one weight per vertex, got ", w.size(),
         " for ", dom.n);
  std::vector<int> sites;       // vertices carrying a nonconstant factor
  std::vector<double> cn;       // C(N_j) at those sites
  long long combos = 1;
  for (int j = 0; j < dom.n; ++j) {
    int N = w[j].N();
    if (N == 0) continue;
    double c = 0;
    for (int q = 1; q <= N; ++q) c += std::exp(-double(q) * q);
    sites.push_back(j);
    cn.push_back(c);
    if (combos > max_terms / N)
      fail("MixtureTooLarge", "weight expansion has more than ", max_terms,
           " index vectors");
    combos *= N;
  }

  EnsembleMixture out;
  std::vector<int> q(sites.size(), 1);
  while (true) {
    MixtureTerm term;
    term.c = 1.0;
    for (size_t t = 0; t < sites.size(); ++t) {
      int j = sites[t];
      EnsembleEntry e;
      e.rho = make_density(dom, {{j, q[t]}});
      e.K = 2.0 * cn[t] * std::exp(double(q[t]) * q[t]) * w[j].hat(q[t]);
      term.c *= std::exp(-double(q[t]) * q[t]) / cn[t];
      term.ens.entries.push_back(std::move(e));
    }
    reset_provenance(term.ens);
    out.terms.push_back(std::move(term));
    size_t t = 0;
    for (; t < sites.size(); ++t) {
      if (q[t] < w[sites[t]].N()) {
        ++q[t];
        break;
      }
      q[t] = 1;
    }
    if (t == sites.size()) break;
  }
  return out;
}

namespace {

struct NodeEntry {
  EnsembleEntry e;
  bool frozen = false;
};

bool node_before(const NodeEntry& a, const NodeEntry& b) {
  return support_before(a.e, b.e);
}

struct Runner {
  const RenormConfig& cfg;
  double M, alpha;
  RenormResult* res;
  long long budget;
  int k_guard = 0;

  double sep_need(int d) const { return M * std::pow(double(d), alpha); }

  // Freezing pass: neutral unfrozen densities in ascending (diameter,
  // lexicographic support) order freeze when far from every other neutral
  // density and from everything still unfrozen.
  void g_scan(std::vector<NodeEntry>& node) const {
    std::vector<int> cand;
    for (int i = 0; i < (int)node.size(); ++i)
      if (!node[i].frozen && node[i].e.rho.neutral()) cand.push_back(i);
    std::sort(cand.begin(), cand.end(), [&](int x, int y) {
      if (node[x].e.rho.d != node[y].e.rho.d)
        return node[x].e.rho.d < node[y].e.rho.d;
      return node_before(node[x], node[y]);
    });
    for (int idx : cand) {
      const ChargeDensity& r = node[idx].e.rho;
      bool ok = true;
      for (int t = 0; ok && t < (int)node.size(); ++t) {
        if (t == idx) continue;
        const ChargeDensity& r1 = node[t].e.rho;
        long long dist = density_distance(r, r1);
        if (r1.neutral() &&
            dist < sep_need(std::min(r.d, r1.d)) - kDistTol)
          ok = false;
        if (!node[t].frozen && dist < sep_need(r.d) - kDistTol) ok = false;
      }
      if (ok) node[idx].frozen = true;
    }
  }

  void claim_check(const std::vector<NodeEntry>& node, int k) const {
    for (const auto& ne : node)
      if (ne.e.rho.neutral() && !ne.frozen &&
          sep_need(ne.e.rho.d) <= double(1LL << k) + kDistTol)
        res->absorbed_all = false;
  }

  TermChecks audit(const std::vector<NodeEntry>& node) const {
    TermChecks tc;
    int charged = 0;
    for (const auto& ne : node) {
      bool n = ne.e.rho.neutral();
      charged += !n;
      if (!ne.frozen && n) tc.leftover_charged = false;
    }
    tc.single_charged = charged <= 1;
    tc.pairwise_separated = true;
    for (size_t i = 0; i < node.size(); ++i)
      for (size_t j = 0; j < node.size(); ++j) {
        if (i == j) continue;
        const ChargeDensity& a = node[i].e.rho;
        const ChargeDensity& b = node[j].e.rho;
        long long dist = density_distance(a, b);
        if (j > i && dist < sep_need(std::min(a.d, b.d)) - kDistTol)
          tc.pairwise_separated = false;
        if (a.neutral() && !b.neutral() && dist < sep_need(a.d) - kDistTol)
          tc.pairwise_separated = false;
      }
    for (const auto& ne : node) split_audit(ne.e.rho, tc);
    return tc;
  }

  // Splits a neutral rho over support bipartitions; far-apart halves must
  // both carry charge. (Halves of a neutral density have opposite total
  // charge, so a violation is a split into two neutral halves.)
  void split_audit(const ChargeDensity& rho, TermChecks& tc) const {
    if (!rho.neutral()) return;
    if (rho.norm1 > cfg.split_cap) {
      tc.split_exhaustive = false;
      return;
    }
    int s = (int)rho.supp.size();
    if (s < 2) return;
    const LatticeDomain& dom = *rho.dom;
    for (unsigned mask = 1; mask < (1u << s) - 1; mask += 2) {
      // bit 0 always in the first half, so each unordered split comes once
      std::vector<int> v1, v2;
      int q1 = 0, q2 = 0;
      for (int t = 0; t < s; ++t) {
        if (mask >> t & 1) {
          v1.push_back(rho.supp[t].first);
          q1 += rho.supp[t].second;
        } else {
          v2.push_back(rho.supp[t].first);
          q2 += rho.supp[t].second;
        }
      }
      int dmin = std::min(dom.set_diameter(v1), dom.set_diameter(v2));
      if (dom.set_distance(v1, v2) >=
              2.0 * M * std::pow(double(dmin), alpha) - kDistTol &&
          (q1 == 0 || q2 == 0))
        tc.split_charge_ok = false;
    }
  }

  void finalize(double c, std::vector<NodeEntry>&& node) {
    if (--budget < 0)
      fail("MixtureTooLarge", "renormalization exceeded the term budget");
    res->checks.push_back(audit(node));
    MixtureTerm term;
    term.c = c;
    for (auto& ne : node) term.ens.entries.push_back(std::move(ne.e));
    res->mixture.terms.push_back(std::move(term));
  }

  void step(double c, std::vector<NodeEntry> node, int k) {
    int free_count = 0;
    for (const auto& ne : node) free_count += !ne.frozen;
    if (free_count <= 1) {
      finalize(c, std::move(node));
      return;
    }
    if (k > k_guard)
      fail("NonTermination", "unfrozen densities remain past scale ", k_guard);
    res->k_stop = std::max(res->k_stop, k);

    std::vector<EnsembleEntry> free_es;
    std::vector<NodeEntry> frozen_es;
    for (auto& ne : node) {
      if (ne.frozen)
        frozen_es.push_back(ne);
      else
        free_es.push_back(ne.e);
    }
    Expander ex{k, cfg.drop_zero_K, cfg.prune_below, &res->mixture.lossy,
                &budget, [&](double w, std::vector<EnsembleEntry>&& leaf) {
                  std::vector<NodeEntry> child = frozen_es;
                  for (auto& e : leaf) child.push_back({std::move(e), false});
                  std::sort(child.begin(), child.end(), node_before);
                  g_scan(child);
                  claim_check(child, k);
                  step(c * w, std::move(child), k + 1);
                }};
    ex.rec(1.0, std::move(free_es));
  }
};

}  // namespace

RenormResult run_renormalization(const EnsembleMixture& initial,
                                 const RenormConfig& cfg) {
  cfg.cover.validate();
  double csum = initial.coefficient_sum();
  if (std::abs(csum - 1.0) > 1e-9)
    fail("NotNormalized", "mixture coefficients sum to ", csum);
  for (const auto& t : initial.terms)
    if (!(t.c > 0))
      fail("NotNormalized", "mixture coefficients must be positive");

  RenormResult res;
  res.mixture.lossy = initial.lossy;
  Runner run{cfg, double(cfg.cover.M), cfg.cover.alpha, &res, cfg.max_terms};
  for (const auto& term : initial.terms) {
    Ensemble ens = term.ens;
    ens.validate();
    bool no_eps = true;
    for (const auto& e : ens.entries) no_eps = no_eps && e.eps.empty();
    if (no_eps) reset_provenance(ens);

    std::vector<NodeEntry> node;
    for (auto& e : ens.entries) {
      if (cfg.drop_zero_K && e.K == 0) continue;
      if (cfg.prune_below > 0 && std::abs(e.K) < cfg.prune_below) {
        res.mixture.lossy = true;
        continue;
      }
      node.push_back({std::move(e), false});
    }
    std::sort(node.begin(), node.end(), node_before);

    run.k_guard = cfg.k_slack;
    if (!node.empty()) {
      const LatticeDomain& dom = *node[0].e.rho.dom;
      std::vector<int> all(dom.n);
      for (int v = 0; v < dom.n; ++v) all[v] = v;
      int diam = std::max(1, dom.set_diameter(all));
      run.k_guard =
          (int)std::ceil(std::log2(double(diam))) + cfg.k_slack;
    }
    run.step(term.c, std::move(node), 0);
  }
  return res;
}

GrowthReport check_growth_bound(const RenormResult& res,
                                const std::vector<TrigWeight>& w,
                                const CoverConfig& cover, double D2) {
  GrowthReport rep;
  rep.max_log_excess = -std::numeric_limits<double>::infinity();
  rep.observed_D2 = -std::numeric_limits<double>::infinity();
  std::map<std::vector<std::pair<int, int>>, double> a_cache;
  for (const auto& term : res.mixture.terms)
    for (const auto& e : term.ens.entries) {
      const ChargeDensity& rho = e.rho;
      if (!rho.neutral()) continue;
      if ((int)w.size() != rho.dom->n)
        fail("PreconditionViolated", "need one weight per vertex");
      ++rep.densities_checked;
      double site_log = 0;
      bool zero_bound = false;
      for (auto& [j, q] : rho.supp) {
        double lam = std::abs(w[j].hat(std::abs(q)));
        if (lam == 0) {
          zero_bound = true;
          break;
        }
        site_log += double(q) * q + std::log(lam);
      }
      if (zero_bound) {
        // the bound degenerates to zero; only a zero coefficient passes
        if (e.K != 0) {
          rep.ok = false;
          rep.max_log_excess = std::numeric_limits<double>::infinity();
        }
        continue;
      }
      if (e.K == 0) continue;
      auto it = a_cache.find(rho.supp);
      if (it == a_cache.end())
        it = a_cache.insert({rho.supp, double(A_functional(rho, cover).A)})
                 .first;
      double A = it->second;  // neutral density: d >= 1, so A >= 2
      double log_K = std::log(std::abs(e.K));
      double excess = log_K - (D2 * A + site_log);
      rep.max_log_excess = std::max(rep.max_log_excess, excess);
      if (excess > kDistTol) rep.ok = false;
      rep.observed_D2 = std::max(rep.observed_D2, (log_K - site_log) / A);
    }
  if (rep.densities_checked == 0 ||
      rep.max_log_excess == -std::numeric_limits<double>::infinity())
    rep.max_log_excess = 0;
  if (rep.observed_D2 == -std::numeric_limits<double>::infinity())
    rep.observed_D2 = 0;
  return rep;
}

}  // namespace latlab
