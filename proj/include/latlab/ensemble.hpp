#pragma once
#include <array>
#include <vector>

#include "latlab/density.hpp"
#include "latlab/weights.hpp"

namespace latlab {

// One factor 1 + K cos<psi, rho> of a product over an ensemble. eps records
// how rho decomposes over the root ensemble the factor descends from
// (rho = sum_i eps[i] * root_i with eps values in {-1,0,+1}); merges counts
// the pair rewrites that each contributed a factor 3 to K. Both start
// trivial (identity eps, zero merges) for a freshly built ensemble.
struct EnsembleEntry {
  ChargeDensity rho;
  double K = 0;
  std::vector<signed char> eps;
  int merges = 0;
};

// Charge densities with pairwise disjoint supports, each weighted by a
// coefficient; represents the function psi -> prod (1 + K cos<psi, rho>).
struct Ensemble {
  std::vector<EnsembleEntry> entries;

  void validate() const;            // disjoint supports on one domain
  bool is_k_ensemble(int k) const;  // pairwise support distance > 2^k
  int charged_count() const;        // entries with nonzero total charge
};

// Sets eps to the identity over the ensemble's own entries and zeroes the
// merge counters, making the ensemble its own root.
void reset_provenance(Ensemble& ens);

double evaluate_ensemble_product(const Ensemble& ens,
                                 const std::vector<double>& psi);

struct MixtureTerm {
  double c = 0;
  Ensemble ens;
};

// Convex combination of ensembles: positive coefficients summing to one.
struct EnsembleMixture {
  std::vector<MixtureTerm> terms;
  bool lossy = false;  // small-coefficient factors were pruned

  double coefficient_sum() const;
};

double evaluate_mixture(const EnsembleMixture& mix,
                        const std::vector<double>& psi);

// Rewrites one pair of factors with disjoint supports as a convex
// combination of single factors:
//   (1 + K1 cos<psi,r1>)(1 + K2 cos<psi,r2>)
//     = 1/3 (1 + 3 K1 cos<psi,r1>)      [r2 eliminated]
//     + 1/3 (1 + 3 K2 cos<psi,r2>)      [r1 eliminated]
//     + 1/6 (1 + 3 K1 K2 cos<psi,r1-r2>)
//     + 1/6 (1 + 3 K1 K2 cos<psi,r1+r2>),
// returned in that order. Raises OverlappingSupports otherwise.
struct TrigTerm {
  double weight = 0;
  double K = 0;
  ChargeDensity rho;
};
std::array<TrigTerm, 4> trig_merge(double K1, const ChargeDensity& r1,
                                   double K2, const ChargeDensity& r2);

// Repeatedly rewrites the closest pair at distance <= 2^k (ties broken by
// lexicographic support) until every branch has pairwise distances above
// 2^k. The output coefficients sum to one, every output density is a
// signed subset sum of input densities (tracked in eps), and each output
// coefficient is exactly +-3^merges times a product of input coefficients.
// An input that is already a k-ensemble passes through as a single term.
EnsembleMixture expand_to_k_ensemble(const Ensemble& ens, int k,
                                     long long max_terms = 1 << 22);

// Number of root densities within distance 2^k of rho (its own
// constituents included): the count that caps the factor-3 merges any
// descendant of the root ensemble can accumulate in one scale-k pass.
int merge_neighbor_count(const Ensemble& root, const ChargeDensity& rho,
                         int k);

// Rewrites prod_j lambda_j(psi(j)) over the whole vertex set as a convex
// combination of ensembles of single-site densities q delta_j:
//   coefficient   xi(q) = prod_j e^{-q_j^2} / C(N_j),
//   factor weight z_j(q_j) = 2 C(N_j) e^{q_j^2} hat(lambda_j)(q_j),
// with C(N) = sum_{q=1}^{N} e^{-q^2} and q_j ranging over 1..N_j. Sites
// whose weight is the constant 1 (N_j = 0) contribute no factor. The
// enumeration is exact; it refuses to materialize more than max_terms
// combinations (MixtureTooLarge).
EnsembleMixture weights_to_density_mixture(const LatticeDomain& dom,
                                           const std::vector<TrigWeight>& w,
                                           long long max_terms = 1 << 22);

struct RenormConfig {
  CoverConfig cover;
  // Factors with |K| below this are dropped and the result marked lossy;
  // zero keeps everything. Factors with K exactly zero are the constant 1
  // and are always removed; that loses nothing.
  double prune_below = 0;
  bool drop_zero_K = true;
  long long max_terms = 1 << 22;
  int k_slack = 4;        // scales past the merge-all point before giving up
  long long split_cap = 6;  // exhaustive split checks up to this 1-norm
};

// Structure audit of one terminal ensemble.
struct TermChecks {
  bool single_charged = false;     // at most one non-neutral density
  bool leftover_charged = true;    // a density left unfrozen is non-neutral
  bool pairwise_separated = false; // dist >= M min(d1,d2)^alpha for every
                                   // pair, and every neutral rho keeps
                                   // dist >= M d(rho)^alpha from the
                                   // charged one
  bool split_charge_ok = true;     // every split of a neutral rho = r1 + r2
                                   // with dist(r1,r2) >= 2M min(d1,d2)^alpha
                                   // has both halves charged
  bool split_exhaustive = true;    // false when a neutral density exceeded
                                   // split_cap
};

struct RenormResult {
  EnsembleMixture mixture;          // terminal ensembles, frozen set included
  std::vector<TermChecks> checks;   // parallel to mixture.terms
  int k_stop = -1;                  // largest scale any branch processed
  // Whenever the freezing threshold M d^alpha fell below 2^k, the density
  // was already frozen; false flags a violation of that absorption rule.
  bool absorbed_all = true;
};

// Coarsens the initial mixture scale by scale: at scale k the not-yet-
// frozen part of each ensemble is expanded to a k-ensemble, then neutral
// densities far from everything else (dist >= M min(d,d')^alpha from every
// neutral density, dist >= M d^alpha from every unfrozen one) freeze in
// ascending (diameter, lexicographic support) order. Branches stop once at
// most one unfrozen density remains. Raises NonTermination if a branch
// survives past the merge-all scale plus k_slack, MixtureTooLarge on
// combinatorial blowup.
RenormResult run_renormalization(const EnsembleMixture& initial,
                                 const RenormConfig& cfg);

// Coefficient growth audit against the per-site weights that built the
// initial mixture: for every neutral density of every terminal ensemble,
//   |K(rho)| <= e^{D2 A(rho)} prod_j e^{rho(j)^2} |hat(lambda_j)(|rho(j)|)|.
// observed_D2 is the smallest D2 that would satisfy every instance with
// A(rho) > 0 (the empirical counterpart of the frozen constant).
struct GrowthReport {
  bool ok = true;
  double max_log_excess = 0;  // max over densities of log|K| - log bound
  double observed_D2 = 0;
  long long densities_checked = 0;
};
GrowthReport check_growth_bound(const RenormResult& res,
                                const std::vector<TrigWeight>& w,
                                const CoverConfig& cover, double D2);

}  // namespace latlab
