#pragma once
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "latlab/lattice.hpp"

namespace latlab {

// Sparse integer function on the vertices, not identically zero.
struct ChargeDensity {
  const LatticeDomain* dom = nullptr;
  std::vector<std::pair<int, int>> supp;  // (vertex, charge), sorted, charge!=0
  int Q = 0;                              // total charge
  int d = 0;                              // support diameter (graph metric)
  long long norm2sq = 0;                  // sum of squared charges
  long long norm1 = 0;                    // sum of absolute charges

  bool neutral() const { return Q == 0; }
  int charge_at(int vertex) const;
  std::vector<int> support_vertices() const;
};

ChargeDensity make_density(const LatticeDomain& dom,
                           const std::map<int, int>& values);

// Minimum graph distance between the two supports (same domain required).
int density_distance(const ChargeDensity& r1, const ChargeDensity& r2);

bool supports_disjoint(const ChargeDensity& r1, const ChargeDensity& r2);

// r1 + sign*r2 for disjoint supports; sign is +1 or -1. Disjointness keeps
// the sum away from zero, so the result is a valid density.
ChargeDensity density_combine(const ChargeDensity& r1, int sign,
                              const ChargeDensity& r2);

// Center = lexicographically smallest support vertex realizing the
// diameter; D = ball of radius < 2d around it (just the site when d=0);
// D_plus fattens D by one step.
struct DensityNeighborhood {
  int center = -1;
  std::vector<int> D, D_plus;  // sorted vertex lists
};
DensityNeighborhood center_and_D(const ChargeDensity& rho);

// Multiscale cover parameters; alpha in (3/2,2), M a power of two.
struct CoverConfig {
  double alpha = 1.75;
  long long M = 65536;

  double b() const;         // alpha + 3 + log2(M)
  double k0() const;        // (alpha + b) / (alpha - 1)
  double sep_threshold(int k) const;  // 2 M 2^{alpha(k+1)}
  int top_scale(int d) const;         // ceil(log2(M d^alpha)), d >= 1
  void validate() const;              // raises ConfigInvalid
};

// Minimum-cardinality cover of the support by 2^k x 2^k squares,
// certified exact for supports up to 64 points (branch-and-bound over
// canonical anchors); the greedy fallback beyond that is labeled.
struct ScaleCover {
  int k = 0;
  std::vector<DyadicSquare> squares;
  bool certified = true;
  bool doubling_conflict = false;  // preferred doubled square unavailable
};
ScaleCover minimal_cover(const ChargeDensity& rho, int k);
// Same, preferring covers that contain the given squares (the scale k-1
// separated squares doubled about their centers), then lex anchors. The
// preferred squares join the candidate pool even when not canonical.
ScaleCover minimal_cover_preferring(const ChargeDensity& rho, int k,
                                    const std::vector<DyadicSquare>& preferred);

// Indices into cover.squares of squares far from all others at scale k.
std::vector<int> separated_subset(const ChargeDensity& rho, int k,
                                  const ScaleCover& cover,
                                  const CoverConfig& cfg);

struct MultiscaleCover {
  int n = 0;                     // top scale
  std::vector<ScaleCover> S;     // scales 0..n
  std::vector<std::vector<int>> sep;  // per-scale separated indices
  long long A = 0;               // sum of cover sizes, 0 when d=0
};
MultiscaleCover build_cover(const ChargeDensity& rho, const CoverConfig& cfg);

struct AReport {
  long long A = 0;
  double lower = 0;        // log2(d+1)
  long long s0 = 0;        // |S_0| = support size
  long long sep_total = 0; // sum over scales of separated-square counts
  double ratio = 0;        // A / (s0 + sep_total)
};
AReport A_functional(const ChargeDensity& rho, const CoverConfig& cfg);

// Tabulates the scale-recursion bookkeeping behind the cover bound and
// assembles its explicit constant.
struct ScaleRecursion {
  int k_max = 0;
  std::vector<int> gamma;       // gamma(k) for k in [ceil(b), k_max]
  int gamma_first = 0;          // smallest k with gamma defined
  std::vector<int> ell;         // ell(k) for k in [0, k_max]
  double sum_2_neg_ell = 0;     // partial sum of 2^{-ell(k)} over the table
  double tail_bound = 0;        // analytic bound on the rest of the series
  double ratio_term = 0;        // 4 alpha^2 / ((alpha-1)(2-alpha))
  double D1 = 0;                // max(partial+tail, ratio_term)
};
ScaleRecursion prop21_constants(const CoverConfig& cfg, int k_max = 2048);

// Writes a neutral density as an edge telescope: <sigma, rho> =
// sum c_e (sigma_j - sigma_l) over edges e={j,l}, j<l, with all edges
// inside D(rho) and |c_e| <= ||rho||_1 / 2.
std::map<std::pair<int, int>, long long> neutral_edge_decomposition(
    const ChargeDensity& rho);

}  // namespace latlab
