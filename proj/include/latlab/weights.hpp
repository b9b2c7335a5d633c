#pragma once

#include <vector>

#include "latlab/density.hpp"

namespace latlab {

// Real, even, normalized trigonometric polynomial
//   lambda(phi) = 1 + 2 sum_{q=1}^{N} hat(q) cos(q phi),
// stored by its cosine coefficients. An empty coefficient list is the
// constant weight 1.
struct TrigWeight {
  std::vector<double> coeffs;  // coeffs[q-1] = hat(q)

  int N() const { return static_cast<int>(coeffs.size()); }
  double hat(int q) const;  // hat(0) = 1, hat(q) = 0 beyond N
  double operator()(double phi) const;
};

// hat(q) = 1 - q/N for q <= N. Nonnegative, and sub-Gaussian with
// Gamma = 1, eta = theta = 0 at every temperature.
TrigWeight fejer(int N);

// Decay condition on the coefficients:
//   |hat(q)| <= Gamma exp[(eta + theta / beta) q^2]  for all q >= 1.
struct SubGaussianParams {
  double Gamma = 1;
  double eta = 0;
  double theta = 0;  // must stay below 1/16 for the decay chain to close
  double beta = 1;
  void validate() const;
};

struct SubGaussianWitness {
  bool ok = true;
  int q = 0;          // violating frequency when !ok
  double excess = 0;  // |hat(q)| - allowed bound at that frequency
};

SubGaussianWitness is_sub_gaussian(const TrigWeight& w,
                                   const SubGaussianParams& p);

// Per-density expansion coefficient z = K exp(-E), where E is the value of
// the quadratic functional <a, rho> - (beta/2) <a, -Lap a> at the spin wave
// attached to the density.
struct ZCoefficient {
  double K = 0;
  double E = 0;
  double z = 0;
};
ZCoefficient make_z_coefficient(double K, double E);

// Absolute constants entering the decay chain: D1 bounds the cover
// functional A by the scale-0 and separated square counts, D2 controls the
// growth of |K| per unit of A, D3 is the rate extracted from the spin-wave
// energy per separated square.
struct ChainConstants {
  double D1 = 0;
  double D2 = 0;
  double D3 = 0;
};

// The closing of the decay chain: gamma is chosen so that
// 1/16 - D3/gamma - theta = (1/16 - theta)/2 > 0, and the resulting decay
// rate per unit of ||rho||_2^2 and of log2(d+1) is
//   c1_sq  = (1/16 - theta - D3/gamma) - beta (max(ln Gamma, 0) + 1 + eta)
//   c1_log = D3 / (gamma D1) - beta D2
// with c1 = min of the two. c1 > 0 makes the chain a theorem for any K
// obeying the cover-growth bound and any E obeying the spin-wave bound.
struct ChainRates {
  double gamma = 0;
  double c1_sq = 0;
  double c1_log = 0;
  double c1 = 0;
};
ChainRates chain_rates(const SubGaussianParams& p, const ChainConstants& c);

// Largest beta in the grid with chain_rates(...).c1 > 0, or 0 if none.
double empirical_beta0(const SubGaussianParams& p, const ChainConstants& c,
                       const std::vector<double>& beta_grid);

struct ZBoundReport {
  double z = 0;              // K exp(-E), recomputed
  double eloc_exponent = 0;  // (||rho||_2^2 / 16 + D3 sep_total) / beta
  double eloc_margin = 0;    // E - eloc_exponent; >= 0 for a valid spin wave
  ChainRates rates;
  double decay_margin = 0;  // -ln|z| - (c1/beta)(||rho||_2^2 + log2(d+1))
  bool eloc_ok = false;
  bool decay_ok = false;  // c1 > 0 and decay_margin >= 0
};

// Evaluates both decay bounds on a z-coefficient: the local one coming
// directly from the spin-wave energy and the separated-square counts of the
// cover, and the closed-chain one with rate c1.
ZBoundReport z_bound_check(const ZCoefficient& zc, const ChargeDensity& rho,
                           const MultiscaleCover& cover,
                           const SubGaussianParams& p,
                           const ChainConstants& consts);

}  // namespace latlab
