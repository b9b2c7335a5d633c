#pragma once
#include <vector>

#include "latlab/density.hpp"

namespace latlab {

// Localization energy of a real field against a charge density,
//   E(a, rho) = <a, rho> - (beta/2) sum_{j~l} mult (a_j - a_l)^2.
double spinwave_energy(const LatticeDomain& d, const std::vector<double>& a,
                       const ChargeDensity& rho, double beta);

// Neutral densities from the pool that a wave for `target` must be flat
// across: diameter at most twice the target's, not the target itself.
std::vector<ChargeDensity> comparable_neighbors(
    const std::vector<ChargeDensity>& pool, const ChargeDensity& target);

// One connected component E of the union of fattened neighbourhoods
// D_plus(rho') over the comparable neighbours.
struct PlateauComponent {
  std::vector<int> verts;         // sorted
  std::vector<int> ext_boundary;  // {j outside E : dist(j, E) = 1}, sorted
  int diam = 0;
};

struct ComponentGeometry {
  std::vector<PlateauComponent> comps;
};

// Components of the union with the separation facts the energy argument
// rests on, checked at the constants in cfg:
//   d(E) >= 4 for every component;
//   (M/25) min(d(E), d(E'))^alpha <= dist(E, E') + d(E) + d(E');
//   (M/128) d(E)^alpha <= dist(E, supp target);
//   |ext_boundary| <= 64 d(E).
// A failed inequality raises PropertyViolation naming it, which signals
// that the neighbour family does not meet the admissibility preconditions
// at this constant set.
ComponentGeometry component_geometry(const LatticeDomain& d,
                                     const std::vector<ChargeDensity>& neighbors,
                                     const ChargeDensity& target,
                                     const CoverConfig& cfg);

// One additive summand of a wave, with its standalone energy.
struct WaveTerm {
  int k = -1;               // square scale; -1 for the base wave
  int anchor_a = 0;         // square anchor; (0,0) for the base wave
  int anchor_b = 0;
  long long q = 0;          // net charge the summand couples to
  int profile = 0;          // 0 base, 1 small-scale plateau, 2 log profile
  double energy = 0.0;      // E(a_term, target) of this summand alone
  std::vector<int> x_flat;  // log profile: flattening vertex per component
};

struct SpinWave {
  const LatticeDomain* dom = nullptr;
  ChargeDensity target;
  double beta = 1.0;
  std::vector<double> a;
  std::vector<WaveTerm> terms;
};

// Base wave: the target restricted to one side of the lattice bipartition,
// scaled by 1/(degree * beta). The side kept is the one holding at least
// half of ||target||_2^2, ties resolved toward the side of the
// neighbourhood center (a diameter-1 target always ties, so the center
// side always wins there). The side is an independent set, so the energy
// is exactly (1/(2 beta)) sum_side rho_j^2 / deg_j.
SpinWave build_a0(const LatticeDomain& d, const ChargeDensity& target,
                  double beta);

// Wave for one separated cover square s at scale k >= 1, coupling to the
// net charge q of the target inside s. Scales below 10 put the constant
// q/(2^{k+3} beta) on {dist(j,s) <= 1}. Larger scales use the radial
// profile b = ln(6/5) for |j|_s <= R1, ln(R2/|j|_s) up to R2, 0 beyond,
// where |j|_s = dist(j,s) + 2^{k-1}, R1 = 2^{k-1} + 2^{k-3} and
// R2 = (6/5) R1; the profile is flattened to b(x_E) on every neighbour
// component (x_E the smallest vertex of E on the R1 circle, else on the
// R2 circle, else in E) and scaled by the exact maximizer
// gamma = ln(6/5) q / (beta ||grad b_flat||^2) of the energy quadratic.
// The result must come out flat across every neighbour component;
// anything else raises PropertyViolation.
SpinWave build_as(const LatticeDomain& d, const DyadicSquare& s,
                  const ChargeDensity& target, double beta,
                  const ComponentGeometry& geom);

// Base wave plus one square wave per separated cover square at scales
// >= 1. Every edge may carry gradient from at most one summand
// (GradientOverlap otherwise), which makes the energies add exactly.
// Checks, as exact set assertions: support inside D(target), gradient
// support inside D(target), and flatness across every neighbour
// component; violations raise PropertyViolation.
SpinWave assemble_spinwave(const LatticeDomain& d, const ChargeDensity& target,
                           double beta, const MultiscaleCover& cover,
                           const ComponentGeometry& geom);

// Floor the assembled energy is measured against:
// (||target||_2^2 / 16 + kSpinEnergyRate * #separated squares) / beta.
double spinwave_energy_floor(const ChargeDensity& target,
                             const MultiscaleCover& cover, double beta);

}  // namespace latlab
