#pragma once
// Planar duality between the rotator model on the wired square and an
// integer-height field on the dual graph. The faces of the wired square of
// side L form a free square of side L+1; every primal edge slot is crossed
// by exactly one dual edge. Expanding each rotator edge weight in a Fourier
// series turns the angular integral into a sum over divergence-free integer
// flows, and those flows are exactly the gradients of dual height fields.

#include <array>
#include <complex>
#include <cstdint>
#include <vector>

#include "latlab/fields.hpp"
#include "latlab/lattice.hpp"

namespace latlab {

// One primal edge slot together with the dual edge crossing it. The primal
// edge is stored oriented (either endpoint may be the wired vertex); the
// dual edge is oriented by rotating the primal arrow a quarter turn
// clockwise, so height differences along dual edges match the flow values
// carried by the primal slots.
struct EdgeCrossing {
  int from = 0, to = 0;            // oriented primal edge
  int dual_from = 0, dual_to = 0;  // oriented dual edge, indices in `graph`
};

// The planar dual of the wired square of side L. Wired-edge multiplicities
// are unrolled: a corner contributes two slots, one per boundary direction,
// and `crossings` pairs every slot with its own dual edge.
struct DualLattice {
  int L = 0;                // primal side
  LatticeDomain primal;     // wired square of side L
  LatticeDomain graph;      // free square of side L+1, the dual graph
  std::vector<std::array<double, 2>> coords;  // half-integer dual positions
  std::vector<EdgeCrossing> crossings;        // one per primal edge slot
};

// Builds the dual for side L > 1 with a fixed deterministic labeling:
// free horizontal slots point toward smaller first coordinate, free
// vertical slots toward smaller second coordinate, and every wired slot
// points from the wired vertex into the lattice.
DualLattice dual_lattice(int L);

// Integer flow on the oriented primal slots. Only the oriented value is
// stored; traversing a slot against its arrow negates the value.
struct OrientedEdgeField {
  const DualLattice* dl = nullptr;
  std::vector<long long> n;  // parallel to dl->crossings

  // Net outflow at a primal vertex, wired vertex included.
  long long divergence(int j) const;
  // Recovers the heights m on the dual graph with m[v] = 0. The flow must
  // be divergence-free at every primal vertex; anything else is not a dual
  // gradient and raises PreconditionViolated.
  std::vector<long long> dual_heights(int v = 0) const;
};

// The gradient flow of a dual height field: each slot carries the height
// difference along its dual edge. Divergence-free by construction.
OrientedEdgeField edge_field_from_heights(const DualLattice& dl,
                                          const std::vector<long long>& m);

// Indicator, parallel to crossings, of the defect line tied to the primal
// site (x0, x1): the slots walking the first coordinate from x0 out to the
// boundary at fixed x1, plus the wired slot continuing that walk.
std::vector<int> defect_path(const DualLattice& dl, int x0, int x1);

// Both sides of the per-edge Fourier identity
//   sum_m exp(-beta/2 (theta + 2 pi m)^2 - i chi (theta + 2 pi m))
//     = (2 pi beta)^{-1/2} sum_n exp(-(n + chi)^2 / (2 beta)) e^{i n theta},
// truncated to |m|, |n| <= n_cut. The twist rides along the wrapped angle,
// which matches the bare twist exp(-i chi theta) whenever chi is an
// integer and keeps the identity exact for every real chi. `tail` bounds
// |lhs - rhs| by the omitted terms of both sums.
struct FourierWeight {
  std::complex<double> lhs, rhs;
  double tail = 0;
};
FourierWeight fourier_edge_weight(double theta, double beta, double chi,
                                  int n_cut);

// Two-sided evaluation of the correspondence: the rotator cosine at a
// primal site against the tilted height expectation on the dual graph at
// inverse coupling. Side 2 is evaluated exactly (tensor quadrature against
// truncated height sums); larger sides run one chain per side.
struct DualityReport {
  int L = 0;
  double beta = 0;
  int x0 = 0, x1 = 0;
  double villain = 0, iv = 0, diff = 0;
  double villain_se = 0, iv_se = 0;  // zero on the exact path
  bool exact = false;
};

struct DualityOptions {
  int k_cutoff = 8;          // dual-side height cut
  int m_cut = 8;             // rotator wrapped-sum cut
  int grid = 64;             // quadrature nodes per angle on the exact path
  uint64_t seed = 0;         // chains only
  long long steps = 20000;   // recorded sweeps per chain
  long long burn_in = 2000;  // discarded sweeps per chain
};

DualityReport duality_check(int L, double beta, int x0, int x1,
                            const DualityOptions& opt = {});

// Partition-function form of the same correspondence at side 2: the
// rotator partition value (wired angle fixed to zero, free angles over one
// period) against the prefactored dual height sum
//   (2 pi beta)^{-|slots|/2} (2 pi)^{sites} sum_m exp(-|grad m|^2/(2 beta)).
struct PartitionMatch {
  double villain_z = 0, iv_z = 0, rel_diff = 0;
};
PartitionMatch dual_partition_match(double beta,
                                    const DualityOptions& opt = {});

}  // namespace latlab
