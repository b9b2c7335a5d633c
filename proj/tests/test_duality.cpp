#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "latlab/duality.hpp"
#include "latlab/lattice.hpp"

using namespace latlab;
using doctest::Contains;

namespace {

std::pair<int, int> minmax_pair(int a, int b) {
  return {std::min(a, b), std::max(a, b)};
}

// Divergence computed from scratch, independent of the member function.
std::vector<long long> divergence_table(const DualLattice& dl,
                                        const std::vector<long long>& n) {
  std::vector<long long> div(dl.primal.n, 0);
  for (size_t s = 0; s < n.size(); ++s) {
    div[dl.crossings[s].from] += n[s];
    div[dl.crossings[s].to] -= n[s];
  }
  return div;
}

}  // namespace

TEST_CASE("dual lattice pairs wired squares with free covers one size up") {
  auto dl = dual_lattice(2);
  CHECK(dl.L == 2);
  CHECK(dl.primal.kind == Kind::Zero);
  CHECK(dl.primal.n == 5);
  CHECK(dl.graph.kind == Kind::Free);
  CHECK(dl.graph.L == 3);
  CHECK(dl.graph.n == 9);
  // One crossing per wired-lattice bond, counted with multiplicity.
  CHECK(dl.crossings.size() == 12);
  CHECK(dl.graph.edges.size() == 12);
  CHECK(dl.coords.size() == 9);
  CHECK(dl.coords[0][0] == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(dl.coords[0][1] == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(dl.coords[8][0] == doctest::Approx(1.5).epsilon(1e-15));

  // The crossing list hits each cover edge exactly once.
  std::set<std::pair<int, int>> dual_pairs;
  for (const auto& c : dl.crossings)
    dual_pairs.insert(minmax_pair(c.dual_from, c.dual_to));
  CHECK(dual_pairs.size() == dl.crossings.size());
  std::set<std::pair<int, int>> cover_edges;
  for (const auto& e : dl.graph.edges) cover_edges.insert({e.u, e.v});
  for (const auto& p : dual_pairs) CHECK(cover_edges.count(p) == 1);

  // Each wired edge is crossed as many times as its multiplicity.
  std::map<std::pair<int, int>, int> primal_hits;
  for (const auto& c : dl.crossings)
    primal_hits[minmax_pair(c.from, c.to)] += 1;
  for (const auto& e : dl.primal.edges)
    CHECK(primal_hits[{e.u, e.v}] == e.mult);

  auto dl3 = dual_lattice(3);
  CHECK(dl3.primal.n == 10);
  CHECK(dl3.graph.n == 16);
  CHECK(dl3.crossings.size() == 24);

  CHECK_THROWS_WITH_AS(dual_lattice(1), Contains("PreconditionViolated"),
                       Error);
}

TEST_CASE("edge fields round-trip through dual height functions") {
  auto dl = dual_lattice(3);
  std::vector<long long> m = {0, 1,  2, 1, -1, 0, 1, 0,
                              2, 3, -2, 0, 1,  1, 0, -3};
  auto flow = edge_field_from_heights(dl, m);
  REQUIRE(flow.n.size() == dl.crossings.size());
  for (int j = 0; j < dl.primal.n; ++j) CHECK(flow.divergence(j) == 0);
  CHECK(flow.dual_heights(0) == m);

  // Heights are only defined up to a constant, so a global shift leaves the
  // flow untouched and the anchored reconstruction lands on the same rep.
  auto shifted = m;
  for (auto& v : shifted) v += 7;
  auto flow2 = edge_field_from_heights(dl, shifted);
  CHECK(flow2.n == flow.n);
  CHECK(flow2.dual_heights(0) == m);

  // Anchoring at another vertex subtracts that vertex's height.
  auto rel = flow.dual_heights(9);
  for (size_t v = 0; v < m.size(); ++v) CHECK(rel[v] == m[v] - m[9]);

  // One bumped slot breaks the zero-divergence balance at both endpoints.
  flow.n[3] += 1;
  CHECK(flow.divergence(dl.crossings[3].from) == 1);
  CHECK(flow.divergence(dl.crossings[3].to) == -1);
  CHECK_THROWS_WITH_AS(flow.dual_heights(0), Contains("PreconditionViolated"),
                       Error);
  flow.n[3] -= 1;

  CHECK_THROWS_WITH_AS(flow.dual_heights(99), Contains("UnknownVertex"),
                       Error);
  flow.n.pop_back();
  CHECK_THROWS_WITH_AS(flow.dual_heights(0), Contains("DimensionMismatch"),
                       Error);

  std::vector<long long> short_m(dl.graph.n - 1, 0);
  CHECK_THROWS_WITH_AS(edge_field_from_heights(dl, short_m),
                       Contains("DimensionMismatch"), Error);
}

TEST_CASE("zero divergence characterizes gradients over all small flows") {
  // All 3^12 flows with slot values in {-1,0,1} on the smallest dual
  // lattice.  A flow is a height gradient exactly when every wired vertex
  // balances, and the 1665 gradients (an independently counted number: the
  // 1-Lipschitz height functions on the cover anchored at vertex 0) map to
  // distinct height fields that reproduce the flow.
  auto dl = dual_lattice(2);
  const int slots = static_cast<int>(dl.crossings.size());
  REQUIRE(slots == 12);
  int total = 1;
  for (int s = 0; s < slots; ++s) total *= 3;

  OrientedEdgeField flow;
  flow.dl = &dl;
  flow.n.assign(slots, 0);
  std::set<std::vector<long long>> heights_seen;
  int gradients = 0;
  int rejects_checked = 0;
  int rejects_failed = 0;
  for (int code = 0; code < total; ++code) {
    int c = code;
    for (int s = 0; s < slots; ++s) {
      flow.n[s] = c % 3 - 1;
      c /= 3;
    }
    auto div = divergence_table(dl, flow.n);
    bool balanced =
        std::all_of(div.begin(), div.end(), [](long long d) { return d == 0; });
    if (balanced) {
      auto m = flow.dual_heights(0);
      CHECK(m[0] == 0);
      auto back = edge_field_from_heights(dl, m);
      if (back.n != flow.n) FAIL("round-trip changed a gradient flow");
      heights_seen.insert(m);
      ++gradients;
    } else if (code % 101 == 0) {
      // Exception throws are slow, so spot-check the reject branch.
      ++rejects_checked;
      try {
        flow.dual_heights(0);
      } catch (const Error& e) {
        ++rejects_failed;
      }
    }
  }
  CHECK(gradients == 1665);
  CHECK(static_cast<int>(heights_seen.size()) == gradients);
  CHECK(rejects_checked > 5000);
  CHECK(rejects_failed == rejects_checked);
}

TEST_CASE("wrapped gaussian weights match their fourier series") {
  // The workhorse identity: summing the gaussian over winding shifts equals
  // a theta-series in the conjugate integer variable, twist included.
  auto w = fourier_edge_weight(0.0, 1.0, 0.0, 20);
  CHECK(std::abs(w.lhs - w.rhs) <= 1e-10);
  CHECK(std::abs(w.lhs - w.rhs) <= w.tail + 1e-14);

  // Untwisted weights are real and even in the angle.
  for (double theta : {0.3, 1.1, 2.9}) {
    auto a = fourier_edge_weight(theta, 0.7, 0.0, 16);
    auto b = fourier_edge_weight(-theta, 0.7, 0.0, 16);
    CHECK(std::abs(a.lhs.imag()) <= 1e-15);
    CHECK(std::abs(a.rhs.imag()) <= 1e-14);
    CHECK(std::abs(a.lhs - b.lhs) <= 1e-15);
    CHECK(std::abs(a.rhs - b.rhs) <= 1e-14);
  }

  // Truncating both sides keeps them within the reported tail bound.
  for (double beta : {0.25, 1.0, 4.0})
    for (double chi : {0.0, 1.0, 0.3, -0.7})
      for (double theta : {-2.5, -0.4, 0.0, 1.7})
        for (int cut : {4, 8, 24}) {
          auto f = fourier_edge_weight(theta, beta, chi, cut);
          CHECK(std::abs(f.lhs - f.rhs) <= f.tail + 1e-14);
        }

  // For integer twists the winding phases collapse, so the twisted sum is
  // the untwisted one times a bare phase in the angle.
  for (double theta : {-1.9, 0.6, 2.2})
    for (double chi : {-2.0, 1.0, 3.0}) {
      auto plain = fourier_edge_weight(theta, 0.8, 0.0, 24);
      auto twisted = fourier_edge_weight(theta, 0.8, chi, 24);
      std::complex<double> phase =
          std::exp(std::complex<double>(0.0, -chi * theta));
      CHECK(std::abs(twisted.lhs - plain.lhs * phase) <= 1e-14);
    }

  // At small beta the series side concentrates on the integer nearest -chi;
  // here the n=0 term carries all but about exp(-4) of the mass.
  {
    double beta = 0.05, chi = 0.3, theta = 0.7;
    auto f = fourier_edge_weight(theta, beta, chi, 12);
    double amp = 1.0 / std::sqrt(2.0 * kPi * beta);
    std::complex<double> lead = amp * std::exp(-chi * chi / (2.0 * beta));
    CHECK(std::abs(f.rhs - lead) / std::abs(lead) < 0.03);
  }

  CHECK_THROWS_WITH_AS(fourier_edge_weight(0.0, 0.0, 0.0, 8),
                       Contains("PreconditionViolated"), Error);
  CHECK_THROWS_WITH_AS(fourier_edge_weight(0.0, -1.0, 0.0, 8),
                       Contains("PreconditionViolated"), Error);
  CHECK_THROWS_WITH_AS(fourier_edge_weight(0.0, 1.0, 0.0, 0),
                       Contains("PreconditionViolated"), Error);
}

TEST_CASE("angle quadrature and height enumeration agree on the small square") {
  // Both defect rows: on the 2x2 wired lattice every site is equivalent, so
  // the near and far observables are two routes to one number.
  for (double beta : {0.3, 1.0}) {
    auto far = duality_check(2, beta, 0, 0);
    auto near = duality_check(2, beta, 1, 0);
    CHECK(far.exact);
    CHECK(far.villain_se == 0.0);
    CHECK(far.iv_se == 0.0);
    CHECK(far.diff <= 3e-10);
    CHECK(near.diff <= 3e-10);
    CHECK(std::abs(far.villain - near.villain) <= 5e-12);
  }
  {
    auto r = duality_check(2, 0.3, 0, 0);
    // Pinned against silent convention drift; both routes produced it.
    CHECK(std::abs(r.villain - 0.463170014726) <= 1e-9);
    CHECK(r.diff <= 5e-12);
  }

  // Cold side: the height sum at effective temperature 3 needs a wider
  // cutoff before it matches; the default window leaves a visible gap.
  {
    DualityOptions wide;
    wide.k_cutoff = 12;
    auto far = duality_check(2, 3.0, 0, 0, wide);
    auto near = duality_check(2, 3.0, 1, 0, wide);
    CHECK(far.diff <= 5e-8);
    CHECK(near.diff <= 5e-8);
    CHECK(std::abs(far.iv - near.iv) <= 1e-8);
    CHECK(std::abs(far.villain - 0.952551494371) <= 1e-9);

    auto clipped_far = duality_check(2, 3.0, 0, 0);
    CHECK(clipped_far.diff > 1e-5);
    CHECK(clipped_far.diff < 1e-4);
    auto clipped_near = duality_check(2, 3.0, 1, 0);
    CHECK(clipped_near.diff > 1e-6);
    CHECK(clipped_near.diff < 1e-4);

    DualityOptions ten;
    ten.k_cutoff = 10;
    CHECK(duality_check(2, 3.0, 0, 0, ten).diff <= 1e-6);
  }

  // Reflection across the row axis relabels the defect row only.
  {
    auto row0 = duality_check(2, 1.0, 0, 0);
    auto row1 = duality_check(2, 1.0, 0, 1);
    CHECK(std::abs(row0.villain - row1.villain) <= 1e-10);
    CHECK(std::abs(row0.iv - row1.iv) <= 1e-10);
  }

  CHECK_THROWS_WITH_AS(duality_check(2, 1.0, 2, 0), Contains("UnknownVertex"),
                       Error);
  CHECK_THROWS_WITH_AS(duality_check(2, 1.0, 0, 2), Contains("UnknownVertex"),
                       Error);
  CHECK_THROWS_WITH_AS(duality_check(1, 1.0, 0, 0),
                       Contains("PreconditionViolated"), Error);
  CHECK_THROWS_WITH_AS(duality_check(2, 0.0, 0, 0),
                       Contains("PreconditionViolated"), Error);
}

TEST_CASE("partition functions match through the winding rewrite") {
  // Angle-integral partition function against the closed-form prefactor
  // times the untilted height sum on the cover.
  {
    auto pm = dual_partition_match(0.5);
    CHECK(std::abs(pm.villain_z - 11.92075423) <= 1e-7);
    CHECK(pm.rel_diff <= 1e-11);
  }
  {
    auto pm = dual_partition_match(1.0);
    CHECK(std::abs(pm.villain_z - 2.849378653) <= 1e-8);
    CHECK(pm.rel_diff <= 1e-9);
  }
  {
    // The default height window is the only error source left at beta 2:
    // widening it collapses the residual by five orders.
    auto pm = dual_partition_match(2.0);
    CHECK(std::abs(pm.villain_z - 0.7122773453) <= 1e-8);
    CHECK(pm.rel_diff > 1e-7);
    CHECK(pm.rel_diff < 2e-6);
    DualityOptions wide;
    wide.k_cutoff = 12;
    CHECK(dual_partition_match(2.0, wide).rel_diff <= 1e-10);
  }

  DualityOptions odd;
  odd.grid = 63;
  CHECK_THROWS_WITH_AS(dual_partition_match(1.0, odd),
                       Contains("PreconditionViolated"), Error);
  DualityOptions tiny;
  tiny.grid = 6;
  CHECK_THROWS_WITH_AS(dual_partition_match(1.0, tiny),
                       Contains("PreconditionViolated"), Error);
  CHECK_THROWS_WITH_AS(dual_partition_match(-1.0),
                       Contains("PreconditionViolated"), Error);
}

TEST_CASE("sampled duality holds within error bars past the exact sizes") {
  DualityOptions opt;
  opt.steps = 12000;
  opt.burn_in = 1500;
  opt.seed = 5;
  auto r = duality_check(3, 1.0, 0, 0, opt);
  CHECK(r.L == 3);
  CHECK_FALSE(r.exact);
  CHECK(r.villain_se > 0.0);
  CHECK(r.iv_se > 0.0);
  double combined = std::sqrt(r.villain_se * r.villain_se + r.iv_se * r.iv_se);
  CHECK(r.diff <= 4.0 * combined);

  auto again = duality_check(3, 1.0, 0, 0, opt);
  CHECK(again.villain == r.villain);
  CHECK(again.iv == r.iv);

  DualityOptions other = opt;
  other.seed = 6;
  auto moved = duality_check(3, 1.0, 0, 0, other);
  CHECK(moved.villain != r.villain);
}
