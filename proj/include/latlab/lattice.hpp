#pragma once
#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "latlab/common.hpp"

namespace latlab {

enum class Kind { Free, Periodic, Zero, Custom };

std::string kind_name(Kind k);
Kind kind_from_name(const std::string& s);

struct Edge {
  int u, v;   // u < v
  int mult;   // >= 1; parallel edges (Zero boundary) collapse into mult
};

struct DistCache;  // lazily built all-pairs table, shared between copies

// Square domain with free / periodic / wired-zero boundary. Vertices are
// row-major, (a,b) -> a*L+b, the wired vertex z last (Zero only). Custom
// graphs back the tiny closed-form oracles (paths, single edges).
struct LatticeDomain {
  Kind kind = Kind::Custom;
  int L = 0;   // side length, 0 for Custom
  int n = 0;   // vertex count
  int z = -1;  // wired vertex index, -1 if absent
  std::vector<std::array<int, 2>> coord;              // z gets (-1,-1)
  std::vector<Edge> edges;                            // sorted by (u,v)
  std::vector<std::vector<std::pair<int, int>>> adj;  // (neighbor, mult)
  std::vector<int> degree;                            // multiplicity-weighted

  int index(int a, int b) const;
  bool has_site(int a, int b) const;

  int distance(int j, int l) const;
  // dist(A,B) = min over pairs; diameter of a vertex subset.
  int set_distance(const std::vector<int>& A, const std::vector<int>& B) const;
  int set_diameter(const std::vector<int>& A) const;

 private:
  friend LatticeDomain build_domain(Kind, int);
  friend LatticeDomain custom_domain(int, const std::vector<Edge>&);
  void finalize();  // adj/degree from edges, connectivity check
  std::shared_ptr<DistCache> dist_;
};

struct DyadicSquare {
  int k = 0;
  int a = 0, b = 0;          // anchor
  std::vector<int> members;  // sorted vertex indices
};

LatticeDomain build_domain(Kind kind, int L);
// Arbitrary connected multigraph on n vertices; coords are (i,0).
LatticeDomain custom_domain(int n, const std::vector<Edge>& edges);

// (Delta f)(j) = sum over edges at j, with multiplicity, of f_l - f_j.
std::vector<double> laplacian_apply(const LatticeDomain& d,
                                    const std::vector<double>& f);

int graph_distance(const LatticeDomain& d, int j, int l);

// Distance of every vertex to the nearest source, by one breadth-first
// sweep; the cheap way to measure against a whole square or support.
std::vector<int> distances_from(const LatticeDomain& d,
                                const std::vector<int>& sources);

// Checkerboard split; Omega1 contains (a+b) even. Zero domains have odd
// cycles through z whenever a boundary vertex multiplicity exceeds 1.
std::pair<std::vector<int>, std::vector<int>> bipartition(
    const LatticeDomain& d);

// All distinct 2^k x 2^k squares; one whole-domain square once 2^k covers it.
std::vector<DyadicSquare> enumerate_squares(const LatticeDomain& d, int k);

// Dirichlet energy <f, -Delta f> = sum_{j~l} mult * (f_j - f_l)^2.
double dirichlet_energy(const LatticeDomain& d, const std::vector<double>& f);

}  // namespace latlab
