#pragma once
#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <array>
#include <memory>
#include <vector>

#include "latlab/derived_constants.hpp"
#include "latlab/lattice.hpp"

namespace latlab {

// -Delta^{-1} as characterized by: constants map to 0 and -Delta is
// inverted on the mean-zero subspace. Exact Cholesky of the grounded
// Laplacian up to dense_cutoff vertices, conjugate gradients beyond.
class GreenOperator {
 public:
  explicit GreenOperator(const LatticeDomain& dom, int dense_cutoff = 4096,
                         double cg_tol = 1e-11);
  GreenOperator(const GreenOperator&) = delete;
  GreenOperator& operator=(const GreenOperator&) = delete;

  const LatticeDomain& domain() const { return *dom_; }

  // x = -Delta^{-1} f; the input is mean-centered first, the output has
  // mean zero, so constants map to 0 exactly.
  std::vector<double> apply(const std::vector<double>& f) const;
  double entry(int i, int j) const;                 // kernel g_{ij}
  double quad(const std::vector<double>& f) const;  // <f, g f>, f mean-zero

 private:
  const LatticeDomain* dom_;  // must outlive the operator
  bool use_llt_;
  double cg_tol_;
  Eigen::SparseMatrix<double> lap_red_;  // -Delta with the last row/col cut
  std::unique_ptr<Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>> llt_;
  Eigen::VectorXd solve_centered(const Eigen::VectorXd& f0) const;
};

// Full kernel matrix, built by n solves; test-sized domains only.
Eigen::MatrixXd dense_green(const GreenOperator& G);

// Checked quadratic form <f, -Delta^{-1} f>; raises NotMeanZero.
double quadratic_form(const GreenOperator& G, const std::vector<double>& f);

// Torus Green kernel (-Delta^per)^{-1} at ((0,0),(t,s)), zero Fourier mode
// dropped; the full table is computed once per side and cached.
const std::vector<double>& periodic_green_table(int L2);
double periodic_green(int L2, int t, int s);

// Reflect a function on the free L-square across both principal axes onto
// the 2L-torus: T[f]_(a,b) = f_(min(a,2L-1-a), min(b,2L-1-b)).
std::vector<double> reflect_T_fp(const std::vector<double>& f, int L);

// Backward difference operators on the 2L-torus, row-major indexing.
struct DifferenceOps {
  int L2 = 0;
  Eigen::SparseMatrix<double> d1, d2;
};
DifferenceOps difference_ops(int L2);

// Stripe dipole pair: f_y on the free L-square (+1 on column y1, -1 on
// column y1+1, rows y0..L-1) and its reflected potential F_y on the
// 2L-torus, which satisfies d2 F_y = T_fp f_y.
struct DualityPair {
  int L = 0;
  std::array<int, 2> y{};
  std::vector<double> f_y;  // on Free L
  std::vector<double> F_y;  // on Periodic 2L
};
DualityPair make_duality_pair(int L, int y0, int y1);

// Lower-bound decomposition for the stripe energy:
//   lhs      = <f_y, (-Delta^free)^{-1} f_y>
//   cross    = <d1(F_y restricted to the embedded square), G_{2L} d1 F_y>
//   d1F_form = <d1 F_y, G_{2L} d1 F_y>
// with lhs = (L-y0) - cross exactly, and the bound
//   bound    = (L-y0) - log_coeff * ln(L-y0+1).
struct StripeBound {
  double lhs = 0, bound = 0, cross = 0, d1F_form = 0;
};
StripeBound claim_green_lower(const GreenOperator& G_free, int y0, int y1,
                              double log_coeff = kStripeLogCoeff);
StripeBound claim_green_lower(int L, int y0, int y1,
                              double log_coeff = kStripeLogCoeff);

}  // namespace latlab
