#pragma once
#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <memory>
#include <vector>

#include "latlab/green.hpp"
#include "latlab/lattice.hpp"
#include "latlab/rng.hpp"
#include "latlab/weights.hpp"

namespace latlab {

enum class FieldKind { Gff, Iv, Villain };

// One configuration of a lattice field: real heights for the free-field and
// rotator kinds, integer heights for the integer-valued kind. v is the
// normalization vertex (the wired vertex for the rotator).
struct FieldConfig {
  FieldKind kind = FieldKind::Gff;
  int v = 0;
  std::vector<double> real;     // Gff / Villain heights
  std::vector<long long> ints;  // Iv heights
};

// Rejects a malformed configuration: wrong value-vector size, free-field
// height at v outside [-pi,pi), nonzero integer height at v, rotator heights
// away from the wired vertex normalization or outside [-pi,pi).
void validate_field(const LatticeDomain& d, const FieldConfig& c);

// Shared knobs of the samplers and exact oracles. weights, when present,
// holds one trigonometric weight per vertex.
struct ModelParams {
  double beta = 1.0;
  int v = 0;  // normalization vertex
  std::vector<TrigWeight> weights;
  uint64_t seed = 0;
  int k_cutoff = 6;  // integer-height enumeration half-width
  int m_cut = 5;     // wrapped-Gaussian tail cut for rotator edge weights
};
void validate_params(const LatticeDomain& d, const ModelParams& p);

// Monte Carlo estimate with a batch-means standard error: the mean is over
// all recorded values, the error over 32 equal batches (trailing remainder
// dropped from the batches), which keeps the error honest under
// autocorrelation. Needs at least 32 values.
struct McEstimate {
  double estimate = 0;
  double se = 0;
  long long n = 0;
};
McEstimate batch_mean_estimate(const std::vector<double>& values);

// The tilt sigma solving (-Delta) sigma = f / beta with sigma_v = 0, for
// mean-zero f; shifting the field by sigma trades e^{<phi,f>} for a Gaussian
// prefactor times a ratio of weighted partition values.
struct ShiftField {
  int v = 0;
  std::vector<double> sigma;
  double residual = 0;  // max-norm of (-Delta) sigma - f / beta
};
ShiftField make_shift(const LatticeDomain& d, const ModelParams& p,
                      const std::vector<double>& f);
ShiftField make_shift(const GreenOperator& G, double beta, int v,
                      const std::vector<double>& f);

// Exact free-field sampler. The height at v is uniform on [-pi,pi) and
// independent of the gradients; the pinned part phi - phi_v away from v is a
// centred Gaussian with precision beta * (-Delta restricted past v), drawn
// through a one-time sparse Cholesky factorization, so the gradient law does
// not depend on the choice of v.
class GffSampler {
 public:
  GffSampler(const LatticeDomain& d, const ModelParams& p,
             uint64_t stream = 0);
  // Heights only, cheapest form; phi[v] is the uniform height.
  void draw(std::vector<double>& phi);
  FieldConfig draw();
  const LatticeDomain& domain() const { return *dom_; }

 private:
  const LatticeDomain* dom_;  // must outlive the sampler
  double beta_;
  int v_;
  std::vector<int> spot_;  // vertex -> pinned row, -1 at v
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt_;
  Rng rng_;
  Eigen::VectorXd xi_;
};
std::vector<FieldConfig> sample_gff(const LatticeDomain& d,
                                    const ModelParams& p, int n_samples);

// Exact truncated sums for the integer-valued field: every height other
// than the pinned m_v = 0 ranges over {-K..K}. shell_mass is the weight
// fraction of states with some height at the cut |m_j| = K, the truncation
// certificate; trustworthy when it stays below 1e-10. Small instances are
// summed directly; square free-boundary domains go through an exact
// column-by-column transfer recursion, which reaches cutoffs far past the
// direct route. Raises StateSpaceTooLarge when both routes are out of reach.
struct IvEnumeration {
  double z = 0;           // truncated partition sum
  double moment_exp = 0;  // E[e^{<m,f>}]
  double moment_sq = 0;   // E[<m,f>^2]
  double shell_mass = 0;
  bool trustworthy = false;
};
IvEnumeration enumerate_iv(const LatticeDomain& d, const ModelParams& p,
                           const std::vector<double>& f);

// Heat-bath chain for the integer-valued field. A sweep resamples each site
// other than v from its discrete-Gaussian conditional, truncated twelve
// conditional standard deviations around the conditional mean, which keeps
// detailed balance for the truncated kernel.
class IvSampler {
 public:
  IvSampler(const LatticeDomain& d, const ModelParams& p, uint64_t stream = 0);
  void sweep();
  const std::vector<long long>& heights() const { return m_; }
  FieldConfig config() const;

 private:
  const LatticeDomain* dom_;
  double beta_;
  int v_;
  std::vector<long long> m_;
  Rng rng_;
};
// One configuration per sweep, started from all zeros.
std::vector<FieldConfig> iv_mcmc(const LatticeDomain& d, const ModelParams& p,
                                 int steps);

// MC estimate of the weighted partition value E[prod_j lambda_j(phi_j +
// sigma_j)] under the free field; per-vertex weights must be present. An
// empty sigma means no shift. Identical seeds replay the identical sample
// stream, so estimates across different sigma share their random numbers.
McEstimate weighted_partition(const LatticeDomain& d, const ModelParams& p,
                              const std::vector<double>& sigma, int n_samples);

// Ratio of the shifted to the unshifted weighted partition value from one
// common sample stream; the error is by batch means over per-batch ratios.
McEstimate weighted_ratio(const LatticeDomain& d, const ModelParams& p,
                          const std::vector<double>& sigma, int n_samples);

// Exponential moment of the weighted field measure through the tilt
// identity: E[e^{<phi,f>}] equals exp(<f, -Delta^{-1} f> / (2 beta)) times
// the shifted-to-unshifted partition ratio. f must be mean-zero.
struct TiltReport {
  double quad = 0;  // <f, -Delta^{-1} f>
  ShiftField shift;
  McEstimate ratio;     // partition ratio, common random numbers
  McEstimate estimate;  // prefactor times the ratio
};
TiltReport weighted_exp_moment(const LatticeDomain& d, const ModelParams& p,
                               const std::vector<double>& f, int n_samples);

// The same moment estimated directly, with no tilt: the ratio
// E[e^{<phi,f>} prod lambda] / E[prod lambda] under the plain free field.
McEstimate weighted_exp_moment_direct(const LatticeDomain& d,
                                      const ModelParams& p,
                                      const std::vector<double>& f,
                                      int n_samples);

// Exponential moment under the cosine-tilted free field, whose density
// gains the factor e^{eta sum_j cos(phi_j)}: the importance ratio
// E[e^{<phi,f>} e^{eta sum cos}] / E[e^{eta sum cos}] over the free-field
// stream. Nonnegative eta only.
McEstimate cosine_tilt_moment(const LatticeDomain& d, const ModelParams& p,
                              double eta, const std::vector<double>& f,
                              int n_samples);

// Exact quadrature for the cosine-tilted moment on a two-vertex graph with
// a single (possibly multiple) edge: the height at v integrates over one
// period, the gradient over the real line, both by equispaced rules sized
// to reach the requested resolution. f must be mean-zero.
double cosine_tilt_pair_moment(const LatticeDomain& d, double beta, int v,
                               double eta, const std::vector<double>& f,
                               int grid_points = 256);

// Heat-bath chain for the rotator field on a wired-boundary domain. Site
// conditionals are products of wrapped Gaussians across incident edges,
// tabulated on a 4096-point angular grid and sampled by inverse CDF; all
// heights live on the grid, so edge factors are table lookups. The wrapped
// sums truncate at |shift| <= m_cut, with the neglected mass bounded by
// 4 e^{-2 pi^2 beta m_cut^2} relative to any kept factor.
class VillainSampler {
 public:
  VillainSampler(const LatticeDomain& d, const ModelParams& p,
                 uint64_t stream = 0);
  void sweep();
  double height(int j) const;  // angle in [-pi, pi)
  FieldConfig config() const;
  double tail_bound() const { return tail_; }

 private:
  const LatticeDomain* dom_;
  Rng rng_;
  std::vector<double> table_;  // wrapped-Gaussian edge factor per grid offset
  std::vector<int> grid_;      // height index per vertex
  std::vector<double> dens_, cum_;
  double tail_;
};

// Cosine and sine of the height at x under the rotator measure, by
// heat-bath sweeps after burn-in, with batch-means errors. x must differ
// from the wired vertex.
struct VillainEstimate {
  McEstimate cos_x, sin_x;
  double tail_bound = 0;
};
VillainEstimate villain_estimate(const LatticeDomain& d, const ModelParams& p,
                                 int x, int steps, int burn_in);

// Exact tensor-grid oracle for E[cos theta_x] on a wired domain with four
// free sites (side 2): equispaced quadrature per site, spectrally accurate
// for the periodic integrand.
double villain_quadrature_cos(const LatticeDomain& d, double beta, int x,
                              int grid_points = 64, int m_cut = 5);

}  // namespace latlab
