#include "latlab/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "latlab/common.hpp"

namespace latlab {

double TrigWeight::hat(int q) const {
  if (q < 0) fail("PreconditionViolated", "negative frequency ", q);
  if (q == 0) return 1.0;
  if (q > N()) return 0.0;
  return coeffs[q - 1];
}

double TrigWeight::operator()(double phi) const {
  double s = 1.0;
  for (int q = 1; q <= N(); ++q) s += 2.0 * coeffs[q - 1] * std::cos(q * phi);
  return s;
}

TrigWeight fejer(int N) {
  if (N < 1) fail("PreconditionViolated", "fejer order must be >= 1, got ", N);
  TrigWeight w;
  w.coeffs.resize(N);
  for (int q = 1; q <= N; ++q) w.coeffs[q - 1] = 1.0 - double(q) / N;
  return w;
}

void SubGaussianParams::validate() const {
  if (!(Gamma > 0)) fail("ConfigInvalid", "Gamma=", Gamma, " must be positive");
  if (!(beta > 0)) fail("ConfigInvalid", "beta=", beta, " must be positive");
  if (!(theta >= 0 && theta < 1.0 / 16))
    fail("ConfigInvalid", "theta=", theta, " outside [0, 1/16)");
}

SubGaussianWitness is_sub_gaussian(const TrigWeight& w,
                                   const SubGaussianParams& p) {
  p.validate();
  SubGaussianWitness res;
  for (int q = 1; q <= w.N(); ++q) {
    double bound =
        p.Gamma * std::exp((p.eta + p.theta / p.beta) * double(q) * q);
    double excess = std::abs(w.hat(q)) - bound;
    if (excess > 0) {
      res.ok = false;
      res.q = q;
      res.excess = excess;
      return res;
    }
  }
  return res;
}

ZCoefficient make_z_coefficient(double K, double E) {
  ZCoefficient zc;
  zc.K = K;
  zc.E = E;
  zc.z = K * std::exp(-E);
  return zc;
}

ChainRates chain_rates(const SubGaussianParams& p, const ChainConstants& c) {
  p.validate();
  if (!(c.D1 > 0 && c.D3 > 0))
    fail("ConfigInvalid", "chain needs positive D1 and D3");
  ChainRates r;
  r.gamma = 2.0 * c.D3 / (1.0 / 16 - p.theta);
  r.c1_sq = (1.0 / 16 - p.theta - c.D3 / r.gamma) -
            p.beta * (std::max(std::log(p.Gamma), 0.0) + 1.0 + p.eta);
  r.c1_log = c.D3 / (r.gamma * c.D1) - p.beta * c.D2;
  r.c1 = std::min(r.c1_sq, r.c1_log);
  return r;
}

double empirical_beta0(const SubGaussianParams& p, const ChainConstants& c,
                       const std::vector<double>& beta_grid) {
  double best = 0;
  for (double beta : beta_grid) {
    SubGaussianParams q = p;
    q.beta = beta;
    if (chain_rates(q, c).c1 > 0) best = std::max(best, beta);
  }
  return best;
}

ZBoundReport z_bound_check(const ZCoefficient& zc, const ChargeDensity& rho,
                           const MultiscaleCover& cover,
                           const SubGaussianParams& p,
                           const ChainConstants& consts) {
  p.validate();
  ZBoundReport rep;
  rep.z = zc.K * std::exp(-zc.E);

  long long sep_total = 0;
  for (const auto& idx : cover.sep) sep_total += int(idx.size());
  rep.eloc_exponent =
      (rho.norm2sq / 16.0 + consts.D3 * double(sep_total)) / p.beta;
  rep.eloc_margin = zc.E - rep.eloc_exponent;
  // |z| <= |K| exp(-eloc_exponent) reduces to E >= eloc_exponent, except
  // that K = 0 satisfies it for any E.
  rep.eloc_ok = zc.K == 0 || rep.eloc_margin >= -1e-12;

  rep.rates = chain_rates(p, consts);
  double weight = rho.norm2sq + std::log2(double(rho.d) + 1.0);
  if (rep.z == 0) {
    rep.decay_margin = std::numeric_limits<double>::infinity();
    rep.decay_ok = true;
  } else {
    rep.decay_margin =
        -std::log(std::abs(rep.z)) - rep.rates.c1 / p.beta * weight;
    rep.decay_ok = rep.rates.c1 > 0 && rep.decay_margin >= -1e-12;
  }
  return rep;
}

}  // namespace latlab
