#include <doctest.h>

#include <cmath>

#include "latlab/green.hpp"
#include "latlab/rng.hpp"

using namespace latlab;

namespace {
std::vector<double> random_mean_zero(int n, Rng& rng) {
  std::vector<double> f(n);
  double mean = 0;
  for (double& v : f) mean += (v = rng.uniform(-1.0, 1.0));
  mean /= n;
  for (double& v : f) v -= mean;
  return f;
}
}  // namespace

TEST_CASE("pseudoinverse defining properties") {
  Rng rng(11);
  for (Kind k : {Kind::Free, Kind::Periodic, Kind::Zero}) {
    auto dom = build_domain(k, k == Kind::Periodic ? 6 : 5);
    GreenOperator G(dom);

    std::vector<double> c(dom.n, 3.7);
    for (double v : G.apply(c)) CHECK(std::abs(v) < 1e-12);

    for (int rep = 0; rep < 5; ++rep) {
      auto f = random_mean_zero(dom.n, rng);
      auto x = G.apply(f);
      auto lx = laplacian_apply(dom, x);
      for (int j = 0; j < dom.n; ++j) CHECK(std::abs(-lx[j] - f[j]) < 1e-10);
    }

    auto g = dense_green(G);
    CHECK((g - g.transpose()).cwiseAbs().maxCoeff() < 1e-11);
    CHECK((g.rowwise().sum()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("quadratic_form") {
  auto f2 = build_domain(Kind::Free, 2);
  GreenOperator G(f2);

  CHECK(quadratic_form(G, std::vector<double>(4, 0.0)) == 0.0);

  // Opposite-corner dipole on the 4-cycle: two parallel 2-paths give
  // effective resistance 1.
  std::vector<double> dip = {1.0, 0.0, 0.0, -1.0};
  CHECK(quadratic_form(G, dip) == doctest::Approx(1.0).epsilon(1e-12));

  std::vector<double> dip2 = {2.0, 0.0, 0.0, -2.0};
  CHECK(quadratic_form(G, dip2) ==
        doctest::Approx(4.0 * quadratic_form(G, dip)).epsilon(1e-12));

  CHECK_THROWS_WITH_AS(quadratic_form(G, {1.0, 0.0, 0.0, 0.0}),
                       doctest::Contains("NotMeanZero"), Error);
}

TEST_CASE("harmonic-solve energy identity") {
  // For sigma with (-Delta)sigma = f/beta pinned to sigma_v = 0, the
  // gradient energy satisfies beta^2 * sum (grad sigma)^2 = <f,-D^{-1}f>.
  Rng rng(12);
  double beta = 1.7;
  for (Kind k : {Kind::Free, Kind::Zero}) {
    auto dom = build_domain(k, 6);
    GreenOperator G(dom);
    auto f = random_mean_zero(dom.n, rng);
    auto sig = G.apply(f);
    for (double& v : sig) v /= beta;
    double shift = sig[0];
    for (double& v : sig) v -= shift;  // pin sigma at vertex 0
    double lhs = beta * beta * dirichlet_energy(dom, sig);
    double rhs = quadratic_form(G, f);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }
}

TEST_CASE("conjugate-gradient path beyond the dense cutoff") {
  auto dom = build_domain(Kind::Periodic, 70);  // 4900 > 4096 vertices
  GreenOperator G(dom);
  Rng rng(13);
  auto f = random_mean_zero(dom.n, rng);
  auto x = G.apply(f);
  auto lx = laplacian_apply(dom, x);
  double err = 0;
  for (int j = 0; j < dom.n; ++j) err = std::max(err, std::abs(-lx[j] - f[j]));
  CHECK(err < 1e-8);
}

TEST_CASE("periodic_green kernel") {
  // Dense oracle at side 4.
  auto p4 = build_domain(Kind::Periodic, 4);
  GreenOperator G(p4);
  for (int t = 0; t < 4; ++t)
    for (int s = 0; s < 4; ++s)
      CHECK(periodic_green(4, t, s) ==
            doctest::Approx(G.entry(p4.index(0, 0), p4.index(t, s)))
                .epsilon(1e-12));

  // Symmetries: coordinate swap, negation, translation invariance by
  // construction of the tabulated kernel.
  for (int L2 : {8, 12}) {
    Rng rng(14);
    for (int rep = 0; rep < 20; ++rep) {
      int t = static_cast<int>(rng.below(L2)), s = static_cast<int>(rng.below(L2));
      CHECK(periodic_green(L2, t, s) == doctest::Approx(periodic_green(L2, s, t)).epsilon(1e-12));
      CHECK(periodic_green(L2, t, s) == doctest::Approx(periodic_green(L2, -t, s)).epsilon(1e-12));
      CHECK(periodic_green(L2, t, s) == doctest::Approx(periodic_green(L2, t, -s)).epsilon(1e-12));
    }
  }

  // Radial difference nondecreasing along the axis (numerical observation,
  // reported but not relied on as a theorem).
  int L2 = 32;
  double prev = 0;
  for (int a = 1; a <= L2 / 4; ++a) {
    double diff = periodic_green(L2, 0, 0) - periodic_green(L2, 2 * a, 0);
    WARN(diff >= prev);
    prev = diff;
  }

  // Logarithmic growth with the frozen coefficient.
  for (int side : {4, 16, 64, 128}) {
    for (int a = 1; 2 * a <= side / 2; ++a)
      CHECK(periodic_green(side, 0, 0) - periodic_green(side, 2 * a, 0) <=
            kGreenLogCoeff * std::log(a + 1.0));
  }
}

TEST_CASE("reflect_T_fp") {
  // L=2 point mass lands on the four reflected copies.
  std::vector<double> f = {1.0, 0.0, 0.0, 0.0};
  auto T = reflect_T_fp(f, 2);
  int L2 = 4;
  for (int a = 0; a < L2; ++a)
    for (int b = 0; b < L2; ++b) {
      bool on = (a == 0 || a == 3) && (b == 0 || b == 3);
      CHECK(T[a * L2 + b] == (on ? 1.0 : 0.0));
    }

  std::vector<double> c(16, 2.0);
  for (double v : reflect_T_fp(c, 4)) CHECK(v == 2.0);

  // Intertwining with the Laplacians is exact.
  Rng rng(15);
  int L = 4;
  auto fr = build_domain(Kind::Free, L);
  auto pr = build_domain(Kind::Periodic, 2 * L);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> g(L * L);
    for (double& v : g) v = rng.uniform(-1.0, 1.0);
    auto lhs = laplacian_apply(pr, reflect_T_fp(g, L));
    auto rhs = reflect_T_fp(laplacian_apply(fr, g), L);
    for (int j = 0; j < pr.n; ++j) CHECK(std::abs(lhs[j] - rhs[j]) < 1e-12);
  }
}

TEST_CASE("difference_ops identities") {
  int L2 = 8;
  auto ops = difference_ops(L2);
  auto dom = build_domain(Kind::Periodic, L2);
  GreenOperator G(dom);
  Rng rng(16);

  // d1 d1^T + d2 d2^T = -Delta.
  Eigen::SparseMatrix<double> lap =
      ops.d1 * Eigen::SparseMatrix<double>(ops.d1.transpose()) +
      ops.d2 * Eigen::SparseMatrix<double>(ops.d2.transpose());
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<double> f(dom.n);
    for (double& v : f) v = rng.uniform(-1.0, 1.0);
    Eigen::VectorXd fe = Eigen::Map<Eigen::VectorXd>(f.data(), f.size());
    Eigen::VectorXd a = lap * fe;
    auto lf = laplacian_apply(dom, f);
    for (int j = 0; j < dom.n; ++j) CHECK(std::abs(a[j] - (-lf[j])) < 1e-12);
  }

  // Constants are annihilated.
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(dom.n);
  CHECK((ops.d1 * ones).cwiseAbs().maxCoeff() == 0.0);

  auto greenv = [&](const Eigen::VectorXd& v) {
    std::vector<double> tmp(v.data(), v.data() + v.size());
    auto out = G.apply(tmp);
    return Eigen::Map<Eigen::VectorXd>(out.data(), out.size()).eval();
  };

  for (int rep = 0; rep < 5; ++rep) {
    auto f = random_mean_zero(dom.n, rng);
    Eigen::VectorXd fe = Eigen::Map<Eigen::VectorXd>(f.data(), f.size());
    // Gradient-resolvent resolution of the identity on mean-zero inputs.
    Eigen::VectorXd r1 = ops.d1.transpose() * greenv(ops.d1 * fe);
    Eigen::VectorXd r2 = ops.d2.transpose() * greenv(ops.d2 * fe);
    CHECK((r1 + r2 - fe).cwiseAbs().maxCoeff() < 1e-10);
    // The two mixed second kernels agree.
    Eigen::VectorXd m1 = ops.d1 * greenv(ops.d2 * fe);
    Eigen::VectorXd m2 = ops.d2 * greenv(ops.d1 * fe);
    CHECK((m1 - m2).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("stripe pair and its reflected potential") {
  int L = 6, L2 = 12;
  auto p = make_duality_pair(L, 2, 1);
  double tot = 0;
  for (double v : p.f_y) tot += v;
  CHECK(tot == 0.0);

  auto ops = difference_ops(L2);
  Eigen::VectorXd Fe = Eigen::Map<Eigen::VectorXd>(p.F_y.data(), p.F_y.size());
  Eigen::VectorXd d2F = ops.d2 * Fe;
  auto Tf = reflect_T_fp(p.f_y, L);
  for (int j = 0; j < L2 * L2; ++j) CHECK(d2F[j] == Tf[j]);

  CHECK_THROWS_WITH_AS(make_duality_pair(6, 0, 5), doctest::Contains("BadRow"), Error);
  CHECK_THROWS_WITH_AS(make_duality_pair(6, 6, 1), doctest::Contains("UnknownVertex"), Error);
}

TEST_CASE("stripe energy lower bound") {
  for (int L : {4, 8}) {
    auto dom = build_domain(Kind::Free, L);
    GreenOperator G(dom);
    for (int y0 : {0, 1, L - 1})
      for (int y1 : {0, L - 2}) {
        auto r = claim_green_lower(G, y0, y1);
        // Exact decomposition of the stripe energy.
        CHECK(r.lhs == doctest::Approx((L - y0) - r.cross).epsilon(1e-11));
        CHECK(r.d1F_form == doctest::Approx(4.0 * r.cross).epsilon(1e-11));
        CHECK(r.lhs >= r.bound);
        CHECK(r.d1F_form <= kStripeLogCoeff * std::log(L - y0 + 1.0));
        CHECK(r.d1F_form >= -1e-12);
      }
  }
  // Full-length stripe: the reflected potential has no first-coordinate
  // increments at all, so the energy is exactly L.
  auto r0 = claim_green_lower(4, 0, 1);
  CHECK(r0.cross == 0.0);
  CHECK(r0.lhs == doctest::Approx(4.0).epsilon(1e-11));
}
