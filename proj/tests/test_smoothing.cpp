// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "dkp/smoothing.hpp"

using namespace dkp;

TEST_CASE("kernel support") {
  const Vec x = Vec::Constant(1, 0.4);
  const double lambda = 4.0, t = 0.01;
  // support in s is (0.04, 0.16)
  CHECK(kernel_weight(x, t, lambda, Vec::Constant(1, 0.4), 0.03, 2) == 0.0);
  CHECK(kernel_weight(x, t, lambda, Vec::Constant(1, 0.4), 0.17, 2) == 0.0);
  CHECK(kernel_weight(x, t, lambda, Vec::Constant(1, 0.4), 0.08, 2) > 0.0);
  // outside the ball |y - x| < s
  CHECK(kernel_weight(x, t, lambda, Vec::Constant(1, 0.4 + 0.09), 0.08, 2) == 0.0);
  // sampled support check over a grid
  for (int i = 0; i < 40; ++i)
    for (int k = 0; k < 40; ++k) {
      const double s = 0.001 + 0.2 * (k + 0.5) / 40;
      const Vec y = Vec::Constant(1, 0.4 + (i - 20) * 0.01);
      const double w = kernel_weight(x, t, lambda, y, s, 2);
      const bool inside =
          (s > lambda * t && s < lambda * lambda * t && (y - x).norm() < s);
      if (!inside) CHECK(w == 0.0);
    }
}

TEST_CASE("kernel normalization by quadrature") {
  for (double lambda : {kInitialLambda, 4.0, 16.0}) {
    for (int i = 1; i <= 4; ++i) {
      Vec x;
      double t;
      halton_halfspace_point(static_cast<std::uint64_t>(i), 2, x, t, 6);
      const double q = kernel_normalization_quadrature(x, t, lambda, 2);
      CHECK(q == Catch::Approx(1.0).margin(1e-6));
    }
    Vec x3(2);
    x3 << 0.3, 0.7;
    CHECK(kernel_normalization_quadrature(x3, 0.05, lambda, 3) ==
          Catch::Approx(1.0).margin(1e-6));
  }
}

TEST_CASE("initial_split of a constant reproduces the field") {
  Mat c(2, 2);
  c << 2, 0.5, 0.5, 1;
  const auto split = initial_split(make_constant(c));
  Vec x = Vec::Constant(1, 0.3);
  CHECK((split.b1.eval(x, 0.2) - c).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(frob(split.c1.eval(x, 0.2)) < 1e-14);
  const MatGrad g = split.b1.grad(x, 0.2);
  CHECK(g[0].cwiseAbs().maxCoeff() < 1e-12);
  CHECK(g[1].cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("initial_split of whitney_piecewise: sup|t grad B1| <= C delta") {
  const double delta = 0.2;
  const auto wp = make_whitney_piecewise(2, delta, 7);
  const auto split = initial_split(wp);
  const auto& kc = KernelConstants::get(2);
  // kernel-derivative bound with |A - A0|_F <= 2 delta n
  const double bound = (kc.c_phi / kInitialLambda +
                        kc.c_psi / std::log(kInitialLambda)) *
                       2.0 * delta * 2.0;
  const double measured = sup_tgrad(split.b1, 128);
  CHECK(measured <= bound);
  CHECK(measured > 0.0);
}

TEST_CASE("cm_norm(C1) finite and refinement-stable for smooth weak-DKP") {
  const auto a = make_dkp_smooth(2, 0.2);
  const auto split = initial_split(a);
  const MatrixField& c1 = split.c1;
  auto absc = [&c1](const Vec& x, double t) { return frob(c1.eval(x, t)); };
  const double m4 = cm_norm(absc, HalfSpaceMesh(2, 4)).norm;
  const double m5 = cm_norm(absc, HalfSpaceMesh(2, 5)).norm;
  CHECK(std::isfinite(m4));
  CHECK(m5 == Catch::Approx(m4).epsilon(0.25));
}

TEST_CASE("mollify of a constant is exact and needs a gradient source") {
  Mat c = Mat::Identity(2, 2);
  c(0, 0) = 3;
  const auto b1 = make_constant(c);
  const auto bl = mollify(b1, 4.0);
  CHECK((bl.eval(Vec::Constant(1, 0.1), 0.05) - c).cwiseAbs().maxCoeff() < 1e-14);
  CHECK_THROWS_AS(mollify(make_whitney_piecewise(2, 0.1), 4.0), ConfigError);
  CHECK_THROWS_AS(mollify(b1, 1.5), ConfigError);
}

TEST_CASE("mollifier sup bounds from the kernel constants") {
  // |t dt B_L| <= c_psi ||B1||_inf / ln(L) and |t dx B_L| <= c_phi ||B1||/L
  const auto a = make_dkp_smooth(2, 0.2);
  const auto split = initial_split(a);
  const auto& kc = KernelConstants::get(2);
  double sup_b1 = 0;
  Vec x;
  double t;
  for (int i = 1; i <= 200; ++i) {
    halton_halfspace_point(static_cast<std::uint64_t>(i), 2, x, t, 10);
    sup_b1 = std::max(sup_b1, frob(split.b1.eval(x, t)));
  }
  for (double lambda : {4.0, 16.0}) {
    const auto bl = mollify(split.b1, lambda);
    double sup_dt = 0, sup_dx = 0;
    for (int i = 1; i <= 100; ++i) {
      halton_halfspace_point(static_cast<std::uint64_t>(i), 2, x, t, 8);
      const MatGrad g = bl.grad(x, t);
      sup_dt = std::max(sup_dt, t * frob(g[1]));
      sup_dx = std::max(sup_dx, t * frob(g[0]));
    }
    CHECK(sup_dt <= kc.c_psi * sup_b1 / std::log(lambda) * (1 + 1e-6));
    CHECK(sup_dx <= kc.c_phi * sup_b1 / lambda * (1 + 1e-6));
  }
}

TEST_CASE("gradient-transfer identity matches finite differences") {
  const auto a = make_dkp_smooth(2, 0.15, 1.0, "mix");
  const auto split = initial_split(a);
  const auto bl = mollify(split.b1, 4.0);
  for (int i = 1; i <= 20; ++i) {
    Vec x;
    double t;
    halton_halfspace_point(static_cast<std::uint64_t>(31 * i), 2, x, t, 4);
    const MatGrad g = bl.grad(x, t);
    const double step = 1e-3;
    Vec xp = x, xm = x;
    xp[0] += step;
    xm[0] -= step;
    const Mat fdx = (bl.eval(xp, t) - bl.eval(xm, t)) / (2 * step);
    const Mat fdt = (bl.eval(x, t + step) - bl.eval(x, t - step)) / (2 * step);
    CHECK((g[0] - fdx).cwiseAbs().maxCoeff() < 5e-4);
    CHECK((g[1] - fdt).cwiseAbs().maxCoeff() < 5e-4);
  }
}

TEST_CASE("decompose: constant field short-circuits at the first ladder rung") {
  Mat c = Mat::Identity(2, 2);
  const auto dec = decompose(make_constant(c), 0.5, HalfSpaceMesh(2, 4));
  CHECK(dec.lambda == 4.0);
  CHECK(dec.eps_achieved <= 1e-12);
  CHECK(frob(dec.c.eval(Vec::Constant(1, 0.2), 0.3)) < 1e-13);
  CHECK(dec.m_c < 1e-12);
}

TEST_CASE("decompose: dkp_smooth reaches eps and certifies the bounds") {
  const auto a = make_dkp_smooth(2, 0.2);
  const auto dec = decompose(a, 0.05, HalfSpaceMesh(2, 4));
  CHECK(dec.eps_achieved <= 0.05);
  CHECK(dec.lambda >= 4.0);
  CHECK(std::isfinite(dec.m_b));
  CHECK(std::isfinite(dec.m_c));
  // ellipticity preservation: averages of elliptic matrices stay elliptic
  CHECK(dec.ellipticity >= a.lambda_decl - 1e-6);
}

TEST_CASE("decompose: unreachable eps raises with the best value") {
  const auto a = make_dkp_smooth(2, 0.3);
  try {
    decompose(a, 1e-5, HalfSpaceMesh(2, 4));
    FAIL("expected EpsilonUnreachableError");
  } catch (const EpsilonUnreachableError& e) {
    CHECK(e.best_achieved > 1e-5);
    CHECK(std::isfinite(e.best_achieved));
  }
}

TEST_CASE("decompose rejects invalid eps") {
  CHECK_THROWS_AS(decompose(make_identity(2), 0.0, HalfSpaceMesh(2, 4)),
                  ConfigError);
  CHECK_THROWS_AS(decompose(make_identity(2), 1.5, HalfSpaceMesh(2, 4)),
                  ConfigError);
}

TEST_CASE("Lambda-uniform Carleson bound across the ladder") {
  // conclusion (iii): cm_norm(t grad B_Lambda) spread <= 3x over the ladder
  const auto a = make_dkp_smooth(2, 0.2);
  const auto split = initial_split(a);
  HalfSpaceMesh mesh(2, 4);
  double lo = 1e300, hi = 0;
  for (double lambda : {4.0, 16.0, 64.0}) {
    const auto bl = mollify(split.b1, lambda);
    const double m = cm_norm(
                         [&bl](const Vec& x, double t) {
                           const MatGrad g = bl.grad(x, t);
                           return t * std::sqrt(g[0].squaredNorm() +
                                                g[1].squaredNorm());
                         },
                         mesh)
                         .norm;
    lo = std::min(lo, m);
    hi = std::max(hi, m);
  }
  CHECK(hi / lo <= 3.0);
}

TEST_CASE("C_Lambda has finite Carleson norm growing with Lambda") {
  const auto a = make_dkp_smooth(2, 0.2);
  const auto split = initial_split(a);
  HalfSpaceMesh mesh(2, 4);
  std::vector<double> norms;
  for (double lambda : {4.0, 64.0}) {
    const auto bl = mollify(split.b1, lambda);
    const auto c = field_difference(a, bl);
    const MatrixField& cf = c;
    norms.push_back(
        cm_norm([&cf](const Vec& x, double t) { return frob(cf.eval(x, t)); },
                mesh)
            .norm);
  }
  CHECK(std::isfinite(norms[0]));
  CHECK(std::isfinite(norms[1]));
  CHECK(norms[1] >= norms[0] * 0.9);
}

TEST_CASE("mollifier decay law for whitney_piecewise") {
  // sup |t dt B_Lambda| from Lambda = 16 to 64 decreases consistently with
  // the 1/ln(Lambda) law within a factor 2
  const auto wp = make_whitney_piecewise(2, 0.2, 7);
  const auto split = initial_split(wp);
  auto sup_dt = [&](double lambda) {
    const auto bl = mollify(split.b1, lambda);
    double s = 0;
    Vec x;
    double t;
    for (int i = 1; i <= 48; ++i) {
      halton_halfspace_point(static_cast<std::uint64_t>(i), 2, x, t, 8);
      const MatGrad g = bl.grad(x, t);
      s = std::max(s, t * frob(g[1]));
    }
    return s;
  };
  const double s16 = sup_dt(16.0), s64 = sup_dt(64.0);
  CHECK(s64 < s16);
  const double law = std::log(16.0) / std::log(64.0);
  CHECK(s64 / s16 >= 0.5 * law);
  CHECK(s64 / s16 <= 2.0 * law);
}
