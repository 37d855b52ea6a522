// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "dkp/codim.hpp"

using namespace dkp;

TEST_CASE("cylindrical derivative identities are exact") {
  const auto rep = cylindrical_derivative_check(100);
  CHECK(rep.max_chain_residual <= 1e-10);
  CHECK(rep.max_radial_angle <= 1e-10);
  CHECK(rep.max_angular_on_radial <= 1e-10);
}

TEST_CASE("radial IBP residual decays at second order") {
  const double r32 = radial_ibp_residual(32);
  const double r64 = radial_ibp_residual(64);
  const double r128 = radial_ibp_residual(128);
  CHECK(r64 < r32 / 2.5);
  CHECK(r128 < r64 / 2.5);
}

TEST_CASE("weighted solve: constant data gives the constant solution") {
  TrigPoly f;
  f.a0 = 2.0;
  CylMesh mesh(4);
  const auto sol = solve_weighted(codim_identity(), f, mesh);
  for (double v : sol.nodal) CHECK(v == Catch::Approx(2.0).margin(1e-10));
}

TEST_CASE("weighted solve: axisymmetric data stays axisymmetric") {
  const auto rep = radial_identity_probe(TrigPoly::cosine(1), 4);
  CHECK(rep.theta_dependence <= 1e-9);
}

TEST_CASE("radial identity: constant exact, cosine O(h)") {
  TrigPoly c;
  c.a0 = 1.0;
  const auto r0 = radial_identity_probe(c, 4);
  CHECK(r0.l2_err <= 1e-10);

  std::vector<double> errs;
  for (int J : {4, 5, 6})
    errs.push_back(radial_identity_probe(TrigPoly::cosine(1), J).l2_err);
  CHECK(errs[1] < 0.7 * errs[0]);
  CHECK(errs[2] < 0.7 * errs[1]);
}

TEST_CASE("codim Carleson norm: zero, divergence, closed form") {
  CylMesh mesh(5);
  CHECK(codim_carleson_norm([](double, double) { return 0.0; }, mesh).norm ==
        0.0);
  const auto div =
      codim_carleson_norm([](double, double) { return 1.0; }, mesh, {true});
  CHECK(div.diverging);
  // g = r^{1/2}: tent integral 2 pi (r - h), sup at r = 1
  const auto rep =
      codim_carleson_norm([](double, double r) { return std::sqrt(r); }, mesh);
  CHECK(rep.norm * rep.norm ==
        Catch::Approx(2 * M_PI * (1.0 - mesh.h)).epsilon(0.05));
}

TEST_CASE("codim averaged maximal function reproduces constants") {
  CylMesh mesh(4);
  const auto prof =
      avg_ntmax_codim([](double, double) { return 3.0; }, mesh);
  for (double v : prof.values) CHECK(v == Catch::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("structure presets expose the case (i)/(ii) block shapes") {
  const auto ci = make_codim_case(1, 0.1);
  const auto cii = make_codim_case(2, 0.1);
  for (int s = 1; s <= 30; ++s) {
    const double x = hash_unit(static_cast<std::uint64_t>(s));
    const double t2 = 0.05 + 0.4 * hash_unit(static_cast<std::uint64_t>(3 * s));
    const double t3 = 0.05 + 0.4 * hash_unit(static_cast<std::uint64_t>(7 * s));
    const double r = std::hypot(t2, t3);
    const Eigen::Matrix3d m1 = ci.eval(x, t2, t3);
    const Eigen::Matrix3d m2 = cii.eval(x, t2, t3);
    // bottom-right block is a scalar multiple of the identity in both cases
    for (const auto& m : {m1, m2}) {
      CHECK(m(1, 2) == Catch::Approx(0.0).margin(1e-14));
      CHECK(m(2, 1) == Catch::Approx(0.0).margin(1e-14));
      CHECK(m(1, 1) == Catch::Approx(m(2, 2)).margin(1e-14));
    }
    // case (ii): off-diagonal blocks aligned with t/|t| exactly
    const Eigen::Vector2d b2(m2(0, 1), m2(0, 2));
    const Eigen::Vector2d dir(t2 / r, t3 / r);
    const double cross = b2[0] * dir[1] - b2[1] * dir[0];
    CHECK(std::fabs(cross) <= 1e-12);
    const Eigen::Vector2d b3(m2(1, 0), m2(2, 0));
    const double cross3 = b3[0] * dir[1] - b3[1] * dir[0];
    CHECK(std::fabs(cross3) <= 1e-12);
    // case (i): generically NOT aligned
    const Eigen::Vector2d c2(m1(0, 1), m1(0, 2));
    if (c2.norm() > 1e-6) {
      const double crossi = c2[0] * dir[1] - c2[1] * dir[0];
      CHECK(std::fabs(crossi) > 1e-12);
    }
  }
}

TEST_CASE("weighted solve accepts only (n,d) = (3,1)") {
  CylMesh mesh(4);
  TrigPoly f;
  f.a0 = 1.0;
  CHECK_THROWS_AS(solve_weighted(codim_identity(), f, mesh, 2), ConfigError);
}
