// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "dkp/probes.hpp"

using namespace dkp;

TEST_CASE("dirichlet probe: trace attainment and scale stability") {
  const auto rep = dirichlet_probe(make_identity(2), 2.0, standard_family(), 6);
  for (const auto& c : rep.cases) {
    if (c.skipped) continue;
    // the cone vertex cell sits at height h/2, so N(u_f) >= |f| - O(h)
    CHECK(c.ratio >= 1.0 - 15.0 / 64.0);
    CHECK(std::isfinite(c.ratio));
  }
  CHECK(rep.spread > 0);
}

TEST_CASE("regularity probe skips constant data") {
  std::vector<DataCase> fam = {{"const", TrigPoly{}}};
  fam[0].f.a0 = 1.0;
  const auto rep = regularity_probe(make_identity(2), 2.0, fam, 4);
  REQUIRE(rep.cases.size() == 1);
  CHECK(rep.cases[0].skipped);
}

TEST_CASE("regularity probe ratios are homogeneous in the data") {
  // scaling boundary data leaves every ratio unchanged
  std::vector<DataCase> f1 = {{"cos1", TrigPoly::cosine(1)}};
  std::vector<DataCase> f2 = {{"cos1", TrigPoly::cosine(1, 7.5)}};
  const auto a = make_dkp_smooth(2, 0.1);
  const auto r1 = regularity_probe(a, 2.0, f1, 5);
  const auto r2 = regularity_probe(a, 2.0, f2, 5);
  CHECK(r1.cases[0].ratio == Catch::Approx(r2.cases[0].ratio).epsilon(1e-10));
}

TEST_CASE("perturbation probe with zero perturbation is the identity") {
  const auto c0 = make_constant(Mat::Identity(2, 2));  // C = 0 perturbation
  const auto rep = perturbation_probe(make_dkp_smooth(2, 0.1), c0, 2.0, 5);
  for (const auto& c : rep.cases) {
    if (c.skipped) continue;
    CHECK(c.ratio == Catch::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("perturbation probe records finite inflation for carleson bumps") {
  const auto c = make_carleson_bump(2, 0.1, 1);
  const auto rep = perturbation_probe(make_dkp_smooth(2, 0.1), c, 2.0, 5);
  for (const auto& pc : rep.cases) {
    if (pc.skipped) continue;
    CHECK(std::isfinite(pc.ratio));
    CHECK(pc.ratio > 0.5);
    CHECK(pc.ratio < 2.0);
  }
  CHECK(rep.params.count("cm_norm_C") == 1);
}

TEST_CASE("ibp identity: residual drops ~4x per refinement") {
  const auto cases = ibp_identity_probe({4, 5, 6, 7});
  REQUIRE(cases.size() == 8);
  for (int j = 0; j < 2; ++j) {
    std::vector<double> res;
    for (const auto& c : cases)
      if (c.j == j) res.push_back(c.residual);
    REQUIRE(res.size() == 4);
    for (std::size_t i = 1; i < res.size(); ++i) {
      const double factor = res[i - 1] / res[i];
      CHECK(factor > 2.5);
      CHECK(factor < 8.0);
    }
  }
}

TEST_CASE("ibp probe validates the J range") {
  CHECK_THROWS_AS(ibp_identity_probe({2}), ConfigError);
}

TEST_CASE("moser probe: skips flat data, stable constant for cosine") {
  TrigPoly c;
  c.a0 = 1.0;
  const auto flat = moser_probe(make_identity(2), c, 5);
  CHECK(flat.points == 0);

  const auto m5 = moser_probe(make_identity(2), TrigPoly::cosine(1), 5);
  const auto m6 = moser_probe(make_identity(2), TrigPoly::cosine(1), 6);
  CHECK(m5.points > 0);
  CHECK(m5.max_ratio > 0.5);
  CHECK(m6.max_ratio == Catch::Approx(m5.max_ratio).epsilon(0.2));
}

TEST_CASE("bilipschitz linear case converges at first order or better") {
  const double e4 = bilipschitz_linear_case(2.0, 4);
  const double e5 = bilipschitz_linear_case(2.0, 5);
  const double e6 = bilipschitz_linear_case(2.0, 6);
  CHECK(e5 < 0.7 * e4);
  CHECK(e6 < 0.7 * e5);
}

TEST_CASE("bilipschitz probe on the identity is degenerate-zero") {
  const auto br = bilipschitz_stability_probe(make_identity(2), 0.5, 4);
  for (const auto& c : br.ratios.cases) CHECK(c.ratio < 1e-9);
  for (const auto& c : br.l2) CHECK(c.num < 1e-11);
}

TEST_CASE("poisson duality probe: identity operator trend") {
  const auto r5 = poisson_duality_probe(make_identity(2), 2.0, 5);
  CHECK(r5.witness_ratio >= 0.5);
  CHECK(std::isfinite(r5.total));
  CHECK(r5.total > 0);
}

TEST_CASE("poisson duality: zero source gives the zero solution") {
  HalfSpaceMesh mesh(2, 4);
  VecGrid zero(mesh);
  const auto v = solve_inhomogeneous(make_identity(2), zero, mesh, true);
  for (double u : v.nodal) CHECK(u == 0.0);
}

TEST_CASE("carleson embedding check: degenerate and finite cases") {
  HalfSpaceMesh mesh(2, 5);
  auto zero = [](const Vec&, double) { return 0.0; };
  auto a = [](const Vec&, double t) { return std::sqrt(t); };
  auto fg = [](const Vec& x, double t) {
    return std::exp(-2 * M_PI * t) * std::cos(2 * M_PI * x[0]);
  };
  const double M = cm_norm(a, mesh).norm;
  const auto zero_case = carleson_embedding_check(a, zero, fg, mesh, M);
  CHECK(zero_case.lhs == 0.0);
  CHECK(zero_case.ratio == 0.0);

  const auto fin = carleson_embedding_check(a, fg, fg, mesh, M);
  CHECK(std::isfinite(fin.ratio));
  CHECK(fin.ratio < 10.0);
}

TEST_CASE("embedding corpus: max ratio finite and refinement-stable") {
  const auto r5 = embedding_corpus(30, 12345, 5);
  const auto r6 = embedding_corpus(30, 12345, 6);
  CHECK(std::isfinite(r5.max_ratio));
  CHECK(r5.max_ratio > 0);
  CHECK(r6.max_ratio == Catch::Approx(r5.max_ratio).epsilon(0.25));
}

TEST_CASE("probe determinism: identical configs give identical reports") {
  const auto r1 = regularity_probe(make_dkp_smooth(2, 0.1), 2.0,
                                   standard_family(false), 4);
  const auto r2 = regularity_probe(make_dkp_smooth(2, 0.1), 2.0,
                                   standard_family(false), 4);
  REQUIRE(r1.cases.size() == r2.cases.size());
  for (std::size_t i = 0; i < r1.cases.size(); ++i)
    CHECK(r1.cases[i].ratio == r2.cases[i].ratio);
}

TEST_CASE("e2e reduction pipeline runs end to end") {
  // weak-DKP preset -> decompose -> conjugate -> structure_check ->
  // regularity probe on the conjugated field
  const auto a = make_dkp_smooth(2, 0.05, 1.0, "mix");
  const auto dec = decompose(a, 0.05, HalfSpaceMesh(2, 4));
  const auto rho = build_rho(dec.b, 500);
  const auto ar = conjugate(a, rho);
  const auto diag = structure_check(ar, HalfSpaceMesh(2, 4), false);
  CHECK(std::isfinite(diag.last_row_deviation.norm));
  const auto rep = regularity_probe(ar, 2.0, standard_family(false), 4);
  CHECK(rep.max_ratio > 0);
  CHECK(std::isfinite(rep.max_ratio));
}
