// SPDX-License-Identifier: Apache-2.0
//
// Experiment orchestration: solvability-style probes reproducing, at desk
// scale, the estimates behind the Dirichlet/regularity theory as measured
// ratios.  Probes never assert solvability as a boolean; they report max
// ratios and spreads, and only refinement stability is asserted by the
// acceptance suite.

#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dkp/carleson.hpp"
#include "dkp/chgvar.hpp"
#include "dkp/common.hpp"
#include "dkp/elliptic.hpp"
#include "dkp/field.hpp"
#include "dkp/functionals.hpp"
#include "dkp/mesh.hpp"
#include "dkp/smoothing.hpp"

namespace dkp {

struct ProbeCase {
  std::string id;
  double num = 0, den = 0, ratio = 0;
  bool skipped = false;
  std::string note;
};

struct ProbeReport {
  std::string probe;
  std::string preset;
  std::map<std::string, double> params;  // J, p, delta, seed, ...
  std::vector<ProbeCase> cases;
  double max_ratio = 0;
  double spread = 0;  // max/min over non-skipped ratios

  void finalize() {
    double lo = std::numeric_limits<double>::infinity(), hi = 0;
    for (const auto& c : cases) {
      if (c.skipped) continue;
      lo = std::min(lo, c.ratio);
      hi = std::max(hi, c.ratio);
    }
    max_ratio = (hi > 0) ? hi : 0;
    spread = (lo > 0 && hi > 0) ? hi / lo : 0;
  }
};

// ------------------------------------------------------------ data family

struct DataCase {
  std::string id;
  TrigPoly f;
};

// Four frequencies plus two translated smooth bumps (entered through their
// truncated Fourier series, so gradients and oracles stay spectral).
inline std::vector<DataCase> standard_family(bool with_bumps = true) {
  std::vector<DataCase> fam;
  for (int k : {1, 2, 4, 8})
    fam.push_back({"cos" + std::to_string(k), TrigPoly::cosine(k)});
  if (with_bumps) {
    for (double c : {0.3, 0.7}) {
      auto bump = [c](double x) {
        double d = x - c;
        d -= std::round(d);
        const double u = d / 0.18;
        return (std::fabs(u) < 1.0) ? std::exp(1.0 - 1.0 / (1.0 - u * u)) : 0.0;
      };
      char id[32];
      std::snprintf(id, sizeof(id), "bump%.2f", c);
      fam.push_back({id, TrigPoly::from_samples(bump)});
    }
  }
  return fam;
}

inline double lp_of_boundary(const std::function<double(double)>& g,
                             const HalfSpaceMesh& mesh, double p) {
  double s = 0;
  for (int i = 0; i < mesh.N; ++i)
    s += mesh.h * std::pow(std::fabs(g(mesh.boundary_x(i))), p);
  return std::pow(s, 1.0 / p);
}

// ------------------------------------------------------- Dirichlet probe

// ratio per case:  ||N(u_f)||_p / ||f||_p
inline ProbeReport dirichlet_probe(const MatrixField& a, double p,
                                   const std::vector<DataCase>& family, int J) {
  HalfSpaceMesh mesh(a.n, J);
  ProbeReport rep;
  rep.probe = "dirichlet";
  rep.preset = a.preset;
  rep.params = {{"J", static_cast<double>(J)}, {"p", p}};
  for (const auto& dc : family) {
    DiscreteSolution sol = solve_dirichlet(a, dc.f, mesh);
    const FunctionalProfile prof = ntmax(sol.abs_at_centers(mesh), mesh);
    ProbeCase c;
    c.id = dc.id;
    c.num = lp_norm(prof, p);
    c.den = lp_of_boundary([&dc](double x) { return dc.f.value(x); }, mesh, p);
    if (c.den < 1e-14) {
      c.skipped = true;
      c.note = "zero boundary norm";
    } else {
      c.ratio = c.num / c.den;
    }
    rep.cases.push_back(c);
  }
  rep.finalize();
  return rep;
}

// ------------------------------------------------------ regularity probe

// ratio per case:  ||N~(grad u_f)||_p / ||f'||_p  (gradient spectral)
inline ProbeReport regularity_probe(const MatrixField& a, double p,
                                    const std::vector<DataCase>& family,
                                    int J) {
  HalfSpaceMesh mesh(a.n, J);
  ProbeReport rep;
  rep.probe = "regularity";
  rep.preset = a.preset;
  rep.params = {{"J", static_cast<double>(J)}, {"p", p}};
  for (const auto& dc : family) {
    ProbeCase c;
    c.id = dc.id;
    c.den = lp_of_boundary([&dc](double x) { return dc.f.deriv(x); }, mesh, p);
    if (c.den < 1e-14) {
      c.skipped = true;
      c.note = "constant data";
      rep.cases.push_back(c);
      continue;
    }
    DiscreteSolution sol = solve_dirichlet(a, dc.f, mesh);
    const FunctionalProfile prof = avg_ntmax(sol.grad_magnitude(mesh), mesh);
    c.num = lp_norm(prof, p);
    c.ratio = c.num / c.den;
    rep.cases.push_back(c);
  }
  rep.finalize();
  return rep;
}

// ---------------------------------------------------- perturbation probe

// Regularity ratios for L0 and L1 = -div((A0 + C - I) grad) side by side;
// per case the reported ratio is the inflation factor.
inline ProbeReport perturbation_probe(const MatrixField& a0,
                                      const MatrixField& c_pert, double p,
                                      int J) {
  if (a0.has_gradient) {
    // hypothesis of the perturbation theory: sup |t grad A0| finite
    const double sup = sup_tgrad(a0, 128);
    if (!std::isfinite(sup))
      throw NumericalError("perturbation_probe: sup|t grad A0| not finite");
  }
  const MatrixField a1 = field_plus_perturbation(a0, c_pert);
  const auto family = standard_family();
  const ProbeReport r0 = regularity_probe(a0, p, family, J);
  const ProbeReport r1 = regularity_probe(a1, p, family, J);
  ProbeReport rep;
  rep.probe = "perturbation";
  rep.preset = a0.preset + "+" + c_pert.preset;
  rep.params = {{"J", static_cast<double>(J)}, {"p", p}};
  HalfSpaceMesh mesh(a0.n, std::min(J, 6));
  const MatrixField& cf = c_pert;
  rep.params["cm_norm_C"] =
      cm_norm([&cf](const Vec& x, double t) {
        return frob(cf.eval(x, t) - Mat::Identity(cf.n, cf.n));
      }, mesh).norm;
  for (std::size_t i = 0; i < r0.cases.size(); ++i) {
    ProbeCase c;
    c.id = r0.cases[i].id;
    c.skipped = r0.cases[i].skipped || r1.cases[i].skipped;
    c.num = r1.cases[i].ratio;
    c.den = r0.cases[i].ratio;
    if (!c.skipped && c.den > 0) c.ratio = c.num / c.den;
    rep.cases.push_back(c);
  }
  rep.finalize();
  return rep;
}

// ------------------------------------------------- bi-Lipschitz stability

struct BilipschitzReport {
  ProbeReport ratios;       // per case: regularity ratio for L_rho vs L
  std::vector<ProbeCase> l2;  // per case: L2(u o rho - v) on the safe region
  double lambda = 0, eps_achieved = 0;
  double sup_h = 1;
};

namespace detail {

// L2 difference between the pulled-back solve and the direct conjugated
// solve, restricted to t <= 0.45 / sup h so rho stays inside the strip.
inline double pullback_l2(const DiscreteSolution& u, const DiscreteSolution& v,
                          const ChangeOfVariable& rho,
                          const HalfSpaceMesh& mesh, double sup_h) {
  const double tmax = 0.45 / std::max(1.0, sup_h);
  double acc = 0;
  long cnt = 0;
  for (int k = 0; k < mesh.N; ++k) {
    const double t = mesh.cell_t(k);
    if (t > tmax) break;
    for (int ix = 0; ix < mesh.N; ++ix) {
      const Vec x = mesh.cell_center_x(ix);
      const auto im = rho.apply(x, t);
      const double d = v.value(x, t) - u.value(im.first, im.second);
      acc += d * d;
      ++cnt;
    }
  }
  return (cnt > 0) ? std::sqrt(acc / static_cast<double>(cnt)) : 0.0;
}

}  // namespace detail

// Direct solve of the conjugated operator versus the pulled-back solve of
// the original, with identical boundary data.
inline BilipschitzReport bilipschitz_stability_probe(const MatrixField& a,
                                                     double eps, int J,
                                                     int cert_J = 4) {
  HalfSpaceMesh mesh(a.n, J);
  Decomposition dec = decompose(a, eps, HalfSpaceMesh(a.n, cert_J));
  ChangeOfVariable rho = build_rho(dec.b, 2000);
  const MatrixField a_rho = conjugate(a, rho);

  double sup_h = 0;
  {
    Vec x;
    double t;
    for (int i = 1; i <= 200; ++i) {
      halton_halfspace_point(static_cast<std::uint64_t>(i), a.n, x, t, 10);
      sup_h = std::max(sup_h, block_split(dec.b, x, t).h);
    }
  }

  BilipschitzReport out;
  out.lambda = dec.lambda;
  out.eps_achieved = dec.eps_achieved;
  out.sup_h = sup_h;
  out.ratios.probe = "bilipschitz";
  out.ratios.preset = a.preset;
  out.ratios.params = {{"J", static_cast<double>(J)},
                       {"eps", eps},
                       {"lambda", dec.lambda}};
  const auto family = standard_family(false);
  for (const auto& dc : family) {
    DiscreteSolution u = solve_dirichlet(a, dc.f, mesh);
    DiscreteSolution v = solve_dirichlet(a_rho, dc.f, mesh);
    ProbeCase c;
    c.id = dc.id;
    const double den =
        lp_of_boundary([&dc](double x) { return dc.f.deriv(x); }, mesh, 2.0);
    const double ru = lp_norm(avg_ntmax(u.grad_magnitude(mesh), mesh), 2.0) / den;
    const double rv = lp_norm(avg_ntmax(v.grad_magnitude(mesh), mesh), 2.0) / den;
    c.num = rv;
    c.den = ru;
    c.ratio = std::fabs(rv - ru) / ru;  // relative ratio difference
    out.ratios.cases.push_back(c);

    ProbeCase l2c;
    l2c.id = dc.id;
    l2c.num = detail::pullback_l2(u, v, rho, mesh, sup_h);
    l2c.den = mesh.h;
    l2c.ratio = l2c.num / l2c.den;
    out.l2.push_back(l2c);
  }
  out.ratios.finalize();
  return out;
}

// The linear-map case: B constant with last row (0, hmap); both sides have
// closed forms and the conjugated solve must agree with the pullback to
// discretization accuracy.
inline double bilipschitz_linear_case(double hmap, int J) {
  HalfSpaceMesh mesh(2, J);
  Mat b = Mat::Identity(2, 2);
  b(1, 1) = hmap;
  ChangeOfVariable rho = build_rho(make_constant(b), 100);
  const MatrixField a = make_identity(2);
  const MatrixField a_rho = conjugate(a, rho);
  const TrigPoly f = TrigPoly::cosine(1);
  DiscreteSolution u = solve_dirichlet(a, f, mesh);
  DiscreteSolution v = solve_dirichlet(a_rho, f, mesh);
  return detail::pullback_l2(u, v, rho, mesh, hmap);
}

// --------------------------------------------------------- IBP identity

// Scalar test functions with analytic derivatives: trig x bump products,
// compactly supported in t inside (0.15, 0.85).
struct SmoothTestFn {
  double freq = 1;   // tangential frequency (integer)
  double phase = 0;
  // bump window fixed: (0.15, 0.85)
  double tb(double t) const {
    if (t <= 0.15 || t >= 0.85) return 0.0;
    const double u = (t - 0.15) / 0.7 * 2.0 - 1.0;
    return std::exp(1.0 - 1.0 / (1.0 - u * u));
  }
  double dtb(double t) const {
    if (t <= 0.15 || t >= 0.85) return 0.0;
    const double u = (t - 0.15) / 0.7 * 2.0 - 1.0;
    const double d = 1.0 - u * u;
    return tb(t) * (-2.0 * u / (d * d)) * (2.0 / 0.7);
  }
  double ddtb(double t) const {  // second derivative, via the quotient form
    if (t <= 0.15 || t >= 0.85) return 0.0;
    const double u = (t - 0.15) / 0.7 * 2.0 - 1.0;
    const double d = 1.0 - u * u;
    const double s = 2.0 / 0.7;
    // d/du [tb * (-2u/d^2)] = tb * [(-2u/d^2)^2 + (-2/d^2 - 8u^2/d^3)]
    return tb(t) * ((4.0 * u * u / (d * d * d * d)) - 2.0 / (d * d) -
                    8.0 * u * u / (d * d * d)) * s * s;
  }
  double xv(double x) const { return std::sin(2 * M_PI * freq * x + phase); }
  double dxv(double x) const {
    return 2 * M_PI * freq * std::cos(2 * M_PI * freq * x + phase);
  }
  double ddxv(double x) const {
    const double w = 2 * M_PI * freq;
    return -w * w * std::sin(w * x + phase);
  }

  double v(double x, double t) const { return xv(x) * tb(t); }
  double dx(double x, double t) const { return dxv(x) * tb(t); }
  double dt(double x, double t) const { return xv(x) * dtb(t); }
  double dxdt(double x, double t) const { return dxv(x) * dtb(t); }
  double dxdx(double x, double t) const { return ddxv(x) * tb(t); }
  double dtdt(double x, double t) const { return xv(x) * ddtb(t); }
};

struct IbpCase {
  int i = 0, j = 0, J = 0;
  double t_direct = 0, t_sum = 0, residual = 0;
};

// T_ij = iint D_ij (d_j u~)(d_i v) dx dt against the four integrated-by-
// parts terms; i must be tangential.
inline std::vector<IbpCase> ibp_identity_probe(const std::vector<int>& Js) {
  // D entries: smooth, compactly supported in t; D_{nj} = 0 structurally.
  SmoothTestFn D00{1, 0.3}, D01{2, 1.1};
  SmoothTestFn ut{1, 0.0}, vt{2, 0.7};
  std::vector<IbpCase> out;
  for (int J : Js) {
    if (J < 3 || J > 10) throw ConfigError("ibp_identity_probe: bad J");
    const int N = 1 << J;
    const double h = 1.0 / N;
    for (int j = 0; j < 2; ++j) {
      const SmoothTestFn& D = (j == 0) ? D00 : D01;
      double Td = 0, T1 = 0, T2 = 0, T3 = 0, T4 = 0;
      for (int k = 0; k < N; ++k) {
        const double t = (k + 0.5) * h;
        for (int ix = 0; ix < N; ++ix) {
          const double x = (ix + 0.5) * h;
          const double w = h * h;
          const double dju = (j == 0) ? ut.dx(x, t) : ut.dt(x, t);
          const double djnu = (j == 0) ? ut.dxdt(x, t) : ut.dtdt(x, t);
          const double diju = (j == 0) ? ut.dxdx(x, t) : ut.dxdt(x, t);
          const double div = vt.dx(x, t);
          const double dnv = vt.dt(x, t);
          Td += w * D.v(x, t) * dju * div;
          T1 -= w * D.dt(x, t) * dju * div * t;
          T2 -= w * D.v(x, t) * djnu * div * t;
          T3 += w * D.dx(x, t) * dju * dnv * t;
          T4 += w * D.v(x, t) * diju * dnv * t;
        }
      }
      IbpCase c;
      c.i = 0;
      c.j = j;
      c.J = J;
      c.t_direct = Td;
      c.t_sum = T1 + T2 + T3 + T4;
      c.residual = std::fabs(Td - c.t_sum);
      out.push_back(c);
    }
  }
  return out;
}

// -------------------------------------------------------------- Moser

struct MoserReport {
  int J = 0;
  double max_ratio = 0;
  Vec argmax_x;
  double argmax_r = 0;
  long points = 0;
};

// Empirical constant in |grad u(x,r)| <= C (avg_{B(x,r)} int_{r/3}^{3r}
// |grad u|^2 dt/t dy)^{1/2} over interior cell centers.
inline MoserReport moser_probe(const MatrixField& a, const TrigPoly& f, int J) {
  HalfSpaceMesh mesh(a.n, J);
  DiscreteSolution sol = solve_dirichlet(a, f, mesh);
  CellGrid g2 = sol.grad_magnitude(mesh);
  CellGrid mag = g2;
  for (auto& v : g2.raw()) v *= v;
  g2.build_prefix();
  MoserReport rep;
  rep.J = J;
  const int Ny = (mesh.n == 3) ? mesh.N : 1;
  for (int k = 0; k < mesh.N; ++k) {
    const double r = mesh.cell_t(k);
    if (r < 3 * mesh.h || 3 * r > 1.0) continue;
    const int klo = mesh.levels_below(r / 3.0);
    const int khi = mesh.levels_below(3.0 * r);
    for (int iy = 0; iy < Ny; ++iy)
      for (int ix = 0; ix < mesh.N; ++ix) {
        const Vec x = mesh.cell_center_x(ix, iy);
        // normalized Whitney average: constant gradients give ratio 1
        double integral = 0, wsum = 0;
        for (int kk = klo; kk < khi; ++kk) {
          const double s = mesh.cell_t(kk);
          if (!(s > r / 3.0 && s < 3.0 * r)) continue;
          double sum = 0;
          long cnt = 0;
          g2.ball_sum_per_level(kk, x, r, sum, cnt);
          if (cnt == 0) continue;
          integral += sum * (mesh.h / s) / static_cast<double>(cnt);
          wsum += mesh.h / s;
        }
        const double den = (wsum > 0) ? std::sqrt(integral / wsum) : 0.0;
        if (den < 1e-14) continue;
        const double ratio = mag.at(ix, iy, k) / den;
        ++rep.points;
        if (ratio > rep.max_ratio) {
          rep.max_ratio = ratio;
          rep.argmax_x = x;
          rep.argmax_r = r;
        }
      }
  }
  return rep;
}

// ----------------------------------------------------- Poisson duality

struct PoissonDualityReport {
  int J = 0;
  double witness_ratio = 0;   // pairing / target, >= 1/2 by construction
  double s_norm = 0, n_norm = 0;  // ||S(v)||_{q'} and ||N(v)||_{q'}
  double total = 0;
};

// Build the dual witness from F = grad(u_f - u~_f), solve the adjoint
// inhomogeneous problem, and record the S + N boundedness trend.
inline PoissonDualityReport poisson_duality_probe(const MatrixField& a,
                                                  double q, int J) {
  HalfSpaceMesh mesh(a.n, J);
  const TrigPoly f = TrigPoly::cosine(1);
  DiscreteSolution u = solve_dirichlet(a, f, mesh);
  DiscreteSolution tilde = laplace_fourier_oracle(f, mesh, Geometry::strip);
  VecGrid F(mesh);
  for (int k = 0; k < mesh.N; ++k)
    for (int ix = 0; ix < mesh.N; ++ix)
      F.at(ix, 0, k) =
          u.grad_centers.at(ix, 0, k) - tilde.grad_centers.at(ix, 0, k);
  const KSlab K{1.0 / 16.0, 1.0 / 4.0};
  PoissonDualityReport rep;
  rep.J = J;
  DualWitness w = dual_witness(F, mesh, K, q);
  rep.witness_ratio = w.ratio;
  DiscreteSolution v = solve_inhomogeneous(a, w.h, mesh, /*adjoint=*/true);
  const double qp = q / (q - 1.0);
  rep.s_norm = lp_norm(area_square(v.tgrad_magnitude(mesh), mesh), qp);
  rep.n_norm = lp_norm(ntmax(v.abs_at_centers(mesh), mesh), qp);
  rep.total = rep.s_norm + rep.n_norm;
  return rep;
}

// ------------------------------------------------- Carleson embedding

struct EmbeddingCheck {
  double lhs = 0, rhs = 0, ratio = 0;
};

// LHS = iint a f g dx dt/t against RHS = M int N(f) A(g) dx.
inline EmbeddingCheck carleson_embedding_check(const ScalarField& a,
                                               const ScalarField& f,
                                               const ScalarField& g,
                                               const HalfSpaceMesh& mesh,
                                               double M) {
  EmbeddingCheck out;
  const int Ny = (mesh.n == 3) ? mesh.N : 1;
  const double hb = std::pow(mesh.h, mesh.n - 1);
  CellGrid fgrid(mesh), ggrid(mesh);
  for (int k = 0; k < mesh.N; ++k) {
    const double t = mesh.cell_t(k);
    for (int iy = 0; iy < Ny; ++iy)
      for (int ix = 0; ix < mesh.N; ++ix) {
        const Vec x = mesh.cell_center_x(ix, iy);
        const double fv = f(x, t);
        const double gv = g(x, t);
        fgrid.at(ix, iy, k) = std::fabs(fv);
        ggrid.at(ix, iy, k) = gv;
        out.lhs += a(x, t) * fv * gv * hb * mesh.h / t;
      }
  }
  const FunctionalProfile nf = ntmax(fgrid, mesh);
  const FunctionalProfile ag = area_square(ggrid, mesh);
  double pairing = 0;
  for (std::size_t i = 0; i < nf.values.size(); ++i)
    pairing += hb * nf.values[i] * ag.values[i];
  out.rhs = M * pairing;
  out.ratio = (out.rhs > 1e-300) ? out.lhs / out.rhs : 0.0;
  return out;
}

// Seeded random fields for the embedding corpus: trig sums with decaying
// coefficients times t-profiles, plus Whitney-piecewise amplitudes for a.
inline ScalarField random_scalar_field(std::uint64_t seed, bool piecewise) {
  if (piecewise) {
    const MatrixField wp = make_whitney_piecewise(2, 0.3, seed);
    return [wp](const Vec& x, double t) {
      return wp.eval(x, t)(0, 0) - 1.0;
    };
  }
  struct Term {
    double amp, k, alpha, phase;
  };
  auto terms = std::make_shared<std::vector<Term>>();
  for (int j = 0; j < 4; ++j) {
    Term tm;
    tm.k = 1 + static_cast<double>(splitmix64(hash_combine(seed, 2 * j)) % 4);
    tm.amp = (2.0 * hash_unit(hash_combine(seed, 3 * j + 1)) - 1.0) /
             (1.0 + tm.k);
    tm.alpha = 1.0 + 5.0 * hash_unit(hash_combine(seed, 5 * j + 2));
    tm.phase = 2 * M_PI * hash_unit(hash_combine(seed, 7 * j + 3));
    terms->push_back(tm);
  }
  return [terms](const Vec& x, double t) {
    double s = 0;
    for (const auto& tm : *terms)
      s += tm.amp * std::cos(2 * M_PI * tm.k * x[0] + tm.phase) *
           std::exp(-tm.alpha * t);
    return s;
  };
}

struct EmbeddingCorpusReport {
  int J = 0;
  int trials = 0;
  double max_ratio = 0;
  int argmax_trial = -1;
};

inline EmbeddingCorpusReport embedding_corpus(int trials, std::uint64_t seed,
                                              int J) {
  HalfSpaceMesh mesh(2, J);
  EmbeddingCorpusReport rep;
  rep.J = J;
  rep.trials = trials;
  for (int i = 0; i < trials; ++i) {
    const std::uint64_t s = hash_combine(seed, static_cast<std::uint64_t>(i));
    const ScalarField a = random_scalar_field(s, (i % 3) == 0);
    const ScalarField f = random_scalar_field(hash_combine(s, 101), false);
    const ScalarField g = random_scalar_field(hash_combine(s, 202), false);
    const double M = cm_norm(a, mesh).norm;
    if (M < 1e-13) continue;
    const EmbeddingCheck ec = carleson_embedding_check(a, f, g, mesh, M);
    if (ec.ratio > rep.max_ratio) {
      rep.max_ratio = ec.ratio;
      rep.argmax_trial = i;
    }
  }
  return rep;
}

}  // namespace dkp
