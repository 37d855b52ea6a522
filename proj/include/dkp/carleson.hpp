// SPDX-License-Identifier: Apache-2.0
//
// Carleson-measure functionals over dyadic tents: the CM norm, the weak-DKP
// oscillation functional f_L, the DKP gradient norm, and the L-infinity
// Whitney variant.  All t-integrals are truncated at the mesh floor; genuine
// divergence is detected by comparing refinements instead of reporting
// infinities.

#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "dkp/common.hpp"
#include "dkp/field.hpp"
#include "dkp/mesh.hpp"
#include "dkp/sampled.hpp"

namespace dkp {

using ScalarField = std::function<double(const Vec&, double)>;

struct TentValue {
  int scale_j = 0;
  Vec center;
  double average = 0;  // tent average of the integrand
};

struct CarlesonReport {
  double norm = 0.0;  // M; norm^2 is the sup of tent averages
  DyadicTent argmax;
  std::vector<double> per_scale;  // max tent average per dyadic scale j
  bool diverging = false;
  // (J, M^2) over the refinements tested by divergence detection.
  std::vector<std::pair<int, double>> msq_by_J;
  std::vector<TentValue> tents;  // filled when collect is requested
};

struct DivergenceOptions {
  bool detect = false;
  bool collect = false;  // record every enumerated tent in the report
};

namespace detail {

// Sup over dyadic tents of the average of `integrand` against the measure
// dx dt/t.  The integrand grid holds the quantity to be averaged directly
// (|g|^2 for CM norms, f_L for the weak-DKP norm).
inline CarlesonReport tent_sup(CellGrid integrand, const HalfSpaceMesh& mesh,
                               bool collect = false) {
  integrand.build_prefix();
  CarlesonReport rep;
  rep.per_scale.assign(mesh.J + 1, 0.0);
  double best = -1.0;
  for (int j = 0; j <= mesh.J; ++j) {
    double scale_best = 0.0;
    for (const auto& tent : mesh.tents_at_scale(j)) {
      const int kmax = mesh.levels_below(tent.r);
      double integral = 0.0;
      long tan_count = 0;
      for (int k = 0; k < kmax; ++k) {
        double s = 0.0;
        long cnt = 0;
        integrand.ball_sum_per_level(k, tent.center, tent.r, s, cnt);
        integral += s * (mesh.h / mesh.cell_t(k));
        if (k == 0) tan_count = cnt;
      }
      if (tan_count == 0) continue;
      const double avg = integral / static_cast<double>(tan_count);
      if (collect) rep.tents.push_back({j, tent.center, avg});
      scale_best = std::max(scale_best, avg);
      if (avg > best) {
        best = avg;
        rep.argmax = tent;
      }
    }
    rep.per_scale[j] = scale_best;
  }
  rep.norm = std::sqrt(std::max(0.0, best));
  return rep;
}

// Divergence rule: the two-octave gain M^2(J+1) - M^2(J-1) exceeds 4% of
// M^2(J+1) and the trace is increasing.  A two-octave window keeps slowly
// oscillating integrands (sin(ln t)) from masking their logarithmic growth.
template <class GridBuilder>
CarlesonReport tent_sup_refined(GridBuilder&& build, const HalfSpaceMesh& mesh,
                                const DivergenceOptions& opts) {
  CarlesonReport rep = tent_sup(build(mesh), mesh, opts.collect);
  if (!opts.detect) return rep;
  if (mesh.J < 4 || mesh.J + 1 > 10)
    throw ConfigError("divergence detection needs 4 <= J <= 9");
  HalfSpaceMesh coarse(mesh.n, mesh.J - 1), fine(mesh.n, mesh.J + 1);
  const CarlesonReport r0 = tent_sup(build(coarse), coarse);
  const CarlesonReport r2 = tent_sup(build(fine), fine);
  const double m0 = r0.norm * r0.norm;
  const double m1 = rep.norm * rep.norm;
  const double m2 = r2.norm * r2.norm;
  rep.msq_by_J = {{mesh.J - 1, m0}, {mesh.J, m1}, {mesh.J + 1, m2}};
  const bool increasing = (m2 >= m1 * (1.0 - 1e-9)) && (m1 >= m0 * (1.0 - 1e-9));
  rep.diverging = increasing && (m2 - m0) > std::max(0.04 * m2, 1e-14);
  return rep;
}

inline CellGrid square_grid(CellGrid g) {
  for (auto& v : g.raw()) v *= v;
  return g;
}

}  // namespace detail

// --------------------------------------------------------------- cm_norm

inline CarlesonReport cm_norm(const ScalarField& g, const HalfSpaceMesh& mesh,
                              DivergenceOptions opts = {}) {
  auto build = [&g](const HalfSpaceMesh& m) {
    return detail::square_grid(sample_cell_grid(m, g));
  };
  return detail::tent_sup_refined(build, mesh, opts);
}

// CM norm of a field already sampled at cell centers (no refinement study).
inline CarlesonReport cm_norm_sampled(const CellGrid& g,
                                      const HalfSpaceMesh& mesh) {
  return detail::tent_sup(detail::square_grid(g), mesh);
}

// ----------------------------------------------------- Whitney oscillation

struct WhitneyOscillation {
  Vec x;
  double t = 0.0;
  Mat abar;       // optimal constant matrix (weighted mean)
  double f_l = 0.0;
  bool clipped = false;
};

// L^2 oscillation over the Whitney box B(x,2t) x (t,2t) with measure
// dy ds/s, sampled with 4 Gauss points per cell per direction.
inline WhitneyOscillation whitney_oscillation(const MatrixField& a, const Vec& x,
                                              double t,
                                              const HalfSpaceMesh& mesh) {
  const int n = a.n;
  const Rule1D& gl = gauss_legendre_cached(WhitneyTable::G);
  WhitneyOscillation out;
  out.x = x;
  out.t = t;
  out.clipped = (2.0 * t > 1.0);
  double W = 0.0, fro2 = 0.0;
  Mat acc = Mat::Zero(n, n);
  const int klo = std::max(0, static_cast<int>(std::floor(t / mesh.h)) - 1);
  const int khi = std::min(mesh.N, static_cast<int>(std::ceil(2.0 * t / mesh.h)) + 1);
  const int Ny = (n == 3) ? mesh.N : 1;
  Vec y(n - 1);
  for (int k = klo; k < khi; ++k) {
    for (int b = 0; b < WhitneyTable::G; ++b) {
      const double s = (k + 0.5 * (gl.x[b] + 1.0)) * mesh.h;
      if (s <= t || s >= 2.0 * t) continue;
      const double ws = 0.5 * gl.w[b] * mesh.h / s;
      for (int iy = 0; iy < Ny; ++iy)
        for (int by = 0; by < (n == 3 ? WhitneyTable::G : 1); ++by) {
          if (n == 3) y[1] = (iy + 0.5 * (gl.x[by] + 1.0)) * mesh.h;
          const double wyy =
              (n == 3) ? 0.5 * gl.w[by] * mesh.h : 1.0;
          for (int ix = 0; ix < mesh.N; ++ix)
            for (int bx = 0; bx < WhitneyTable::G; ++bx) {
              y[0] = (ix + 0.5 * (gl.x[bx] + 1.0)) * mesh.h;
              if (per_dist(y, x) >= 2.0 * t) continue;
              const double w = ws * wyy * 0.5 * gl.w[bx] * mesh.h;
              const Mat m = a.eval(y, s);
              W += w;
              acc += w * m;
              fro2 += w * m.squaredNorm();
            }
        }
    }
  }
  if (W > 0.0) {
    out.abar = acc / W;
    out.f_l = std::max(0.0, fro2 / W - out.abar.squaredNorm());
  } else {
    out.abar = Mat::Zero(n, n);
  }
  return out;
}

// ---------------------------------------------------------- weak-DKP norm

// Tent averages of f_L at first power; reported with norm^2 = sup average.
inline CarlesonReport weak_dkp_norm(const MatrixField& a,
                                    const HalfSpaceMesh& mesh,
                                    DivergenceOptions opts = {}) {
  auto build = [&a](const HalfSpaceMesh& m) {
    WhitneyTable table(a, m);
    CellGrid g(m);
    const int Ny = (m.n == 3) ? m.N : 1;
    for (int k = 0; k < m.N; ++k) {
      const double t = m.cell_t(k);
      for (int iy = 0; iy < Ny; ++iy)
        for (int ix = 0; ix < m.N; ++ix)
          g.at(ix, iy, k) = table.oscillation(m.cell_center_x(ix, iy), t).f_l;
    }
    return g;
  };
  return detail::tent_sup_refined(build, mesh, opts);
}

// --------------------------------------------------------------- DKP norm

// CM norm of t |grad A| (Frobenius over all entries and directions).
inline CarlesonReport dkp_norm(const MatrixField& a, const HalfSpaceMesh& mesh,
                               DivergenceOptions opts = {}) {
  if (!a.differentiable)
    throw NotApplicableError("dkp_norm: preset '" + a.preset +
                             "' has no gradient");
  auto tgrad = [&a](const Vec& x, double t, double fd_step) {
    double s2 = 0.0;
    if (a.has_gradient) {
      const MatGrad g = a.grad(x, t);
      for (int d = 0; d < a.n; ++d) s2 += g[static_cast<std::size_t>(d)].squaredNorm();
    } else {
      for (int d = 0; d < a.n; ++d) {
        Vec xp = x, xm = x;
        double tp = t, tm = t;
        if (d < a.n - 1) {
          xp[d] += fd_step;
          xm[d] -= fd_step;
        } else {
          tp += fd_step;
          tm -= fd_step;
        }
        Mat dm = (a.eval(xp, tp) - a.eval(xm, tm)) / (2.0 * fd_step);
        s2 += dm.squaredNorm();
      }
    }
    return t * std::sqrt(s2);
  };
  auto build = [&](const HalfSpaceMesh& m) {
    const double step = m.h / 4.0;
    return detail::square_grid(sample_cell_grid(
        m, [&](const Vec& x, double t) { return tgrad(x, t, step); }));
  };
  return detail::tent_sup_refined(build, mesh, opts);
}

// ------------------------------------------------------ L-infinity variant

inline CarlesonReport linfty_whitney_norm(const MatrixField& a,
                                          const HalfSpaceMesh& mesh,
                                          DivergenceOptions opts = {}) {
  auto build = [&a](const HalfSpaceMesh& m) {
    WhitneyTable table(a, m);
    CellGrid g(m);
    const int Ny = (m.n == 3) ? m.N : 1;
    for (int k = 0; k < m.N; ++k) {
      const double t = m.cell_t(k);
      for (int iy = 0; iy < Ny; ++iy)
        for (int ix = 0; ix < m.N; ++ix)
          g.at(ix, iy, k) =
              table.sup_oscillation(m.cell_center_x(ix, iy), t);
    }
    return detail::square_grid(std::move(g));
  };
  return detail::tent_sup_refined(build, mesh, opts);
}

}  // namespace dkp
