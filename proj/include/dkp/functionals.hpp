// SPDX-License-Identifier: Apache-2.0
//
// Boundary functionals of interior functions: the non-tangential maximal
// function N, its averaged variant, the truncated variant N_{p,K}, the square
// functionals A and S, L^p boundary norms, and the discrete duality witness.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "dkp/common.hpp"
#include "dkp/mesh.hpp"
#include "dkp/sampled.hpp"

namespace dkp {

struct FunctionalProfile {
  std::string name;
  int n = 2, N = 0;
  double h = 0;
  std::vector<double> values;  // per boundary node, flat [iy*N + ix]

  double& at(int ix, int iy = 0) { return values[static_cast<std::size_t>(iy) * N + ix]; }
  double at(int ix, int iy = 0) const { return values[static_cast<std::size_t>(iy) * N + ix]; }
};

inline FunctionalProfile make_profile(const std::string& name,
                                      const HalfSpaceMesh& mesh) {
  FunctionalProfile p;
  p.name = name;
  p.n = mesh.n;
  p.N = mesh.N;
  p.h = mesh.h;
  p.values.assign(static_cast<std::size_t>(mesh.boundary_node_count()), 0.0);
  return p;
}

// Discrete L^p norm on the periodic boundary grid (probability measure:
// the torus has side 1).
inline double lp_norm(const FunctionalProfile& p, double q) {
  if (!(q > 1.0) || !std::isfinite(q))
    throw ConfigError("lp_norm: p must lie in (1, inf)");
  const double cellw = std::pow(p.h, p.n - 1);
  double s = 0.0;
  for (double v : p.values) s += cellw * std::pow(std::fabs(v), q);
  return std::pow(s, 1.0 / q);
}

// ------------------------------------------------------------------ N

// N(v)(x) = sup over cone cells of |v| at cell centers.
inline FunctionalProfile ntmax(const CellGrid& absv, const HalfSpaceMesh& mesh) {
  FunctionalProfile prof = make_profile("ntmax", mesh);
  const int Ny = (mesh.n == 3) ? mesh.N : 1;
  for (int jy = 0; jy < Ny; ++jy)
    for (int jx = 0; jx < mesh.N; ++jx) {
      const Vec x0 = mesh.boundary_node(jx, jy);
      double best = 0.0;
      for (int k = 0; k < mesh.N; ++k) {
        const double t = mesh.cell_t(k);
        for (int iy = 0; iy < Ny; ++iy) {
          if (mesh.n == 3 &&
              per_dist1(mesh.cell_x(iy), x0[1]) >= t)
            continue;
          for (int ix = 0; ix < mesh.N; ++ix) {
            if (per_dist(mesh.cell_center_x(ix, iy), x0) < t)
              best = std::max(best, std::fabs(absv.at(ix, iy, k)));
          }
        }
      }
      prof.at(jx, jy) = best;
    }
  return prof;
}

namespace detail {

// Whitney-box L^2 averages of |v| around every cell center, normalized by
// the discrete measure so constants are reproduced exactly.
inline CellGrid whitney_l2_averages(const CellGrid& absv,
                                    const HalfSpaceMesh& mesh) {
  CellGrid sq = absv;
  for (auto& v : sq.raw()) v *= v;
  sq.build_prefix();
  CellGrid out(mesh);
  const int Ny = (mesh.n == 3) ? mesh.N : 1;
  for (int k = 0; k < mesh.N; ++k) {
    const double t = mesh.cell_t(k);
    const int klo = mesh.levels_below(t) /* centers < t */;
    const int khi = mesh.levels_below(2.0 * t);
    for (int iy = 0; iy < Ny; ++iy)
      for (int ix = 0; ix < mesh.N; ++ix) {
        const Vec x = mesh.cell_center_x(ix, iy);
        double num = 0.0, den = 0.0;
        for (int kk = klo; kk < khi; ++kk) {
          const double s = mesh.cell_t(kk);
          if (!(s > t && s < 2.0 * t)) continue;
          double sum = 0.0;
          long cnt = 0;
          sq.ball_sum_per_level(kk, x, 2.0 * t, sum, cnt);
          num += sum * (mesh.h / s);
          den += static_cast<double>(cnt) * (mesh.h / s);
        }
        out.at(ix, iy, k) = (den > 0.0) ? num / den
                                        : sq.at(ix, iy, k);
      }
  }
  return out;
}

}  // namespace detail

// ------------------------------------------------------------------ N~

// Averaged variant: sup over cone points of the Whitney L^2 average.
inline FunctionalProfile avg_ntmax(const CellGrid& absv,
                                   const HalfSpaceMesh& mesh) {
  const CellGrid wavg = detail::whitney_l2_averages(absv, mesh);
  const int Ny = (mesh.n == 3) ? mesh.N : 1;
  FunctionalProfile prof = make_profile("avg_ntmax", mesh);
  for (int jy = 0; jy < Ny; ++jy)
    for (int jx = 0; jx < mesh.N; ++jx) {
      const Vec x0 = mesh.boundary_node(jx, jy);
      double best = 0.0;
      for (int k = 0; k < mesh.N; ++k) {
        const double t = mesh.cell_t(k);
        for (int iy = 0; iy < Ny; ++iy) {
          if (mesh.n == 3 && per_dist1(mesh.cell_x(iy), x0[1]) >= t) continue;
          for (int ix = 0; ix < mesh.N; ++ix)
            if (per_dist(mesh.cell_center_x(ix, iy), x0) < t)
              best = std::max(best, wavg.at(ix, iy, k));
        }
      }
      prof.at(jx, jy) = std::sqrt(best);
    }
  return prof;
}

// ------------------------------------------------------------- N_{p,K}

// Truncation region: a union of whole cells, compactly inside the domain.
// A vertical slab by default, optionally intersected with a predicate.
struct KRegion {
  double t_lo = 0.0, t_hi = 1.0;
  std::function<bool(const Vec&, double)> extra;  // nullptr: slab only
  bool contains(const Vec& y, double t) const {
    return t >= t_lo && t <= t_hi && (!extra || extra(y, t));
  }
};
using KSlab = KRegion;

struct BallRef {
  Vec center;      // cone point (y, r)
  double r = 0.0;  // height of the cone point; ball radius is r/4
  long cells = 0;  // cells in the discrete ball
  bool valid = false;
};

namespace detail {

// Average of |v|^p over the n-dimensional ball of radius r/4 around (y, r).
inline double ball_average(const CellGrid& vpow, const HalfSpaceMesh& mesh,
                           const Vec& y, double r, long* cells = nullptr) {
  const double rad = r / 4.0;
  double num = 0.0;
  long cnt = 0;
  const int klo = std::max(0, static_cast<int>(std::floor((r - rad) / mesh.h - 0.5)));
  const int khi = std::min(mesh.N - 1,
                           static_cast<int>(std::ceil((r + rad) / mesh.h - 0.5)));
  for (int k = klo; k <= khi; ++k) {
    const double dt = mesh.cell_t(k) - r;
    if (std::fabs(dt) >= rad) continue;
    const double w = std::sqrt(std::max(0.0, rad * rad - dt * dt));
    vpow.ball_sum_per_level(k, y, w, num, cnt);
  }
  if (cells) *cells = cnt;
  return (cnt > 0) ? num / static_cast<double>(cnt) : 0.0;
}

}  // namespace detail

// N_{p,K}(v)(x) = sup over cone points (y,r) in K of the |v|^p ball average
// to the power 1/p.  Ties break toward the smallest r, then lexicographic
// center.  Optionally reports the maximizing balls.
inline FunctionalProfile truncated_ntmax(const CellGrid& absv,
                                         const HalfSpaceMesh& mesh,
                                         const KRegion& K, int p,
                                         std::vector<BallRef>* argmax = nullptr) {
  if (p != 1 && p != 2) throw ConfigError("truncated_ntmax: p must be 1 or 2");
  CellGrid vpow = absv;
  if (p == 2)
    for (auto& v : vpow.raw()) v *= v;
  vpow.build_prefix();

  FunctionalProfile prof = make_profile("truncated_ntmax", mesh);
  const int Ny = (mesh.n == 3) ? mesh.N : 1;
  if (argmax)
    argmax->assign(static_cast<std::size_t>(mesh.boundary_node_count()),
                   BallRef{});
  for (int jy = 0; jy < Ny; ++jy)
    for (int jx = 0; jx < mesh.N; ++jx) {
      const Vec x0 = mesh.boundary_node(jx, jy);
      double best = -1.0;
      BallRef bestref;
      for (int k = 0; k < mesh.N; ++k) {
        const double r = mesh.cell_t(k);
        if (r < K.t_lo || r > K.t_hi) continue;
        for (int iy = 0; iy < Ny; ++iy) {
          if (mesh.n == 3 && per_dist1(mesh.cell_x(iy), x0[1]) >= r) continue;
          for (int ix = 0; ix < mesh.N; ++ix) {
            const Vec y = mesh.cell_center_x(ix, iy);
            if (per_dist(y, x0) >= r) continue;
            if (!K.contains(y, r)) continue;
            long cells = 0;
            const double avg = detail::ball_average(vpow, mesh, y, r, &cells);
            if (cells == 0) continue;
            if (avg > best * (1.0 + 1e-13)) {
              best = avg;
              bestref = BallRef{y, r, cells, true};
            }
          }
        }
      }
      const double val = (best <= 0.0) ? 0.0 : best;
      prof.at(jx, jy) = (p == 2) ? std::sqrt(val) : val;
      if (argmax) (*argmax)[static_cast<std::size_t>(jy) * mesh.N + jx] = bestref;
    }
  return prof;
}

// ------------------------------------------------------------- A and S

// A(v)(x) = (integral over the cone of v^2 t^{-n} dt dy)^{1/2};
// S(v) = A(t grad v) — pass the grid of t|grad v| for S.
inline FunctionalProfile area_square(const CellGrid& v,
                                     const HalfSpaceMesh& mesh) {
  FunctionalProfile prof = make_profile("area_square", mesh);
  const int Ny = (mesh.n == 3) ? mesh.N : 1;
  const double hn = std::pow(mesh.h, mesh.n);
  for (int jy = 0; jy < Ny; ++jy)
    for (int jx = 0; jx < mesh.N; ++jx) {
      const Vec x0 = mesh.boundary_node(jx, jy);
      double acc = 0.0;
      for (int k = 0; k < mesh.N; ++k) {
        const double t = mesh.cell_t(k);
        const double wt = hn / std::pow(t, mesh.n);
        for (int iy = 0; iy < Ny; ++iy) {
          if (mesh.n == 3 && per_dist1(mesh.cell_x(iy), x0[1]) >= t) continue;
          for (int ix = 0; ix < mesh.N; ++ix)
            if (per_dist(mesh.cell_center_x(ix, iy), x0) < t) {
              const double vv = v.at(ix, iy, k);
              acc += vv * vv * wt;
            }
        }
      }
      prof.at(jx, jy) = std::sqrt(acc);
    }
  return prof;
}

// --------------------------------------------------------- dual witness

struct DualWitness {
  VecGrid h;            // compactly supported vector field
  double pairing = 0;   // integral of F . h
  double target = 0;    // ||N_{1,K}(F)||_q
  double ratio = 0;     // pairing / target, certified >= 1/2
  KRegion K;
  std::vector<BallRef> balls;
};

// For each boundary node, pick the maximizing ball of N_{1,K}, weight it by
// N^{q-1}/||N||_q^{q-1}, and point h along F.  The discrete pairing then
// reproduces ||N_{1,K}(F)||_q exactly up to roundoff.
inline DualWitness dual_witness(const VecGrid& F, const HalfSpaceMesh& mesh,
                                const KRegion& K, double q) {
  DualWitness w;
  w.K = K;
  const CellGrid absF = F.magnitude(mesh);
  FunctionalProfile prof = truncated_ntmax(absF, mesh, K, 1, &w.balls);
  w.target = lp_norm(prof, q);
  if (w.target <= 0.0)
    throw DegenerateInputError("dual_witness: N_{1,K}(F) vanishes identically");

  const int Ny = (mesh.n == 3) ? mesh.N : 1;
  const double hn = std::pow(mesh.h, mesh.n);
  const double hb = std::pow(mesh.h, mesh.n - 1);
  // scalar envelope: sum over nodes of h^{n-1} g_i 1_{ball_i} / |ball_i|
  CellGrid envelope(mesh);
  for (int jy = 0; jy < Ny; ++jy)
    for (int jx = 0; jx < mesh.N; ++jx) {
      const auto& ball = w.balls[static_cast<std::size_t>(jy) * mesh.N + jx];
      const double Nval = prof.at(jx, jy);
      if (!ball.valid || Nval <= 0.0) continue;
      const double g = std::pow(Nval, q - 1.0) / std::pow(w.target, q - 1.0);
      const double coef = hb * g / (static_cast<double>(ball.cells) * hn);
      const double rad = ball.r / 4.0;
      for (int k = 0; k < mesh.N; ++k) {
        const double dt = mesh.cell_t(k) - ball.r;
        if (std::fabs(dt) >= rad) continue;
        const double wd = std::sqrt(std::max(0.0, rad * rad - dt * dt));
        for (int iy = 0; iy < Ny; ++iy) {
          if (mesh.n == 3 && per_dist1(mesh.cell_x(iy), ball.center[1]) >= wd)
            continue;
          for (int ix = 0; ix < mesh.N; ++ix)
            if (per_dist(mesh.cell_center_x(ix, iy), ball.center) < wd)
              envelope.at(ix, iy, k) += coef;
        }
      }
    }

  w.h = VecGrid(mesh);
  double pairing = 0.0;
  for (int k = 0; k < mesh.N; ++k)
    for (int iy = 0; iy < Ny; ++iy)
      for (int ix = 0; ix < mesh.N; ++ix) {
        const double env = envelope.at(ix, iy, k);
        if (env == 0.0) continue;
        const Vec& f = F.at(ix, iy, k);
        const double mag = f.norm();
        if (mag < 1e-14) continue;
        w.h.at(ix, iy, k) = (env / mag) * f;
        pairing += env * mag * hn;
      }
  w.pairing = pairing;
  w.ratio = w.pairing / w.target;
  return w;
}

}  // namespace dkp
