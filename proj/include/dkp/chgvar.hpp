// SPDX-License-Identifier: Apache-2.0
//
// The flattening map rho(x,t) = (x + t v(x,t), t h(x,t)) built from the
// lower blocks of a smoothed coefficient matrix, its Jacobian and Newton
// inverse, and the weak-form pullback A_rho = |det J| J^{-1} A(rho) J^{-T}.

#pragma once

#include <cmath>
#include <utility>

#include "dkp/carleson.hpp"
#include "dkp/common.hpp"
#include "dkp/field.hpp"
#include "dkp/smoothing.hpp"

namespace dkp {

struct ChangeOfVariable {
  MatrixField source;       // the field B whose blocks define the map
  double sup_jac = 0;       // measured sup |J|
  double sup_jac_inv = 0;   // measured sup |J^{-1}|
  bool invertible = false;

  // rho(x,t) = (x + t v, t h)
  std::pair<Vec, double> apply(const Vec& x, double t) const {
    const BlockView bv = block_split(source.eval(x, t));
    return {Vec(x + t * bv.v), t * bv.h};
  }

  Mat jacobian(const Vec& x, double t) const {
    const int n = source.n;
    const BlockView bv = block_split(source.eval(x, t));
    MatGrad g;
    if (source.has_gradient) {
      g = source.grad(x, t);
    } else {
      // scale-aware central differences
      for (int d = 0; d < n; ++d) {
        const double step = (d == n - 1) ? t / 100.0 : std::max(t / 100.0, 1e-7);
        Vec xp = x, xm = x;
        double tp = t, tm = t;
        if (d < n - 1) {
          xp[d] += step;
          xm[d] -= step;
        } else {
          tp += step;
          tm -= step;
        }
        g[static_cast<std::size_t>(d)] =
            (source.eval(xp, tp) - source.eval(xm, tm)) / (2.0 * step);
      }
    }
    Mat jac(n, n);
    for (int i = 0; i < n - 1; ++i) {
      for (int j = 0; j < n - 1; ++j)
        jac(i, j) = (i == j ? 1.0 : 0.0) +
                    t * g[static_cast<std::size_t>(j)](n - 1, i);
      jac(i, n - 1) = bv.v[i] + t * g[static_cast<std::size_t>(n - 1)](n - 1, i);
    }
    for (int j = 0; j < n - 1; ++j)
      jac(n - 1, j) = t * g[static_cast<std::size_t>(j)](n - 1, n - 1);
    jac(n - 1, n - 1) = bv.h + t * g[static_cast<std::size_t>(n - 1)](n - 1, n - 1);
    return jac;
  }
};

// Build rho from B; invertibility is certified by det J > 0 on a seeded
// quasi-random sample.
inline ChangeOfVariable build_rho(const MatrixField& b, int samples = 10000) {
  ChangeOfVariable rho;
  rho.source = b;
  double sj = 0, sji = 0;
  Vec x;
  double t;
  for (int i = 1; i <= samples; ++i) {
    halton_halfspace_point(static_cast<std::uint64_t>(i), b.n, x, t, 10);
    const Mat jac = rho.jacobian(x, t);
    const double det = jac.determinant();
    if (!(det > 0.0))
      throw NotInvertibleError("build_rho: det J <= 0 at sample point", x, t);
    sj = std::max(sj, op_norm(jac));
    sji = std::max(sji, op_norm(jac.inverse()));
  }
  rho.sup_jac = sj;
  rho.sup_jac_inv = sji;
  rho.invertible = true;
  return rho;
}

// Damped Newton inversion of rho at an interior point.
inline std::pair<Vec, double> invert_rho(const ChangeOfVariable& rho,
                                         const Vec& Xx, double Xt,
                                         double tol = 1e-12, int max_iter = 50) {
  if (!rho.invertible)
    throw ConfigError("invert_rho: map not certified invertible");
  const int n = rho.source.n;
  Vec yx = Xx;
  const BlockView bv0 = block_split(rho.source.eval(Xx, Xt));
  double yt = Xt / bv0.h;
  auto residual = [&](const Vec& zx, double zt, Vec& rx, double& rt) {
    auto im = rho.apply(zx, zt);
    rx = im.first - Xx;
    rt = im.second - Xt;
    return std::sqrt(rx.squaredNorm() + rt * rt);
  };
  Vec rx(n - 1);
  double rt = 0;
  double rn = residual(yx, yt, rx, rt);
  for (int it = 0; it < max_iter; ++it) {
    if (rn <= tol) return {yx, yt};
    const Mat jac = rho.jacobian(yx, yt);
    Vec full(n);
    full.head(n - 1) = rx;
    full[n - 1] = rt;
    const Vec step = jac.inverse() * full;
    double damping = 1.0;
    for (int d = 0; d < 8; ++d) {
      Vec zx = yx - damping * step.head(n - 1);
      double zt = yt - damping * step[n - 1];
      if (zt > 0) {
        Vec rx2(n - 1);
        double rt2 = 0;
        const double rn2 = residual(zx, zt, rx2, rt2);
        if (rn2 < rn) {
          yx = zx;
          yt = zt;
          rx = rx2;
          rt = rt2;
          rn = rn2;
          break;
        }
      }
      damping *= 0.5;
      if (d == 7)
        throw NumericalError("invert_rho: damping failed, residual " +
                             std::to_string(rn));
    }
  }
  if (rn <= tol) return {yx, yt};
  throw NumericalError("invert_rho: no convergence, residual " +
                       std::to_string(rn));
}

// The weak-form pullback: L_rho (u o rho) = 0 whenever L u = 0.
inline MatrixField conjugate(const MatrixField& a, const ChangeOfVariable& rho) {
  if (!rho.invertible) throw ConfigError("conjugate: map not invertible");
  MatrixField f;
  f.n = a.n;
  auto aeval = a.eval;
  ChangeOfVariable map = rho;
  f.eval = [aeval, map](const Vec& x, double t) {
    const Mat jac = map.jacobian(x, t);
    const double det = jac.determinant();
    if (!(std::fabs(det) > 1e-14))
      throw NumericalError("conjugate: singular Jacobian");
    const Mat jinv = jac.inverse();
    const auto im = map.apply(x, t);
    return Mat(std::fabs(det) * jinv * aeval(im.first, im.second) *
               jinv.transpose());
  };
  f.has_gradient = false;
  f.differentiable = a.differentiable && map.source.differentiable;
  f.eval_noise = std::max(a.eval_noise, map.source.eval_noise);
  const double bl = std::max(rho.sup_jac, rho.sup_jac_inv);
  f.lambda_decl = a.lambda_decl / (bl * bl);
  f.bound_decl = a.bound_decl * bl * bl * bl * bl;  // crude, declared only
  f.preset = "conjugate(" + a.preset + ")";
  f.params = a.params;
  return f;
}

// Diagnostics for the conjugated operator: how far the last row sits from
// (0,...,0,1), and DKP-style norms of the upper blocks after a smoothing
// split (the split supplies kernel-quadrature gradients, so no gradient of
// A_rho is required).
struct StructureDiagnostics {
  CarlesonReport last_row_deviation;
  CarlesonReport upper_block_dkp;  // cm norm of t|grad (upper rows of B1)|
};

inline StructureDiagnostics structure_check(const MatrixField& a_rho,
                                            const HalfSpaceMesh& mesh,
                                            bool with_upper_blocks = true,
                                            QuadOptions opt = {}) {
  StructureDiagnostics diag;
  const int n = a_rho.n;
  auto dev = [&a_rho, n](const Vec& x, double t) {
    const Mat m = a_rho.eval(x, t);
    double s = 0;
    for (int j = 0; j < n; ++j) {
      const double target = (j == n - 1) ? 1.0 : 0.0;
      const double d = m(n - 1, j) - target;
      s += d * d;
    }
    return std::sqrt(s);
  };
  diag.last_row_deviation = cm_norm(dev, mesh);
  if (with_upper_blocks) {
    opt.verify = false;  // A_rho carries pullback noise
    SplitFields split = initial_split(a_rho, opt);
    const MatrixField& b1 = split.b1;
    diag.upper_block_dkp = cm_norm(
        [&b1, n](const Vec& x, double t) {
          const MatGrad g = b1.grad(x, t);
          double s = 0;
          for (int d = 0; d < n; ++d)
            for (int i = 0; i < n - 1; ++i)
              for (int j = 0; j < n; ++j)
                s += g[static_cast<std::size_t>(d)](i, j) *
                     g[static_cast<std::size_t>(d)](i, j);
          return t * std::sqrt(s);
        },
        mesh);
  }
  return diag;
}

}  // namespace dkp
