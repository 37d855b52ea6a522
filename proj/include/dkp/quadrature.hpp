// SPDX-License-Identifier: Apache-2.0
//
// 1D quadrature rules and the smooth bump profiles used by the mollifier.

#pragma once

#include <cmath>
#include <map>
#include <vector>

#include "dkp/common.hpp"

namespace dkp {

struct Rule1D {
  std::vector<double> x;  // nodes
  std::vector<double> w;  // weights
};

// Gauss-Legendre rule on [-1,1], nodes by Newton iteration.
inline Rule1D gauss_legendre(int m) {
  Rule1D r;
  r.x.resize(m);
  r.w.resize(m);
  for (int i = 0; i < m; ++i) {
    // Chebyshev initial guess.
    double x = std::cos(M_PI * (i + 0.75) / (m + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      // Legendre P_m(x) and derivative by recurrence.
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= m; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = m * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    r.x[m - 1 - i] = x;
    r.w[m - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

inline const Rule1D& gauss_legendre_cached(int m) {
  static std::map<int, Rule1D> cache;
  auto it = cache.find(m);
  if (it == cache.end()) it = cache.emplace(m, gauss_legendre(m)).first;
  return it->second;
}

// Composite midpoint on [0,1]. For integrands whose derivatives all vanish
// at the interval ends (our bump kernels) this converges super-algebraically.
inline Rule1D midpoint01(int m) {
  Rule1D r;
  r.x.resize(m);
  r.w.assign(m, 1.0 / m);
  for (int i = 0; i < m; ++i) r.x[i] = (i + 0.5) / m;
  return r;
}

// ------------------------------------------------------------ bump kernels
//
// phi: radial C^infty bump supported on the unit ball of R^{n-1}, integral 1.
// psi: C^infty bump supported on (1,2), integral 1.

inline double bump_profile_r2(double r2) {  // unnormalized, argument |x|^2
  return (r2 < 1.0) ? std::exp(-1.0 / (1.0 - r2)) : 0.0;
}

// d/dr of the unnormalized profile, as a function of r.
inline double bump_profile_deriv(double r) {
  double r2 = r * r;
  if (r2 >= 1.0) return 0.0;
  double d = 1.0 - r2;
  return bump_profile_r2(r2) * (-2.0 * r / (d * d));
}

inline double psi_profile(double u) {
  if (u <= 1.0 || u >= 2.0) return 0.0;
  return std::exp(-1.0 / ((u - 1.0) * (2.0 - u)));
}

inline double psi_profile_deriv(double u) {
  if (u <= 1.0 || u >= 2.0) return 0.0;
  double a = u - 1.0, b = 2.0 - u;
  // d/du exp(-1/(ab)) = exp(-1/(ab)) * (b - a)/(a b)^2
  return psi_profile(u) * (b - a) / (a * a * b * b);
}

// Normalization and gradient-mass constants for the kernel pair; computed
// once per ambient dimension by high-resolution quadrature.
struct KernelConstants {
  int n = 2;            // ambient dimension; tangential dimension is n-1
  double phi_norm = 1;  // integral of the unnormalized phi over R^{n-1}
  double psi_norm = 1;  // integral of the unnormalized psi over (1,2)
  double c_phi = 0;     // integral of |grad phi| (normalized phi)
  double c_psi = 0;     // integral of |psi'|     (normalized psi)

  double phi(const Vec& xi) const {
    return bump_profile_r2(xi.squaredNorm()) / phi_norm;
  }
  // Gradient of the normalized phi.
  Vec grad_phi(const Vec& xi) const {
    double r = xi.norm();
    Vec g = Vec::Zero(n - 1);
    if (r < 1e-14 || r >= 1.0) return g;
    double dr = bump_profile_deriv(r) / phi_norm;
    g = (dr / r) * xi;
    return g;
  }
  double psi(double u) const { return psi_profile(u) / psi_norm; }
  double dpsi(double u) const { return psi_profile_deriv(u) / psi_norm; }

  static const KernelConstants& get(int n);
};

inline const KernelConstants& KernelConstants::get(int n) {
  static std::map<int, KernelConstants> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  KernelConstants kc;
  kc.n = n;
  const Rule1D gl = gauss_legendre(200);
  // psi normalization and |psi'| mass on (1,2).
  double zpsi = 0, cpsi = 0;
  for (int i = 0; i < 200; ++i) {
    double u = 1.5 + 0.5 * gl.x[i];
    zpsi += 0.5 * gl.w[i] * psi_profile(u);
    cpsi += 0.5 * gl.w[i] * std::fabs(psi_profile_deriv(u));
  }
  kc.psi_norm = zpsi;
  kc.c_psi = cpsi / zpsi;

  if (n == 2) {
    double zphi = 0, cphi = 0;
    for (int i = 0; i < 200; ++i) {
      double x = gl.x[i];
      zphi += gl.w[i] * bump_profile_r2(x * x);
      cphi += gl.w[i] * std::fabs(bump_profile_deriv(std::fabs(x)));
    }
    kc.phi_norm = zphi;
    kc.c_phi = cphi / zphi;
  } else {
    // radial integrals over the unit disc in R^2
    double zphi = 0, cphi = 0;
    for (int i = 0; i < 200; ++i) {
      double r = 0.5 + 0.5 * gl.x[i];
      double w = 0.5 * gl.w[i];
      zphi += w * 2.0 * M_PI * r * bump_profile_r2(r * r);
      cphi += w * 2.0 * M_PI * r * std::fabs(bump_profile_deriv(r));
    }
    kc.phi_norm = zphi;
    kc.c_phi = cphi / zphi;
  }
  return cache.emplace(n, kc).first->second;
}

}  // namespace dkp
