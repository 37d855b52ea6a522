// SPDX-License-Identifier: Apache-2.0
//
// Tensor discretization of the truncated half-space T^{n-1} x (0,1] with the
// dyadic tent / cone / Whitney index structures used by the Carleson and
// non-tangential functionals.

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "dkp/common.hpp"

namespace dkp {

// A dyadic tent B(z,r) x (0,r) above a boundary ball.
struct DyadicTent {
  Vec center;   // boundary point z
  double r = 1; // scale, a power of 1/2
  int scale_j = 0;  // r = 2^-j
};

// Periodic-in-x uniform grid on the strip t in (0,1].  Cells are closed
// boxes of side h; cell k (0-based) spans t in ((k)h, (k+1)h] with center
// (k+1/2) h.  Boundary nodes sit at tangential cell centers, so the cone of
// a node contains the cell column directly above it.
struct HalfSpaceMesh {
  int n = 2;   // ambient dimension, 2 or 3
  int J = 4;   // resolution exponent
  int N = 16;  // 2^J cells per direction
  double h = 1.0 / 16.0;

  HalfSpaceMesh() = default;
  HalfSpaceMesh(int n_, int J_) : n(n_), J(J_) {
    if (n != 2 && n != 3) throw ConfigError("mesh: n must be 2 or 3");
    if (J < 3 || J > 10) throw ConfigError("mesh: J must be in [3,10]");
    N = 1 << J;
    h = 1.0 / static_cast<double>(N);
  }

  long cell_count() const {
    long nt = N;
    for (int d = 1; d < n - 1; ++d) nt *= N;
    return nt * N;
  }
  long boundary_node_count() const {
    long nb = N;
    for (int d = 1; d < n - 1; ++d) nb *= N;
    return nb;
  }

  double cell_t(int k) const { return (k + 0.5) * h; }
  double cell_x(int i) const { return (i + 0.5) * h; }
  double boundary_x(int i) const { return (i + 0.5) * h; }

  Vec cell_center_x(int ix, int iy = 0) const {
    Vec x(n - 1);
    x[0] = cell_x(ix);
    if (n == 3) x[1] = cell_x(iy);
    return x;
  }
  Vec boundary_node(int ix, int iy = 0) const { return cell_center_x(ix, iy); }

  // Whitney layer of a cell: the dyadic band 2^{-l-1} < t <= 2^{-l}
  // containing its center.
  int whitney_layer(int k) const {
    double t = cell_t(k);
    return static_cast<int>(std::floor(-std::log2(t)));
  }

  // Tangential index range of cell centers with per_dist1(x_c, z) < rad.
  // Returns {first_index, count}; indices wrap modulo N.  count may be N.
  std::pair<int, int> tangential_range(double z, double rad) const {
    if (2.0 * rad >= 1.0) return {0, N};
    // centers (i+1/2)h in (z-rad, z+rad), computed in index units
    double lo = (z - rad) / h - 0.5;
    double hi = (z + rad) / h - 0.5;
    int ilo = static_cast<int>(std::ceil(lo + 1e-9));
    int ihi = static_cast<int>(std::floor(hi - 1e-9));
    int cnt = ihi - ilo + 1;
    if (cnt <= 0) return {0, 0};
    ilo %= N;
    if (ilo < 0) ilo += N;
    return {ilo, std::min(cnt, N)};
  }

  // Number of vertical cells whose center lies strictly below rad.
  int levels_below(double rad) const {
    int k = static_cast<int>(std::floor(rad / h - 0.5 + 1e-9)) + 1;
    if (k < 0) k = 0;
    return std::min(k, N);
  }

  // All dyadic tents at scale r = 2^-j: centers at the dyadic cube centers.
  std::vector<DyadicTent> tents_at_scale(int j) const {
    std::vector<DyadicTent> out;
    const int m = 1 << j;
    const double r = 1.0 / static_cast<double>(m);
    if (n == 2) {
      out.reserve(m);
      for (int i = 0; i < m; ++i) {
        DyadicTent t;
        t.center = Vec::Constant(1, (i + 0.5) * r);
        t.r = r;
        t.scale_j = j;
        out.push_back(t);
      }
    } else {
      out.reserve(static_cast<std::size_t>(m) * m);
      for (int i1 = 0; i1 < m; ++i1)
        for (int i0 = 0; i0 < m; ++i0) {
          DyadicTent t;
          t.center = Vec(2);
          t.center[0] = (i0 + 0.5) * r;
          t.center[1] = (i1 + 0.5) * r;
          t.r = r;
          t.scale_j = j;
          out.push_back(t);
        }
    }
    return out;
  }

  // Cone membership: cell center (y, t) belongs to Gamma(x) iff |y-x| < t.
  bool in_cone(const Vec& vertex, const Vec& y, double t) const {
    return per_dist(vertex, y) < t;
  }
};

}  // namespace dkp
