// SPDX-License-Identifier: Apache-2.0
//
// Sampled grids over mesh cells with per-row prefix sums.  Tent, cone and
// Whitney-box sums reduce to circular interval sums per vertical level, which
// keeps every Carleson / non-tangential functional near O(cells) instead of
// O(cells * region size).

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "dkp/common.hpp"
#include "dkp/field.hpp"
#include "dkp/mesh.hpp"

namespace dkp {

// ------------------------------------------------------------- CellGrid

// Scalar values at cell centers.  Layout: v[(k*Ny + iy)*N + ix] with Ny = 1
// in 2D.  Prefix sums are per (level, y-row) over the x index.
class CellGrid {
 public:
  CellGrid() = default;
  explicit CellGrid(const HalfSpaceMesh& mesh)
      : n_(mesh.n), N_(mesh.N), Ny_(mesh.n == 3 ? mesh.N : 1), h_(mesh.h),
        v_(static_cast<std::size_t>(N_) * Ny_ * N_, 0.0) {}

  int n() const { return n_; }
  int N() const { return N_; }
  double h() const { return h_; }

  double& at(int ix, int iy, int k) {
    return v_[(static_cast<std::size_t>(k) * Ny_ + iy) * N_ + ix];
  }
  double at(int ix, int iy, int k) const {
    return v_[(static_cast<std::size_t>(k) * Ny_ + iy) * N_ + ix];
  }

  void build_prefix() {
    const std::size_t rows = static_cast<std::size_t>(N_) * Ny_;
    p_.assign(rows * (N_ + 1), 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      double acc = 0.0;
      p_[r * (N_ + 1)] = 0.0;
      for (int i = 0; i < N_; ++i) {
        acc += v_[r * N_ + i];
        p_[r * (N_ + 1) + i + 1] = acc;
      }
    }
  }

  // Sum over tangential x-centers with per_dist1(x_c, z) < rad in row
  // (iy, k); also counts included cells.
  void row_ring_sum(int k, int iy, double z, double rad, double& sum,
                    long& count) const {
    const std::size_t r = static_cast<std::size_t>(k) * Ny_ + iy;
    const double* pr = &p_[r * (N_ + 1)];
    if (2.0 * rad >= 1.0) {
      sum += pr[N_];
      count += N_;
      return;
    }
    const double lo = (z - rad) / h_ - 0.5;
    const double hi = (z + rad) / h_ - 0.5;
    const int ilo = static_cast<int>(std::ceil(lo + 1e-9));
    const int ihi = static_cast<int>(std::floor(hi - 1e-9));
    const int len = ihi - ilo + 1;
    if (len <= 0) return;
    count += len;
    const int a = ((ilo % N_) + N_) % N_;
    const int b = a + len - 1;
    if (b < N_) {
      sum += pr[b + 1] - pr[a];
    } else {
      sum += pr[N_] - pr[a];
      sum += pr[b - N_ + 1];
    }
  }

  // Sum and count over a tent/box footprint: all rows with level k in
  // [k_lo, k_hi) and tangential distance to z below rad (Euclidean and
  // periodic; in 3D the per-row half width shrinks with the y offset).
  void ball_sum_per_level(int k, const Vec& z, double rad, double& sum,
                          long& count) const {
    if (n_ == 2) {
      row_ring_sum(k, 0, z[0], rad, sum, count);
      return;
    }
    for (int iy = 0; iy < Ny_; ++iy) {
      double dy = per_dist1((iy + 0.5) * h_, z[1]);
      if (dy >= rad) continue;
      double w = std::sqrt(std::max(0.0, rad * rad - dy * dy));
      row_ring_sum(k, iy, z[0], w, sum, count);
    }
  }

  const std::vector<double>& raw() const { return v_; }
  std::vector<double>& raw() { return v_; }

 private:
  int n_ = 2, N_ = 0, Ny_ = 1;
  double h_ = 0;
  std::vector<double> v_;
  std::vector<double> p_;
};

template <class F>
CellGrid sample_cell_grid(const HalfSpaceMesh& mesh, F&& f) {
  CellGrid g(mesh);
  const int Ny = (mesh.n == 3) ? mesh.N : 1;
  for (int k = 0; k < mesh.N; ++k) {
    const double t = mesh.cell_t(k);
    for (int iy = 0; iy < Ny; ++iy)
      for (int ix = 0; ix < mesh.N; ++ix)
        g.at(ix, iy, k) = f(mesh.cell_center_x(ix, iy), t);
  }
  return g;
}

// Vector values at cell centers (for gradients and dual witnesses).
struct VecGrid {
  int n = 2, N = 0, Ny = 1;
  double h = 0;
  std::vector<Vec> v;

  VecGrid() = default;
  explicit VecGrid(const HalfSpaceMesh& mesh)
      : n(mesh.n), N(mesh.N), Ny(mesh.n == 3 ? mesh.N : 1), h(mesh.h),
        v(static_cast<std::size_t>(N) * Ny * N, Vec::Zero(mesh.n)) {}

  Vec& at(int ix, int iy, int k) {
    return v[(static_cast<std::size_t>(k) * Ny + iy) * N + ix];
  }
  const Vec& at(int ix, int iy, int k) const {
    return v[(static_cast<std::size_t>(k) * Ny + iy) * N + ix];
  }

  CellGrid magnitude(const HalfSpaceMesh& mesh) const {
    CellGrid g(mesh);
    for (int k = 0; k < N; ++k)
      for (int iy = 0; iy < Ny; ++iy)
        for (int ix = 0; ix < N; ++ix) g.at(ix, iy, k) = at(ix, iy, k).norm();
    return g;
  }
};

// --------------------------------------------------------- WhitneyTable

// Gauss samples of a matrix field (4 points per cell per direction) with
// per-row prefix sums of {w, w*A_ij, w*|A|_F^2}.  One table answers every
// Whitney-box oscillation query on the mesh in O(rows in the box).
class WhitneyTable {
 public:
  static constexpr int G = 4;  // Gauss points per cell per direction

  WhitneyTable(const MatrixField& a, const HalfSpaceMesh& mesh)
      : n_(a.n), N_(mesh.N), h_(mesh.h) {
    if (n_ == 3 && mesh.J > 4)
      throw ConfigError("WhitneyTable: 3D tables limited to J <= 4");
    const Rule1D& gl = gauss_legendre_cached(G);
    const int M = N_ * G;
    ys_.resize(M);
    wy_.resize(M);
    for (int i = 0; i < N_; ++i)
      for (int a2 = 0; a2 < G; ++a2) {
        ys_[i * G + a2] = (i + 0.5 * (gl.x[a2] + 1.0)) * h_;
        wy_[i * G + a2] = 0.5 * gl.w[a2] * h_;
      }
    ss_ = ys_;  // same layout vertically
    ws_.resize(M);
    for (int r = 0; r < M; ++r) ws_[r] = wy_[r] / ss_[r];  // ds/s measure

    nyrows_ = (n_ == 3) ? M : 1;
    nch_ = 1 + n_ * n_ + 1;
    const std::size_t rows = static_cast<std::size_t>(M) * nyrows_;
    raw_.assign(rows * M * static_cast<std::size_t>(n_ * n_), 0.0);
    pre_.assign(rows * (M + 1) * nch_, 0.0);

    Vec x(n_ - 1);
    for (int r = 0; r < M; ++r) {  // vertical sample row
      const double s = ss_[r];
      for (int jy = 0; jy < nyrows_; ++jy) {
        if (n_ == 3) x[1] = ys_[jy];
        const std::size_t row = static_cast<std::size_t>(r) * nyrows_ + jy;
        double* pr = &pre_[row * (M + 1) * nch_];
        for (int c = 0; c < nch_; ++c) pr[c * (M + 1)] = 0.0;
        for (int jx = 0; jx < M; ++jx) {
          x[0] = ys_[jx];
          const Mat m = a.eval(x, s);
          const double w = wy_[jx] * (n_ == 3 ? wy_[jy] : 1.0);
          double* rawp = &raw_[(row * M + jx) * n_ * n_];
          double fro2 = 0.0;
          for (int rr = 0; rr < n_; ++rr)
            for (int cc = 0; cc < n_; ++cc) {
              rawp[rr * n_ + cc] = m(rr, cc);
              fro2 += m(rr, cc) * m(rr, cc);
            }
          int ch = 0;
          pr[ch * (M + 1) + jx + 1] = pr[ch * (M + 1) + jx] + w;
          ++ch;
          for (int rr = 0; rr < n_; ++rr)
            for (int cc = 0; cc < n_; ++cc, ++ch)
              pr[ch * (M + 1) + jx + 1] = pr[ch * (M + 1) + jx] + w * m(rr, cc);
          pr[ch * (M + 1) + jx + 1] = pr[ch * (M + 1) + jx] + w * fro2;
        }
      }
    }
  }

  // Weighted mean Abar and oscillation f_L over B(x,2t) x (t, 2t) with
  // measure dy ds/s; the box is clipped at the mesh top.
  struct Oscillation {
    Mat abar;
    double f_l = 0.0;
    double weight = 0.0;
    bool clipped = false;
  };

  Oscillation oscillation(const Vec& x, double t) const {
    Oscillation out;
    out.abar = Mat::Zero(n_, n_);
    out.clipped = (2.0 * t > 1.0);
    const int M = N_ * G;
    const auto lo = std::upper_bound(ss_.begin(), ss_.end(), t * (1 + 1e-12));
    std::vector<double> acc(static_cast<std::size_t>(nch_), 0.0);
    for (auto it = lo; it != ss_.end() && *it < 2.0 * t * (1 - 1e-12); ++it) {
      const int r = static_cast<int>(it - ss_.begin());
      accumulate_row(r, x, 2.0 * t, ws_[r], acc.data());
    }
    (void)M;
    const double W = acc[0];
    out.weight = W;
    if (W <= 0.0) return out;
    double fro2 = acc[static_cast<std::size_t>(nch_) - 1] / W;
    int ch = 1;
    double abar2 = 0.0;
    for (int rr = 0; rr < n_; ++rr)
      for (int cc = 0; cc < n_; ++cc, ++ch) {
        out.abar(rr, cc) = acc[ch] / W;
        abar2 += out.abar(rr, cc) * out.abar(rr, cc);
      }
    out.f_l = std::max(0.0, fro2 - abar2);
    return out;
  }

  // inf over constants of the sup deviation over the box, with the constant
  // chosen as the entrywise midpoint of (min, max) and the deviation in
  // Frobenius norm.
  double sup_oscillation(const Vec& x, double t) const {
    const int M = N_ * G;
    double mins[9], maxs[9];
    for (int c = 0; c < n_ * n_; ++c) {
      mins[c] = std::numeric_limits<double>::infinity();
      maxs[c] = -mins[c];
    }
    std::vector<std::size_t> pts;
    const auto lo = std::upper_bound(ss_.begin(), ss_.end(), t * (1 + 1e-12));
    for (auto it = lo; it != ss_.end() && *it < 2.0 * t * (1 - 1e-12); ++it) {
      const int r = static_cast<int>(it - ss_.begin());
      collect_row_points(r, x, 2.0 * t, pts);
    }
    (void)M;
    if (pts.empty()) return 0.0;
    for (auto p : pts) {
      const double* rawp = &raw_[p * n_ * n_];
      for (int c = 0; c < n_ * n_; ++c) {
        mins[c] = std::min(mins[c], rawp[c]);
        maxs[c] = std::max(maxs[c], rawp[c]);
      }
    }
    double mid[9];
    for (int c = 0; c < n_ * n_; ++c) mid[c] = 0.5 * (mins[c] + maxs[c]);
    double sup2 = 0.0;
    for (auto p : pts) {
      const double* rawp = &raw_[p * n_ * n_];
      double d2 = 0.0;
      for (int c = 0; c < n_ * n_; ++c) {
        double d = rawp[c] - mid[c];
        d2 += d * d;
      }
      sup2 = std::max(sup2, d2);
    }
    return std::sqrt(sup2);
  }

 private:
  // Accumulate ws * (prefix sums over the tangential ball of radius rad
  // around x) for every channel into acc.
  void accumulate_row(int r, const Vec& x, double rad, double ws,
                      double* acc) const {
    const int M = N_ * G;
    if (n_ == 2) {
      accumulate_line(static_cast<std::size_t>(r), x[0], rad, ws, acc);
    } else {
      for (int jy = 0; jy < M; ++jy) {
        double dy = per_dist1(ys_[jy], x[1]);
        if (dy >= rad) continue;
        double w = std::sqrt(std::max(0.0, rad * rad - dy * dy));
        accumulate_line(static_cast<std::size_t>(r) * nyrows_ + jy, x[0], w, ws,
                        acc);
      }
    }
  }

  void accumulate_line(std::size_t row, double z, double rad, double ws,
                       double* acc) const {
    const int M = N_ * G;
    const double* pr = &pre_[row * (M + 1) * nch_];
    auto add_span = [&](int a, int b) {  // [a, b)
      for (int c = 0; c < nch_; ++c)
        acc[c] += ws * (pr[c * (M + 1) + b] - pr[c * (M + 1) + a]);
    };
    if (2.0 * rad >= 1.0) {
      add_span(0, M);
      return;
    }
    double lo = z - rad, hi = z + rad;
    // indices of samples with ys in (lo, hi) mod 1
    double lo0 = lo - std::floor(lo);
    double hi0 = lo0 + (hi - lo);
    auto ia = static_cast<int>(std::upper_bound(ys_.begin(), ys_.end(), lo0) -
                               ys_.begin());
    if (hi0 <= 1.0) {
      auto ib = static_cast<int>(std::lower_bound(ys_.begin(), ys_.end(), hi0) -
                                 ys_.begin());
      if (ib > ia) add_span(ia, ib);
    } else {
      add_span(ia, M);
      auto ib = static_cast<int>(
          std::lower_bound(ys_.begin(), ys_.end(), hi0 - 1.0) - ys_.begin());
      if (ib > 0) add_span(0, ib);
    }
  }

  void collect_row_points(int r, const Vec& x, double rad,
                          std::vector<std::size_t>& pts) const {
    const int M = N_ * G;
    auto collect_line = [&](std::size_t row, double z, double w) {
      double lo = z - w, hi = z + w;
      double lo0 = lo - std::floor(lo);
      double hi0 = lo0 + (hi - lo);
      if (2.0 * w >= 1.0) {
        for (int j = 0; j < M; ++j) pts.push_back(row * M + j);
        return;
      }
      auto ia = static_cast<int>(std::upper_bound(ys_.begin(), ys_.end(), lo0) -
                                 ys_.begin());
      if (hi0 <= 1.0) {
        auto ib = static_cast<int>(
            std::lower_bound(ys_.begin(), ys_.end(), hi0) - ys_.begin());
        for (int j = ia; j < ib; ++j) pts.push_back(row * M + j);
      } else {
        for (int j = ia; j < M; ++j) pts.push_back(row * M + j);
        auto ib = static_cast<int>(
            std::lower_bound(ys_.begin(), ys_.end(), hi0 - 1.0) - ys_.begin());
        for (int j = 0; j < ib; ++j) pts.push_back(row * M + j);
      }
    };
    if (n_ == 2) {
      collect_line(static_cast<std::size_t>(r), x[0], rad);
    } else {
      for (int jy = 0; jy < M; ++jy) {
        double dy = per_dist1(ys_[jy], x[1]);
        if (dy >= rad) continue;
        double w = std::sqrt(std::max(0.0, rad * rad - dy * dy));
        collect_line(static_cast<std::size_t>(r) * nyrows_ + jy, x[0], w);
      }
    }
  }

  int n_, N_;
  double h_;
  int nyrows_ = 1, nch_ = 6;
  std::vector<double> ys_, wy_;  // tangential sample positions / weights
  std::vector<double> ss_, ws_;  // vertical positions / ds/s weights
  std::vector<double> raw_;      // A entries per sample
  std::vector<double> pre_;      // per-row channel prefixes
};

}  // namespace dkp
