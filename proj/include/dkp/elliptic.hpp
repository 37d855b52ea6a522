// SPDX-License-Identifier: Apache-2.0
//
// Weak-form solvers on the truncated half-space: the homogeneous Dirichlet
// problem Lu = 0 with trace f, the inhomogeneous problem Lv = -div h with
// zero trace, and the Fourier oracle for the Laplacian.  Multilinear (Q1)
// elements on the tensor mesh, periodic laterally, Dirichlet top and bottom.

#pragma once

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "dkp/common.hpp"
#include "dkp/field.hpp"
#include "dkp/mesh.hpp"
#include "dkp/sampled.hpp"

namespace dkp {

// --------------------------------------------------------------- trace data

// 1-periodic trigonometric polynomial; every boundary datum is one of these
// (bumps enter through their truncated Fourier series).
struct TrigPoly {
  struct Mode {
    int k = 1;
    double a = 0, b = 0;  // a cos(2 pi k x) + b sin(2 pi k x)
  };
  double a0 = 0;
  std::vector<Mode> modes;

  double value(double x) const {
    double s = a0;
    for (const auto& m : modes)
      s += m.a * std::cos(2 * M_PI * m.k * x) + m.b * std::sin(2 * M_PI * m.k * x);
    return s;
  }
  double deriv(double x) const {
    double s = 0;
    for (const auto& m : modes) {
      const double w = 2 * M_PI * m.k;
      s += -m.a * w * std::sin(w * x) + m.b * w * std::cos(w * x);
    }
    return s;
  }
  double mean() const { return a0; }

  static TrigPoly cosine(int k, double amp = 1.0) {
    TrigPoly f;
    f.modes.push_back({k, amp, 0.0});
    return f;
  }

  // Discrete Fourier projection of a smooth periodic function.
  static TrigPoly from_samples(const std::function<double(double)>& g,
                               int max_mode = 64, int samples = 4096) {
    TrigPoly f;
    std::vector<double> vals(static_cast<std::size_t>(samples));
    double mean = 0;
    for (int j = 0; j < samples; ++j) {
      vals[static_cast<std::size_t>(j)] = g((j + 0.5) / samples);
      mean += vals[static_cast<std::size_t>(j)];
    }
    f.a0 = mean / samples;
    for (int k = 1; k <= max_mode; ++k) {
      double a = 0, b = 0;
      for (int j = 0; j < samples; ++j) {
        const double x = (j + 0.5) / samples;
        a += vals[static_cast<std::size_t>(j)] * std::cos(2 * M_PI * k * x);
        b += vals[static_cast<std::size_t>(j)] * std::sin(2 * M_PI * k * x);
      }
      a *= 2.0 / samples;
      b *= 2.0 / samples;
      if (std::fabs(a) > 1e-14 || std::fabs(b) > 1e-14)
        f.modes.push_back({k, a, b});
    }
    return f;
  }
};

// ------------------------------------------------------- discrete solution

struct DiscreteSolution {
  int n = 2, N = 0;
  double h = 0;
  std::vector<double> nodal;  // (N+1) levels x N^{n-1} tangential nodes
  VecGrid grad_centers;       // gradient at cell centers
  double residual = 0;
  int iterations = 0;
  std::string method;

  std::size_t node_index(int l, int ix, int iy = 0) const {
    const std::size_t NT = (n == 3) ? static_cast<std::size_t>(N) * N : N;
    const std::size_t tau = (n == 3) ? static_cast<std::size_t>(iy) * N + ix
                                     : static_cast<std::size_t>(ix);
    return static_cast<std::size_t>(l) * NT + tau;
  }

  // Multilinear interpolation; t clamped to [0,1], x periodic.
  double value(const Vec& x, double t) const {
    t = std::min(1.0, std::max(0.0, t));
    int ck = std::min(N - 1, static_cast<int>(std::floor(t / h)));
    const double zt = t / h - ck;
    double xi[2] = {0, 0};
    int ci[2] = {0, 0};
    for (int d = 0; d < n - 1; ++d) {
      double xx = wrap01(x[d]) / h;
      ci[d] = std::min(N - 1, static_cast<int>(std::floor(xx)));
      xi[d] = xx - ci[d];
    }
    double acc = 0;
    for (int c = 0; c < (1 << n); ++c) {
      const int dx = c & 1, dy = (c >> 1) & 1, dt = (c >> (n - 1)) & 1;
      double w = (dx ? xi[0] : 1 - xi[0]) * (dt ? zt : 1 - zt);
      int iy = 0;
      if (n == 3) {
        w *= (dy ? xi[1] : 1 - xi[1]);
        iy = (ci[1] + dy) % N;
      }
      acc += w * nodal[node_index(ck + dt, (ci[0] + dx) % N, iy)];
    }
    return acc;
  }

  // Multilinear gradient at an interior point.
  Vec grad(const Vec& x, double t) const {
    t = std::min(1.0, std::max(0.0, t));
    int ck = std::min(N - 1, static_cast<int>(std::floor(t / h)));
    const double zt = t / h - ck;
    double xi[2] = {0, 0};
    int ci[2] = {0, 0};
    for (int d = 0; d < n - 1; ++d) {
      double xx = wrap01(x[d]) / h;
      ci[d] = std::min(N - 1, static_cast<int>(std::floor(xx)));
      xi[d] = xx - ci[d];
    }
    Vec g = Vec::Zero(n);
    for (int c = 0; c < (1 << n); ++c) {
      const int dx = c & 1, dy = (c >> 1) & 1, dt = (c >> (n - 1)) & 1;
      const double vx = dx ? xi[0] : 1 - xi[0];
      const double vt = dt ? zt : 1 - zt;
      const double sx = dx ? 1.0 : -1.0;
      const double st = dt ? 1.0 : -1.0;
      int iy = 0;
      double vy = 1.0, sy = 0.0;
      if (n == 3) {
        vy = dy ? xi[1] : 1 - xi[1];
        sy = dy ? 1.0 : -1.0;
        iy = (ci[1] + dy) % N;
      }
      const double u = nodal[node_index(ck + dt, (ci[0] + dx) % N, iy)];
      if (n == 2) {
        g[0] += u * sx * vt / h;
        g[1] += u * vx * st / h;
      } else {
        g[0] += u * sx * vy * vt / h;
        g[1] += u * vx * sy * vt / h;
        g[2] += u * vx * vy * st / h;
      }
    }
    return g;
  }

  CellGrid abs_at_centers(const HalfSpaceMesh& mesh) const {
    return sample_cell_grid(mesh, [this](const Vec& x, double t) {
      return std::fabs(value(x, t));
    });
  }
  CellGrid grad_magnitude(const HalfSpaceMesh& mesh) const {
    CellGrid g(mesh);
    const int Ny = (n == 3) ? N : 1;
    for (int k = 0; k < N; ++k)
      for (int iy = 0; iy < Ny; ++iy)
        for (int ix = 0; ix < N; ++ix)
          g.at(ix, iy, k) = grad_centers.at(ix, iy, k).norm();
    return g;
  }
  CellGrid tgrad_magnitude(const HalfSpaceMesh& mesh) const {
    CellGrid g = grad_magnitude(mesh);
    for (int k = 0; k < N; ++k) {
      const double t = mesh.cell_t(k);
      for (int iy = 0; iy < ((n == 3) ? N : 1); ++iy)
        for (int ix = 0; ix < N; ++ix) g.at(ix, iy, k) *= t;
    }
    return g;
  }
};

// ----------------------------------------------------------- FEM assembly

namespace fem {

using SpMat = Eigen::SparseMatrix<double>;

struct SolveInfo {
  double residual = 0;
  int iterations = 0;
  std::string method;
};

inline bool field_is_symmetric(const MatrixField& a) {
  Vec x;
  double t;
  for (int i = 1; i <= 7; ++i) {
    halton_halfspace_point(static_cast<std::uint64_t>(37 * i), a.n, x, t);
    const Mat m = a.eval(x, t);
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12) return false;
  }
  return true;
}

inline Eigen::VectorXd solve_linear(const SpMat& M, const Eigen::VectorXd& b,
                                    bool symmetric, SolveInfo& info) {
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    info.residual = 0;
    info.iterations = 0;
    info.method = "trivial";
    return Eigen::VectorXd::Zero(b.size());
  }
  Eigen::VectorXd x;
  if (symmetric) {
    Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper,
                             Eigen::IncompleteCholesky<double>>
        cg;
    cg.setTolerance(1e-12);
    cg.setMaxIterations(10000);
    cg.compute(M);
    x = cg.solve(b);
    info.iterations = static_cast<int>(cg.iterations());
    info.method = "cg/ichol";
  } else {
    Eigen::BiCGSTAB<SpMat, Eigen::IncompleteLUT<double>> bicg;
    bicg.setTolerance(1e-12);
    bicg.setMaxIterations(10000);
    bicg.compute(M);
    x = bicg.solve(b);
    info.iterations = static_cast<int>(bicg.iterations());
    info.method = "bicgstab/ilut";
  }
  info.residual = (M * x - b).norm() / bnorm;
  if (!std::isfinite(info.residual) || info.residual > 1e-10) {
    Eigen::SparseLU<SpMat> lu;
    lu.compute(M);
    if (lu.info() != Eigen::Success)
      throw NumericalError("linear solve failed: factorization error");
    x = lu.solve(b);
    info.residual = (M * x - b).norm() / bnorm;
    info.method += "+lu_fallback";
    if (info.residual > 1e-10)
      throw NumericalError("linear solve failed: residual " +
                           std::to_string(info.residual));
  }
  return x;
}

// 2-point Gauss rule on [0,1].
inline const std::array<double, 2>& gl2_nodes() {
  static const std::array<double, 2> v = {0.5 - 0.5 / std::sqrt(3.0),
                                          0.5 + 0.5 / std::sqrt(3.0)};
  return v;
}

// Assemble and solve  sum_cells int A grad u . grad phi = rhs  with Q1
// elements; `bottom`/`top` prescribe the Dirichlet traces; `hsrc`, when
// given, contributes int h . grad phi to the right-hand side.
inline DiscreteSolution solve_q1(
    const MatrixField& a, const HalfSpaceMesh& mesh,
    const std::function<double(const Vec&)>& bottom, double top,
    const std::function<Vec(const Vec&, double)>* hsrc, bool adjoint) {
  const int n = mesh.n, N = mesh.N;
  const double h = mesh.h;
  const int NT = (n == 3) ? N * N : N;
  const int nu = (N - 1) * NT;  // interior unknowns
  const int ncorner = 1 << n;

  auto tangential_flat = [N, n](int ix, int iy) {
    return (n == 3) ? iy * N + ix : ix;
  };

  // Dirichlet values at boundary levels.
  std::vector<double> bot(static_cast<std::size_t>(NT));
  {
    Vec x(n - 1);
    for (int iy = 0; iy < ((n == 3) ? N : 1); ++iy)
      for (int ix = 0; ix < N; ++ix) {
        x[0] = ix * h;
        if (n == 3) x[1] = iy * h;
        bot[static_cast<std::size_t>(tangential_flat(ix, iy))] = bottom(x);
      }
  }

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(mesh.cell_count()) * ncorner * ncorner);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nu);

  const auto& q = gl2_nodes();
  const int nq = 1 << n;  // tensor Gauss points
  const double vol = std::pow(h, n) / static_cast<double>(nq) * 1.0;

  // Per-cell assembly.
  std::vector<int> cidx(static_cast<std::size_t>(ncorner));
  std::vector<double> cval(static_cast<std::size_t>(ncorner));
  Vec xq(n - 1);
  const int Ny = (n == 3) ? N : 1;
  for (int ck = 0; ck < N; ++ck)
    for (int cy = 0; cy < Ny; ++cy)
      for (int cx = 0; cx < N; ++cx) {
        // local-to-global: index >= 0 interior unknown, -1 bottom, -2 top
        for (int c = 0; c < ncorner; ++c) {
          const int dx = c & 1;
          const int dy = (n == 3) ? ((c >> 1) & 1) : 0;
          const int dt = (c >> (n - 1)) & 1;
          const int l = ck + dt;
          const int ix = (cx + dx) % N;
          const int iy = (n == 3) ? (cy + dy) % N : 0;
          if (l == 0) {
            cidx[static_cast<std::size_t>(c)] = -1;
            cval[static_cast<std::size_t>(c)] =
                bot[static_cast<std::size_t>(tangential_flat(ix, iy))];
          } else if (l == N) {
            cidx[static_cast<std::size_t>(c)] = -2;
            cval[static_cast<std::size_t>(c)] = top;
          } else {
            cidx[static_cast<std::size_t>(c)] = (l - 1) * NT + tangential_flat(ix, iy);
            cval[static_cast<std::size_t>(c)] = 0;
          }
        }
        // quadrature
        for (int iq = 0; iq < nq; ++iq) {
          double xi[3];
          for (int d = 0; d < n; ++d) xi[d] = q[(iq >> d) & 1];
          xq[0] = (cx + xi[0]) * h;
          if (n == 3) xq[1] = (cy + xi[1]) * h;
          const double tq = (ck + xi[n - 1]) * h;
          Mat A = a.eval(xq, tq);
          if (adjoint) A = A.transpose().eval();
          // corner basis gradients at this point
          Vec gb[8];
          double val[8];
          for (int c = 0; c < ncorner; ++c) {
            double v[3], s[3];
            for (int d = 0; d < n; ++d) {
              const int dd = (c >> d) & 1;
              v[d] = dd ? xi[d] : 1 - xi[d];
              s[d] = dd ? 1.0 : -1.0;
            }
            Vec g(n);
            double vv = 1;
            for (int d = 0; d < n; ++d) vv *= v[d];
            val[c] = vv;
            for (int d = 0; d < n; ++d) {
              double p = s[d] / h;
              for (int e = 0; e < n; ++e)
                if (e != d) p *= v[e];
              g[d] = p;
            }
            gb[c] = g;
          }
          for (int at = 0; at < ncorner; ++at) {
            const int row = cidx[static_cast<std::size_t>(at)];
            if (row < 0) continue;
            const Vec Ag_t = A.transpose() * gb[at];
            if (hsrc) {
              const Vec hv = (*hsrc)(xq, tq);
              rhs[row] += vol * hv.dot(gb[at]);
            }
            for (int bt = 0; bt < ncorner; ++bt) {
              const double k_ab = vol * Ag_t.dot(gb[bt]);
              const int col = cidx[static_cast<std::size_t>(bt)];
              if (col >= 0)
                trips.emplace_back(row, col, k_ab);
              else
                rhs[row] -= k_ab * cval[static_cast<std::size_t>(bt)];
            }
          }
        }
      }

  SpMat M(nu, nu);
  M.setFromTriplets(trips.begin(), trips.end());

  SolveInfo info;
  const bool symmetric = field_is_symmetric(a);
  Eigen::VectorXd u = solve_linear(M, rhs, symmetric, info);

  DiscreteSolution sol;
  sol.n = n;
  sol.N = N;
  sol.h = h;
  sol.residual = info.residual;
  sol.iterations = info.iterations;
  sol.method = info.method;
  sol.nodal.assign(static_cast<std::size_t>(N + 1) * NT, 0.0);
  for (int tau = 0; tau < NT; ++tau) {
    sol.nodal[static_cast<std::size_t>(tau)] = bot[static_cast<std::size_t>(tau)];
    sol.nodal[static_cast<std::size_t>(N) * NT + tau] = top;
  }
  for (int l = 1; l < N; ++l)
    for (int tau = 0; tau < NT; ++tau)
      sol.nodal[static_cast<std::size_t>(l) * NT + tau] = u[(l - 1) * NT + tau];

  // gradient reconstruction at cell centers
  HalfSpaceMesh m2 = mesh;
  sol.grad_centers = VecGrid(m2);
  for (int ck = 0; ck < N; ++ck)
    for (int cy = 0; cy < Ny; ++cy)
      for (int cx = 0; cx < N; ++cx)
        sol.grad_centers.at(cx, cy, ck) =
            sol.grad(mesh.cell_center_x(cx, cy), mesh.cell_t(ck));
  return sol;
}

}  // namespace fem

// --------------------------------------------------------------- operations

// Lu = 0 with trace f at t = 0, mean(f) at t = 1, periodic laterally.
inline DiscreteSolution solve_dirichlet(const MatrixField& a, const TrigPoly& f,
                                        const HalfSpaceMesh& mesh) {
  auto bottom = [&f](const Vec& x) { return f.value(x[0]); };
  return fem::solve_q1(a, mesh, bottom, f.mean(), nullptr, false);
}

// L v = -div h (or the adjoint) with zero trace top and bottom.
inline DiscreteSolution solve_inhomogeneous(
    const MatrixField& a, const std::function<Vec(const Vec&, double)>& hsrc,
    const HalfSpaceMesh& mesh, bool adjoint = false) {
  auto zero = [](const Vec&) { return 0.0; };
  return fem::solve_q1(a, mesh, zero, 0.0, &hsrc, adjoint);
}

// Zero-trace solve driven by a per-cell constant vector field (the dual
// witness); cells adjacent to the bottom boundary must vanish.
inline DiscreteSolution solve_inhomogeneous(const MatrixField& a,
                                            const VecGrid& hgrid,
                                            const HalfSpaceMesh& mesh,
                                            bool adjoint = false) {
  for (int iy = 0; iy < ((mesh.n == 3) ? mesh.N : 1); ++iy)
    for (int ix = 0; ix < mesh.N; ++ix)
      if (hgrid.at(ix, iy, 0).norm() != 0.0)
        throw ConfigError("solve_inhomogeneous: h not compactly supported");
  auto hsrc = [&hgrid, &mesh](const Vec& x, double t) {
    int k = std::min(mesh.N - 1, static_cast<int>(std::floor(t / mesh.h)));
    int ix = std::min(mesh.N - 1, static_cast<int>(std::floor(wrap01(x[0]) / mesh.h)));
    int iy = 0;
    if (mesh.n == 3)
      iy = std::min(mesh.N - 1, static_cast<int>(std::floor(wrap01(x[1]) / mesh.h)));
    return hgrid.at(ix, iy, k);
  };
  return solve_inhomogeneous(a, hsrc, mesh, adjoint);
}

// Discrete energy  int A grad u . grad u.
inline double energy(const MatrixField& a, const HalfSpaceMesh& mesh,
                     const DiscreteSolution& sol) {
  const auto& q = fem::gl2_nodes();
  const int n = mesh.n, N = mesh.N;
  const int nq = 1 << n;
  const double vol = std::pow(mesh.h, n) / nq;
  double acc = 0;
  Vec xq(n - 1);
  const int Ny = (n == 3) ? N : 1;
  for (int ck = 0; ck < N; ++ck)
    for (int cy = 0; cy < Ny; ++cy)
      for (int cx = 0; cx < N; ++cx)
        for (int iq = 0; iq < nq; ++iq) {
          double xi[3];
          for (int d = 0; d < n; ++d) xi[d] = q[(iq >> d) & 1];
          xq[0] = (cx + xi[0]) * mesh.h;
          if (n == 3) xq[1] = (cy + xi[1]) * mesh.h;
          const double tq = (ck + xi[n - 1]) * mesh.h;
          const Vec g = sol.grad(xq, tq);
          acc += vol * g.dot(a.eval(xq, tq) * g);
        }
  return acc;
}

// ----------------------------------------------------------- Fourier oracle

enum class Geometry { strip, halfplane };

// Harmonic extension of a trigonometric polynomial: the solution operator
// for the Laplacian, available in closed form mode by mode.
struct HarmonicExtension {
  TrigPoly f;
  Geometry geom = Geometry::strip;

  // stable sinh ratio: sinh(k(1-t))/sinh(k) and its t-derivative
  static void strip_mode(double kappa, double t, double& g, double& dg) {
    const double e = std::exp(-kappa * t);
    const double den = 1.0 - std::exp(-2.0 * kappa);
    const double tail = std::exp(-2.0 * kappa * (1.0 - t));
    g = e * (1.0 - tail) / den;
    dg = -kappa * e * (1.0 + tail) / den;
  }

  double value(double x, double t) const {
    double s = f.a0;
    for (const auto& m : f.modes) {
      const double kappa = 2 * M_PI * m.k;
      double g, dg;
      if (geom == Geometry::strip)
        strip_mode(kappa, t, g, dg);
      else {
        g = std::exp(-kappa * t);
        dg = -kappa * g;
      }
      s += g * (m.a * std::cos(kappa * x) + m.b * std::sin(kappa * x));
    }
    return s;
  }

  Vec grad(double x, double t) const {
    Vec out = Vec::Zero(2);
    for (const auto& m : f.modes) {
      const double kappa = 2 * M_PI * m.k;
      double g, dg;
      if (geom == Geometry::strip)
        strip_mode(kappa, t, g, dg);
      else {
        g = std::exp(-kappa * t);
        dg = -kappa * g;
      }
      const double c = std::cos(kappa * x), s = std::sin(kappa * x);
      out[0] += g * kappa * (-m.a * s + m.b * c);
      out[1] += dg * (m.a * c + m.b * s);
    }
    return out;
  }

  // Sample on the mesh; gradients at centers are exact.
  DiscreteSolution sample(const HalfSpaceMesh& mesh) const {
    if (mesh.n != 2)
      throw ConfigError("laplace_fourier_oracle requires n = 2");
    DiscreteSolution sol;
    sol.n = 2;
    sol.N = mesh.N;
    sol.h = mesh.h;
    sol.method = "fourier_oracle";
    sol.nodal.assign(static_cast<std::size_t>(mesh.N + 1) * mesh.N, 0.0);
    for (int l = 0; l <= mesh.N; ++l)
      for (int ix = 0; ix < mesh.N; ++ix)
        sol.nodal[static_cast<std::size_t>(l) * mesh.N + ix] =
            value(ix * mesh.h, l * mesh.h);
    sol.grad_centers = VecGrid(mesh);
    for (int k = 0; k < mesh.N; ++k)
      for (int ix = 0; ix < mesh.N; ++ix)
        sol.grad_centers.at(ix, 0, k) = grad(mesh.cell_x(ix), mesh.cell_t(k));
    return sol;
  }
};

inline DiscreteSolution laplace_fourier_oracle(const TrigPoly& f,
                                               const HalfSpaceMesh& mesh,
                                               Geometry geom) {
  HarmonicExtension ext{f, geom};
  return ext.sample(mesh);
}

// ------------------------------------------------------- convergence rates

struct ConvergenceReport {
  std::vector<int> Js;
  std::vector<double> l2, h1;
  double slope_l2 = 0, slope_h1 = 0;
};

// L2/H1 errors of a solver against an exact solution over a J ladder.
inline ConvergenceReport convergence_test(
    const std::function<DiscreteSolution(const HalfSpaceMesh&)>& solve, int n,
    const std::vector<int>& Js,
    const std::function<double(const Vec&, double)>& exact,
    const std::function<Vec(const Vec&, double)>& exact_grad) {
  ConvergenceReport rep;
  rep.Js = Js;
  for (int J : Js) {
    HalfSpaceMesh mesh(n, J);
    DiscreteSolution sol = solve(mesh);
    const auto& q = fem::gl2_nodes();
    const int nq = 1 << n;
    const double vol = std::pow(mesh.h, n) / nq;
    double e2 = 0, g2 = 0;
    Vec xq(n - 1);
    const int Ny = (n == 3) ? mesh.N : 1;
    for (int ck = 0; ck < mesh.N; ++ck)
      for (int cy = 0; cy < Ny; ++cy)
        for (int cx = 0; cx < mesh.N; ++cx)
          for (int iq = 0; iq < nq; ++iq) {
            double xi[3];
            for (int d = 0; d < n; ++d) xi[d] = q[(iq >> d) & 1];
            xq[0] = (cx + xi[0]) * mesh.h;
            if (n == 3) xq[1] = (cy + xi[1]) * mesh.h;
            const double tq = (ck + xi[n - 1]) * mesh.h;
            const double de = sol.value(xq, tq) - exact(xq, tq);
            e2 += vol * de * de;
            const Vec dg = sol.grad(xq, tq) - exact_grad(xq, tq);
            g2 += vol * dg.squaredNorm();
          }
    rep.l2.push_back(std::sqrt(e2));
    rep.h1.push_back(std::sqrt(g2));
  }
  // slope of log2(err) against log2(h) = -J
  std::vector<double> lh, ll2, lh1;
  for (std::size_t i = 0; i < Js.size(); ++i) {
    lh.push_back(-static_cast<double>(Js[i]));
    ll2.push_back(std::log2(std::max(rep.l2[i], 1e-300)));
    lh1.push_back(std::log2(std::max(rep.h1[i], 1e-300)));
  }
  rep.slope_l2 = ls_slope(lh, ll2);
  rep.slope_h1 = ls_slope(lh, lh1);
  return rep;
}

}  // namespace dkp
