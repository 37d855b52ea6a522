// SPDX-License-Identifier: Apache-2.0
//
// Higher-codimension probes on R^3 \ R^1 (n = 3, d = 1): the weighted
// operator L = -div(|t|^{d+1-n} A grad), cylindrical derivative identities,
// the radial-solution correspondence with the codimension-1 Laplacian, and
// Carleson norms with the measure dz ds/|s|^{n-d}.

#pragma once

#include <Eigen/Sparse>

#include <cmath>
#include <functional>
#include <vector>

#include "dkp/carleson.hpp"
#include "dkp/common.hpp"
#include "dkp/elliptic.hpp"
#include "dkp/functionals.hpp"
#include "dkp/mesh.hpp"

namespace dkp {

// Coefficient matrix on R^3 \ R^1 in Cartesian coordinates (x, t2, t3).
struct CodimField {
  std::function<Eigen::Matrix3d(double x, double t2, double t3)> eval;
  std::string preset = "custom";
};

inline CodimField codim_identity() {
  CodimField f;
  f.eval = [](double, double, double) { return Eigen::Matrix3d::Identity(); };
  f.preset = "identity";
  return f;
}

// Structure presets for the two block shapes of the weighted theory, built
// from the smooth codim-1 profile composed with r = |t|.
//   case i : generic off-diagonal blocks B2, B3 with |t||grad B| Carleson
//   case ii: B2 = b2 t/|t|, B3 = (t/|t|)^T b3 (the rotated codim-1 shape)
inline CodimField make_codim_case(int which, double delta) {
  if (which != 1 && which != 2) throw ConfigError("make_codim_case: case 1 or 2");
  CodimField f;
  f.preset = (which == 1) ? "codim_case_i" : "codim_case_ii";
  f.eval = [which, delta](double x, double t2, double t3) {
    const double r = std::hypot(t2, t3);
    Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
    const double beta = delta * std::sin(2 * M_PI * x) * std::exp(-r);
    const double gamma = delta * std::cos(2 * M_PI * x) * std::exp(-2.0 * r);
    m(0, 0) += beta;           // B1 (d x d)
    m(1, 1) += gamma;          // b4 Id_{n-d}
    m(2, 2) += gamma;
    if (which == 1) {
      m(0, 1) = beta;          // generic B2
      m(0, 2) = 0.5 * beta;
      m(1, 0) = 0.5 * gamma;   // generic B3
      m(2, 0) = gamma;
    } else {
      const double c2 = (r > 0) ? t2 / r : 0.0;
      const double c3 = (r > 0) ? t3 / r : 0.0;
      m(0, 1) = beta * c2;     // b2 t/|t|
      m(0, 2) = beta * c3;
      m(1, 0) = gamma * c2;    // (t/|t|)^T b3
      m(2, 0) = gamma * c3;
    }
    return m;
  };
  return f;
}

// ------------------------------------------------------------------ mesh

// Cylindrical tensor mesh: x periodic on [0,1), r in [h, 1] uniform with
// spacing h (axis excluded), theta periodic.  The degenerate weight
// w(r) = r^{d+1-n} stays finite on every cell.
struct CylMesh {
  int J = 4;
  int Nx = 16, Nr = 16, Ntheta = 8;
  double h = 1.0 / 16.0;
  double dtheta = 2.0 * M_PI / 8.0;

  CylMesh() = default;
  CylMesh(int J_, int ntheta = 8) : J(J_), Ntheta(ntheta) {
    if (J < 3 || J > 8) throw ConfigError("CylMesh: J must be in [3,8]");
    Nx = 1 << J;
    Nr = 1 << J;
    h = 1.0 / Nx;
    dtheta = 2.0 * M_PI / Ntheta;
  }

  double node_r(int j) const { return (j + 1) * h; }  // j = 0..Nr-1
  double cell_x(int i) const { return (i + 0.5) * h; }
  double cell_r(int j) const { return (j + 1.5) * h; }  // radial cell centers
  double cell_theta(int k) const { return (k + 0.5) * dtheta; }
  int radial_cells() const { return Nr - 1; }
};

// ------------------------------------------------------------- solutions

struct CylSolution {
  int Nx = 0, Nr = 0, Ntheta = 0;
  double h = 0, dtheta = 0;
  std::vector<double> nodal;  // [j][k][i] -> ((j*Ntheta + k)*Nx + i)
  double residual = 0;
  int iterations = 0;
  std::string method;

  double at(int i, int j, int k) const {
    return nodal[(static_cast<std::size_t>(j) * Ntheta + k) * Nx + i];
  }
};

// ------------------------------------------------------ weighted solver

// Weak form  iint w(r) A grad u . grad phi dV  on the cylindrical mesh with
// trilinear elements; trace f on the r = h ring (extrapolated by constancy
// to the axis), mean(f) at r = 1, periodic in x and theta.  The optional
// source adds  iint w h . grad phi dV  with h given in the cylindrical
// orthonormal frame (e_x, e_r, e_theta).
inline CylSolution solve_weighted(
    const CodimField& a, const TrigPoly& f, const CylMesh& mesh, int d = 1,
    const std::function<Eigen::Vector3d(double, double, double)>* hsrc =
        nullptr) {
  if (d != 1) throw ConfigError("solve_weighted: only (n,d) = (3,1) supported");
  const int Nx = mesh.Nx, Nr = mesh.Nr, Nth = mesh.Ntheta;
  const int rings = Nr - 2;  // interior radial nodes j = 1..Nr-2
  const int nu = rings * Nx * Nth;
  auto node_id = [&](int i, int j, int k) {  // interior only, j in [1, Nr-2]
    return ((j - 1) * Nth + k) * Nx + i;
  };

  std::vector<double> ring0(static_cast<std::size_t>(Nx));
  for (int i = 0; i < Nx; ++i) ring0[static_cast<std::size_t>(i)] = f.value(i * mesh.h);
  const double top = f.mean();

  const auto& q = fem::gl2_nodes();
  std::vector<Eigen::Triplet<double>> trips;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nu);

  // local corners: bit0 -> x, bit1 -> r, bit2 -> theta
  for (int cj = 0; cj < Nr - 1; ++cj)
    for (int ck = 0; ck < Nth; ++ck)
      for (int ci = 0; ci < Nx; ++ci) {
        int idx[8];
        double val[8];
        for (int c = 0; c < 8; ++c) {
          const int di = c & 1, dj = (c >> 1) & 1, dk = (c >> 2) & 1;
          const int i = (ci + di) % Nx;
          const int j = cj + dj;
          const int k = (ck + dk) % Nth;
          if (j == 0) {
            idx[c] = -1;
            val[c] = ring0[static_cast<std::size_t>(i)];
          } else if (j == Nr - 1) {
            idx[c] = -1;
            val[c] = top;
          } else {
            idx[c] = node_id(i, j, k);
            val[c] = 0;
          }
        }
        for (int iq = 0; iq < 8; ++iq) {
          const double xix = q[iq & 1], xir = q[(iq >> 1) & 1],
                       xit = q[(iq >> 2) & 1];
          const double xq = (ci + xix) * mesh.h;
          const double rq = mesh.node_r(cj) + xir * mesh.h;
          const double thq = (ck + xit) * mesh.dtheta;
          // measure: w(r) r dr dtheta dx with w = r^{d+1-n}
          const double wvol = std::pow(rq, d + 2 - 3) * mesh.h * mesh.h *
                              mesh.dtheta / 8.0;  // includes the Jacobian r
          const double ct = std::cos(thq), st = std::sin(thq);
          Eigen::Matrix3d Q;
          Q << 1, 0, 0, 0, ct, -st, 0, st, ct;  // columns e_x, e_r, e_theta
          const Eigen::Matrix3d Atil =
              Q.transpose() * a.eval(xq, rq * ct, rq * st) * Q;
          // basis gradients in the physical frame (dx, dr, (1/r) dtheta)
          Eigen::Vector3d gb[8];
          for (int c = 0; c < 8; ++c) {
            const double vx = (c & 1) ? xix : 1 - xix;
            const double vr = ((c >> 1) & 1) ? xir : 1 - xir;
            const double vt = ((c >> 2) & 1) ? xit : 1 - xit;
            const double sx = (c & 1) ? 1.0 : -1.0;
            const double sr = ((c >> 1) & 1) ? 1.0 : -1.0;
            const double stt = ((c >> 2) & 1) ? 1.0 : -1.0;
            gb[c][0] = sx * vr * vt / mesh.h;
            gb[c][1] = vx * sr * vt / mesh.h;
            gb[c][2] = vx * vr * stt / (mesh.dtheta * rq);
          }
          for (int at = 0; at < 8; ++at) {
            if (idx[at] < 0) continue;
            if (hsrc) {
              const Eigen::Vector3d hv = (*hsrc)(xq, rq, thq);
              rhs[idx[at]] += wvol * hv.dot(gb[at]);
            }
            const Eigen::Vector3d Ag = Atil.transpose() * gb[at];
            for (int bt = 0; bt < 8; ++bt) {
              const double k_ab = wvol * Ag.dot(gb[bt]);
              if (idx[bt] >= 0)
                trips.emplace_back(idx[at], idx[bt], k_ab);
              else
                rhs[idx[at]] -= k_ab * val[bt];
            }
          }
        }
      }

  fem::SpMat M(nu, nu);
  M.setFromTriplets(trips.begin(), trips.end());
  fem::SolveInfo info;
  // A need not be symmetric; probe fields usually are, detect cheaply.
  bool symmetric = true;
  for (int s = 0; s < 5 && symmetric; ++s) {
    const double xs = halton(static_cast<std::uint64_t>(s + 1), 2);
    const double t2 = 0.3 * halton(static_cast<std::uint64_t>(s + 1), 3) + 0.05;
    const double t3 = 0.3 * halton(static_cast<std::uint64_t>(s + 1), 5) + 0.05;
    const Eigen::Matrix3d m = a.eval(xs, t2, t3);
    symmetric = (m - m.transpose()).cwiseAbs().maxCoeff() < 1e-12;
  }
  Eigen::VectorXd u = fem::solve_linear(M, rhs, symmetric, info);

  CylSolution sol;
  sol.Nx = Nx;
  sol.Nr = Nr;
  sol.Ntheta = Nth;
  sol.h = mesh.h;
  sol.dtheta = mesh.dtheta;
  sol.residual = info.residual;
  sol.iterations = info.iterations;
  sol.method = info.method;
  sol.nodal.assign(static_cast<std::size_t>(Nr) * Nth * Nx, 0.0);
  for (int j = 0; j < Nr; ++j)
    for (int k = 0; k < Nth; ++k)
      for (int i = 0; i < Nx; ++i) {
        double v;
        if (j == 0)
          v = ring0[static_cast<std::size_t>(i)];
        else if (j == Nr - 1)
          v = top;
        else
          v = u[node_id(i, j, k)];
        sol.nodal[(static_cast<std::size_t>(j) * Nth + k) * Nx + i] = v;
      }
  return sol;
}

// -------------------------------------------- cylindrical identity checks

struct CylIdentityReport {
  double max_chain_residual = 0;   // partial_j u vs radial/angular expansion
  double max_radial_angle = 0;     // partial_r (t_k/|t|)
  double max_angular_on_radial = 0;  // angular derivatives of radial u
};

// Exact algebraic identities evaluated on analytic trigonometric test
// functions at seeded random points.
inline CylIdentityReport cylindrical_derivative_check(int samples,
                                                      std::uint64_t seed = 11) {
  CylIdentityReport rep;
  for (int s = 1; s <= samples; ++s) {
    // random smooth test function u = cos(2 pi (k . p) + phase)
    double k1 = 1 + (splitmix64(hash_combine(seed, 3 * s)) % 3);
    double k2 = 1 + (splitmix64(hash_combine(seed, 3 * s + 1)) % 3);
    double k3 = 1 + (splitmix64(hash_combine(seed, 3 * s + 2)) % 2);
    const double phase = 2 * M_PI * hash_unit(hash_combine(seed, 7 * s));
    auto u_grad = [&](double x, double t2, double t3) {
      const double arg = 2 * M_PI * (k1 * x + k2 * t2 + k3 * t3) + phase;
      Eigen::Vector3d g;
      const double d = -2 * M_PI * std::sin(arg);
      g << k1 * d, k2 * d, k3 * d;
      return g;
    };
    // random point off the axis
    const double x = hash_unit(hash_combine(seed, 13 * s));
    const double t2 = 0.05 + 0.5 * hash_unit(hash_combine(seed, 17 * s));
    const double t3 = 0.05 + 0.5 * hash_unit(hash_combine(seed, 19 * s));
    const double r = std::hypot(t2, t3);
    const double tt[2] = {t2, t3};
    const Eigen::Vector3d g = u_grad(x, t2, t3);
    // partial_r u = sum_k (t_k/|t|) partial_k u
    const double dru = (t2 / r) * g[1] + (t3 / r) * g[2];
    // chain identity for j in {2,3}
    for (int j = 0; j < 2; ++j) {
      double ang = 0;  // sum_k (t_k/|t|) d_phi_{jk} u
      for (int k = 0; k < 2; ++k) {
        const double dphi = -(tt[j] / r) * g[k + 1] + (tt[k] / r) * g[j + 1];
        ang += (tt[k] / r) * dphi;
      }
      const double resid = g[j + 1] - ((tt[j] / r) * dru + ang);
      rep.max_chain_residual = std::max(rep.max_chain_residual, std::fabs(resid));
    }
    // partial_r (t_k/|t|) = 0
    for (int k = 0; k < 2; ++k) {
      double acc = 0;
      for (int m = 0; m < 2; ++m) {
        const double dm = (m == k ? 1.0 / r : 0.0) - tt[k] * tt[m] / (r * r * r);
        acc += (tt[m] / r) * dm;
      }
      rep.max_radial_angle = std::max(rep.max_radial_angle, std::fabs(acc));
    }
    // radial function: angular derivatives vanish
    {
      const double gp = std::cos(3.0 * r + phase);  // g'(r) for u = G(|t|)
      const Eigen::Vector2d grad_radial(gp * t2 / r, gp * t3 / r);
      const double dphi =
          -(t2 / r) * grad_radial[1] + (t3 / r) * grad_radial[0];
      rep.max_angular_on_radial =
          std::max(rep.max_angular_on_radial, std::fabs(dphi));
    }
  }
  return rep;
}

// Radial integration by parts at a given resolution:
//   iint f (dr |t|) dt dx / |t|^{n-d-1} + iint (dr f) |t| dt dx / |t|^{n-d-1}
// for compactly supported f; returns the quadrature residual.
inline double radial_ibp_residual(int m) {
  // f(x, r, theta) = bump(r) (1 + 0.5 sin(2 pi x) cos(theta))
  auto bump = [](double r) {
    if (r <= 0.1 || r >= 0.9) return 0.0;
    const double u = (r - 0.1) / 0.8 * 2.0 - 1.0;
    return std::exp(-1.0 / (1.0 - u * u));
  };
  auto dbump = [&bump](double r) {
    if (r <= 0.1 || r >= 0.9) return 0.0;
    const double u = (r - 0.1) / 0.8 * 2.0 - 1.0;
    const double d = 1.0 - u * u;
    return bump(r) * (-2.0 * u / (d * d)) * (2.0 / 0.8);
  };
  double acc = 0;
  const double hr = 1.0 / m, hx = 1.0 / m, hth = 2.0 * M_PI / m;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k) {
        const double x = (i + 0.5) * hx;
        const double r = (j + 0.5) * hr;
        const double th = (k + 0.5) * hth;
        const double ang = 1.0 + 0.5 * std::sin(2 * M_PI * x) * std::cos(th);
        // measure dt dx/|t|^{n-d-1} = dr dtheta dx for (n,d) = (3,1)
        acc += (bump(r) * ang + dbump(r) * ang * r) * hr * hth * hx;
      }
  return std::fabs(acc);
}

// ------------------------------------------------ radial correspondence

struct RadialIdentityReport {
  int J = 0;
  double l2_err = 0;         // vs the codim-1 strip oracle at (x, r)
  double max_err = 0;
  double theta_dependence = 0;  // max over (x,r) of the theta spread
  double residual = 0;
};

// The weighted operator L0 = -div(|t|^{d+1-n} grad) run with axisymmetric
// data f against the codim-1 harmonic extension evaluated at (x, |t|).
inline RadialIdentityReport radial_identity_probe(const TrigPoly& f, int J,
                                                  int ntheta = 8) {
  RadialIdentityReport rep;
  rep.J = J;
  CylMesh mesh(J, ntheta);
  CylSolution sol = solve_weighted(codim_identity(), f, mesh);
  rep.residual = sol.residual;
  HarmonicExtension oracle{f, Geometry::strip};
  double e2 = 0;
  long cnt = 0;
  for (int j = 0; j < mesh.Nr; ++j)
    for (int i = 0; i < mesh.Nx; ++i) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (int k = 0; k < mesh.Ntheta; ++k) {
        const double v = sol.at(i, j, k);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      rep.theta_dependence = std::max(rep.theta_dependence, hi - lo);
      const double d = sol.at(i, j, 0) - oracle.value(i * mesh.h, mesh.node_r(j));
      e2 += d * d;
      ++cnt;
      rep.max_err = std::max(rep.max_err, std::fabs(d));
    }
  rep.l2_err = std::sqrt(e2 / static_cast<double>(cnt));
  return rep;
}

// --------------------------------------------------- codim Carleson norm

// Tent averages over the R^d boundary with the measure dz ds/|s|^{n-d};
// g is an axisymmetric scalar field g(x, r).
inline CarlesonReport codim_carleson_norm(
    const std::function<double(double, double)>& g, const CylMesh& mesh,
    DivergenceOptions opts = {}) {
  auto msq_at = [&g](const CylMesh& m) {
    CarlesonReport rep;
    const int J = m.J;
    rep.per_scale.assign(J + 1, 0.0);
    double best = -1;
    for (int j = 0; j <= J; ++j) {
      const int nt = 1 << j;
      const double rT = 1.0 / nt;
      double scale_best = 0;
      for (int it = 0; it < nt; ++it) {
        const double z = (it + 0.5) * rT;
        double integral = 0;
        long cnt = 0;
        for (int i = 0; i < m.Nx; ++i) {
          if (per_dist1(m.cell_x(i), z) >= rT) continue;
          ++cnt;
          for (int jr = 0; jr < m.radial_cells(); ++jr) {
            const double rc = m.cell_r(jr);
            if (rc >= rT) break;
            const double v = g(m.cell_x(i), rc);
            integral += v * v * (m.h / rc) * 2.0 * M_PI;
          }
        }
        if (cnt == 0) continue;
        const double avg = integral / static_cast<double>(cnt);
        scale_best = std::max(scale_best, avg);
        if (avg > best) {
          best = avg;
          rep.argmax.center = Vec::Constant(1, z);
          rep.argmax.r = rT;
          rep.argmax.scale_j = j;
        }
      }
      rep.per_scale[static_cast<std::size_t>(j)] = scale_best;
    }
    rep.norm = std::sqrt(std::max(0.0, best));
    return rep;
  };
  CarlesonReport rep = msq_at(mesh);
  if (opts.detect) {
    if (mesh.J < 4 || mesh.J + 1 > 8)
      throw ConfigError("codim divergence detection needs 4 <= J <= 7");
    const CarlesonReport r0 = msq_at(CylMesh(mesh.J - 1, mesh.Ntheta));
    const CarlesonReport r2 = msq_at(CylMesh(mesh.J + 1, mesh.Ntheta));
    const double m0 = r0.norm * r0.norm, m1 = rep.norm * rep.norm,
                 m2 = r2.norm * r2.norm;
    rep.msq_by_J = {{mesh.J - 1, m0}, {mesh.J, m1}, {mesh.J + 1, m2}};
    const bool increasing = (m2 >= m1 * (1 - 1e-9)) && (m1 >= m0 * (1 - 1e-9));
    rep.diverging = increasing && (m2 - m0) > std::max(0.04 * m2, 1e-14);
  }
  return rep;
}

// Codimension averaged non-tangential maximal function for axisymmetric
// grids: same interface as avg_ntmax with the measure ds/|s|^{n-d}.
inline FunctionalProfile avg_ntmax_codim(
    const std::function<double(double, double)>& g, const CylMesh& mesh) {
  FunctionalProfile prof;
  prof.name = "avg_ntmax_codim";
  prof.n = 2;
  prof.N = mesh.Nx;
  prof.h = mesh.h;
  prof.values.assign(static_cast<std::size_t>(mesh.Nx), 0.0);
  for (int ib = 0; ib < mesh.Nx; ++ib) {
    const double xb = mesh.cell_x(ib);
    double best = 0;
    for (int jr = 0; jr < mesh.radial_cells(); ++jr) {
      const double rc = mesh.cell_r(jr);
      for (int i = 0; i < mesh.Nx; ++i) {
        const double yc = mesh.cell_x(i);
        if (per_dist1(yc, xb) >= rc) continue;
        // Whitney average over B(y, 2r) x (r <= |s| <= 2r), normalized
        double num = 0, den = 0;
        for (int jj = 0; jj < mesh.radial_cells(); ++jj) {
          const double sc = mesh.cell_r(jj);
          if (sc <= rc || sc >= 2 * rc) continue;
          for (int ii = 0; ii < mesh.Nx; ++ii) {
            if (per_dist1(mesh.cell_x(ii), yc) >= 2 * rc) continue;
            const double w = mesh.h * mesh.h / sc;
            const double v = g(mesh.cell_x(ii), sc);
            num += w * v * v;
            den += w;
          }
        }
        if (den > 0) best = std::max(best, num / den);
      }
    }
    prof.values[static_cast<std::size_t>(ib)] = std::sqrt(best);
  }
  return prof;
}

}  // namespace dkp
