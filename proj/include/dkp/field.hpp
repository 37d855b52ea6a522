// SPDX-License-Identifier: Apache-2.0
//
// Coefficient matrix fields A(x,t): evaluable everywhere on the half-space,
// with optional analytic gradients, declared ellipticity metadata, and the
// preset catalog (all presets are 1-periodic in x).

#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>

#include "dkp/common.hpp"
#include "dkp/mesh.hpp"
#include "dkp/quadrature.hpp"

namespace dkp {

// Gradient of a matrix field at a point: grad[d] = d A / d x_d for
// d < n-1, and grad[n-1] = d A / d t.
using MatGrad = std::array<Mat, 3>;

struct MatrixField {
  int n = 2;
  std::function<Mat(const Vec&, double)> eval;
  std::function<MatGrad(const Vec&, double)> grad;  // empty if none
  // Optional bundled value+gradient path, bypassing any memo cache.
  std::function<void(const Vec&, double, Mat&, MatGrad&)> eval_with_grad;
  bool has_gradient = false;
  // False only for fields that are genuinely non-differentiable
  // (whitney_piecewise); such fields reject gradient-based norms.
  bool differentiable = true;
  // Estimated relative evaluation error (0 for analytic fields; nonzero for
  // quadrature-backed fields).  Gates downstream convergence checks.
  double eval_noise = 0.0;
  double lambda_decl = 1.0;  // declared ellipticity constant
  double bound_decl = 1.0;   // declared operator-norm bound
  std::string preset = "custom";
  std::map<std::string, double> params;

  Mat operator()(const Vec& x, double t) const { return eval(x, t); }
};

// The paper's block layout: last row is (v, h).
struct BlockView {
  Mat b_par;  // (n-1) x (n-1) upper-left
  Vec b;      // upper-right column, length n-1
  Vec v;      // lower-left row, length n-1
  double h = 1.0;
};

inline BlockView block_split(const Mat& m) {
  const int n = static_cast<int>(m.rows());
  BlockView bv;
  bv.b_par = m.topLeftCorner(n - 1, n - 1);
  bv.b = m.topRightCorner(n - 1, 1);
  bv.v = m.bottomLeftCorner(1, n - 1).transpose();
  bv.h = m(n - 1, n - 1);
  return bv;
}

inline BlockView block_split(const MatrixField& f, const Vec& x, double t) {
  return block_split(f.eval(x, t));
}

inline Mat block_reassemble(const BlockView& bv) {
  const int n = static_cast<int>(bv.b_par.rows()) + 1;
  Mat m(n, n);
  m.topLeftCorner(n - 1, n - 1) = bv.b_par;
  m.topRightCorner(n - 1, 1) = bv.b;
  m.bottomLeftCorner(1, n - 1) = bv.v.transpose();
  m(n - 1, n - 1) = bv.h;
  return m;
}

// ------------------------------------------------------------- presets

namespace detail {

// Perturbation direction matrices, keyed by name.
inline Mat direction_matrix(int n, const std::string& name) {
  Mat e = Mat::Zero(n, n);
  if (name == "e11" || name.empty()) {
    e(0, 0) = 1.0;
  } else if (name == "cross") {
    e(0, n - 1) = 1.0;
    e(n - 1, 0) = 1.0;
  } else if (name == "mix") {
    e(0, 0) = 1.0;
    e(0, n - 1) = 0.5;
    e(n - 1, 0) = 0.5;
  } else {
    throw ConfigError("unknown direction matrix: " + name);
  }
  return e;
}

inline double spectral_radius_sym(const Mat& e) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (e + e.transpose()),
                                        Eigen::EigenvaluesOnly);
  return std::max(std::fabs(es.eigenvalues().minCoeff()),
                  std::fabs(es.eigenvalues().maxCoeff()));
}

// Dyadic Whitney box index of a point: level l with t in (2^-l-1, 2^-l],
// tangential cube of side 2^-l at that level.  Levels are clamped to
// [-4, 40] so every positive t gets a box.
struct WhitneyBoxId {
  int level;
  std::array<std::int64_t, 2> ix;
};

inline WhitneyBoxId whitney_box_of(const Vec& x, double t) {
  WhitneyBoxId id{};
  int l = static_cast<int>(std::ceil(-std::log2(t) - 1e-12)) - 1;
  // t in (2^{-l-1}, 2^{-l}]
  l = std::max(-4, std::min(40, l));
  id.level = l;
  const double side = std::pow(2.0, -l);
  for (int d = 0; d < x.size(); ++d) {
    double xx = wrap01(x[d]);
    id.ix[static_cast<std::size_t>(d)] =
        (l <= 0) ? 0 : static_cast<std::int64_t>(std::floor(xx / side));
  }
  return id;
}

}  // namespace detail

inline MatrixField make_constant(const Mat& a0) {
  MatrixField f;
  f.n = static_cast<int>(a0.rows());
  f.eval = [a0](const Vec&, double) { return a0; };
  const int n = f.n;
  f.grad = [n](const Vec&, double) {
    MatGrad g;
    for (auto& m : g) m = Mat::Zero(n, n);
    return g;
  };
  f.has_gradient = true;
  f.lambda_decl = min_sym_eig(a0);
  f.bound_decl = op_norm(a0);
  f.preset = "constant";
  return f;
}

inline MatrixField make_identity(int n) { return make_constant(Mat::Identity(n, n)); }

// A = I + delta sin(2 pi x_1) e^{-t/ell} E.  Satisfies t|grad A| in CM.
inline MatrixField make_dkp_smooth(int n, double delta, double ell = 1.0,
                                   const std::string& ename = "e11") {
  const Mat e = detail::direction_matrix(n, ename);
  MatrixField f;
  f.n = n;
  f.eval = [n, delta, ell, e](const Vec& x, double t) {
    return Mat(Mat::Identity(n, n) +
               delta * std::sin(2.0 * M_PI * x[0]) * std::exp(-t / ell) * e);
  };
  f.grad = [n, delta, ell, e](const Vec& x, double t) {
    MatGrad g;
    for (auto& m : g) m = Mat::Zero(n, n);
    const double s = std::sin(2.0 * M_PI * x[0]);
    const double c = std::cos(2.0 * M_PI * x[0]);
    const double ex = std::exp(-t / ell);
    g[0] = delta * 2.0 * M_PI * c * ex * e;
    g[static_cast<std::size_t>(n - 1)] = -delta / ell * s * ex * e;
    return g;
  };
  f.has_gradient = true;
  const double rho = detail::spectral_radius_sym(e);
  f.lambda_decl = 1.0 - delta * rho;
  f.bound_decl = 1.0 + delta * op_norm(e);
  f.preset = "dkp_smooth";
  f.params = {{"delta", delta}, {"ell", ell}};
  return f;
}

// A = I + delta sin(ln t) e1 x e1: bounded t|grad A| but not Carleson
// (the tent integral diverges logarithmically).
inline MatrixField make_log_oscillation(int n, double delta) {
  MatrixField f;
  f.n = n;
  f.eval = [n, delta](const Vec&, double t) {
    Mat a = Mat::Identity(n, n);
    a(0, 0) += delta * std::sin(std::log(t));
    return a;
  };
  f.grad = [n, delta](const Vec&, double t) {
    MatGrad g;
    for (auto& m : g) m = Mat::Zero(n, n);
    g[static_cast<std::size_t>(n - 1)](0, 0) = delta * std::cos(std::log(t)) / t;
    return g;
  };
  f.has_gradient = true;
  f.lambda_decl = 1.0 - delta;
  f.bound_decl = 1.0 + delta;
  f.preset = "log_oscillation";
  f.params = {{"delta", delta}};
  return f;
}

// Entries constant on each dyadic Whitney box, i.i.d. uniform in
// [-delta, delta].  Oscillates at every scale; not differentiable.
inline MatrixField make_whitney_piecewise(int n, double delta,
                                          std::uint64_t seed = 1) {
  MatrixField f;
  f.n = n;
  f.eval = [n, delta, seed](const Vec& x, double t) {
    const auto id = detail::whitney_box_of(x, t);
    Mat a = Mat::Identity(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) {
        std::uint64_t k = seed;
        k = hash_combine(k, static_cast<std::uint64_t>(id.level + 100));
        k = hash_combine(k, static_cast<std::uint64_t>(id.ix[0] + 1));
        k = hash_combine(k, static_cast<std::uint64_t>(id.ix[1] + 1));
        k = hash_combine(k, static_cast<std::uint64_t>(r * 8 + c));
        a(r, c) += delta * (2.0 * hash_unit(k) - 1.0);
      }
    return a;
  };
  f.has_gradient = false;
  f.differentiable = false;
  f.lambda_decl = 1.0 - n * delta;
  f.bound_decl = 1.0 + n * delta;
  f.preset = "whitney_piecewise";
  f.params = {{"delta", delta}, {"seed", static_cast<double>(seed)}};
  return f;
}

// Smooth perturbation supported on a sparse (lacunary) family of Whitney
// boxes, one box per level in {2,4,6,8} at hash-chosen positions; |C| is a
// Carleson measure with small constant.
inline MatrixField make_carleson_bump(int n, double delta,
                                      std::uint64_t seed = 1,
                                      const std::string& ename = "e11") {
  const Mat e = detail::direction_matrix(n, ename);
  struct Box {
    int level;
    Vec corner;
  };
  auto boxes = std::make_shared<std::vector<Box>>();
  for (int m : {2, 4, 6, 8}) {
    Box b;
    b.level = m;
    b.corner = Vec(n - 1);
    for (int d = 0; d < n - 1; ++d) {
      std::uint64_t k = hash_combine(seed, static_cast<std::uint64_t>(m * 4 + d));
      double side = std::pow(2.0, -m);
      b.corner[d] = std::floor(hash_unit(k) / side) * side;
    }
    boxes->push_back(b);
  }
  auto peak1 = [](double xi) {  // C^infty bump on (0,1), peak value 1
    if (xi <= 0.0 || xi >= 1.0) return 0.0;
    double u = 2.0 * xi - 1.0;
    return std::exp(1.0 - 1.0 / (1.0 - u * u));
  };
  MatrixField f;
  f.n = n;
  f.eval = [n, delta, e, boxes, peak1](const Vec& x, double t) {
    Mat a = Mat::Identity(n, n);
    if (t <= 0.0) return a;
    const double lt = -std::log2(t);
    for (const auto& b : *boxes) {
      double w = peak1(lt - b.level);
      if (w == 0.0) continue;
      const double side = std::pow(2.0, -b.level);
      for (int d = 0; d < n - 1; ++d) {
        double off = x[d] - b.corner[d];
        off -= std::floor(off);  // periodic offset in [0,1)
        w *= peak1(off / side);
        if (w == 0.0) break;
      }
      if (w != 0.0) a += delta * w * e;
    }
    return a;
  };
  f.has_gradient = false;  // differentiable; gradients by finite differences
  f.differentiable = true;
  const double rho = detail::spectral_radius_sym(e);
  f.lambda_decl = 1.0 - delta * rho;
  f.bound_decl = 1.0 + delta * op_norm(e);
  f.preset = "carleson_bump";
  f.params = {{"delta", delta}, {"seed", static_cast<double>(seed)}};
  return f;
}

// Pointwise sum A + (B - I): used to build perturbed operators A0 + C.
inline MatrixField field_plus_perturbation(const MatrixField& a,
                                           const MatrixField& c_of_identity) {
  MatrixField f;
  f.n = a.n;
  auto ae = a.eval;
  auto ce = c_of_identity.eval;
  const int n = a.n;
  f.eval = [ae, ce, n](const Vec& x, double t) {
    return Mat(ae(x, t) + ce(x, t) - Mat::Identity(n, n));
  };
  f.has_gradient = false;
  f.differentiable = a.differentiable && c_of_identity.differentiable;
  f.lambda_decl = a.lambda_decl - (1.0 - c_of_identity.lambda_decl);
  f.bound_decl = a.bound_decl + (c_of_identity.bound_decl - 1.0);
  f.preset = a.preset + "+" + c_of_identity.preset;
  return f;
}

// Difference A - B as a matrix field (used for the Carleson part C).
inline MatrixField field_difference(const MatrixField& a, const MatrixField& b) {
  MatrixField f;
  f.n = a.n;
  auto ae = a.eval;
  auto be = b.eval;
  f.eval = [ae, be](const Vec& x, double t) { return Mat(ae(x, t) - be(x, t)); };
  f.has_gradient = false;
  f.differentiable = a.differentiable && b.differentiable;
  f.lambda_decl = 0.0;
  f.bound_decl = a.bound_decl + b.bound_decl;
  f.preset = a.preset + "-" + b.preset;
  return f;
}

// --------------------------------------------------- ellipticity checks

inline constexpr double kTolEllip = 1e-8;

struct EllipticityReport {
  double lambda_emp = 0;  // min eigenvalue of the symmetric part
  double bound_emp = 0;   // max operator norm
};

// Empirical ellipticity over quasi-random samples in the truncated domain.
inline EllipticityReport check_ellipticity(const MatrixField& a, int samples) {
  if (samples < 1) throw ConfigError("check_ellipticity: samples must be >= 1");
  EllipticityReport rep;
  rep.lambda_emp = std::numeric_limits<double>::infinity();
  rep.bound_emp = 0.0;
  Vec x;
  double t;
  for (int i = 1; i <= samples; ++i) {
    halton_halfspace_point(static_cast<std::uint64_t>(i), a.n, x, t);
    Mat m;
    try {
      m = a.eval(x, t);
    } catch (const std::exception& e) {
      throw FieldError("field evaluation failed at x=" + std::to_string(x[0]) +
                       " t=" + std::to_string(t) + ": " + e.what());
    }
    rep.lambda_emp = std::min(rep.lambda_emp, min_sym_eig(m));
    rep.bound_emp = std::max(rep.bound_emp, op_norm(m));
  }
  return rep;
}

// Preset factory keyed by name; numeric parameters in `p`, direction
// matrix (when applicable) in `ename`.
inline MatrixField make_preset(const std::string& name, int n,
                               const std::map<std::string, double>& p = {},
                               const std::string& ename = "e11") {
  auto get = [&p](const std::string& k, double dflt) {
    auto it = p.find(k);
    return it == p.end() ? dflt : it->second;
  };
  if (name == "constant" || name == "identity") {
    Mat a0 = Mat::Identity(n, n);
    if (p.count("a11")) a0(0, 0) = p.at("a11");
    if (p.count("ann")) a0(n - 1, n - 1) = p.at("ann");
    return make_constant(a0);
  }
  if (name == "dkp_smooth")
    return make_dkp_smooth(n, get("delta", 0.1), get("ell", 1.0), ename);
  if (name == "log_oscillation") return make_log_oscillation(n, get("delta", 0.1));
  if (name == "whitney_piecewise")
    return make_whitney_piecewise(n, get("delta", 0.1),
                                  static_cast<std::uint64_t>(get("seed", 1)));
  if (name == "carleson_bump")
    return make_carleson_bump(n, get("delta", 0.1),
                              static_cast<std::uint64_t>(get("seed", 1)), ename);
  throw ConfigError("unknown field preset: " + name);
}

}  // namespace dkp
