// SPDX-License-Identifier: Apache-2.0
//
// The logarithmic mollifier: B(x,t) is the average of a source field against
// the kernel Phi_{x,t,Lambda}(y,s) = s^{1-n}/ln(Lambda) phi((y-x)/s)
// psi(ln(s/t)/ln Lambda), supported on s in (Lambda t, Lambda^2 t), |y-x| < s.
// The initial split A = B_1 + C_1 uses Lambda = 2^{1/4}; B_1 carries an
// analytic-quadrature gradient obtained by differentiating the kernel, so no
// gradient of the source is ever needed.  Mollification of B_1 transfers the
// derivatives onto B_1 instead.

#pragma once

#include <array>
#include <cmath>
#include <cstring>
#include <memory>
#include <unordered_map>
#include <vector>

#include "dkp/carleson.hpp"
#include "dkp/common.hpp"
#include "dkp/field.hpp"
#include "dkp/quadrature.hpp"

namespace dkp {

// Pointwise kernel weight Phi_{x,t,Lambda}(y,s).
inline double kernel_weight(const Vec& x, double t, double lambda, const Vec& y,
                            double s, int n) {
  if (s <= 0.0 || t <= 0.0) return 0.0;
  const auto& kc = KernelConstants::get(n);
  const Vec xi = (y - x) / s;
  const double u = std::log(s / t) / std::log(lambda);
  return std::pow(s, 1 - n) / std::log(lambda) * kc.phi(xi) * kc.psi(u);
}

// Quadrature of the kernel mass over its support (log substitution in s).
inline double kernel_normalization_quadrature(const Vec& x, double t,
                                              double lambda, int n,
                                              int m = 48) {
  const Rule1D& gl = gauss_legendre_cached(m);
  const double lnl = std::log(lambda);
  double acc = 0.0;
  Vec y(n - 1);
  for (int b = 0; b < m; ++b) {
    const double u = 1.5 + 0.5 * gl.x[b];
    const double s = t * std::pow(lambda, u);
    const double wu = 0.5 * gl.w[b] * lnl;  // ds/s = ln(lambda) du
    if (n == 2) {
      for (int a = 0; a < m; ++a) {
        y[0] = x[0] + s * gl.x[a];
        acc += wu * gl.w[a] * s * kernel_weight(x, t, lambda, y, s, n);
      }
    } else {
      for (int a1 = 0; a1 < m; ++a1)
        for (int a0 = 0; a0 < m; ++a0) {
          y[0] = x[0] + s * gl.x[a0];
          y[1] = x[1] + s * gl.x[a1];
          acc += wu * gl.w[a0] * gl.w[a1] * s * s *
                 kernel_weight(x, t, lambda, y, s, n);
        }
    }
  }
  return acc;
}

struct QuadOptions {
  int m = 16;          // Gauss points per dimension (smooth sources)
  int m_nondiff = 32;  // rule for non-differentiable sources
  bool verify = true;  // adaptive doubling check at probe points
  double tol = 1e-6;
  int max_m = 64;
};

namespace detail {

struct PointKey {
  std::uint64_t a, b, c;
  bool operator==(const PointKey& o) const {
    return a == o.a && b == o.b && c == o.c;
  }
};
struct PointKeyHash {
  std::size_t operator()(const PointKey& k) const {
    return static_cast<std::size_t>(
        splitmix64(k.a ^ splitmix64(k.b ^ splitmix64(k.c))));
  }
};

inline std::uint64_t dbits(double v) {
  std::uint64_t u;
  static_assert(sizeof(u) == sizeof(v));
  std::memcpy(&u, &v, sizeof(u));
  return u;
}

// One mollification level.  Kernel mode integrates the raw source with
// kernel-derivative weights; transferred mode pushes derivatives onto the
// (differentiable) source.
class SmoothingEngine {
 public:
  struct Entry {
    Mat value;
    MatGrad grad;
  };

  SmoothingEngine(MatrixField source, double lambda, bool transferred,
                  QuadOptions opt)
      : src_(std::move(source)), lambda_(lambda), lnl_(std::log(lambda)),
        transferred_(transferred), opt_(opt) {
    m_ = src_.differentiable ? opt.m : opt.m_nondiff;
    if (transferred_ && !(src_.has_gradient || src_.eval_with_grad))
      throw ConfigError("mollify: source has no gradient evaluator");
    if (opt_.verify && src_.differentiable && src_.eval_noise <= 0.1 * opt_.tol)
      verify_convergence();
  }

  int n() const { return src_.n; }
  double lambda() const { return lambda_; }

  const Entry& eval(const Vec& x, double t) {
    PointKey key{dbits(x[0]), dbits(x.size() > 1 ? x[1] : 0.0), dbits(t)};
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    Entry e;
    compute(x, t, m_, e, true);
    if (memo_.size() < (1u << 18)) return memo_.emplace(key, e).first->second;
    scratch_ = e;
    return scratch_;
  }

  void compute(const Vec& x, double t, int m, Entry& out,
               bool with_grad) const {
    const int n = src_.n;
    const auto& kc = KernelConstants::get(n);
    const Rule1D& gl = gauss_legendre_cached(m);
    out.value = Mat::Zero(n, n);
    for (auto& g : out.grad) g = Mat::Zero(n, n);

    Mat aref;
    if (!transferred_ && with_grad)
      aref = src_.eval(x, t * std::pow(lambda_, 1.5));

    Vec xi(n - 1), y(n - 1);
    Mat val;
    MatGrad sg;
    double mass = 0.0;
    const int mt = (n == 3) ? m : 1;
    for (int b = 0; b < m; ++b) {
      const double u = 1.5 + 0.5 * gl.x[b];
      const double wu = 0.5 * gl.w[b];
      const double psi = kc.psi(u);
      const double dpsi = kc.dpsi(u);
      const double s = t * std::pow(lambda_, u);
      for (int a1 = 0; a1 < mt; ++a1)
        for (int a0 = 0; a0 < m; ++a0) {
          double wxi = gl.w[a0] * wu;
          xi[0] = gl.x[a0];
          if (n == 3) {
            xi[1] = gl.x[a1];
            wxi *= gl.w[a1];
          }
          const double phi = kc.phi(xi);
          if (phi == 0.0 && (!with_grad || transferred_)) continue;
          y = x + s * xi;
          mass += wxi * phi * psi;
          if (transferred_) {
            source_eval(y, s, val, sg, with_grad);
            const double w = wxi * phi * psi;
            out.value += w * val;
            if (with_grad) {
              for (int d = 0; d < n - 1; ++d)
                out.grad[static_cast<std::size_t>(d)] +=
                    w * sg[static_cast<std::size_t>(d)];
              // t dt B = int Phi (s ds B1 + (y-x).grad_x B1): the exact
              // t-derivative of the kernel average (chain rule in the
              // substituted coordinates), cross-checked against finite
              // differences in the test suite.
              Mat tder = s * sg[static_cast<std::size_t>(n - 1)];
              for (int d = 0; d < n - 1; ++d)
                tder += (s * xi[d]) * sg[static_cast<std::size_t>(d)];
              out.grad[static_cast<std::size_t>(n - 1)] += (w / t) * tder;
            }
          } else {
            val = src_.eval(y, s);
            out.value += wxi * phi * psi * val;
            if (with_grad) {
              const Mat dev = val - aref;
              const Vec gphi = kc.grad_phi(xi);
              for (int d = 0; d < n - 1; ++d)
                out.grad[static_cast<std::size_t>(d)] -=
                    (wxi * psi * gphi[d] / s) * dev;
              out.grad[static_cast<std::size_t>(n - 1)] -=
                  (wxi * phi * dpsi / (lnl_ * t)) * dev;
            }
          }
        }
    }
    // Normalize by the discrete kernel mass so constants are reproduced
    // exactly and ellipticity is preserved as a convex combination.
    if (mass > 0.0) {
      const double inv = 1.0 / mass;
      out.value *= inv;
      for (auto& g : out.grad) g *= inv;
    }
  }

 private:
  void source_eval(const Vec& y, double s, Mat& val, MatGrad& g,
                   bool with_grad) const {
    if (src_.eval_with_grad) {
      src_.eval_with_grad(y, s, val, g);
    } else {
      val = src_.eval(y, s);
      if (with_grad) g = src_.grad(y, s);
    }
  }

  void verify_convergence() {
    Vec x;
    double t;
    for (int i = 1; i <= 5; ++i) {
      halton_halfspace_point(static_cast<std::uint64_t>(97 * i), src_.n, x, t, 4);
      Entry coarse, fine;
      int m = m_;
      compute(x, t, m, coarse, false);
      bool ok = false;
      while (2 * m <= opt_.max_m) {
        compute(x, t, 2 * m, fine, false);
        const double scale = std::max(1.0, fine.value.norm());
        if ((fine.value - coarse.value).norm() / scale < opt_.tol) {
          ok = true;
          break;
        }
        coarse = fine;
        m *= 2;
      }
      if (!ok)
        throw QuadratureError(
            "mollifier quadrature did not converge to tolerance " +
            std::to_string(opt_.tol));
    }
  }

  MatrixField src_;
  double lambda_, lnl_;
  bool transferred_;
  QuadOptions opt_;
  int m_;
  std::unordered_map<PointKey, Entry, PointKeyHash> memo_;
  Entry scratch_;
};

inline MatrixField engine_field(std::shared_ptr<SmoothingEngine> eng,
                                const MatrixField& src,
                                const std::string& tag) {
  MatrixField f;
  f.n = src.n;
  f.eval = [eng](const Vec& x, double t) { return eng->eval(x, t).value; };
  f.grad = [eng](const Vec& x, double t) { return eng->eval(x, t).grad; };
  f.eval_with_grad = [eng](const Vec& x, double t, Mat& v, MatGrad& g) {
    const auto& e = eng->eval(x, t);
    v = e.value;
    g = e.grad;
  };
  f.has_gradient = true;
  f.differentiable = true;
  f.eval_noise =
      std::max(src.eval_noise, src.differentiable ? 2e-5 : 1e-3);
  f.lambda_decl = src.lambda_decl;
  f.bound_decl = src.bound_decl;
  f.preset = tag + "(" + src.preset + ")";
  f.params = src.params;
  return f;
}

}  // namespace detail

// ------------------------------------------------------------- operations

struct SplitFields {
  MatrixField b1, c1;
};

inline constexpr double kInitialLambda = 1.1892071150027210667;  // 2^{1/4}

// A = B_1 + C_1 with B_1 the kernel average of A at Lambda = 2^{1/4}.
inline SplitFields initial_split(const MatrixField& a, QuadOptions opt = {}) {
  auto eng = std::make_shared<detail::SmoothingEngine>(a, kInitialLambda,
                                                       /*transferred=*/false, opt);
  SplitFields out;
  out.b1 = detail::engine_field(eng, a, "split");
  out.c1 = field_difference(a, out.b1);
  out.c1.preset = "C1(" + a.preset + ")";
  return out;
}

// B_Lambda from an already-smoothed source, gradients by the transferred
// derivative identities.
inline MatrixField mollify(const MatrixField& b1, double lambda,
                           QuadOptions opt = {}) {
  if (!(lambda >= 2.0)) throw ConfigError("mollify: Lambda must be >= 2");
  auto eng = std::make_shared<detail::SmoothingEngine>(b1, lambda,
                                                       /*transferred=*/true, opt);
  return detail::engine_field(eng, b1, "mollify_L" + std::to_string((int)lambda));
}

// Measured sup of |t grad B| (Frobenius over entries and directions) over a
// quasi-random sample set spread logarithmically in t.
inline double sup_tgrad(const MatrixField& b, int samples = 256) {
  if (!b.has_gradient) throw ConfigError("sup_tgrad: field has no gradient");
  double best = 0.0;
  Vec x;
  double t;
  for (int i = 1; i <= samples; ++i) {
    halton_halfspace_point(static_cast<std::uint64_t>(i), b.n, x, t, 10);
    const MatGrad g = b.grad(x, t);
    double s2 = 0.0;
    for (int d = 0; d < b.n; ++d) s2 += g[static_cast<std::size_t>(d)].squaredNorm();
    best = std::max(best, t * std::sqrt(s2));
  }
  return best;
}

struct Decomposition {
  MatrixField b, c;
  double lambda = 0;        // selected mollification parameter
  double eps_achieved = 0;  // measured sup |t grad B|
  double eps_initial = 0;   // measured sup |t grad B_1| after the split
  double m_b = 0;           // cm norm of t grad B on the certification mesh
  double m_c = 0;           // cm norm of |C|
  double ellipticity = 0;   // sampled min eigenvalue of sym B
};

// Split, then mollify with the smallest Lambda from {4,16,64,256} whose
// measured sup |t grad B_Lambda| reaches eps.
inline Decomposition decompose(const MatrixField& a, double eps,
                               const HalfSpaceMesh& cert_mesh,
                               QuadOptions opt = {}) {
  if (!(eps > 0.0 && eps < 1.0))
    throw ConfigError("decompose: eps must lie in (0,1)");
  SplitFields split = initial_split(a, opt);
  Decomposition dec;
  dec.eps_initial = sup_tgrad(split.b1);

  double best = std::numeric_limits<double>::infinity();
  bool found = false;
  for (double lambda : {4.0, 16.0, 64.0, 256.0}) {
    MatrixField bl = mollify(split.b1, lambda, opt);
    const double e = sup_tgrad(bl);
    if (e < best) best = e;
    if (e <= eps) {
      dec.b = bl;
      dec.lambda = lambda;
      dec.eps_achieved = e;
      found = true;
      break;
    }
  }
  if (!found)
    throw EpsilonUnreachableError(
        "decompose: no Lambda in the ladder reaches eps; best " +
            std::to_string(best),
        best);

  dec.c = field_difference(a, dec.b);
  dec.c.preset = "C(" + a.preset + ")";
  const MatrixField& b = dec.b;
  dec.m_b = cm_norm(
                [&b](const Vec& x, double t) {
                  const MatGrad g = b.grad(x, t);
                  double s2 = 0.0;
                  for (int d = 0; d < b.n; ++d)
                    s2 += g[static_cast<std::size_t>(d)].squaredNorm();
                  return t * std::sqrt(s2);
                },
                cert_mesh)
                .norm;
  const MatrixField& c = dec.c;
  dec.m_c = cm_norm([&c](const Vec& x, double t) { return frob(c.eval(x, t)); },
                    cert_mesh)
                .norm;
  dec.ellipticity = check_ellipticity(dec.b, 1000).lambda_emp;
  return dec;
}

}  // namespace dkp
