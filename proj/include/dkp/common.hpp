// SPDX-License-Identifier: Apache-2.0
//
// Shared small types, errors, and deterministic sampling helpers.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dkp {

// Dense types sized for the ambient dimension n <= 3; stack allocated.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;

// ---------------------------------------------------------------- errors

// Invalid user input / configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Runtime numerical failure (CLI exit code 3).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct QuadratureError : NumericalError {
  using NumericalError::NumericalError;
};

// Field evaluator failed at a point.
struct FieldError : NumericalError {
  using NumericalError::NumericalError;
};

// Operation does not apply to this field (e.g. gradient norms of a
// non-differentiable preset).
struct NotApplicableError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotInvertibleError : NumericalError {
  NotInvertibleError(const std::string& msg, Vec x, double t)
      : NumericalError(msg), witness_x(std::move(x)), witness_t(t) {}
  Vec witness_x;
  double witness_t = 0.0;
};

struct EpsilonUnreachableError : NumericalError {
  EpsilonUnreachableError(const std::string& msg, double achieved)
      : NumericalError(msg), best_achieved(achieved) {}
  double best_achieved;
};

struct DegenerateInputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ------------------------------------------------------- periodic metric

// Wrap into [0,1).
inline double wrap01(double x) {
  double y = x - std::floor(x);
  return (y >= 1.0) ? 0.0 : y;
}

// Distance on the unit torus in one coordinate.
inline double per_dist1(double a, double b) {
  double d = std::fabs(a - b);
  d -= std::floor(d);
  return std::min(d, 1.0 - d);
}

// Euclidean distance on the (n-1)-torus of side 1.
inline double per_dist(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (int d = 0; d < a.size(); ++d) {
    double dd = per_dist1(a[d], b[d]);
    s += dd * dd;
  }
  return std::sqrt(s);
}

// ------------------------------------------------- deterministic sampling

// splitmix64; the basis for all hash-derived pseudo-randomness.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline double hash_unit(std::uint64_t x) {
  return static_cast<double>(splitmix64(x) >> 11) * 0x1.0p-53;
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
}

// Halton low-discrepancy sequence (1-based index).
inline double halton(std::uint64_t i, std::uint64_t base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= static_cast<double>(base);
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}

// Quasi-random point in the truncated half-space: x in [0,1)^{n-1},
// t in (0,1], with t spread uniformly in log2 scale over `levels` octaves.
inline void halton_halfspace_point(std::uint64_t i, int n, Vec& x, double& t,
                                   int levels = 10) {
  static const std::uint64_t bases[3] = {2, 3, 5};
  x.resize(n - 1);
  for (int d = 0; d < n - 1; ++d) x[d] = halton(i, bases[d]);
  t = std::pow(2.0, -static_cast<double>(levels) * halton(i, bases[n - 1]));
}

// --------------------------------------------------------- small linalg

inline double frob(const Mat& a) { return a.norm(); }

// Largest singular value.
inline double op_norm(const Mat& a) {
  Eigen::JacobiSVD<Mat> svd(a);
  return svd.singularValues()(0);
}

// Smallest eigenvalue of the symmetric part (A + A^T)/2.
inline double min_sym_eig(const Mat& a) {
  Mat s = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(s, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// Least-squares slope of y against x.
inline double ls_slope(const std::vector<double>& x,
                       const std::vector<double>& y) {
  const auto m = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace dkp
