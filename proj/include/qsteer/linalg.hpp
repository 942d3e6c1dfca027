#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <array>
#include <cmath>
#include <complex>

#include "qsteer/errors.hpp"

namespace qsteer {

using cplx = std::complex<double>;
using Vec2c = Eigen::Vector2cd;
using Mat2c = Eigen::Matrix2cd;
using Mat3d = Eigen::Matrix3d;
using Mat4d = Eigen::Matrix4d;
using Mat4c = Eigen::Matrix4cd;
using Vec3d = Eigen::Vector3d;
using Vec4d = Eigen::Vector4d;
using Vec4c = Eigen::Vector4cd;

/// Pauli basis sigma_0..sigma_3 (sigma_0 = identity).
inline const Mat2c& pauli(int mu) {
  static const std::array<Mat2c, 4> sigma = [] {
    std::array<Mat2c, 4> s;
    const cplx i(0.0, 1.0);
    s[0] << 1, 0, 0, 1;
    s[1] << 0, 1, 1, 0;
    s[2] << 0, -i, i, 0;
    s[3] << 1, 0, 0, -1;
    return s;
  }();
  return sigma.at(static_cast<std::size_t>(mu));
}

/// Minkowski metric G = diag(1, -1, -1, -1).
inline const Mat4d& minkowski_metric() {
  static const Mat4d g = Vec4d(1, -1, -1, -1).asDiagonal();
  return g;
}

/// Quadratic form x^T G x.
inline double minkowski_norm(const Vec4d& x) {
  return x(0) * x(0) - x.tail<3>().squaredNorm();
}

inline double minkowski_dot(const Vec4d& x, const Vec4d& y) {
  return x(0) * y(0) - x.tail<3>().dot(y.tail<3>());
}

/// Bloch-sphere direction written as the qubit state
/// cos(beta/2)|0> + e^{i alpha} sin(beta/2)|1>. `alpha` is the azimuthal
/// angle in [0, 2pi), `beta` the polar angle in [0, pi].
struct Spinor {
  double alpha = 0.0;
  double beta = 0.0;

  Vec2c vector() const {
    Vec2c v;
    v << cplx(std::cos(beta / 2.0), 0.0),
        std::exp(cplx(0.0, alpha)) * std::sin(beta / 2.0);
    return v;
  }

  static Spinor from_angles(double alpha, double beta) {
    if (beta < -1e-12 || beta > M_PI + 1e-12)
      throw invalid_input("Spinor: polar angle must lie in [0, pi]");
    const double two_pi = 2.0 * M_PI;
    double a = std::fmod(alpha, two_pi);
    if (a < 0.0) a += two_pi;
    if (a >= two_pi) a = 0.0;
    double b = std::min(std::max(beta, 0.0), M_PI);
    return Spinor{a, b};
  }

  /// Angles of a nonzero 2-vector after stripping norm and global phase. A
  /// vanishing |0> component yields beta = pi with alpha = 0 (the phase of a
  /// pure |1> component is global).
  static Spinor from_vector(const Vec2c& v_in) {
    const double n = v_in.norm();
    if (!(n > 1e-14)) throw invalid_input("Spinor: zero vector");
    const Vec2c v = v_in / n;
    const double c = std::abs(v(0));
    const double s = std::abs(v(1));
    Spinor out;
    out.beta = 2.0 * std::atan2(s, c);
    if (c > 1e-300 && s > 1e-300) {
      const double two_pi = 2.0 * M_PI;
      double a = std::fmod(std::arg(v(1)) - std::arg(v(0)), two_pi);
      if (a < 0.0) a += two_pi;
      if (a >= two_pi) a = 0.0;
      out.alpha = a;
    }
    return out;
  }
};

/// |<s|t>| for two spinors; 1 means identical Bloch directions.
inline double spinor_overlap(const Spinor& s, const Spinor& t) {
  const Vec2c a = s.vector(), b = t.vector();
  return std::abs(a.dot(b));
}

/// 2x2 complex invertible operator with unit determinant; local filters on a
/// single qubit are represented this way. Construction rescales by a principal
/// square root of the determinant.
struct SloccOperator {
  Mat2c m;

  static SloccOperator from_matrix(const Mat2c& a) {
    const cplx d = a.determinant();
    if (std::abs(d) <= 1e-12)
      throw invalid_input("SloccOperator: singular 2x2 operator");
    return SloccOperator{a / std::sqrt(d)};
  }

  static SloccOperator identity() { return SloccOperator{Mat2c::Identity()}; }
};

/// Image of a in SO+(3,1): L_{mu nu} = Re Tr[sigma_mu a sigma_nu a^dag] / 2.
inline Mat4d sl2c_to_lorentz(const SloccOperator& a) {
  Mat4d l;
  for (int mu = 0; mu < 4; ++mu) {
    for (int nu = 0; nu < 4; ++nu) {
      const cplx t = (pauli(mu) * a.m * pauli(nu) * a.m.adjoint()).trace();
      l(mu, nu) = 0.5 * t.real();
    }
  }
  return l;
}

/// True when m preserves the metric, has unit determinant and maps the future
/// cone into itself.
inline bool is_lorentz(const Mat4d& m, double tol = 1e-9) {
  const Mat4d& g = minkowski_metric();
  const double metric_err = (m.transpose() * g * m - g).cwiseAbs().maxCoeff();
  return metric_err <= tol && std::abs(m.determinant() - 1.0) <= tol &&
         m(0, 0) >= 1.0 - tol;
}

/// Re-orthonormalizes the rows of an approximate Lorentz matrix in order:
/// row 0 is normalized timelike (+1), rows 1..3 are projected against the
/// previous rows in the Minkowski inner product and normalized spacelike (-1).
inline Mat4d minkowski_orthonormalize_rows(const Mat4d& m) {
  Mat4d out = m;
  for (int i = 0; i < 4; ++i) {
    Vec4d v = out.row(i).transpose();
    for (int j = 0; j < i; ++j) {
      const Vec4d w = out.row(j).transpose();
      v -= (minkowski_dot(v, w) / minkowski_dot(w, w)) * w;
    }
    const double n = minkowski_norm(v);
    const double want = (i == 0) ? 1.0 : -1.0;
    if (n * want <= 1e-14)
      throw numerical_failure("minkowski_orthonormalize_rows: degenerate row");
    out.row(i) = (v / std::sqrt(std::abs(n))).transpose();
  }
  return out;
}

/// Drives the metric defect F = L^T G L - G of an approximate Lorentz matrix
/// to its rounding floor with the quadratically convergent update
/// L <- L (I - G F / 2). Row orthonormalization alone fixes the row Gram,
/// which for strongly boosted frames still leaves the column Gram amplified
/// by the squared boost; this polish targets the column Gram directly.
inline Mat4d minkowski_defect_polish(const Mat4d& m) {
  const Mat4d& g = minkowski_metric();
  Mat4d l = m;
  for (int it = 0; it < 4; ++it) {
    const Mat4d f = l.transpose() * g * l - g;
    const double r = f.cwiseAbs().maxCoeff();
    if (r < 1e-14 || r > 0.1) break;  // converged, or not a near-Lorentz input
    l -= 0.5 * l * g * f;
  }
  return l;
}

/// Eigen decomposition of a general real 4x4 matrix, sorted by descending
/// real part. Each eigenpair is validated against the residual bound
/// |M v - lambda v| <= tol * |M|_F.
struct EigResult {
  std::array<cplx, 4> values;
  Mat4c vectors;  // columns, Euclidean-normalized
};

inline EigResult eig_real4(const Mat4d& m, double tol = 1e-9) {
  Eigen::EigenSolver<Mat4d> solver(m);
  if (solver.info() != Eigen::Success)
    throw numerical_failure("eig_real4: solver did not converge");

  std::array<int, 4> order{0, 1, 2, 3};
  const auto& vals = solver.eigenvalues();
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (vals(a).real() != vals(b).real()) return vals(a).real() > vals(b).real();
    return vals(a).imag() > vals(b).imag();
  });

  EigResult r;
  const double scale = m.norm();
  for (int k = 0; k < 4; ++k) {
    const cplx lam = vals(order[k]);
    Vec4c v = solver.eigenvectors().col(order[k]);
    v.normalize();
    const double residual = (m.cast<cplx>() * v - lam * v).norm();
    if (residual > tol * std::max(scale, 1e-300))
      throw numerical_failure("eig_real4: residual bound violated");
    r.values[k] = lam;
    r.vectors.col(k) = v;
  }
  return r;
}

namespace detail {

/// Unit quaternion (w, x, y, z) of a proper rotation matrix.
inline std::array<double, 4> rotation_quaternion(const Mat3d& r) {
  std::array<double, 4> q{};
  const double tr = r.trace();
  if (tr > 0) {
    double s = std::sqrt(tr + 1.0) * 2;
    q = {0.25 * s, (r(2, 1) - r(1, 2)) / s, (r(0, 2) - r(2, 0)) / s,
         (r(1, 0) - r(0, 1)) / s};
  } else if (r(0, 0) > r(1, 1) && r(0, 0) > r(2, 2)) {
    double s = std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2)) * 2;
    q = {(r(2, 1) - r(1, 2)) / s, 0.25 * s, (r(0, 1) + r(1, 0)) / s,
         (r(0, 2) + r(2, 0)) / s};
  } else if (r(1, 1) > r(2, 2)) {
    double s = std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2)) * 2;
    q = {(r(0, 2) - r(2, 0)) / s, (r(0, 1) + r(1, 0)) / s, 0.25 * s,
         (r(1, 2) + r(2, 1)) / s};
  } else {
    double s = std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1)) * 2;
    q = {(r(1, 0) - r(0, 1)) / s, (r(0, 2) + r(2, 0)) / s,
         (r(1, 2) + r(2, 1)) / s, 0.25 * s};
  }
  double n = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
  for (auto& c : q) c /= n;
  return q;
}

}  // namespace detail

/// Preimage of a proper orthochronous Lorentz matrix under sl2c_to_lorentz,
/// via its boost-rotation polar split. The result is defined up to global
/// sign; the roundtrip through sl2c_to_lorentz is validated.
inline SloccOperator lorentz_to_sl2c(const Mat4d& l, double tol = 1e-8) {
  if (!is_lorentz(l, 1e-6))
    throw invalid_input("lorentz_to_sl2c: not a proper orthochronous matrix");

  const Vec4d n = l.col(0);  // image of the rest frame axis
  Mat2c boost = Mat2c::Identity();
  Mat4d binv = Mat4d::Identity();
  const double wnorm = n.tail<3>().norm();
  if (wnorm > 1e-14) {
    const Vec3d axis = n.tail<3>() / wnorm;
    const double chi = std::acosh(std::max(n(0), 1.0));
    Mat2c ns = Mat2c::Zero();
    for (int k = 0; k < 3; ++k) ns += axis(k) * pauli(k + 1);
    boost = std::cosh(chi / 2) * Mat2c::Identity() + std::sinh(chi / 2) * ns;
    // inverse pure boost along the same axis
    binv.setIdentity();
    binv(0, 0) = std::cosh(chi);
    binv.block<3, 1>(1, 0) = -std::sinh(chi) * axis;
    binv.block<1, 3>(0, 1) = -std::sinh(chi) * axis.transpose();
    binv.block<3, 3>(1, 1) =
        Mat3d::Identity() + (std::cosh(chi) - 1.0) * axis * axis.transpose();
  }

  Mat3d rot = (binv * l).block<3, 3>(1, 1);
  Eigen::JacobiSVD<Mat3d> svd(rot, Eigen::ComputeFullU | Eigen::ComputeFullV);
  rot = svd.matrixU() * svd.matrixV().transpose();
  const auto q = detail::rotation_quaternion(rot);
  const cplx i(0.0, 1.0);
  Mat2c u = q[0] * Mat2c::Identity() -
            i * (q[1] * pauli(1) + q[2] * pauli(2) + q[3] * pauli(3));

  const SloccOperator a = SloccOperator::from_matrix(boost * u);
  if ((sl2c_to_lorentz(a) - l).cwiseAbs().maxCoeff() > tol)
    throw numerical_failure("lorentz_to_sl2c: roundtrip residual too large");
  return a;
}

}  // namespace qsteer
