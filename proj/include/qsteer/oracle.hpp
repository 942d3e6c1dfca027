#pragma once

// Brute-force verification of steering geometry, independent of the
// canonicalization code path: sweep projective measurement directions over a
// deterministic sphere lattice, collect the steered Bloch points, fit a
// quadric surface to the cloud, and compare the fit against the closed-form
// ellipsoid.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "qsteer/errors.hpp"
#include "qsteer/linalg.hpp"
#include "qsteer/twoqubit.hpp"

namespace qsteer {

struct SteeringSample {
  std::vector<Vec3d> directions;  // unit measurement axes
  std::vector<Vec3d> points;      // steered Bloch vectors, one per direction
  std::vector<double> probabilities;  // outcome probabilities, in (0, 1]
};

// Shape of a fitted point cloud: a full ellipsoid, or its rank-deficient
// collapses (flat disk, line segment, single point).
enum class FitGeometry { Ellipsoid, Disk, Segment, Point };

struct FittedEllipsoid {
  Vec3d center;
  Vec3d semiaxes;  // sorted descending; collapsed directions report zero
  Mat3d axes;      // columns: orthonormal, right-handed principal directions
  double rms_residual;  // rms first-order distance of samples to the surface
  FitGeometry geometry = FitGeometry::Ellipsoid;

  bool degenerate() const { return geometry != FitGeometry::Ellipsoid; }
};

struct GeometryComparison {
  double center_err;    // distance between centers
  double semiaxes_err;  // max abs difference of the sorted semiaxis triples
  double frame_err;     // worst principal-subspace angle, radians
};

// Quasi-uniform deterministic unit directions (golden-angle spiral lattice).
inline std::vector<Vec3d> fibonacci_directions(int n) {
  if (n < 12) throw invalid_input("direction sweep needs at least 12 points");
  std::vector<Vec3d> out;
  out.reserve(n);
  const double golden_angle = M_PI * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / n;
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden_angle * i;
    out.emplace_back(rho * std::cos(phi), rho * std::sin(phi), z);
  }
  return out;
}

// Steered Bloch points for n lattice directions.  The sweep is deterministic;
// the seed parameter is reserved for a jittered sampling mode and does not
// affect the base lattice.
inline SteeringSample sweep(const CorrelationMatrix& lambda, int n,
                            unsigned seed = 0,
                            SteeredParty who = SteeredParty::AliceGivenBob) {
  (void)seed;
  SteeringSample out;
  out.directions = fibonacci_directions(n);
  out.points.reserve(n);
  out.probabilities.reserve(n);
  for (const Vec3d& e : out.directions) {
    const SteeredPoint sp = steered_point(lambda, e, who);
    if (sp.p.norm() > 1.0 + 1e-9)
      throw unphysical_state("steered Bloch vector leaves the unit ball");
    if (!(sp.prob > 0.0) || sp.prob > 1.0)
      throw unphysical_state("steering outcome probability outside (0, 1]");
    out.points.push_back(sp.p);
    out.probabilities.push_back(sp.prob);
  }
  return out;
}

namespace detail {

// Completes a unit vector to a right-handed orthonormal frame (as columns).
inline Mat3d frame_from_axis(const Vec3d& u) {
  Vec3d a = std::abs(u(0)) < 0.9 ? Vec3d::UnitX() : Vec3d::UnitY();
  const Vec3d v = u.cross(a).normalized();
  const Vec3d w = u.cross(v);
  Mat3d f;
  f.col(0) = u;
  f.col(1) = v;
  f.col(2) = w;
  return f;
}

// Least-squares conic through 2D points, returned as an axis-aligned-free
// ellipse (center, semiaxes, rotation angle).  Throws when the best conic is
// not an ellipse.
inline void fit_ellipse_2d(const std::vector<Eigen::Vector2d>& pts,
                           Eigen::Vector2d& center, Eigen::Vector2d& semi,
                           Eigen::Matrix2d& frame) {
  Eigen::MatrixXd design(static_cast<int>(pts.size()), 6);
  for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
    const double x = pts[i](0), y = pts[i](1);
    design.row(i) << x * x, 2.0 * x * y, y * y, x, y, 1.0;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeThinV);
  const Eigen::VectorXd v = svd.matrixV().col(5);
  Eigen::Matrix2d a;
  a << v(0), v(1), v(1), v(2);
  const Eigen::Vector2d b(v(3), v(4));
  if (std::abs(a.determinant()) < 1e-14 * (1.0 + b.squaredNorm()))
    throw numerical_failure("planar point cloud does not fit an ellipse");
  center = -0.5 * a.inverse() * b;
  const double k = center.dot(a * center) - v(5);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(a);
  Eigen::Vector2d r2;
  for (int j = 0; j < 2; ++j) {
    const double ratio = k / es.eigenvalues()(j);
    if (!(ratio > 0.0))
      throw numerical_failure("planar point cloud does not fit an ellipse");
    r2(j) = ratio;
  }
  // descending semiaxes with matching columns
  const int hi = r2(0) >= r2(1) ? 0 : 1;
  semi = Eigen::Vector2d(std::sqrt(r2(hi)), std::sqrt(r2(1 - hi)));
  frame.col(0) = es.eigenvectors().col(hi);
  frame.col(1) = es.eigenvectors().col(1 - hi);
}

}  // namespace detail

// Least-squares quadric fit of the sampled point cloud.  Rank-deficient
// clouds (all points on a plane, a line, or a single spot) are classified and
// reported with best-fit disk/segment/point parameters instead of failing.
inline FittedEllipsoid fit_ellipsoid(const SteeringSample& sample) {
  const auto& pts = sample.points;
  const int n = static_cast<int>(pts.size());
  if (n < 12) throw invalid_input("ellipsoid fit needs at least 12 points");

  Vec3d centroid = Vec3d::Zero();
  for (const Vec3d& p : pts) centroid += p;
  centroid /= n;

  Eigen::Matrix3Xd spread(3, n);
  for (int i = 0; i < n; ++i) spread.col(i) = pts[i] - centroid;
  Eigen::JacobiSVD<Eigen::Matrix3Xd> pca(spread, Eigen::ComputeFullU);
  const Vec3d sigma = pca.singularValues() / std::sqrt(static_cast<double>(n));
  const double rank_tol = std::max(1e-7 * sigma(0), 1e-9);

  FittedEllipsoid out;
  out.axes = pca.matrixU();
  if (out.axes.determinant() < 0.0) out.axes.col(2) *= -1.0;

  if (sigma(0) <= rank_tol) {  // single spot
    out.geometry = FitGeometry::Point;
    out.center = centroid;
    out.semiaxes = Vec3d::Zero();
    out.rms_residual = sigma.norm();
    return out;
  }
  if (sigma(1) <= rank_tol) {  // collinear: segment along the first axis
    out.geometry = FitGeometry::Segment;
    const Vec3d u = out.axes.col(0);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    double perp2 = 0.0;
    for (const Vec3d& p : pts) {
      const double t = u.dot(p - centroid);
      lo = std::min(lo, t);
      hi = std::max(hi, t);
      perp2 += ((p - centroid) - t * u).squaredNorm();
    }
    out.center = centroid + 0.5 * (hi + lo) * u;
    out.semiaxes = Vec3d(0.5 * (hi - lo), 0.0, 0.0);
    out.rms_residual = std::sqrt(perp2 / n);
    return out;
  }
  if (sigma(2) <= rank_tol) {  // coplanar: ellipse inside the spanning plane
    out.geometry = FitGeometry::Disk;
    const Vec3d normal = out.axes.col(2);
    std::vector<Eigen::Vector2d> flat(n);
    double off2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const Vec3d d = pts[i] - centroid;
      flat[i] = Eigen::Vector2d(out.axes.col(0).dot(d), out.axes.col(1).dot(d));
      off2 += d.dot(normal) * d.dot(normal);
    }
    Eigen::Vector2d c2, s2;
    Eigen::Matrix2d f2;
    detail::fit_ellipse_2d(flat, c2, s2, f2);
    const Mat3d plane = out.axes;
    out.center = centroid + c2(0) * plane.col(0) + c2(1) * plane.col(1);
    out.semiaxes = Vec3d(s2(0), s2(1), 0.0);
    out.axes.col(0) = f2(0, 0) * plane.col(0) + f2(1, 0) * plane.col(1);
    out.axes.col(1) = f2(0, 1) * plane.col(0) + f2(1, 1) * plane.col(1);
    out.axes.col(2) = normal;
    if (out.axes.determinant() < 0.0) out.axes.col(2) *= -1.0;
    double res2 = off2 / n;
    for (int i = 0; i < n; ++i) {
      const Eigen::Vector2d q = f2.transpose() * (flat[i] - c2);
      const double fval =
          q(0) * q(0) / (s2(0) * s2(0)) + q(1) * q(1) / (s2(1) * s2(1)) - 1.0;
      const Eigen::Vector2d grad(2.0 * q(0) / (s2(0) * s2(0)),
                                 2.0 * q(1) / (s2(1) * s2(1)));
      const double g = grad.norm();
      if (g > 0.0) res2 += (fval / g) * (fval / g) / n;
    }
    out.rms_residual = std::sqrt(res2);
    return out;
  }

  // Full-rank cloud: algebraic quadric fit in centered, rescaled coordinates.
  const double scale = sigma.norm();
  Eigen::MatrixXd design(n, 10);
  for (int i = 0; i < n; ++i) {
    const Vec3d q = (pts[i] - centroid) / scale;
    design.row(i) << q(0) * q(0), q(1) * q(1), q(2) * q(2), 2.0 * q(0) * q(1),
        2.0 * q(0) * q(2), 2.0 * q(1) * q(2), q(0), q(1), q(2), 1.0;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeThinV);
  const Eigen::VectorXd v = svd.matrixV().col(9);
  Mat3d a;
  a << v(0), v(3), v(4), v(3), v(1), v(5), v(4), v(5), v(2);
  const Vec3d b(v(6), v(7), v(8));
  if (std::abs(a.determinant()) < 1e-12)
    throw numerical_failure("point cloud does not fit an ellipsoid");
  const Vec3d cq = -0.5 * a.inverse() * b;
  const double k = cq.dot(a * cq) - v(9);
  Eigen::SelfAdjointEigenSolver<Mat3d> es(a);
  std::array<std::pair<double, int>, 3> order;
  for (int j = 0; j < 3; ++j) {
    const double ratio = k / es.eigenvalues()(j);
    if (!(ratio > 0.0))
      throw numerical_failure("point cloud does not fit an ellipsoid");
    order[j] = {std::sqrt(ratio) * scale, j};
  }
  std::sort(order.begin(), order.end(),
            [](const auto& l, const auto& r) { return l.first > r.first; });
  out.geometry = FitGeometry::Ellipsoid;
  out.center = centroid + scale * cq;
  for (int j = 0; j < 3; ++j) {
    out.semiaxes(j) = order[j].first;
    out.axes.col(j) = es.eigenvectors().col(order[j].second);
  }
  if (out.axes.determinant() < 0.0) out.axes.col(2) *= -1.0;

  double res2 = 0.0;
  for (const Vec3d& p : pts) {
    const Vec3d q = out.axes.transpose() * (p - out.center);
    double fval = -1.0;
    Vec3d grad;
    for (int j = 0; j < 3; ++j) {
      const double a2 = out.semiaxes(j) * out.semiaxes(j);
      fval += q(j) * q(j) / a2;
      grad(j) = 2.0 * q(j) / a2;
    }
    const double g = grad.norm();
    if (g > 0.0) res2 += (fval / g) * (fval / g);
  }
  out.rms_residual = std::sqrt(res2 / n);
  return out;
}

namespace detail {

// 0 collapsed axes -> ellipsoid, 1 -> disk, 2 -> segment, 3 -> point.
inline FitGeometry geometry_of_semiaxes(const Vec3d& semiaxes, double tol) {
  int zeros = 0;
  for (int j = 0; j < 3; ++j)
    if (semiaxes(j) <= tol) ++zeros;
  switch (zeros) {
    case 0:
      return FitGeometry::Ellipsoid;
    case 1:
      return FitGeometry::Disk;
    case 2:
      return FitGeometry::Segment;
    default:
      return FitGeometry::Point;
  }
}

}  // namespace detail

// Distance between the analytic and fitted geometry.  The frame error is the
// worst principal angle between matching eigen-subspaces, grouping semiaxes
// that are close so that spheroid symmetry (any transverse frame rotation)
// and sign/permutation freedom do not register as error.  Near-equal
// semiaxes are grouped as well: their individual principal directions are
// not numerically identifiable, only the subspace they span is.
inline GeometryComparison compare(const Ellipsoid& analytic,
                                  const FittedEllipsoid& fitted) {
  const double zero_tol = 1e-8;
  const FitGeometry kind_a =
      detail::geometry_of_semiaxes(analytic.semiaxes, zero_tol);
  if (kind_a != fitted.geometry)
    throw invalid_input(
        "degeneracy mismatch between analytic and fitted geometry");

  GeometryComparison out{};
  out.center_err = (analytic.center - fitted.center).norm();
  out.semiaxes_err = (analytic.semiaxes - fitted.semiaxes).cwiseAbs().maxCoeff();

  const double group_tol = 1e-3 * (1.0 + analytic.semiaxes.maxCoeff());
  out.frame_err = 0.0;
  int start = 0;
  while (start < 3) {
    int stop = start + 1;
    while (stop < 3 &&
           analytic.semiaxes(stop - 1) - analytic.semiaxes(stop) <= group_tol)
      ++stop;
    const int dim = stop - start;
    const Eigen::MatrixXd ua = analytic.axes.block(0, start, 3, dim);
    const Eigen::MatrixXd uf = fitted.axes.block(0, start, 3, dim);
    Eigen::JacobiSVD<Eigen::MatrixXd> overlap(ua.transpose() * uf);
    const double cosang =
        std::clamp(overlap.singularValues().minCoeff(), -1.0, 1.0);
    out.frame_err = std::max(out.frame_err, std::acos(cosang));
    start = stop;
  }
  return out;
}

}  // namespace qsteer
