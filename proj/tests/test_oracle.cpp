#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "qsteer/oracle.hpp"
#include "qsteer/twoqubit.hpp"

using namespace qsteer;

namespace {

Mat4d d32_canonical() {
  Mat4d m = Mat4d::Zero();
  m(0, 0) = 1.0;
  m(1, 1) = 1.0 / std::sqrt(2.0);
  m(2, 2) = -1.0 / std::sqrt(2.0);
  m(3, 0) = 0.5;
  m(3, 3) = 0.5;
  return m;
}

Mat4d d33_canonical(double beta) {
  const double c = std::cos(0.5 * beta);
  Mat4d m = Mat4d::Zero();
  m.diagonal() << 1.0, c, -c, 1.0;
  return m;
}

CorrelationMatrix product_state(const Vec3d& r, const Vec3d& s) {
  Mat4d m;
  m(0, 0) = 1.0;
  for (int i = 0; i < 3; ++i) {
    m(i + 1, 0) = r(i);
    m(0, i + 1) = s(i);
  }
  m.block<3, 3>(1, 1) = r * s.transpose();
  return CorrelationMatrix::from_matrix(m);
}

TwoQubitState random_full_rank_state(std::mt19937& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat4c g;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) g(i, j) = cplx(gauss(rng), gauss(rng));
  Mat4c rho = g * g.adjoint();
  rho /= rho.trace().real();
  return TwoQubitState::from_matrix(rho);
}

}  // namespace

TEST_CASE("direction lattice is deterministic, unit, and quasi-uniform") {
  const auto dirs = fibonacci_directions(500);
  REQUIRE(dirs.size() == 500);
  for (const Vec3d& e : dirs) REQUIRE(std::abs(e.norm() - 1.0) <= 1e-12);

  const auto again = fibonacci_directions(500);
  for (int i = 0; i < 500; ++i)
    REQUIRE((dirs[i] - again[i]).cwiseAbs().maxCoeff() == 0.0);

  // quasi-uniform: every octant is populated and the mean direction vanishes
  Vec3d mean = Vec3d::Zero();
  std::array<int, 8> octant{};
  for (const Vec3d& e : dirs) {
    mean += e;
    const int idx =
        (e(0) > 0 ? 1 : 0) | (e(1) > 0 ? 2 : 0) | (e(2) > 0 ? 4 : 0);
    ++octant[idx];
  }
  REQUIRE((mean / 500).norm() <= 1e-2);
  for (int count : octant) REQUIRE(count >= 40);

  REQUIRE_THROWS_AS(fibonacci_directions(11), invalid_input);
}

TEST_CASE("sweeping a product state pins every steered point") {
  const Vec3d r(0.1, 0.2, 0.3);
  const Vec3d s(0.4, -0.2, 0.1);
  const auto lambda = product_state(r, s);

  const auto sample = sweep(lambda, 200);
  REQUIRE(sample.points.size() == 200);
  for (int i = 0; i < 200; ++i) {
    // conditioning the partner of an uncorrelated pair never moves the state
    REQUIRE((sample.points[i] - r).norm() <= 1e-12);
    REQUIRE(sample.probabilities[i] > 0.0);
    REQUIRE(sample.probabilities[i] <= 1.0);
  }

  const auto swapped = sweep(lambda, 200, 0, SteeredParty::BobGivenAlice);
  for (int i = 0; i < 200; ++i)
    REQUIRE((swapped.points[i] - s).norm() <= 1e-12);

  const auto fit = fit_ellipsoid(sample);
  REQUIRE(fit.geometry == FitGeometry::Point);
  REQUIRE((fit.center - r).norm() <= 1e-12);
  REQUIRE(fit.semiaxes.cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("shifted-spheroid sweep lies on its closed-form surface") {
  const auto lambda = CorrelationMatrix::from_matrix(d32_canonical());
  const auto sample = sweep(lambda, 500);
  for (const Vec3d& p : sample.points) {
    REQUIRE(p.norm() <= 1.0 + 1e-9);
    const double lhs = (p(0) * p(0) + p(1) * p(1)) / 0.5 +
                       (p(2) - 0.5) * (p(2) - 0.5) / 0.25;
    REQUIRE(std::abs(lhs - 1.0) <= 1e-9);
  }
}

TEST_CASE("origin-centered spheroid sweep lies on its closed-form surface") {
  for (const double beta : {0.4, 1.2, M_PI / 2, 2.3, 2.9}) {
    const double c = std::cos(0.5 * beta);
    const auto lambda = CorrelationMatrix::from_matrix(d33_canonical(beta));
    const auto sample = sweep(lambda, 500);
    for (const Vec3d& p : sample.points) {
      const double lhs =
          p(0) * p(0) / (c * c) + p(1) * p(1) / (c * c) + p(2) * p(2);
      REQUIRE(std::abs(lhs - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("fitting an exact sphere recovers radius and residual floor") {
  Mat4d m = Mat4d::Zero();
  m.diagonal() << 1.0, 0.5, 0.5, 0.5;
  const auto sample = sweep(CorrelationMatrix::from_matrix(m), 200);
  const auto fit = fit_ellipsoid(sample);
  REQUIRE(fit.geometry == FitGeometry::Ellipsoid);
  for (int j = 0; j < 3; ++j) REQUIRE(std::abs(fit.semiaxes(j) - 0.5) <= 1e-10);
  REQUIRE(fit.center.norm() <= 1e-10);
  REQUIRE(fit.rms_residual <= 1e-10);
}

TEST_CASE("fitting the shifted-spheroid sweep reproduces its geometry") {
  const auto lambda = CorrelationMatrix::from_matrix(d32_canonical());
  const auto fit = fit_ellipsoid(sweep(lambda, 500));
  REQUIRE(fit.geometry == FitGeometry::Ellipsoid);
  REQUIRE(std::abs(fit.center(0)) <= 1e-6);
  REQUIRE(std::abs(fit.center(1)) <= 1e-6);
  REQUIRE(std::abs(fit.center(2) - 0.5) <= 1e-6);
  REQUIRE(std::abs(fit.semiaxes(0) - 1.0 / std::sqrt(2.0)) <= 1e-6);
  REQUIRE(std::abs(fit.semiaxes(1) - 1.0 / std::sqrt(2.0)) <= 1e-6);
  REQUIRE(std::abs(fit.semiaxes(2) - 0.5) <= 1e-6);

  const auto analytic = steering_ellipsoid(lambda, SteeredParty::AliceGivenBob);
  const auto cmp = compare(analytic, fit);
  REQUIRE(cmp.center_err <= 1e-6);
  REQUIRE(cmp.semiaxes_err <= 1e-6);
  REQUIRE(cmp.frame_err <= 1e-6);

  const double fitted_volume =
      (4.0 * M_PI / 3.0) * fit.semiaxes(0) * fit.semiaxes(1) * fit.semiaxes(2);
  REQUIRE(std::abs(fitted_volume - analytic.volume) <=
          1e-4 * analytic.volume);
  REQUIRE(std::abs(analytic.volume - M_PI / 3.0) <= 1e-9);
}

TEST_CASE("pole-to-pole degenerate sweep collapses to a segment") {
  Mat4d m = Mat4d::Zero();
  m.diagonal() << 1.0, 0.0, 0.0, 1.0;
  const int n = 500;
  const auto sample = sweep(CorrelationMatrix::from_matrix(m), n);
  const auto fit = fit_ellipsoid(sample);
  REQUIRE(fit.geometry == FitGeometry::Segment);
  REQUIRE(fit.rms_residual <= 1e-12);

  const Vec3d end_a = fit.center + fit.semiaxes(0) * fit.axes.col(0);
  const Vec3d end_b = fit.center - fit.semiaxes(0) * fit.axes.col(0);
  const Vec3d hi = end_a(2) >= end_b(2) ? end_a : end_b;
  const Vec3d lo = end_a(2) >= end_b(2) ? end_b : end_a;
  // the lattice reaches |z| = 1 - 1/n, so the segment endpoints approach the
  // two poles at that resolution
  REQUIRE((hi - Vec3d(0, 0, 1)).norm() <= 2.0 / n);
  REQUIRE((lo - Vec3d(0, 0, -1)).norm() <= 2.0 / n);
  REQUIRE(std::abs(hi(0)) <= 1e-12);
  REQUIRE(std::abs(hi(1)) <= 1e-12);
}

TEST_CASE("comparison is zero for identical geometry and flags mismatch") {
  const auto lambda = CorrelationMatrix::from_matrix(d32_canonical());
  const auto analytic = steering_ellipsoid(lambda, SteeredParty::AliceGivenBob);

  FittedEllipsoid same;
  same.center = analytic.center;
  same.semiaxes = analytic.semiaxes;
  same.axes = analytic.axes;
  same.rms_residual = 0.0;
  same.geometry = FitGeometry::Ellipsoid;
  const auto cmp = compare(analytic, same);
  REQUIRE(cmp.center_err == 0.0);
  REQUIRE(cmp.semiaxes_err == 0.0);
  REQUIRE(cmp.frame_err <= 1e-12);

  // analytic segment vs fitted ellipsoid must refuse to compare
  Mat4d ghz = Mat4d::Zero();
  ghz.diagonal() << 1.0, 0.0, 0.0, 1.0;
  const auto segment =
      steering_ellipsoid(CorrelationMatrix::from_matrix(ghz),
                         SteeredParty::AliceGivenBob);
  REQUIRE_THROWS_AS(compare(segment, same), invalid_input);

  FittedEllipsoid wrong = same;
  wrong.geometry = FitGeometry::Segment;
  REQUIRE_THROWS_AS(compare(analytic, wrong), invalid_input);
}

TEST_CASE("random physical states: fit agrees with the closed form") {
  std::mt19937 rng(20240817);
  int checked = 0;
  while (checked < 50) {
    const auto state = random_full_rank_state(rng);
    const auto lambda = lambda_from_rho(state);
    if (lambda.s().norm() > 0.95) continue;  // keep steering well-conditioned
    ++checked;

    const auto sample = sweep(lambda, 500);
    const auto fit = fit_ellipsoid(sample);
    const auto analytic =
        steering_ellipsoid(lambda, SteeredParty::AliceGivenBob);
    REQUIRE(fit.geometry == FitGeometry::Ellipsoid);

    const auto cmp = compare(analytic, fit);
    REQUIRE(cmp.center_err <= 1e-5);
    REQUIRE(cmp.semiaxes_err <= 1e-5);
    REQUIRE(cmp.frame_err <= 1e-5);

    const double fitted_volume = (4.0 * M_PI / 3.0) * fit.semiaxes(0) *
                                 fit.semiaxes(1) * fit.semiaxes(2);
    REQUIRE(std::abs(fitted_volume - analytic.volume) <=
            1e-4 * std::max(analytic.volume, 1e-12));
  }
}

TEST_CASE("sample preconditions are enforced") {
  const auto lambda = CorrelationMatrix::from_matrix(d32_canonical());
  REQUIRE_THROWS_AS(sweep(lambda, 11), invalid_input);

  SteeringSample tiny;
  tiny.points.assign(5, Vec3d::Zero());
  REQUIRE_THROWS_AS(fit_ellipsoid(tiny), invalid_input);
}
