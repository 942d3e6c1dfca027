#pragma once

// Two-qubit density-matrix analysis: Pauli correlation matrix, congruence
// matrix, steering geometry, volume/obesity/concurrence, and SLOCC filters.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <utility>

#include "qsteer/errors.hpp"
#include "qsteer/linalg.hpp"

namespace qsteer {

// Which qubit's conditional states are collected: AliceGivenBob traces the
// states of qubit A conditioned on projective outcomes measured on qubit B.
enum class SteeredParty { AliceGivenBob, BobGivenAlice };

namespace detail {

inline Mat4c kron2(const Mat2c& a, const Mat2c& b) {
  Mat4c k;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) k.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  return k;
}

// sigma_mu (x) sigma_nu in the computational basis.
inline const Mat4c& pauli_pair(int mu, int nu) {
  static const std::array<Mat4c, 16> table = [] {
    std::array<Mat4c, 16> t;
    for (int m = 0; m < 4; ++m)
      for (int n = 0; n < 4; ++n) t[4 * m + n] = kron2(pauli(m), pauli(n));
    return t;
  }();
  return table[4 * mu + nu];
}

}  // namespace detail

struct TwoQubitState {
  Mat4c rho;  // computational basis |00>, |01>, |10>, |11>

  // Validates hermiticity (1e-12), unit trace (1e-12) and positivity (-1e-10).
  static TwoQubitState from_matrix(const Mat4c& m) {
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
      throw invalid_input("not a density matrix: not Hermitian");
    if (std::abs(m.trace() - cplx(1.0, 0.0)) > 1e-12)
      throw invalid_input("not a density matrix: trace differs from one");
    Eigen::SelfAdjointEigenSolver<Mat4c> es(0.5 * (m + m.adjoint()),
                                            Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10)
      throw invalid_input("not a density matrix: negative eigenvalue");
    return TwoQubitState{m};
  }
};

struct CorrelationMatrix {
  Mat4d m;  // m(0,0) == 1; first column holds r, first row holds s

  Vec3d r() const { return Vec3d(m(1, 0), m(2, 0), m(3, 0)); }
  Vec3d s() const { return Vec3d(m(0, 1), m(0, 2), m(0, 3)); }
  Mat3d t() const { return m.block<3, 3>(1, 1); }

  // Validates the unit corner entry and the [-1, 1] entry range.
  static CorrelationMatrix from_matrix(const Mat4d& in) {
    if (std::abs(in(0, 0) - 1.0) > 1e-9)
      throw invalid_input("correlation matrix corner entry must be one");
    if (in.cwiseAbs().maxCoeff() > 1.0 + 1e-9)
      throw invalid_input("correlation matrix entry outside [-1, 1]");
    CorrelationMatrix c{in};
    c.m(0, 0) = 1.0;
    return c;
  }
};

struct OmegaMatrix {
  Mat4d m;  // symmetric congruence matrix Lambda G Lambda^T
};

struct SteeredPoint {
  Vec3d p;      // Bloch vector of the conditional state
  double prob;  // outcome probability; the antipodal pair sums to one
};

struct Ellipsoid {
  Vec3d center;
  Vec3d semiaxes;  // paired with the columns of `axes`, sorted descending
  Mat3d axes;      // columns: orthonormal, right-handed principal directions
  double volume;
  double obesity;  // |det Lambda|^(1/4)
};

struct ConcurrenceResult {
  double value;               // max(0, mu0 - mu1 - mu2 - mu3)
  std::array<double, 4> mu;   // decreasing square roots of the spin-flip
                              // spectrum
};

struct ObesityConcurrenceReport {
  double obesity;
  double concurrence;
  double ratio;  // obesity / concurrence; +infinity when concurrence is zero
};

// Pauli expansion coefficients Lambda_{mu nu} = Tr[rho (sigma_mu x sigma_nu)].
inline CorrelationMatrix lambda_from_rho(const TwoQubitState& state) {
  Mat4d lam;
  double imag_residue = 0.0;
  for (int mu = 0; mu < 4; ++mu)
    for (int nu = 0; nu < 4; ++nu) {
      const cplx v = (state.rho * detail::pauli_pair(mu, nu)).trace();
      imag_residue = std::max(imag_residue, std::abs(v.imag()));
      lam(mu, nu) = v.real();
    }
  if (imag_residue > 1e-9)
    throw invalid_input("not a density matrix: complex Pauli coefficients");
  lam(0, 0) = 1.0;
  return CorrelationMatrix{lam};
}

// Inverse expansion rho = (1/4) sum Lambda_{mu nu} sigma_mu x sigma_nu.
inline TwoQubitState rho_from_lambda(const CorrelationMatrix& lambda) {
  Mat4c rho = Mat4c::Zero();
  for (int mu = 0; mu < 4; ++mu)
    for (int nu = 0; nu < 4; ++nu)
      rho += 0.25 * lambda.m(mu, nu) * detail::pauli_pair(mu, nu);
  rho = (0.5 * (rho + rho.adjoint())).eval();
  Eigen::SelfAdjointEigenSolver<Mat4c> es(rho, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-9)
    throw unphysical_state("correlation matrix describes a non-positive state");
  return TwoQubitState{rho};
}

inline OmegaMatrix omega_from_lambda(const CorrelationMatrix& lambda) {
  const Mat4d w = lambda.m * minkowski_metric() * lambda.m.transpose();
  return OmegaMatrix{0.5 * (w + w.transpose())};
}

// Local filtering (A x B) rho (A x B)^dagger, renormalized to unit trace.
inline TwoQubitState slocc_apply(const TwoQubitState& state,
                                 const SloccOperator& a,
                                 const SloccOperator& b) {
  const Mat4c ab = detail::kron2(a.m, b.m);
  Mat4c rho = ab * state.rho * ab.adjoint();
  const double norm = rho.trace().real();
  if (norm <= 1e-12)
    throw invalid_input("filter annihilates the state");
  rho /= norm;
  rho = (0.5 * (rho + rho.adjoint())).eval();
  return TwoQubitState{rho};
}

namespace detail {

// Bloch vector of the conditioning qubit and the properly oriented block.
inline void steering_pieces(const CorrelationMatrix& lambda, SteeredParty who,
                            Vec3d& steered, Vec3d& conditioning, Mat3d& block) {
  if (who == SteeredParty::AliceGivenBob) {
    steered = lambda.r();
    conditioning = lambda.s();
    block = lambda.t();
  } else {
    steered = lambda.s();
    conditioning = lambda.r();
    block = lambda.t().transpose();
  }
}

}  // namespace detail

// Conditional Bloch vector after a projective outcome along e on the
// conditioning qubit, together with the outcome probability.
inline SteeredPoint steered_point(const CorrelationMatrix& lambda,
                                  const Vec3d& e, SteeredParty who) {
  if (std::abs(e.norm() - 1.0) > 1e-12)
    throw invalid_input("measurement direction must be a unit vector");
  Vec3d steered, conditioning;
  Mat3d block;
  detail::steering_pieces(lambda, who, steered, conditioning, block);
  const double denom = 1.0 + conditioning.dot(e);
  if (denom <= 1e-12)
    throw invalid_input("steering is singular along this direction");
  return SteeredPoint{(steered + block * e) / denom, 0.5 * denom};
}

// Closed-form steering ellipsoid of the chosen party.  Degenerate cases
// (segments, disks, points) are reported through vanishing semiaxes.
inline Ellipsoid steering_ellipsoid(const CorrelationMatrix& lambda,
                                    SteeredParty who) {
  Vec3d steered, conditioning;
  Mat3d block;
  detail::steering_pieces(lambda, who, steered, conditioning, block);
  const double c2 = conditioning.squaredNorm();
  if (c2 >= 1.0 - 1e-12)
    throw invalid_input("conditioning qubit is pure: steering degenerates");
  const double d = 1.0 - c2;

  Ellipsoid out;
  out.center = (steered - block * conditioning) / d;
  Mat3d q = (block * block.transpose() - steered * steered.transpose()) / d +
            out.center * out.center.transpose();
  q = (0.5 * (q + q.transpose())).eval();

  Eigen::SelfAdjointEigenSolver<Mat3d> es(q);
  for (int k = 0; k < 3; ++k) {  // descending order
    const double ev = es.eigenvalues()(2 - k);
    out.semiaxes(k) = std::sqrt(std::max(0.0, ev));
    out.axes.col(k) = es.eigenvectors().col(2 - k);
  }
  if (out.axes.determinant() < 0.0) out.axes.col(2) *= -1.0;

  const double abs_det = std::abs(lambda.m.determinant());
  out.volume = (4.0 * M_PI / 3.0) * abs_det / (d * d);
  out.obesity = std::pow(abs_det, 0.25);
  return out;
}

// Both sides of the ellipsoid-volume relation
// V_{A|B}/(1-r^2)^2 and V_{B|A}/(1-s^2)^2; they agree for physical states.
inline std::pair<double, double> volume_relation_check(
    const CorrelationMatrix& lambda) {
  const double r2 = lambda.r().squaredNorm();
  const double s2 = lambda.s().squaredNorm();
  if (r2 >= 1.0 - 1e-12 || s2 >= 1.0 - 1e-12)
    throw invalid_input("conditioning qubit is pure: steering degenerates");
  const double va = steering_ellipsoid(lambda, SteeredParty::AliceGivenBob).volume;
  const double vb = steering_ellipsoid(lambda, SteeredParty::BobGivenAlice).volume;
  const double ra = 1.0 - r2;
  const double rb = 1.0 - s2;
  return {va / (ra * ra), vb / (rb * rb)};
}

// Wootters concurrence from the spin-flip spectrum of
// rho (sigma_2 x sigma_2) rho^* (sigma_2 x sigma_2).
inline ConcurrenceResult concurrence(const TwoQubitState& state) {
  const Mat4c& flip = detail::pauli_pair(2, 2);
  const Mat4c r = state.rho * flip * state.rho.conjugate() * flip;
  Eigen::ComplexEigenSolver<Mat4c> es(r, false);
  if (es.info() != Eigen::Success)
    throw numerical_failure("spin-flip spectrum did not converge");
  // Exact zeros of the spin-flip product (rank-deficient states) come back
  // from the solver as noise around zero; the square root would turn that
  // into ~1e-8 phantom contributions, so clip below the solver floor.
  double top = 0.0;
  for (int k = 0; k < 4; ++k)
    top = std::max(top, std::abs(es.eigenvalues()(k).real()));
  const double floor = 1e-14 * top;
  ConcurrenceResult out;
  for (int k = 0; k < 4; ++k) {
    const double ev = es.eigenvalues()(k).real();
    out.mu[k] = ev > floor ? std::sqrt(ev) : 0.0;
  }
  std::sort(out.mu.begin(), out.mu.end(), std::greater<double>());
  out.value = std::max(0.0, out.mu[0] - out.mu[1] - out.mu[2] - out.mu[3]);
  return out;
}

// Obesity (fourth root of |det Lambda|), concurrence, and their ratio.
// The ratio is invariant under invertible local filtering.
inline ObesityConcurrenceReport obesity_concurrence_report(
    const TwoQubitState& state) {
  ObesityConcurrenceReport out;
  const CorrelationMatrix lambda = lambda_from_rho(state);
  out.obesity = std::pow(std::abs(lambda.m.determinant()), 0.25);
  out.concurrence = concurrence(state).value;
  if (out.concurrence > out.obesity + 1e-10)
    throw numerical_failure("concurrence exceeded the obesity bound");
  out.ratio = out.concurrence > 0.0
                  ? out.obesity / out.concurrence
                  : std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace qsteer
