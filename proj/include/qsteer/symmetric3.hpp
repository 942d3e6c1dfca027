#pragma once

// Pure permutation-symmetric three-qubit states: constituent-spinor
// construction and recovery, the one- and three-parameter entangled families,
// reduced two-qubit extraction, closed-form correlation data, the steering
// volume monogamy relation, and pairwise concurrence in closed form.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <vector>

#include "qsteer/errors.hpp"
#include "qsteer/linalg.hpp"
#include "qsteer/twoqubit.hpp"

namespace qsteer {

/// Computational-basis amplitudes of a three-qubit state; entry index is
/// 4*q1 + 2*q2 + q3.
using Vec8c = Eigen::Matrix<cplx, 8, 1>;

/// Number of distinct constituent spinors: one (separable), two, or three.
enum class SloccClass { D31, D32, D33 };

/// Parameters retained by the family constructors. The three-distinct family
/// is N(|0>^3 + y e^{i alpha}|b>^3) with |b> the polar-angle-beta spinor; the
/// two-distinct family stores (0, 0, beta).
struct FamilyParameters {
  double y = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
};

struct SymmetricThreeQubitState {
  Vec8c amplitudes = Vec8c::Zero();
  std::array<Spinor, 3> spinors{};
  SloccClass slocc_class = SloccClass::D31;
  /// Normalization factor of the constructor's defining combination (the
  /// permutation sum for majorana_state, the family superposition for the
  /// parametric builders).
  double norm_factor = 1.0;
  /// Smallest distance of any pairwise spinor overlap from the
  /// identical-direction threshold; small values flag fragile class labels.
  double classification_margin = 0.0;
  std::optional<FamilyParameters> parameters;
};

/// Largest amplitude change under any of the six qubit permutations.
inline double permutation_symmetry_deviation(const Vec8c& a) {
  static constexpr int kPerms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                       {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  double dev = 0.0;
  for (const auto& p : kPerms) {
    for (int i = 0; i < 8; ++i) {
      const int q[3] = {(i >> 2) & 1, (i >> 1) & 1, i & 1};
      const int j = 4 * q[p[0]] + 2 * q[p[1]] + q[p[2]];
      dev = std::max(dev, std::abs(a(j) - a(i)));
    }
  }
  return dev;
}

/// |<phi|psi>|^2 — the global-phase-free comparison for pure states.
inline double state_fidelity(const SymmetricThreeQubitState& a,
                             const SymmetricThreeQubitState& b) {
  const cplx o = a.amplitudes.dot(b.amplitudes);
  return std::norm(o);
}

namespace detail {

inline constexpr double kIdenticalSpinorThreshold = 1.0 - 1e-10;

struct SpinorClassification {
  SloccClass cls;
  double margin;
};

/// Counts equivalence classes of the three spinors under the
/// identical-direction threshold (transitive closure of pairwise matches).
inline SpinorClassification classify_spinors(const std::array<Spinor, 3>& s) {
  const double thr = kIdenticalSpinorThreshold;
  const double o[3] = {spinor_overlap(s[0], s[1]), spinor_overlap(s[0], s[2]),
                       spinor_overlap(s[1], s[2])};
  int parent[3] = {0, 1, 2};
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x];
    return x;
  };
  if (o[0] >= thr) parent[find(0)] = find(1);
  if (o[1] >= thr) parent[find(0)] = find(2);
  if (o[2] >= thr) parent[find(1)] = find(2);
  bool root[3] = {false, false, false};
  root[find(0)] = root[find(1)] = root[find(2)] = true;
  const int classes = int(root[0]) + int(root[1]) + int(root[2]);
  const double margin = std::min(
      {std::abs(o[0] - thr), std::abs(o[1] - thr), std::abs(o[2] - thr)});
  const SloccClass cls = classes == 1   ? SloccClass::D31
                         : classes == 2 ? SloccClass::D32
                                        : SloccClass::D33;
  return {cls, margin};
}

/// Constituent spinors of a symmetric amplitude vector. Works through the
/// cubic whose coefficients come from the excitation-number (Dicke) basis:
/// p(z) = d0 z^3 - sqrt(3) d1 z^2 + sqrt(3) d2 z - d3, each root z giving the
/// direction |0> + z|1>; missing leading coefficients are roots at infinity
/// and map to |1>. Finite roots are sorted by (Re, Im) for determinism.
inline std::array<Spinor, 3> roots_from_amplitudes(const Vec8c& a) {
  const double s3 = std::sqrt(3.0);
  const cplx d0 = a(0);
  const cplx d1 = (a(1) + a(2) + a(4)) / s3;
  const cplx d2 = (a(3) + a(5) + a(6)) / s3;
  const cplx d3 = a(7);
  // coeff[m] multiplies z^m
  const std::array<cplx, 4> coeff = {-d3, s3 * d2, -s3 * d1, d0};
  double cmax = 0.0;
  for (const cplx& c : coeff) cmax = std::max(cmax, std::abs(c));
  if (!(cmax > 0.0))
    throw invalid_input("majorana_roots: zero amplitude vector");
  int deg = 3;
  while (deg > 0 && std::abs(coeff[deg]) <= 1e-12 * cmax) --deg;

  std::vector<cplx> roots;
  if (deg > 0) {
    Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(deg, deg);
    for (int m = 0; m < deg; ++m) comp(m, deg - 1) = -coeff[m] / coeff[deg];
    for (int m = 1; m < deg; ++m) comp(m, m - 1) = 1.0;
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(comp, false);
    if (es.info() != Eigen::Success)
      throw numerical_failure("majorana_roots: root solver did not converge");
    for (int k = 0; k < deg; ++k) roots.push_back(es.eigenvalues()(k));
    std::sort(roots.begin(), roots.end(), [](const cplx& x, const cplx& y) {
      if (x.real() != y.real()) return x.real() < y.real();
      return x.imag() < y.imag();
    });
  }

  std::array<Spinor, 3> out{};
  int k = 0;
  for (const cplx& z : roots) {
    Vec2c v;
    v << 1.0, z;
    out[k++] = Spinor::from_vector(v);
  }
  for (; k < 3; ++k) out[k] = Spinor::from_angles(0.0, M_PI);  // |1>
  return out;
}

inline void check_family_angles(const char* who, double y, double beta,
                                bool with_y) {
  if (with_y && !(y > 0.0 && y <= 1.0))
    throw invalid_input(std::string(who) + ": y must lie in (0, 1]");
  if (!(beta > 0.0 && beta <= M_PI + 1e-12))
    throw invalid_input(std::string(who) + ": beta must lie in (0, pi]");
}

}  // namespace detail

/// Normalized sum of |s1 s2 s3> over all six qubit orderings. The SLOCC class
/// is the number of distinct directions among the inputs.
inline SymmetricThreeQubitState majorana_state(const std::array<Spinor, 3>& s) {
  const std::array<Vec2c, 3> v = {s[0].vector(), s[1].vector(), s[2].vector()};
  static constexpr int kPerms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                       {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  Vec8c acc = Vec8c::Zero();
  for (const auto& p : kPerms) {
    for (int i = 0; i < 8; ++i) {
      const int q1 = (i >> 2) & 1, q2 = (i >> 1) & 1, q3 = i & 1;
      acc(i) += v[p[0]](q1) * v[p[1]](q2) * v[p[2]](q3);
    }
  }
  const double n = acc.norm();
  // The permutation sum of qubit product states never cancels completely.
  if (!(n > 1e-12))
    throw numerical_failure("majorana_state: symmetrized combination vanished");
  SymmetricThreeQubitState st;
  st.amplitudes = acc / n;
  st.norm_factor = 1.0 / n;
  st.spinors = s;
  const auto cl = detail::classify_spinors(s);
  st.slocc_class = cl.cls;
  st.classification_margin = cl.margin;
  return st;
}

/// Inverse of majorana_state up to global phase and spinor ordering.
inline std::array<Spinor, 3> majorana_roots(
    const SymmetricThreeQubitState& st) {
  if (permutation_symmetry_deviation(st.amplitudes) > 1e-8)
    throw invalid_input("majorana_roots: state is not permutation symmetric");
  return detail::roots_from_amplitudes(st.amplitudes);
}

/// One-parameter two-distinct family
/// (sqrt(3) cos(beta/2)|000> + sin(beta/2)|W>) / sqrt(2 + cos beta).
inline SymmetricThreeQubitState psi_32(double beta) {
  detail::check_family_angles("psi_32", 0.0, beta, false);
  const std::array<Spinor, 3> sp = {Spinor{}, Spinor{},
                                    Spinor::from_angles(0.0, beta)};
  SymmetricThreeQubitState st = majorana_state(sp);
  if (st.slocc_class != SloccClass::D32)
    throw invalid_input(
        "psi_32: directions collapse to a single spinor (beta too small)");
  st.norm_factor = 1.0 / std::sqrt(2.0 + std::cos(beta));
  st.parameters = FamilyParameters{0.0, 0.0, beta};
  return st;
}

/// Three-parameter three-distinct family N(|0>^3 + y e^{i alpha}|b>^3) with
/// |b> = cos(beta/2)|0> + sin(beta/2)|1>.
inline SymmetricThreeQubitState psi_33(double y, double alpha, double beta) {
  detail::check_family_angles("psi_33", y, beta, true);
  const Vec2c b = Spinor::from_angles(0.0, beta).vector();
  const cplx w = y * std::exp(cplx(0.0, alpha));
  Vec8c acc = Vec8c::Zero();
  acc(0) = 1.0;
  for (int i = 0; i < 8; ++i)
    acc(i) += w * b((i >> 2) & 1) * b((i >> 1) & 1) * b(i & 1);
  const double n = acc.norm();
  if (!(n > 1e-12))
    throw invalid_input("psi_33: defining superposition vanished");
  SymmetricThreeQubitState st;
  st.amplitudes = acc / n;
  st.norm_factor = 1.0 / n;
  st.spinors = detail::roots_from_amplitudes(st.amplitudes);
  const auto cl = detail::classify_spinors(st.spinors);
  st.slocc_class = cl.cls;
  st.classification_margin = cl.margin;
  if (st.slocc_class != SloccClass::D33)
    throw invalid_input(
        "psi_33: parameters yield coincident constituent spinors");
  st.parameters = FamilyParameters{y, alpha, beta};
  return st;
}

/// Partial trace over one qubit. All three single-qubit traces are computed
/// and must agree, which pins down the symmetric-state contract.
inline TwoQubitState reduced_two_qubit(const SymmetricThreeQubitState& st) {
  const Vec8c& a = st.amplitudes;
  std::array<Mat4c, 3> rho;
  for (auto& r : rho) r.setZero();
  for (int i = 0; i < 8; ++i) {
    const int qi[3] = {(i >> 2) & 1, (i >> 1) & 1, i & 1};
    for (int j = 0; j < 8; ++j) {
      const int qj[3] = {(j >> 2) & 1, (j >> 1) & 1, j & 1};
      const cplx w = a(i) * std::conj(a(j));
      if (qi[0] == qj[0]) rho[0](2 * qi[1] + qi[2], 2 * qj[1] + qj[2]) += w;
      if (qi[1] == qj[1]) rho[1](2 * qi[0] + qi[2], 2 * qj[0] + qj[2]) += w;
      if (qi[2] == qj[2]) rho[2](2 * qi[0] + qi[1], 2 * qj[0] + qj[1]) += w;
    }
  }
  const double dev =
      std::max((rho[0] - rho[1]).cwiseAbs().maxCoeff(),
               std::max((rho[0] - rho[2]).cwiseAbs().maxCoeff(),
                        (rho[1] - rho[2]).cwiseAbs().maxCoeff()));
  if (dev > 1e-8)
    throw invalid_input(
        "reduced_two_qubit: partial traces disagree; the state is not "
        "permutation symmetric");
  return TwoQubitState::from_matrix(rho[0]);
}

/// Closed-form entries of the reduced matrix and correlation-operator
/// spectrum of the two-distinct family.
struct ClosedFormCoefficients32 {
  double a32 = 0.0;  // (1 - cos b) / (6 (2 + cos b))
  double b32 = 0.0;  // sin b / (2 (2 + cos b))
  double u = 0.0;    // ((1 - cos b) / (3 (2 + cos b)))^2, fourfold eigenvalue
};

inline ClosedFormCoefficients32 closed_form_coefficients32(double beta) {
  detail::check_family_angles("closed_form_coefficients32", 0.0, beta, false);
  const double cb = std::cos(beta);
  const double den = 2.0 + cb;
  ClosedFormCoefficients32 c;
  c.a32 = (1.0 - cb) / (6.0 * den);
  c.b32 = std::sin(beta) / (2.0 * den);
  const double q = (1.0 - cb) / (3.0 * den);
  c.u = q * q;
  return c;
}

/// Closed-form entries of the reduced matrix and correlation-operator
/// spectrum of the three-distinct family.
struct ClosedFormCoefficients33 {
  cplx amp_a, amp_b, amp_c, amp_d, amp_e, amp_f;
  double script_a = 0.0;  // 1 / (1 + y^2 + 2 y cos(alpha) cos^3(beta/2))
  double script_b = 0.0;  // y^2 (1 - cos beta)^2 script_a^2 / 2
  double lambda0 = 0.0;   // 2 script_b, doubly degenerate
  double lambda1 = 0.0;   // script_b (1 + cos beta), doubly degenerate
};

inline ClosedFormCoefficients33 closed_form_coefficients33(double y,
                                                           double alpha,
                                                           double beta) {
  detail::check_family_angles("closed_form_coefficients33", y, beta, true);
  const double c = std::cos(beta / 2.0), s = std::sin(beta / 2.0);
  const double cb = std::cos(beta);
  const double ca = std::cos(alpha);
  const double sa = 1.0 / (1.0 + y * y + 2.0 * y * ca * c * c * c);
  const cplx em = std::exp(cplx(0.0, -alpha));
  ClosedFormCoefficients33 k;
  k.script_a = sa;
  k.script_b = 0.5 * y * y * (1.0 - cb) * (1.0 - cb) * sa * sa;
  k.lambda0 = 2.0 * k.script_b;
  k.lambda1 = k.script_b * (1.0 + cb);
  k.amp_a = sa * (1.0 + y * y * c * c * c * c + 2.0 * y * ca * c * c * c);
  k.amp_b = sa * y * c * c * s * (em + y * c);
  k.amp_c = sa * y * s * s * c * (em + y * c);
  k.amp_d = sa * y * y * s * s * c * c;
  k.amp_e = sa * y * y * s * s * s * c;
  k.amp_f = cplx(1.0, 0.0) - k.amp_a - 2.0 * k.amp_d;
  return k;
}

/// Explicit correlation matrix of the two-distinct family; symmetric for all
/// beta.
inline CorrelationMatrix closed_form_lambda32(double beta) {
  detail::check_family_angles("closed_form_lambda32", 0.0, beta, false);
  const double cb = std::cos(beta);
  const double den = 2.0 + cb;
  const double p = std::sin(beta) / den;
  const double q = (1.0 - cb) / (3.0 * den);
  const double r = (5.0 + 4.0 * cb) / (3.0 * den);
  const double w = (4.0 + 5.0 * cb) / (3.0 * den);
  Mat4d m;
  m << 1.0, p, 0.0, r,  //
      p, q, 0.0, p,     //
      0.0, 0.0, q, 0.0,  //
      r, p, 0.0, w;
  return CorrelationMatrix::from_matrix(m);
}

/// Explicit correlation matrix of the three-distinct family; symmetric for
/// all parameters.
inline CorrelationMatrix closed_form_lambda33(double y, double alpha,
                                              double beta) {
  detail::check_family_angles("closed_form_lambda33", y, beta, true);
  const double c = std::cos(beta / 2.0), s = std::sin(beta / 2.0);
  const double cb = std::cos(beta), sb = std::sin(beta);
  const double ca = std::cos(alpha), san = std::sin(alpha);
  const double a = 1.0 / (1.0 + y * y + 2.0 * y * ca * c * c * c);
  const double l01 = a * y * sb * (y + ca * c);
  const double l02 = a * y * san * sb * c;
  const double l03 = a * (1.0 + 2.0 * y * ca * c * c * c + y * y * cb);
  const double l11 = a * y * sb * s * (ca + 2.0 * y * c);
  const double l12 = a * y * san * sb * s;
  const double l13 = a * y * sb * (ca * c + y * cb);
  const double l22 = -a * y * ca * sb * s;
  const double l23 = l02;
  const double l33 =
      0.5 * a * (2.0 + y * y + 4.0 * y * ca * c * c * c +
                 y * y * std::cos(2.0 * beta));
  Mat4d m;
  m << 1.0, l01, l02, l03,  //
      l01, l11, l12, l13,   //
      l02, l12, l22, l23,   //
      l03, l13, l23, l33;
  return CorrelationMatrix::from_matrix(m);
}

/// Closed-form Lorentz congruence that diagonalizes the squared correlation
/// operator of the three-distinct family. Conjugating Omega = Lambda G
/// Lambda^T as L^T Omega L yields
/// 2 script_b * diag(1, -cos^2(beta/2), -cos^2(beta/2), -1).
inline Mat4d explicit_lorentz_33(double beta) {
  if (!(beta > 0.0 && beta < M_PI))
    throw invalid_input(
        "explicit_lorentz_33: beta must lie strictly inside (0, pi); the "
        "limiting state belongs to the degenerate-segment branch");
  const double c = std::cos(beta), s = std::sin(beta);
  Mat4d l;
  l << (3.0 + c) / (2.0 * s), (1.0 + c) / s, 0.0, (1.0 - c) / (2.0 * s),  //
      -1.0, -1.0, 0.0, -1.0,                                             //
      0.0, 0.0, -1.0, 0.0,                                               //
      -(1.0 + 3.0 * c) / (2.0 * s), -(1.0 + c) / s, 0.0,
      (1.0 - c) / (2.0 * s);
  return l;
}

/// Steering-volume monogamy data for the two parties sharing qubit B. For a
/// symmetric state both reduced pairs coincide, so the two volumes are equal
/// and the left-hand side is twice one square root.
struct MonogamyReport {
  double v_ab = 0.0;
  double v_cb = 0.0;
  double lhs = 0.0;    // sqrt(v_ab) + sqrt(v_cb)
  double bound = 0.0;  // sqrt(4 pi / 3)
  bool saturated = false;
};

inline MonogamyReport monogamy_check(const SymmetricThreeQubitState& st) {
  if (st.slocc_class == SloccClass::D31)
    throw invalid_input(
        "monogamy_check: single-direction state is separable; steering "
        "volumes vanish trivially");
  const CorrelationMatrix lam = lambda_from_rho(reduced_two_qubit(st));
  const double v = steering_ellipsoid(lam, SteeredParty::AliceGivenBob).volume;
  MonogamyReport rep;
  rep.v_ab = v;
  rep.v_cb = v;
  rep.lhs = std::sqrt(rep.v_ab) + std::sqrt(rep.v_cb);
  rep.bound = std::sqrt(4.0 * M_PI / 3.0);
  // the flag tolerates the volume-conditioning noise that grows near the
  // two-spinor family's separable boundary (beta -> 0)
  rep.saturated = std::abs(rep.lhs - rep.bound) <= 1e-8 * (1.0 + rep.bound);
  return rep;
}

/// Pairwise concurrence of the reduced two-qubit state in closed form. The
/// two-distinct value depends only on the overlap between the repeated and
/// the lone direction (a local-unitary invariant), so it covers every state
/// of that class; the three-distinct value needs the stored family
/// parameters.
inline double closed_form_concurrence(const SymmetricThreeQubitState& st) {
  if (st.slocc_class == SloccClass::D31) return 0.0;
  if (st.slocc_class == SloccClass::D32) {
    const double o01 = spinor_overlap(st.spinors[0], st.spinors[1]);
    const double o02 = spinor_overlap(st.spinors[0], st.spinors[2]);
    const double o12 = spinor_overlap(st.spinors[1], st.spinors[2]);
    double half;  // |<repeated | lone>| = cos(beta / 2)
    if (o01 >= o02 && o01 >= o12)
      half = 0.5 * (o02 + o12);  // repeated pair (0,1), lone 2
    else if (o02 >= o01 && o02 >= o12)
      half = 0.5 * (o01 + o12);  // repeated pair (0,2), lone 1
    else
      half = 0.5 * (o01 + o02);  // repeated pair (1,2), lone 0
    half = std::min(std::max(half, 0.0), 1.0);
    const double cb = 2.0 * half * half - 1.0;
    return (1.0 - cb) / (3.0 * (2.0 + cb));
  }
  if (!st.parameters)
    throw invalid_input(
        "closed_form_concurrence: the three-distinct closed form needs the "
        "family parameters; construct the state with the family builder");
  const FamilyParameters& p = *st.parameters;
  const double c = std::cos(p.beta / 2.0);
  return p.y * std::sin(p.beta) * std::sin(p.beta / 2.0) /
         (1.0 + p.y * p.y + 2.0 * p.y * std::cos(p.alpha) * c * c * c);
}

}  // namespace qsteer
