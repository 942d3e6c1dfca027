#pragma once

// Reporting layer: assemble classification results into a serializable
// record, render it as aligned text or JSON with a fixed field order and
// fixed float formatting (15 significant digits), and export plot-ready
// artifacts (triangulated ellipsoid meshes, monogamy scan tables).

#include <array>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "qsteer/canonical.hpp"
#include "qsteer/errors.hpp"
#include "qsteer/symmetric3.hpp"
#include "qsteer/twoqubit.hpp"

namespace qsteer {

struct MonogamySummary {
  double lhs;
  double bound;
  bool saturated;
};

struct Report {
  std::string input_kind;  // "family" | "preset" | "rho-file"
  std::string input_echo;  // flag-style echo of the request
  std::optional<Mat4c> rho_echo;  // present for matrix inputs
  std::string slocc_class;
  std::string canonical_type;  // "TypeI" | "TypeII" | "degenerate"
  std::array<double, 4> eigenvalues{};
  std::optional<Mat4d> canonical_lambda;
  Ellipsoid ellipsoid;
  double concurrence = 0.0;
  std::optional<MonogamySummary> monogamy;
};

namespace detail {

inline std::string fmt_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

inline std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

}  // namespace detail

// Steering geometry with a graceful answer for a pure conditioning qubit:
// conditioning on a party in a pure state cannot move the partner, so the
// steered set is the single point at the partner's Bloch vector.
inline Ellipsoid steering_geometry(const CorrelationMatrix& lambda,
                                   SteeredParty who) {
  Vec3d steered, conditioning;
  Mat3d block;
  detail::steering_pieces(lambda, who, steered, conditioning, block);
  if (conditioning.squaredNorm() >= 1.0 - 1e-12) {
    Ellipsoid out;
    out.center = steered;
    out.semiaxes = Vec3d::Zero();
    out.axes = Mat3d::Identity();
    out.volume = 0.0;
    out.obesity = 0.0;
    return out;
  }
  return steering_ellipsoid(lambda, who);
}

// Report for a pure symmetric three-qubit state (family or preset input).
inline Report classify_symmetric(const SymmetricThreeQubitState& state,
                                 const std::string& input_kind,
                                 const std::string& input_echo) {
  Report rep;
  rep.input_kind = input_kind;
  rep.input_echo = input_echo;

  const TwoQubitState pair = reduced_two_qubit(state);
  const CorrelationMatrix lambda = lambda_from_rho(pair);
  rep.ellipsoid = steering_geometry(lambda, SteeredParty::AliceGivenBob);
  rep.concurrence = concurrence(pair).value;

  switch (state.slocc_class) {
    case SloccClass::D31:
      rep.slocc_class = "D31";
      break;
    case SloccClass::D32:
      rep.slocc_class = "D32";
      break;
    case SloccClass::D33:
      // the orbit boundary (vanishing correlation determinant, segment
      // geometry) is flagged explicitly
      rep.slocc_class =
          rep.ellipsoid.obesity <= 1e-6 ? "D33-degenerate" : "D33";
      break;
  }

  if (state.slocc_class == SloccClass::D31) {
    // the congruence matrix vanishes identically: no nondegenerate normal
    // form exists, and both volume monogamy sides collapse to zero
    rep.canonical_type = "degenerate";
    rep.eigenvalues = {0.0, 0.0, 0.0, 0.0};
  } else {
    const CanonicalDecomposition dec = canonicalize(lambda);
    rep.canonical_type =
        dec.kind == CanonicalKind::TypeI ? "TypeI" : "TypeII";
    rep.eigenvalues = dec.eigenvalues;
    rep.canonical_lambda = dec.canonical_lambda.m;
    const MonogamyReport mono = monogamy_check(state);
    rep.monogamy = MonogamySummary{mono.lhs, mono.bound, mono.saturated};
  }
  return rep;
}

// Report for a raw two-qubit density matrix input.
inline Report classify_two_qubit(const TwoQubitState& state,
                                 const std::string& input_echo) {
  Report rep;
  rep.input_kind = "rho-file";
  rep.input_echo = input_echo;
  rep.rho_echo = state.rho;

  const CorrelationMatrix lambda = lambda_from_rho(state);
  const CanonicalDecomposition dec = canonicalize(lambda);
  rep.canonical_type = dec.kind == CanonicalKind::TypeI ? "TypeI" : "TypeII";
  rep.eigenvalues = dec.eigenvalues;
  rep.canonical_lambda = dec.canonical_lambda.m;
  rep.ellipsoid = steering_geometry(lambda, SteeredParty::AliceGivenBob);
  rep.concurrence = concurrence(state).value;
  rep.slocc_class = rep.concurrence <= 1e-12 ? "separable" : "entangled";
  return rep;
}

inline std::string render_report_text(const Report& rep) {
  using detail::fmt_double;
  std::string out;
  out += "input:              " + rep.input_echo + "\n";
  out += "slocc-class:        " + rep.slocc_class + "\n";
  out += "canonical-type:     " + rep.canonical_type + "\n";
  out += "eigenvalues:       ";
  for (double v : rep.eigenvalues) out += " " + fmt_double(v);
  out += "\n";
  if (rep.canonical_lambda) {
    out += "canonical-lambda:\n";
    for (int i = 0; i < 4; ++i) {
      out += " ";
      for (int j = 0; j < 4; ++j)
        out += " " + fmt_double((*rep.canonical_lambda)(i, j));
      out += "\n";
    }
  } else {
    out += "canonical-lambda:   none (degenerate)\n";
  }
  out += "ellipsoid-center:  ";
  for (int i = 0; i < 3; ++i) out += " " + fmt_double(rep.ellipsoid.center(i));
  out += "\nellipsoid-semiaxes:";
  for (int i = 0; i < 3; ++i)
    out += " " + fmt_double(rep.ellipsoid.semiaxes(i));
  out += "\nellipsoid-volume:   " + fmt_double(rep.ellipsoid.volume) + "\n";
  out += "obesity:            " + fmt_double(rep.ellipsoid.obesity) + "\n";
  out += "concurrence:        " + fmt_double(rep.concurrence) + "\n";
  if (rep.monogamy) {
    out += "monogamy-lhs:       " + fmt_double(rep.monogamy->lhs) + "\n";
    out += "monogamy-bound:     " + fmt_double(rep.monogamy->bound) + "\n";
    out += std::string("monogamy-saturated: ") +
           (rep.monogamy->saturated ? "true" : "false") + "\n";
  } else {
    out += "monogamy:           n/a\n";
  }
  return out;
}

inline std::string render_report_json(const Report& rep) {
  using detail::fmt_double;
  using detail::json_escape;
  std::string out = "{\n";
  out += "  \"input\": {\"kind\": \"" + json_escape(rep.input_kind) +
         "\", \"echo\": \"" + json_escape(rep.input_echo) + "\", \"rho\": ";
  if (rep.rho_echo) {
    out += "[";
    for (int i = 0; i < 4; ++i) {
      out += i ? ", [" : "[";
      for (int j = 0; j < 4; ++j) {
        const cplx v = (*rep.rho_echo)(i, j);
        out += j ? ", [" : "[";
        out += fmt_double(v.real()) + ", " + fmt_double(v.imag()) + "]";
      }
      out += "]";
    }
    out += "]";
  } else {
    out += "null";
  }
  out += "},\n";
  out += "  \"slocc_class\": \"" + json_escape(rep.slocc_class) + "\",\n";
  out += "  \"canonical_type\": \"" + json_escape(rep.canonical_type) +
         "\",\n";
  out += "  \"eigenvalues\": [";
  for (int i = 0; i < 4; ++i)
    out += (i ? ", " : "") + fmt_double(rep.eigenvalues[i]);
  out += "],\n";
  out += "  \"canonical_lambda\": ";
  if (rep.canonical_lambda) {
    out += "[";
    for (int i = 0; i < 4; ++i) {
      out += i ? ", [" : "[";
      for (int j = 0; j < 4; ++j)
        out += (j ? ", " : "") + fmt_double((*rep.canonical_lambda)(i, j));
      out += "]";
    }
    out += "]";
  } else {
    out += "null";
  }
  out += ",\n";
  out += "  \"ellipsoid\": {\"center\": [";
  for (int i = 0; i < 3; ++i)
    out += (i ? ", " : "") + fmt_double(rep.ellipsoid.center(i));
  out += "], \"semiaxes\": [";
  for (int i = 0; i < 3; ++i)
    out += (i ? ", " : "") + fmt_double(rep.ellipsoid.semiaxes(i));
  out += "], \"volume\": " + fmt_double(rep.ellipsoid.volume) +
         ", \"obesity\": " + fmt_double(rep.ellipsoid.obesity) + "},\n";
  out += "  \"concurrence\": " + fmt_double(rep.concurrence) + ",\n";
  out += "  \"monogamy\": ";
  if (rep.monogamy) {
    out += "{\"lhs\": " + fmt_double(rep.monogamy->lhs) +
           ", \"bound\": " + fmt_double(rep.monogamy->bound) +
           ", \"saturated\": " +
           (rep.monogamy->saturated ? "true" : "false") + "}";
  } else {
    out += "null";
  }
  out += "\n}\n";
  return out;
}

namespace detail {

inline const char* geometry_name(const Vec3d& semiaxes, double tol) {
  int zeros = 0;
  for (int j = 0; j < 3; ++j)
    if (semiaxes(j) <= tol) ++zeros;
  switch (zeros) {
    case 0:
      return "ellipsoid";
    case 1:
      return "disk";
    case 2:
      return "segment";
    default:
      return "point";
  }
}

inline void obj_vertex(std::string& out, const Vec3d& p) {
  out += "v " + fmt_double(p(0)) + " " + fmt_double(p(1)) + " " +
         fmt_double(p(2)) + "\n";
}

// Closed polyline circle of `segments` points around `axis_a`/`axis_b`,
// appended as vertices plus one OBJ line element.
inline void obj_circle(std::string& out, int& next_index, const Vec3d& center,
                       const Vec3d& axis_a, const Vec3d& axis_b,
                       int segments) {
  const int first = next_index;
  for (int j = 0; j < segments; ++j) {
    const double phi = 2.0 * M_PI * j / segments;
    obj_vertex(out, center + std::cos(phi) * axis_a + std::sin(phi) * axis_b);
  }
  out += "l";
  for (int j = 0; j < segments; ++j) out += " " + std::to_string(first + j);
  out += " " + std::to_string(first) + "\n";
  next_index += segments;
}

}  // namespace detail

// ASCII OBJ export of the steering surface with the unit Bloch sphere as a
// wireframe of three great circles.  Degenerate geometry (disk, segment,
// point) is emitted as a polyline/point element and flagged in the header.
inline std::string render_ellipsoid_mesh(const Ellipsoid& ell,
                                         int subdivisions) {
  if (subdivisions < 3)
    throw invalid_input("mesh needs at least 3 subdivisions");
  using detail::fmt_double;
  const double tol = 1e-9;
  const char* kind = detail::geometry_name(ell.semiaxes, tol);

  std::string out;
  out += "# steering ellipsoid mesh\n";
  out += std::string("# geometry: ") + kind + "\n";
  out += "# center: " + fmt_double(ell.center(0)) + " " +
         fmt_double(ell.center(1)) + " " + fmt_double(ell.center(2)) + "\n";
  out += "# semiaxes: " + fmt_double(ell.semiaxes(0)) + " " +
         fmt_double(ell.semiaxes(1)) + " " + fmt_double(ell.semiaxes(2)) +
         "\n";

  int next_index = 1;
  const std::string kind_s = kind;
  if (kind_s == "ellipsoid") {
    const int rows = subdivisions;
    const int cols = 2 * subdivisions;
    for (int i = 0; i <= rows; ++i) {
      const double theta = M_PI * i / rows;
      for (int j = 0; j < cols; ++j) {
        const double phi = 2.0 * M_PI * j / cols;
        const Vec3d unit(std::sin(theta) * std::cos(phi),
                         std::sin(theta) * std::sin(phi), std::cos(theta));
        Vec3d p = ell.center;
        for (int k = 0; k < 3; ++k)
          p += ell.semiaxes(k) * unit(k) * ell.axes.col(k);
        detail::obj_vertex(out, p);
      }
    }
    const auto at = [&](int i, int j) {
      return next_index + i * cols + (j % cols);
    };
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) {
        const int a = at(i, j), b = at(i + 1, j), c = at(i + 1, j + 1),
                  d = at(i, j + 1);
        // skip the triangle that touches two copies of a pole vertex
        if (i > 0)
          out += "f " + std::to_string(a) + " " + std::to_string(c) + " " +
                 std::to_string(d) + "\n";
        if (i + 1 < rows)
          out += "f " + std::to_string(a) + " " + std::to_string(b) + " " +
                 std::to_string(c) + "\n";
      }
    next_index += (rows + 1) * cols;
  } else if (kind_s == "disk") {
    detail::obj_circle(out, next_index, ell.center,
                       ell.semiaxes(0) * ell.axes.col(0),
                       ell.semiaxes(1) * ell.axes.col(1), 8 * subdivisions);
  } else if (kind_s == "segment") {
    detail::obj_vertex(out,
                       ell.center + ell.semiaxes(0) * ell.axes.col(0));
    detail::obj_vertex(out,
                       ell.center - ell.semiaxes(0) * ell.axes.col(0));
    out += "l " + std::to_string(next_index) + " " +
           std::to_string(next_index + 1) + "\n";
    next_index += 2;
  } else {
    detail::obj_vertex(out, ell.center);
    out += "p " + std::to_string(next_index) + "\n";
    next_index += 1;
  }

  // unit Bloch sphere wireframe: three great circles
  out += "# bloch sphere wireframe\n";
  const int segs = 64;
  detail::obj_circle(out, next_index, Vec3d::Zero(), Vec3d::UnitX(),
                     Vec3d::UnitY(), segs);
  detail::obj_circle(out, next_index, Vec3d::Zero(), Vec3d::UnitY(),
                     Vec3d::UnitZ(), segs);
  detail::obj_circle(out, next_index, Vec3d::Zero(), Vec3d::UnitZ(),
                     Vec3d::UnitX(), segs);
  return out;
}

struct MonogamyScanRow {
  double y;
  double alpha;
  double beta;
  double value;  // sqrt(3 V / pi) of the steered ellipsoid
  bool saturated;
};

// One scan row per beta for the two-distinct-spinor family; the y and alpha
// columns do not apply and are emitted as zero.
inline std::vector<MonogamyScanRow> monogamy_scan_rows_d32(
    const std::vector<double>& betas) {
  std::vector<MonogamyScanRow> rows;
  rows.reserve(betas.size());
  for (double beta : betas) {
    const MonogamyReport mono = monogamy_check(psi_32(beta));
    rows.push_back({0.0, 0.0, beta, std::sqrt(3.0 * mono.v_ab / M_PI),
                    mono.saturated});
  }
  return rows;
}

inline std::vector<MonogamyScanRow> monogamy_scan_rows_d33(
    double y, double alpha, const std::vector<double>& betas) {
  std::vector<MonogamyScanRow> rows;
  rows.reserve(betas.size());
  for (double beta : betas) {
    const MonogamyReport mono = monogamy_check(psi_33(y, alpha, beta));
    rows.push_back({y, alpha, beta, std::sqrt(3.0 * mono.v_ab / M_PI),
                    mono.saturated});
  }
  return rows;
}

inline std::string render_monogamy_csv(
    const std::vector<MonogamyScanRow>& rows) {
  using detail::fmt_double;
  std::string out = "y,alpha,beta,sqrt3V_over_pi,saturated\n";
  for (const auto& row : rows) {
    out += fmt_double(row.y) + "," + fmt_double(row.alpha) + "," +
           fmt_double(row.beta) + "," + fmt_double(row.value) + "," +
           (row.saturated ? "true" : "false") + "\n";
  }
  return out;
}

}  // namespace qsteer
