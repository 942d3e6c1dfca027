// Command-line front end for the steering-ellipsoid toolkit.
//
//   qsteer classify       --family d32 --beta 1.5708 [--format json]
//   qsteer ellipsoid-mesh --preset ghz [--subdivisions 24] [--output f.obj]
//   qsteer monogamy-scan  --family d33 [--beta-min a --beta-max b --steps n]
//
// Exit codes: 0 success, 2 invalid input, 3 numerical failure.

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qsteer/qsteer.hpp"

namespace {

using qsteer::invalid_input;

struct ResolvedState {
  std::optional<qsteer::SymmetricThreeQubitState> sym;
  std::optional<qsteer::TwoQubitState> pair;
  std::string kind;
  std::string echo;
};

qsteer::TwoQubitState load_rho(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw invalid_input("cannot open density matrix file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const std::exception& e) {
    throw invalid_input(std::string("density matrix file is not valid JSON: ") +
                        e.what());
  }
  if (!doc.is_array() || doc.size() != 4)
    throw invalid_input("density matrix must be a 4x4 array of [re, im] pairs");
  qsteer::Mat4c rho;
  for (int i = 0; i < 4; ++i) {
    const auto& row = doc[i];
    if (!row.is_array() || row.size() != 4)
      throw invalid_input(
          "density matrix must be a 4x4 array of [re, im] pairs");
    for (int j = 0; j < 4; ++j) {
      const auto& cell = row[j];
      if (!cell.is_array() || cell.size() != 2 || !cell[0].is_number() ||
          !cell[1].is_number())
        throw invalid_input("matrix entries must be [re, im] pairs");
      rho(i, j) =
          qsteer::cplx(cell[0].get<double>(), cell[1].get<double>());
    }
  }
  return qsteer::TwoQubitState::from_matrix(rho);
}

// State-selection flags shared by `classify` and `ellipsoid-mesh`.  Exactly
// one of --family, --preset, --rho-file must be chosen; the angle flags are
// accepted only where the chosen family uses them.
struct StateFlags {
  std::string family;
  std::string preset;
  std::string rho_file;
  double beta = 0.0;
  double y = 1.0;
  double alpha = 0.0;
  CLI::Option* beta_opt = nullptr;
  CLI::Option* y_opt = nullptr;
  CLI::Option* alpha_opt = nullptr;

  void attach(CLI::App* cmd) {
    cmd->add_option("--family", family,
                    "symmetric three-qubit family: d31, d32 or d33")
        ->check(CLI::IsMember({"d31", "d32", "d33"}));
    cmd->add_option("--preset", preset, "named state: w, wbar or ghz")
        ->check(CLI::IsMember({"w", "wbar", "ghz"}));
    cmd->add_option("--rho-file", rho_file,
                    "JSON file with a 4x4 density matrix of [re, im] pairs");
    beta_opt = cmd->add_option("--beta", beta, "polar angle in radians");
    y_opt = cmd->add_option("--y", y, "superposition weight (d33 only)");
    alpha_opt =
        cmd->add_option("--alpha", alpha, "relative phase in radians");
  }

  ResolvedState resolve() const {
    const int sources = static_cast<int>(!family.empty()) +
                        static_cast<int>(!preset.empty()) +
                        static_cast<int>(!rho_file.empty());
    if (sources != 1)
      throw invalid_input(
          "choose exactly one of --family, --preset, --rho-file");
    using qsteer::detail::fmt_double;
    ResolvedState out;
    if (!family.empty()) {
      out.kind = "family";
      if (family == "d31") {
        if (y_opt->count() > 0)
          throw invalid_input("--y applies only to --family d33");
        const double b = beta_opt->count() > 0 ? beta : 0.0;
        const double a = alpha_opt->count() > 0 ? alpha : 0.0;
        const qsteer::Spinor s = qsteer::Spinor::from_angles(a, b);
        out.sym = qsteer::majorana_state({s, s, s});
        out.echo =
            "family=d31 alpha=" + fmt_double(a) + " beta=" + fmt_double(b);
      } else if (family == "d32") {
        if (beta_opt->count() == 0)
          throw invalid_input("--family d32 requires --beta");
        if (y_opt->count() > 0 || alpha_opt->count() > 0)
          throw invalid_input("--y/--alpha do not apply to --family d32");
        out.sym = qsteer::psi_32(beta);
        out.echo = "family=d32 beta=" + fmt_double(beta);
      } else {
        if (beta_opt->count() == 0)
          throw invalid_input("--family d33 requires --beta");
        out.sym = qsteer::psi_33(y, alpha, beta);
        out.echo = "family=d33 y=" + fmt_double(y) +
                   " alpha=" + fmt_double(alpha) +
                   " beta=" + fmt_double(beta);
      }
    } else if (!preset.empty()) {
      out.kind = "preset";
      if (beta_opt->count() > 0 || y_opt->count() > 0 ||
          alpha_opt->count() > 0)
        throw invalid_input("--beta/--y/--alpha do not apply to --preset");
      if (preset == "w") {
        out.sym = qsteer::psi_32(M_PI);
      } else if (preset == "wbar") {
        const qsteer::Spinor up = qsteer::Spinor::from_angles(0.0, 0.0);
        const qsteer::Spinor down = qsteer::Spinor::from_angles(0.0, M_PI);
        out.sym = qsteer::majorana_state({down, down, up});
      } else {
        out.sym = qsteer::psi_33(1.0, 0.0, M_PI);
      }
      out.echo = "preset=" + preset;
    } else {
      out.kind = "rho-file";
      out.pair = load_rho(rho_file);
      out.echo = "rho-file=" + rho_file;
    }
    return out;
  }
};

qsteer::Report build_report(const ResolvedState& state) {
  if (state.sym)
    return qsteer::classify_symmetric(*state.sym, state.kind, state.echo);
  return qsteer::classify_two_qubit(*state.pair, state.echo);
}

// The mesh needs only the steering geometry; skipping the canonical
// decomposition keeps ill-conditioned but valid states exportable.
qsteer::Ellipsoid ellipsoid_of(const ResolvedState& state) {
  const qsteer::CorrelationMatrix lam =
      state.sym ? qsteer::lambda_from_rho(qsteer::reduced_two_qubit(*state.sym))
                : qsteer::lambda_from_rho(*state.pair);
  return qsteer::steering_geometry(lam, qsteer::SteeredParty::AliceGivenBob);
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw invalid_input("cannot open output file: " + path);
  out << content;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"steering ellipsoids of symmetric three-qubit states"};
  app.require_subcommand(1);

  CLI::App* classify_cmd = app.add_subcommand(
      "classify", "classify a state and report its steering geometry");
  StateFlags classify_flags;
  classify_flags.attach(classify_cmd);
  std::string format = "text";
  classify_cmd->add_option("--format", format, "output format")
      ->check(CLI::IsMember({"text", "json"}));

  CLI::App* mesh_cmd = app.add_subcommand(
      "ellipsoid-mesh", "export the steering surface as a Wavefront OBJ");
  StateFlags mesh_flags;
  mesh_flags.attach(mesh_cmd);
  int subdivisions = 24;
  mesh_cmd->add_option("--subdivisions", subdivisions,
                       "latitude bands of the triangulation (minimum 3)");
  std::string mesh_output;
  mesh_cmd->add_option("--output", mesh_output,
                       "output file (default: stdout)");

  CLI::App* scan_cmd = app.add_subcommand(
      "monogamy-scan", "tabulate the volume monogamy relation over beta");
  std::string scan_family;
  scan_cmd->add_option("--family", scan_family, "family to scan: d32 or d33")
      ->required()
      ->check(CLI::IsMember({"d32", "d33"}));
  double scan_y = 1.0, scan_alpha = 0.0, scan_beta = 0.0;
  double beta_min = M_PI / 50.0, beta_max = 49.0 * M_PI / 50.0;
  int steps = 25;
  CLI::Option* scan_y_opt =
      scan_cmd->add_option("--y", scan_y, "superposition weight (d33 only)");
  CLI::Option* scan_alpha_opt = scan_cmd->add_option(
      "--alpha", scan_alpha, "relative phase in radians (d33 only)");
  CLI::Option* scan_beta_opt = scan_cmd->add_option(
      "--beta", scan_beta, "single polar angle instead of a sweep");
  CLI::Option* beta_min_opt =
      scan_cmd->add_option("--beta-min", beta_min, "sweep start in radians");
  CLI::Option* beta_max_opt =
      scan_cmd->add_option("--beta-max", beta_max, "sweep end in radians");
  CLI::Option* steps_opt =
      scan_cmd->add_option("--steps", steps, "number of sweep rows");
  std::string scan_output;
  scan_cmd->add_option("--output", scan_output,
                       "output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (classify_cmd->parsed()) {
      const qsteer::Report rep = build_report(classify_flags.resolve());
      std::cout << (format == "json" ? qsteer::render_report_json(rep)
                                     : qsteer::render_report_text(rep));
    } else if (mesh_cmd->parsed()) {
      write_output(mesh_output,
                   qsteer::render_ellipsoid_mesh(
                       ellipsoid_of(mesh_flags.resolve()), subdivisions));
    } else {
      std::vector<double> betas;
      if (scan_beta_opt->count() > 0) {
        if (beta_min_opt->count() > 0 || beta_max_opt->count() > 0 ||
            steps_opt->count() > 0)
          throw invalid_input(
              "--beta excludes --beta-min/--beta-max/--steps");
        betas.push_back(scan_beta);
      } else {
        if (steps < 1) throw invalid_input("--steps must be at least 1");
        if (!(beta_max >= beta_min))
          throw invalid_input("--beta-max must be at least --beta-min");
        for (int i = 0; i < steps; ++i)
          betas.push_back(steps == 1 ? beta_min
                                     : beta_min + (beta_max - beta_min) * i /
                                                      (steps - 1));
      }
      std::vector<qsteer::MonogamyScanRow> rows;
      if (scan_family == "d32") {
        if (scan_y_opt->count() > 0 || scan_alpha_opt->count() > 0)
          throw invalid_input("--y/--alpha do not apply to --family d32");
        rows = qsteer::monogamy_scan_rows_d32(betas);
      } else {
        rows = qsteer::monogamy_scan_rows_d33(scan_y, scan_alpha, betas);
      }
      write_output(scan_output, qsteer::render_monogamy_csv(rows));
    }
  } catch (const qsteer::numerical_failure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const invalid_input& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
