#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <json.hpp>

// End-to-end tests of the installed command-line binary.  The test runner
// receives the binary location at compile time and drives it as a subprocess,
// checking stdout bytes, file artifacts and exit codes.

namespace {

struct RunResult {
  int code = -1;
  std::string out;
};

RunResult run_cli(const std::string& args) {
  const std::string cmd =
      std::string(QSTEER_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  size_t got = 0;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, got);
  const int status = pclose(pipe);
  RunResult res;
  res.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  res.out = out;
  return res;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(out.good());
  out << text;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// maximally mixed two-qubit state as a rho-file document
const char* kMixedRho =
    "[[[0.25,0],[0,0],[0,0],[0,0]],"
    "[[0,0],[0.25,0],[0,0],[0,0]],"
    "[[0,0],[0,0],[0.25,0],[0,0]],"
    "[[0,0],[0,0],[0,0],[0.25,0]]]";

// A valid density matrix sitting within ~1e-7 of the pure-product boundary:
// its congruence spectrum is defective at working precision and the
// canonicalization honestly reports a numerical failure.
const char* kIllConditionedRho =
    "[\n"
    " [[0.2094877268567237,0],[-0.16786197536746134,-0.15463286200440973],"
    "[-0.045326737559823055,-0.20819766446747051],"
    "[-0.11790968578658381,0.20043641751998276]],\n"
    " [[-0.16786197536746134,0.15463286200440973],[0.28278911969731768,0],"
    "[0.18912827310860844,0.13242803381818552],"
    "[-0.060854445006271726,-0.28023821125717352]],\n"
    " [[-0.045326737559823055,0.20819766446747051],"
    "[0.18912827310860844,-0.13242803381818552],[0.21682043948786284,0],"
    "[-0.17264392559509692,-0.15994135508385213]],\n"
    " [[-0.11790968578658381,-0.20043641751998276],"
    "[-0.060854445006271726,0.28023821125717352],"
    "[-0.17264392559509692,0.15994135508385213],[0.29090271395809569,0]]\n"
    "]\n";

struct ObjData {
  std::vector<std::array<double, 3>> vertices;
  int faces = 0;
  int lines = 0;
  int points = 0;
  std::vector<std::string> comments;
};

ObjData parse_obj(const std::string& text) {
  ObjData data;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("v ", 0) == 0) {
      std::istringstream ls(line.substr(2));
      std::array<double, 3> v{};
      ls >> v[0] >> v[1] >> v[2];
      REQUIRE(ls);
      data.vertices.push_back(v);
    } else if (line.rfind("f ", 0) == 0) {
      ++data.faces;
    } else if (line.rfind("l ", 0) == 0) {
      ++data.lines;
    } else if (line.rfind("p ", 0) == 0) {
      ++data.points;
    } else if (line.rfind("#", 0) == 0) {
      data.comments.push_back(line);
    }
  }
  return data;
}

bool has_comment(const ObjData& data, const std::string& needle) {
  for (const auto& c : data.comments)
    if (c.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("classify reports the shifted-spheroid family in json") {
  const RunResult res =
      run_cli("classify --family d32 --beta 1.5708 --format json");
  REQUIRE(res.code == 0);
  const nlohmann::json doc = nlohmann::json::parse(res.out);

  CHECK(doc.at("input").at("kind") == "family");
  CHECK(doc.at("input").at("rho").is_null());
  CHECK(doc.at("slocc_class") == "D32");
  CHECK(doc.at("canonical_type") == "TypeII");

  const auto center = doc.at("ellipsoid").at("center");
  CHECK(std::abs(center[0].get<double>()) < 1e-9);
  CHECK(std::abs(center[1].get<double>()) < 1e-9);
  CHECK(center[2].get<double>() == Catch::Approx(0.5).margin(1e-9));
  const auto semi = doc.at("ellipsoid").at("semiaxes");
  CHECK(semi[0].get<double>() ==
        Catch::Approx(1.0 / std::sqrt(2.0)).margin(1e-9));
  CHECK(semi[1].get<double>() ==
        Catch::Approx(1.0 / std::sqrt(2.0)).margin(1e-9));
  CHECK(semi[2].get<double>() == Catch::Approx(0.5).margin(1e-9));
  CHECK(doc.at("ellipsoid").at("volume").get<double>() ==
        Catch::Approx(M_PI / 3.0).margin(1e-9));

  const double cb = std::cos(1.5708);
  CHECK(doc.at("concurrence").get<double>() ==
        Catch::Approx((1.0 - cb) / (3.0 * (2.0 + cb))).margin(1e-9));
  REQUIRE(doc.at("monogamy").is_object());
  CHECK(doc.at("monogamy").at("saturated").get<bool>());
  CHECK(doc.at("monogamy").at("lhs").get<double>() ==
        Catch::Approx(doc.at("monogamy").at("bound").get<double>())
            .margin(1e-9));

  // canonical correlation matrix: the beta-independent shifted normal form
  const auto lam = doc.at("canonical_lambda");
  REQUIRE(lam.is_array());
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  const double expect[4][4] = {{1, 0, 0, 0},
                               {0, inv_sqrt2, 0, 0},
                               {0, 0, -inv_sqrt2, 0},
                               {0.5, 0, 0, 0.5}};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      CHECK(lam[i][j].get<double>() ==
            Catch::Approx(expect[i][j]).margin(1e-8));
}

TEST_CASE("classify output is byte-stable across runs") {
  const std::string args = "classify --family d33 --y 0.8 --alpha 0.3 "
                           "--beta 1.1 --format json";
  const RunResult first = run_cli(args);
  const RunResult second = run_cli(args);
  REQUIRE(first.code == 0);
  REQUIRE(second.code == 0);
  CHECK(first.out == second.out);
  CHECK(!first.out.empty());

  const RunResult text = run_cli(
      "classify --family d33 --y 0.8 --alpha 0.3 --beta 1.1");
  REQUIRE(text.code == 0);
  CHECK(text.out.find("slocc-class:        D33") != std::string::npos);
  CHECK(text.out.find("canonical-type:     TypeII") != std::string::npos);
}

TEST_CASE("classify flags the degenerate orbit-boundary preset") {
  const RunResult res = run_cli("classify --preset ghz --format json");
  REQUIRE(res.code == 0);
  const nlohmann::json doc = nlohmann::json::parse(res.out);
  CHECK(doc.at("slocc_class") == "D33-degenerate");
  CHECK(doc.at("canonical_type") == "TypeII");
  CHECK(doc.at("ellipsoid").at("volume").get<double>() <= 1e-12);

  const auto lam = doc.at("canonical_lambda");
  const double expect[4][4] = {
      {1, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 1}};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      CHECK(lam[i][j].get<double>() ==
            Catch::Approx(expect[i][j]).margin(1e-8));

  // the steered set collapses to the polar segment
  const auto semi = doc.at("ellipsoid").at("semiaxes");
  CHECK(semi[0].get<double>() == Catch::Approx(1.0).margin(1e-9));
  CHECK(semi[1].get<double>() <= 1e-9);
  CHECK(semi[2].get<double>() <= 1e-9);
}

TEST_CASE("classify handles the fully-degenerate family and presets") {
  const RunResult res =
      run_cli("classify --family d31 --beta 0.7 --format json");
  REQUIRE(res.code == 0);
  const nlohmann::json doc = nlohmann::json::parse(res.out);
  CHECK(doc.at("slocc_class") == "D31");
  CHECK(doc.at("canonical_type") == "degenerate");
  CHECK(doc.at("canonical_lambda").is_null());
  CHECK(doc.at("monogamy").is_null());
  for (int i = 0; i < 4; ++i)
    CHECK(doc.at("eigenvalues")[i].get<double>() == 0.0);
  CHECK(doc.at("concurrence").get<double>() <= 1e-8);
  CHECK(doc.at("ellipsoid").at("volume").get<double>() == 0.0);
  // steered set is the single point at the partner's Bloch vector
  const auto semi = doc.at("ellipsoid").at("semiaxes");
  for (int i = 0; i < 3; ++i) CHECK(semi[i].get<double>() == 0.0);
  const auto center = doc.at("ellipsoid").at("center");
  const double cz = std::cos(0.7);
  CHECK(center[2].get<double>() == Catch::Approx(cz).margin(1e-9));

  const RunResult w = run_cli("classify --preset w --format json");
  REQUIRE(w.code == 0);
  const nlohmann::json wdoc = nlohmann::json::parse(w.out);
  CHECK(wdoc.at("slocc_class") == "D32");
  CHECK(wdoc.at("monogamy").at("saturated").get<bool>());

  const RunResult wbar = run_cli("classify --preset wbar --format json");
  REQUIRE(wbar.code == 0);
  const nlohmann::json wbardoc = nlohmann::json::parse(wbar.out);
  CHECK(wbardoc.at("slocc_class") == "D32");
  CHECK(wbardoc.at("concurrence").get<double>() ==
        Catch::Approx(2.0 / 3.0).margin(1e-9));
}

TEST_CASE("classify reads a density matrix file") {
  const auto path = temp_file("qsteer_cli_mixed.json");
  write_file(path, kMixedRho);
  const RunResult res =
      run_cli("classify --rho-file " + path.string() + " --format json");
  REQUIRE(res.code == 0);
  const nlohmann::json doc = nlohmann::json::parse(res.out);
  CHECK(doc.at("input").at("kind") == "rho-file");
  REQUIRE(doc.at("input").at("rho").is_array());
  CHECK(doc.at("input").at("rho")[0][0][0].get<double>() == 0.25);
  CHECK(doc.at("slocc_class") == "separable");
  CHECK(doc.at("canonical_type") == "TypeI");
  CHECK(doc.at("concurrence").get<double>() == 0.0);
  CHECK(doc.at("ellipsoid").at("volume").get<double>() <= 1e-12);
  CHECK(doc.at("monogamy").is_null());
}

TEST_CASE("input errors exit with code 2") {
  CHECK(run_cli("classify --family d99 --beta 1").code == 2);
  CHECK(run_cli("classify --family d32").code == 2);
  CHECK(run_cli("classify --family d32 --beta 1 --y 2").code == 2);
  CHECK(run_cli("classify --family d32 --beta ninety-degrees").code == 2);
  CHECK(run_cli("classify --preset ghz --family d32 --beta 1").code == 2);
  CHECK(run_cli("classify").code == 2);
  CHECK(run_cli("classify --preset ghz --format yaml").code == 2);
  CHECK(run_cli("classify --rho-file /nonexistent/rho.json").code == 2);

  const auto bad = temp_file("qsteer_cli_bad.json");
  write_file(bad, "{ not json ");
  CHECK(run_cli("classify --rho-file " + bad.string()).code == 2);

  const auto shape = temp_file("qsteer_cli_shape.json");
  write_file(shape, "[[1,2],[3,4]]");
  CHECK(run_cli("classify --rho-file " + shape.string()).code == 2);

  // not a density matrix: trace differs from one
  const auto trace = temp_file("qsteer_cli_trace.json");
  write_file(trace,
             "[[[1,0],[0,0],[0,0],[0,0]],"
             "[[0,0],[1,0],[0,0],[0,0]],"
             "[[0,0],[0,0],[0,0],[0,0]],"
             "[[0,0],[0,0],[0,0],[0,0]]]");
  CHECK(run_cli("classify --rho-file " + trace.string()).code == 2);

  CHECK(run_cli("ellipsoid-mesh --preset ghz --subdivisions 2").code == 2);
  CHECK(run_cli("monogamy-scan --family d31").code == 2);
  CHECK(run_cli("monogamy-scan --family d32 --y 2").code == 2);
  CHECK(run_cli("monogamy-scan --family d33 --beta 1 --steps 5").code == 2);
}

TEST_CASE("an honest numerical failure exits with code 3") {
  const auto path = temp_file("qsteer_cli_illcond.json");
  write_file(path, kIllConditionedRho);
  const RunResult res = run_cli("classify --rho-file " + path.string());
  CHECK(res.code == 3);

  // the mesh needs only the steering geometry, so the same state exports
  const RunResult mesh = run_cli("ellipsoid-mesh --rho-file " + path.string());
  REQUIRE(mesh.code == 0);
  CHECK(parse_obj(mesh.out).vertices.size() > 0);
}

TEST_CASE("help exits cleanly") {
  CHECK(run_cli("--help").code == 0);
  CHECK(run_cli("classify --help").code == 0);
}

TEST_CASE("mesh export covers the shifted spheroid") {
  const RunResult res =
      run_cli("ellipsoid-mesh --family d32 --beta 1.5708");
  REQUIRE(res.code == 0);
  const ObjData obj = parse_obj(res.out);
  CHECK(has_comment(obj, "geometry: ellipsoid"));
  CHECK(has_comment(obj, "center: "));
  CHECK(has_comment(obj, "semiaxes: "));
  CHECK(obj.faces > 0);
  CHECK(obj.lines >= 3);  // Bloch wireframe great circles
  REQUIRE(!obj.vertices.empty());

  // surface stays inside the Bloch ball and touches both z extremes;
  // wireframe vertices lie on the unit sphere
  const int surface = 25 * 48;  // default subdivisions: 24 bands
  double zmin = 1e9, zmax = -1e9;
  for (int i = 0; i < surface; ++i) {
    const auto& v = obj.vertices[i];
    const double norm =
        std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    CHECK(norm <= 1.0 + 1e-9);
    zmin = std::min(zmin, v[2]);
    zmax = std::max(zmax, v[2]);
  }
  CHECK(zmin >= -1e-9);
  CHECK(zmin <= 1e-9);
  CHECK(zmax >= 1.0 - 1e-9);
  CHECK(zmax <= 1.0 + 1e-9);
  for (size_t i = surface; i < obj.vertices.size(); ++i) {
    const auto& v = obj.vertices[i];
    const double norm =
        std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    CHECK(norm == Catch::Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("mesh export degrades to a segment for the polar case") {
  const auto path = temp_file("qsteer_cli_ghz.obj");
  const RunResult res = run_cli("ellipsoid-mesh --preset ghz --output " +
                                path.string());
  REQUIRE(res.code == 0);
  CHECK(res.out.empty());
  const ObjData obj = parse_obj(read_file(path));
  CHECK(has_comment(obj, "geometry: segment"));
  CHECK(obj.faces == 0);
  REQUIRE(obj.vertices.size() >= 2);
  // endpoints at the poles
  CHECK(std::abs(obj.vertices[0][2]) == Catch::Approx(1.0).margin(1e-9));
  CHECK(std::abs(obj.vertices[1][2]) == Catch::Approx(1.0).margin(1e-9));
  CHECK(obj.vertices[0][2] * obj.vertices[1][2] < 0.0);
  CHECK(std::abs(obj.vertices[0][0]) <= 1e-12);
  CHECK(std::abs(obj.vertices[0][1]) <= 1e-12);
  CHECK(obj.lines >= 4);  // the segment plus the wireframe
}

TEST_CASE("mesh export keeps the triaxial case inside the Bloch ball") {
  // lab-frame steering ellipsoid of the three-distinct-spinor family at
  // beta = pi/2: center (1/3, 0, 1/3), tangent to the sphere near the north
  // pole, independent of the superposition weight and phase
  const RunResult res = run_cli(
      "ellipsoid-mesh --family d33 --beta 1.5707963267948966 "
      "--subdivisions 32");
  REQUIRE(res.code == 0);
  const ObjData obj = parse_obj(res.out);
  CHECK(has_comment(obj, "geometry: ellipsoid"));
  bool center_comment = false;
  for (const auto& c : obj.comments)
    if (c.rfind("# center: ", 0) == 0) {
      std::istringstream cs(c.substr(10));
      double x = 0, y = 0, z = 0;
      cs >> x >> y >> z;
      CHECK(x == Catch::Approx(1.0 / 3.0).margin(1e-9));
      CHECK(std::abs(y) < 1e-9);
      CHECK(z == Catch::Approx(1.0 / 3.0).margin(1e-9));
      center_comment = true;
    }
  CHECK(center_comment);
  const int surface = 33 * 64;
  REQUIRE(obj.vertices.size() >= static_cast<size_t>(surface));
  double nmax = 0.0;
  for (int i = 0; i < surface; ++i) {
    const auto& v = obj.vertices[i];
    const double norm = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    CHECK(norm <= 1.0 + 1e-9);
    nmax = std::max(nmax, norm);
  }
  CHECK(nmax >= 0.999);  // grid vertices approach the tangency point
}

TEST_CASE("monogamy scan emits deterministic csv") {
  const RunResult res = run_cli(
      "monogamy-scan --family d33 --beta 1.5707963267948966");
  REQUIRE(res.code == 0);
  std::istringstream in(res.out);
  std::string header, row;
  REQUIRE(std::getline(in, header));
  CHECK(header == "y,alpha,beta,sqrt3V_over_pi,saturated");
  REQUIRE(std::getline(in, row));
  CHECK(res.out.find('\r') == std::string::npos);

  std::istringstream rs(row);
  std::string cell;
  std::vector<std::string> cells;
  while (std::getline(rs, cell, ',')) cells.push_back(cell);
  REQUIRE(cells.size() == 5);
  CHECK(std::stod(cells[0]) == 1.0);
  CHECK(std::stod(cells[1]) == 0.0);
  CHECK(std::stod(cells[3]) ==
        Catch::Approx(2.0 * std::sqrt(2.0) / 3.0).margin(1e-8));
}

TEST_CASE("monogamy scan sweep shows the family profiles") {
  const RunResult d32 = run_cli("monogamy-scan --family d32 --steps 9");
  REQUIRE(d32.code == 0);
  std::istringstream in(d32.out);
  std::string line;
  REQUIRE(std::getline(in, line));  // header
  int rows = 0;
  while (std::getline(in, line)) {
    std::istringstream rs(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(rs, cell, ',')) cells.push_back(cell);
    REQUIRE(cells.size() == 5);
    CHECK(std::stod(cells[3]) == Catch::Approx(1.0).margin(1e-9));
    CHECK(cells[4] == "true");
    ++rows;
  }
  CHECK(rows == 9);

  // d33 at y=1, alpha=0: decreases from near 1 toward 0 as beta grows
  const auto path = temp_file("qsteer_cli_scan.csv");
  const RunResult d33 = run_cli(
      "monogamy-scan --family d33 --steps 12 --beta-min 0.2 "
      "--beta-max 3.0 --output " + path.string());
  REQUIRE(d33.code == 0);
  std::istringstream in2(read_file(path));
  REQUIRE(std::getline(in2, line));
  std::vector<double> values;
  while (std::getline(in2, line)) {
    std::istringstream rs(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(rs, cell, ',')) cells.push_back(cell);
    REQUIRE(cells.size() == 5);
    values.push_back(std::stod(cells[3]));
  }
  REQUIRE(values.size() == 12);
  CHECK(values.front() > 0.95);
  CHECK(values.back() < 0.35);
  for (size_t i = 1; i < values.size(); ++i)
    CHECK(values[i] < values[i - 1] + 1e-12);
}
