#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "blockflow/wind_io.hpp"
#include "support.hpp"

using namespace blockflow;

namespace {

WindField random_field(const GridSpec& spec, testing::Rng& rng) {
  WindField w;
  w.nx = spec.nx;
  w.ny = spec.ny;
  for (std::size_t c = 0; c < spec.cells(); ++c) {
    w.rho.push_back(testing::uniform(rng, 0.9, 1.1));
    w.ux.push_back(testing::uniform(rng, -0.1, 0.1));
    w.uy.push_back(testing::uniform(rng, -0.1, 0.1));
    w.solid.push_back(rng() % 5 == 0);
  }
  w.iterations = 1234;
  w.converged = true;
  w.residual = 3e-7;
  return w;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("binary layout") {
  GridSpec spec;
  spec.nx = 16;
  spec.ny = 16;
  spec.dx = 0.25;
  testing::Rng rng(71);
  const WindField w = random_field(spec, rng);
  const std::string bytes = serialize_wind_binary(w, spec);
  const std::string header = "WND1 16 16 0.25\n";
  CHECK(bytes.compare(0, header.size(), header) == 0);
  CHECK(bytes.size() == header.size() + 4 * 256 * 8);
  // First payload value is rho[0] in little-endian float64.
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) bits |= std::uint64_t(static_cast<unsigned char>(bytes[header.size() + b])) << (8 * b);
  CHECK(std::bit_cast<double>(bits) == w.rho[0]);
}

TEST_CASE("property: binary round trip is exact") {
  testing::Rng rng(72);
  for (int trial = 0; trial < 20; ++trial) {
    GridSpec spec;
    spec.nx = 16 + static_cast<int>(rng() % 40);
    spec.ny = 16 + static_cast<int>(rng() % 40);
    spec.dx = testing::uniform(rng, 1e-4, 1.0);
    const WindField w = random_field(spec, rng);
    double dx = 0.0;
    const WindField back = parse_wind_binary(serialize_wind_binary(w, spec), &dx);
    CHECK(dx == spec.dx);
    CHECK(back.nx == spec.nx);
    CHECK(back.rho == w.rho);
    CHECK(back.ux == w.ux);
    CHECK(back.uy == w.uy);
    CHECK(back.solid == w.solid);
  }
}

TEST_CASE("binary errors") {
  CHECK(code_of([] { parse_wind_binary("WND2 1 1 1\n"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { parse_wind_binary("WND1 x 1 1\n"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { parse_wind_binary("WND1 1 1 1\nshort"); }) == ErrorCode::ParseError);
  GridSpec spec;
  WindField empty;
  CHECK(code_of([&] { serialize_wind_binary(empty, spec); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("grid spec JSON") {
  GridSpec spec;
  spec.nx = 40;
  spec.tau = 0.9;
  spec.body_force_x = 1e-6;
  spec.x_boundary = XBoundary::Periodic;
  const GridSpec back = grid_spec_from_json(json::parse(to_json(spec).dump()));
  CHECK(back.nx == 40);
  CHECK(back.tau == 0.9);
  CHECK(back.body_force_x == 1e-6);
  CHECK(back.x_boundary == XBoundary::Periodic);
  CHECK(back.origin_x == spec.origin_x);

  const GridSpec from_nu = grid_spec_from_json(json{{"viscosity_m2s", 1.5e-5}});
  CHECK(from_nu.tau == doctest::Approx(0.50045));

  CHECK(code_of([] { grid_spec_from_json(json{{"nxx", 3}}); }) == ErrorCode::ParseError);
  CHECK(code_of([] { grid_spec_from_json(json{{"nx", "wide"}}); }) == ErrorCode::ParseError);
  CHECK(code_of([] { grid_spec_from_json(json{{"origin", {1}}}); }) == ErrorCode::ParseError);
  CHECK(code_of([] { grid_spec_from_json(json{{"tau", 0.4}}); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { grid_spec_from_json(json::array()); }) == ErrorCode::ParseError);
}

TEST_CASE("sidecar and CSV") {
  GridSpec spec;
  spec.nx = 16;
  spec.ny = 16;
  testing::Rng rng(73);
  const WindField w = random_field(spec, rng);
  const json side = wind_sidecar(w, spec);
  CHECK(side.at("format") == "WND1");
  CHECK(side.at("iterations") == 1234);
  CHECK(side.at("converged") == true);
  CHECK(side.at("planes") == json::array({"rho", "ux", "uy", "solid"}));
  CHECK(side.at("solid_cells") == std::count(w.solid.begin(), w.solid.end(), 1));

  const std::string csv = wind_csv(w, spec);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "i,j,x,y,solid,rho,ux,uy,speed_mps");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 256);

  GridSpec big;
  big.nx = 512;
  big.ny = 256;
  WindField wb;
  wb.nx = 512;
  wb.ny = 256;
  wb.rho.assign(big.cells(), 1.0);
  wb.ux = wb.uy = wb.rho;
  wb.solid.assign(big.cells(), 0);
  CHECK(code_of([&] { wind_csv(wb, big); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("export writes the file set") {
  GridSpec spec;
  spec.nx = 16;
  spec.ny = 16;
  testing::Rng rng(74);
  const WindField w = random_field(spec, rng);
  const auto dir = std::filesystem::temp_directory_path() / "blockflow_wind_export";
  std::filesystem::create_directories(dir);
  const auto paths = export_wind(dir / "wind", w, spec);
  CHECK(paths.size() == 3);
  for (const auto& p : paths) CHECK(std::filesystem::exists(p));
  std::ifstream in(dir / "wind.wnd", std::ios::binary);
  const std::string bytes((std::istreambuf_iterator<char>(in)), {});
  CHECK(parse_wind_binary(bytes).ux == w.ux);
  std::filesystem::remove_all(dir);
}
