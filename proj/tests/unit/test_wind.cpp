#include <doctest.h>

#include "blockflow/wind.hpp"
#include "support.hpp"

using namespace blockflow;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::IoError;
}

GridSpec small_grid(int nx, int ny) {
  GridSpec s;
  s.nx = nx;
  s.ny = ny;
  return s;
}

ObstacleMask rect_mask(int nx, int ny, int i0, int i1, int j0, int j1) {
  ObstacleMask m = ObstacleMask::empty(nx, ny);
  for (int j = j0; j <= j1; ++j) {
    for (int i = i0; i <= i1; ++i) m.solid[static_cast<std::size_t>(j * nx + i)] = 1;
  }
  return m;
}

Scene one_block(const Vec3& center, const Vec3& half) {
  Scene s;
  s.blocks.push_back({"b", half, ColorTag::Blue});
  s.world_poses.emplace("b", Pose(Rotation{}, center, {"b", kWorldFrame}));
  return s;
}

// Plane Poiseuille flow between halfway bounce-back walls at y = 0 and y = H.
double poiseuille(double g, double nu, double y, double h) { return g / (2.0 * nu) * y * (h - y); }

double relative_l2(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("voxelization") {
  GridSpec spec = small_grid(64, 32);
  spec.origin_x = 0.0;
  spec.origin_y = 0.0;
  spec.dx = 0.01;
  spec.slice_height = 0.05;
  CHECK(voxelize(Scene{}, spec).solid_count() == 0);

  // Box covering x in [0.10, 0.21] and y in [0.10, 0.16]: centers (i + 0.5)·dx inside.
  const Scene s = one_block({0.155, 0.13, 0.05}, {0.055, 0.03, 0.1});
  const ObstacleMask m = voxelize(s, spec);
  std::size_t expected = 0;
  for (int j = 0; j < spec.ny; ++j) {
    for (int i = 0; i < spec.nx; ++i) {
      const bool in = i >= 10 && i <= 20 && j >= 10 && j <= 15;
      CHECK(m.at(i, j) == in);
      expected += in;
    }
  }
  CHECK(m.solid_count() == expected);

  CHECK(voxelize(one_block({0.155, 0.13, 0.5}, {0.055, 0.03, 0.1}), spec).solid_count() == 0);
  CHECK(code_of([&] { voxelize(one_block({0.0, 0.16, 0.05}, {0.02, 1.0, 0.1}), spec); }) == ErrorCode::FullyBlocked);
  CHECK(code_of([&] { voxelize(one_block({0.64, 0.16, 0.05}, {0.02, 1.0, 0.1}), spec); }) == ErrorCode::FullyBlocked);
}

TEST_CASE("grid validation and unit conversion") {
  CHECK_NOTHROW(GridSpec{}.validate());
  GridSpec s;
  s.nx = 8;
  CHECK(code_of([&] { s.validate(); }) == ErrorCode::ConfigError);
  s = GridSpec{};
  s.tau = 0.5;
  CHECK(code_of([&] { s.validate(); }) == ErrorCode::ConfigError);
  s = GridSpec{};
  s.inlet_velocity = 0.3;
  CHECK(code_of([&] { s.validate(); }) == ErrorCode::ConfigError);

  s = GridSpec{};
  CHECK(s.viscosity() == doctest::Approx(0.1));
  // dt = dx·u_lat/u_phys = 2.5e-4 s; nu_lat = nu·dt/dx² = 1.5e-4.
  CHECK(tau_for_viscosity(s, 1.5e-5) == doctest::Approx(0.50045).epsilon(1e-12));
  CHECK_THROWS_AS(tau_for_viscosity(s, 0.0), Error);
  CHECK(x_boundary_from_string(to_string(XBoundary::Periodic)) == XBoundary::Periodic);
  CHECK(y_boundary_from_string(to_string(YBoundary::Periodic)) == YBoundary::Periodic);
  CHECK_THROWS_AS(x_boundary_from_string("open"), Error);
}

TEST_CASE("uniform equilibrium is a fixed point of a periodic domain") {
  GridSpec spec = small_grid(24, 16);
  spec.x_boundary = XBoundary::Periodic;
  spec.y_boundary = YBoundary::Periodic;
  const ObstacleMask mask = ObstacleMask::empty(24, 16);
  const WindField start = equilibrium_field(spec, mask, 1.0, 0.03, -0.01);
  LbmSolver solver(spec, mask, start);
  for (int i = 0; i < 50; ++i) solver.step();
  const WindField end = solver.field();
  double worst = 0.0;
  for (std::size_t i = 0; i < start.f.size(); ++i) worst = std::max(worst, std::abs(end.f[i] - start.f[i]));
  CHECK(worst < 1e-12);
  for (int q = 0; q < 9; ++q) CHECK(start.f[static_cast<std::size_t>(q) * 24 * 16] == equilibrium(q, 1.0, 0.03, -0.01));
}

TEST_CASE("closed box conserves mass") {
  GridSpec spec = small_grid(32, 24);
  spec.x_boundary = XBoundary::Wall;
  const ObstacleMask mask = rect_mask(32, 24, 12, 17, 8, 13);
  LbmSolver solver(spec, mask, equilibrium_field(spec, mask, 1.0, 0.05, 0.02));
  const double m0 = solver.total_mass();
  for (int i = 0; i < 2000; ++i) solver.step();
  CHECK(std::abs(solver.total_mass() - m0) / m0 < 1e-10);
  CHECK(solver.field().total_mass() == doctest::Approx(m0).epsilon(1e-10));
}

TEST_CASE("unstable parameters diverge") {
  GridSpec spec = small_grid(32, 16);
  spec.tau = 0.51;
  spec.inlet_velocity = 0.3;
  LbmSolver solver(spec, ObstacleMask::empty(32, 16));
  CHECK(code_of([&] {
          for (int i = 0; i < 100; ++i) solver.step();
        }) == ErrorCode::Diverged);
  CHECK(code_of([&] { run_to_steady(ObstacleMask::empty(32, 16), spec); }) == ErrorCode::ConfigError);
}

TEST_CASE("body-force channel matches the parabolic profile") {
  GridSpec spec = small_grid(16, 24);
  spec.x_boundary = XBoundary::Periodic;
  spec.tau = 1.0;
  spec.body_force_x = 1e-6;
  LbmSolver solver(spec, ObstacleMask::empty(16, 24));
  for (int i = 0; i < 20000; ++i) solver.step();
  const WindField w = solver.field();
  std::vector<double> got, want;
  for (int j = 0; j < 24; ++j) {
    got.push_back(w.ux[spec.index(8, j)]);
    want.push_back(poiseuille(1e-6, spec.viscosity(), j + 0.5, 24.0));
    CHECK(std::abs(w.uy[spec.index(8, j)]) < 1e-12);
  }
  CHECK(relative_l2(got, want) < 0.02);
}

TEST_CASE("symmetric obstacle gives a mirror-symmetric field") {
  GridSpec spec = small_grid(64, 32);
  const ObstacleMask mask = rect_mask(64, 32, 16, 21, 12, 19);
  SteadyOptions opt;
  opt.max_iterations = 3000;
  const WindField w = run_to_steady(mask, spec, opt);
  double worst = 0.0;
  for (int j = 0; j < 32; ++j) {
    for (int i = 0; i < 64; ++i) {
      const std::size_t a = spec.index(i, j), b = spec.index(i, 31 - j);
      worst = std::max(worst, std::abs(w.ux[a] - w.ux[b]));
      worst = std::max(worst, std::abs(w.uy[a] + w.uy[b]));
    }
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("creeping flow scales linearly with the inlet speed") {
  GridSpec spec = small_grid(64, 32);
  spec.tau = 1.0;
  spec.inlet_velocity = 0.002;
  const ObstacleMask mask = rect_mask(64, 32, 20, 25, 12, 19);
  SteadyOptions opt;
  opt.tolerance = 1e-7;
  opt.max_iterations = 40000;
  const WindField a = run_to_steady(mask, spec, opt);
  spec.inlet_velocity = 0.004;
  const WindField b = run_to_steady(mask, spec, opt);
  REQUIRE(a.converged);
  REQUIRE(b.converged);
  // Re = U·D/nu = 0.004·8/(1/6) < 1.
  std::vector<double> half_b, ref;
  for (std::size_t c = 0; c < a.ux.size(); ++c) {
    half_b.push_back(0.5 * b.ux[c]);
    ref.push_back(a.ux[c]);
    half_b.push_back(0.5 * b.uy[c]);
    ref.push_back(a.uy[c]);
  }
  CHECK(relative_l2(half_b, ref) < 0.01);
}

TEST_CASE("steady-state driver") {
  const GridSpec spec = small_grid(32, 16);
  const ObstacleMask mask = ObstacleMask::empty(32, 16);
  SteadyOptions opt;
  opt.max_iterations = 0;
  const WindField zero = run_to_steady(mask, spec, opt);
  CHECK_FALSE(zero.converged);
  CHECK(zero.iterations == 0);
  CHECK(zero.ux[spec.index(5, 5)] == spec.inlet_velocity);

  opt.max_iterations = 500;
  opt.check_every = 50;
  int calls = 0;
  opt.on_progress = [&](int, double) { ++calls; };
  opt.should_stop = [&] { return calls == 3; };
  const WindField stopped = run_to_steady(mask, spec, opt);
  CHECK(stopped.iterations == 150);
  CHECK(calls == 3);

  opt.tolerance = 0.0;
  CHECK_THROWS_AS(run_to_steady(mask, spec, opt), Error);
}

TEST_CASE("solves are deterministic") {
  const GridSpec spec = small_grid(48, 24);
  const ObstacleMask mask = rect_mask(48, 24, 10, 14, 6, 12);
  SteadyOptions opt;
  opt.max_iterations = 400;
  const WindField a = run_to_steady(mask, spec, opt);
  const WindField b = run_to_steady(mask, spec, opt);
  CHECK(a.f == b.f);
  CHECK(a.ux == b.ux);
}

TEST_CASE("probe") {
  GridSpec spec = small_grid(64, 32);
  spec.inlet_speed_mps = 2.0;
  const ObstacleMask mask = rect_mask(64, 32, 30, 35, 12, 19);
  const WindField w = run_to_steady(mask, spec);
  REQUIRE(w.converged);
  const Vec2 solid = probe(w, spec, {spec.origin_x + 32.5 * spec.dx, spec.origin_y + 15.5 * spec.dx, 0});
  CHECK(solid.norm() == 0.0);
  const Vec2 inlet = probe(w, spec, {spec.origin_x + 0.5 * spec.dx, spec.origin_y + 16 * spec.dx, 0});
  CHECK(std::abs(inlet.x() - 2.0) / 2.0 < 0.02);
  const Vec2 cell = cell_velocity_mps(w, spec, 0, 16);
  CHECK(cell.x() == doctest::Approx(w.ux[spec.index(0, 16)] * 40.0));
  CHECK(code_of([&] { probe(w, spec, {spec.origin_x - 0.01, 0, 0}); }) == ErrorCode::OutOfDomain);
  CHECK(code_of([&] { probe(w, spec, {0, spec.origin_y + 33 * spec.dx, 0}); }) == ErrorCode::OutOfDomain);
}
