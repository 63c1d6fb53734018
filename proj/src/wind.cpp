#include "blockflow/wind.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace blockflow {

using kernels::kCx;
using kernels::kCy;
using kernels::kOpposite;
using kernels::kQ;
using kernels::kWeight;

std::string_view to_string(XBoundary b) {
  switch (b) {
    case XBoundary::InletOutlet: return "inlet_outlet";
    case XBoundary::Periodic: return "periodic";
    case XBoundary::Wall: return "wall";
  }
  return "inlet_outlet";
}

XBoundary x_boundary_from_string(std::string_view s) {
  if (s == "inlet_outlet") return XBoundary::InletOutlet;
  if (s == "periodic") return XBoundary::Periodic;
  if (s == "wall") return XBoundary::Wall;
  throw Error(ErrorCode::ConfigError, "unknown x boundary '" + std::string(s) + "'");
}

std::string_view to_string(YBoundary b) { return b == YBoundary::Wall ? "wall" : "periodic"; }

YBoundary y_boundary_from_string(std::string_view s) {
  if (s == "wall") return YBoundary::Wall;
  if (s == "periodic") return YBoundary::Periodic;
  throw Error(ErrorCode::ConfigError, "unknown y boundary '" + std::string(s) + "'");
}

void GridSpec::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::ConfigError, m); };
  if (nx < 16 || ny < 16) fail("grid must be at least 16x16 cells");
  if (!(dx > 0.0) || !std::isfinite(dx)) fail("dx must be positive");
  if (!(inlet_velocity > 0.0) || inlet_velocity > 0.1) fail("inlet velocity must lie in (0, 0.1] lattice units");
  if (!(tau > 0.5) || !std::isfinite(tau)) fail("tau must exceed 0.5");
  if (!(inlet_speed_mps > 0.0) || !std::isfinite(inlet_speed_mps)) fail("physical inlet speed must be positive");
  if (!std::isfinite(origin_x) || !std::isfinite(origin_y) || !std::isfinite(slice_height)) fail("grid origin must be finite");
  if (!std::isfinite(body_force_x) || !std::isfinite(body_force_y)) fail("body force must be finite");
}

double tau_for_viscosity(const GridSpec& spec, double viscosity_m2s) {
  if (!(viscosity_m2s > 0.0)) throw Error(ErrorCode::ConfigError, "viscosity must be positive");
  const double dt = spec.dx * spec.inlet_velocity / spec.inlet_speed_mps;
  return 3.0 * viscosity_m2s * dt / (spec.dx * spec.dx) + 0.5;
}

std::size_t ObstacleMask::solid_count() const {
  return static_cast<std::size_t>(std::count(solid.begin(), solid.end(), std::uint8_t{1}));
}

ObstacleMask ObstacleMask::empty(int nx, int ny) {
  return {nx, ny, std::vector<std::uint8_t>(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny), 0)};
}

ObstacleMask voxelize(const Scene& scene, const GridSpec& spec) {
  spec.validate();
  ObstacleMask mask = ObstacleMask::empty(spec.nx, spec.ny);
  for (const Block& b : scene.blocks) {
    auto it = scene.world_poses.find(b.id);
    if (it == scene.world_poses.end()) throw Error(ErrorCode::InvalidArgument, "block '" + b.id + "' has no world pose");
    for (int j = 0; j < spec.ny; ++j) {
      for (int i = 0; i < spec.nx; ++i) {
        const Vec2 c = spec.cell_center(i, j);
        if (box_contains(b.half_extents, it->second, Vec3(c.x(), c.y(), spec.slice_height))) {
          mask.solid[spec.index(i, j)] = 1;
        }
      }
    }
  }
  for (int col : {0, spec.nx - 1}) {
    bool blocked = true;
    for (int j = 0; j < spec.ny && blocked; ++j) blocked = mask.at(col, j);
    if (blocked) {
      throw Error(ErrorCode::FullyBlocked, std::string(col == 0 ? "inlet" : "outlet") + " column is entirely solid");
    }
  }
  return mask;
}

double equilibrium(int q, double rho, double ux, double uy) {
  const std::size_t qi = static_cast<std::size_t>(q);
  const double cu = (kCx[qi] * ux) + (kCy[qi] * uy);
  const double usq = 1.5 * ((ux * ux) + (uy * uy));
  return (kWeight[qi] * rho) * ((((1.0 + (3.0 * cu)) + ((4.5 * cu) * cu)) - usq));
}

double WindField::total_mass() const {
  double m = 0.0;
  for (std::size_t c = 0; c < rho.size(); ++c) {
    if (!solid[c]) m += rho[c];
  }
  return m;
}

WindField equilibrium_field(const GridSpec& spec, const ObstacleMask& mask, double rho, double ux, double uy) {
  const std::size_t n = spec.cells();
  if (mask.solid.size() != n) throw Error(ErrorCode::InvalidArgument, "mask does not match the grid");
  WindField field;
  field.nx = spec.nx;
  field.ny = spec.ny;
  field.solid = mask.solid;
  field.rho.assign(n, 1.0);
  field.ux.assign(n, 0.0);
  field.uy.assign(n, 0.0);
  field.f.resize(n * kQ);
  for (std::size_t c = 0; c < n; ++c) {
    const bool solid = mask.solid[c] != 0;
    if (!solid) {
      field.rho[c] = rho;
      field.ux[c] = ux;
      field.uy[c] = uy;
    }
    for (int q = 0; q < kQ; ++q) {
      field.f[static_cast<std::size_t>(q) * n + c] = solid ? kWeight[static_cast<std::size_t>(q)] : equilibrium(q, rho, ux, uy);
    }
  }
  return field;
}

namespace {

void check_mask(const GridSpec& spec, const ObstacleMask& mask) {
  if (mask.nx != spec.nx || mask.ny != spec.ny || mask.solid.size() != spec.cells()) {
    throw Error(ErrorCode::InvalidArgument, "obstacle mask dimensions do not match the grid");
  }
}

WindField initial_state(const GridSpec& spec, const ObstacleMask& mask) {
  const double u0 = spec.x_boundary == XBoundary::InletOutlet ? spec.inlet_velocity : 0.0;
  return equilibrium_field(spec, mask, 1.0, u0, 0.0);
}

}  // namespace

LbmSolver::LbmSolver(const GridSpec& spec, ObstacleMask mask)
    : LbmSolver(spec, mask, (check_mask(spec, mask), initial_state(spec, mask))) {}

LbmSolver::LbmSolver(const GridSpec& spec, ObstacleMask mask, const WindField& initial)
    : spec_(spec), mask_(std::move(mask)), collide_(kernels::collide_kernel(kernels::active_isa())) {
  check_mask(spec_, mask_);
  const std::size_t n = spec_.cells();
  if (initial.nx != spec_.nx || initial.ny != spec_.ny) throw Error(ErrorCode::InvalidArgument, "initial field does not match the grid");
  if (initial.f.size() == n * kQ) {
    f_ = initial.f;
  } else {
    if (initial.rho.size() != n || initial.ux.size() != n || initial.uy.size() != n) {
      throw Error(ErrorCode::InvalidArgument, "initial field is incomplete");
    }
    f_.resize(n * kQ);
    for (std::size_t c = 0; c < n; ++c) {
      for (int q = 0; q < kQ; ++q) f_[static_cast<std::size_t>(q) * n + c] = equilibrium(q, initial.rho[c], initial.ux[c], initial.uy[c]);
    }
  }
  scratch_.resize(n * kQ);
  rho_.assign(n, 1.0);
  ux_.assign(n, 0.0);
  uy_.assign(n, 0.0);
  iterations_ = initial.iterations;
  for (int q = 0; q < kQ; ++q) inlet_feq_.push_back(equilibrium(q, 1.0, spec_.inlet_velocity, 0.0));
  build_links();
}

void LbmSolver::build_links() {
  const int nx = spec_.nx, ny = spec_.ny;
  const bool px = spec_.x_boundary == XBoundary::Periodic;
  const bool py = spec_.y_boundary == YBoundary::Periodic;
  bounce_links_.clear();
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      if (mask_.at(i, j)) continue;
      for (int q = 1; q < kQ; ++q) {
        int si = i - kCx[static_cast<std::size_t>(q)];
        int sj = j - kCy[static_cast<std::size_t>(q)];
        bool wall = false;
        if (si < 0 || si >= nx) {
          if (px) si = (si + nx) % nx;
          else wall = true;
        }
        if (sj < 0 || sj >= ny) {
          if (py) sj = (sj + ny) % ny;
          else wall = true;
        }
        if (wall || mask_.at(si, sj)) {
          bounce_links_.push_back(static_cast<std::uint32_t>(spec_.index(i, j)) * kQ + static_cast<std::uint32_t>(q));
        }
      }
    }
  }
}

void LbmSolver::stream() {
  const int nx = spec_.nx, ny = spec_.ny;
  const std::size_t n = spec_.cells();
  const std::size_t unx = static_cast<std::size_t>(nx);
  const bool px = spec_.x_boundary == XBoundary::Periodic;
  const bool py = spec_.y_boundary == YBoundary::Periodic;

  // Pull: new f_q(x) = post f_q(x - c_q), row by row as shifted copies.
  for (int q = 0; q < kQ; ++q) {
    const int cx = kCx[static_cast<std::size_t>(q)];
    const int cy = kCy[static_cast<std::size_t>(q)];
    const double* src = f_.data() + static_cast<std::size_t>(q) * n;
    double* dst = scratch_.data() + static_cast<std::size_t>(q) * n;
    for (int j = 0; j < ny; ++j) {
      int sj = j - cy;
      if (sj < 0 || sj >= ny) {
        if (!py) continue;
        sj = (sj + ny) % ny;
      }
      const double* s = src + static_cast<std::size_t>(sj) * unx;
      double* d = dst + static_cast<std::size_t>(j) * unx;
      if (cx == 0) {
        std::copy(s, s + nx, d);
      } else if (cx == 1) {
        std::copy(s, s + nx - 1, d + 1);
        if (px) d[0] = s[nx - 1];
      } else {
        std::copy(s + 1, s + nx, d);
        if (px) d[nx - 1] = s[0];
      }
    }
  }
  for (std::uint32_t link : bounce_links_) {
    const std::size_t c = link / kQ;
    const std::size_t q = link % kQ;
    scratch_[q * n + c] = f_[static_cast<std::size_t>(kOpposite[q]) * n + c];
  }

  if (spec_.x_boundary == XBoundary::InletOutlet) {
    for (int j = 0; j < ny; ++j) {
      const std::size_t in = spec_.index(0, j);
      if (!mask_.solid[in]) {
        for (int q = 0; q < kQ; ++q) scratch_[static_cast<std::size_t>(q) * n + in] = inlet_feq_[static_cast<std::size_t>(q)];
      }
      const std::size_t out = spec_.index(nx - 1, j);
      const std::size_t prev = spec_.index(nx - 2, j);
      if (!mask_.solid[out] && !mask_.solid[prev]) {
        for (int q = 0; q < kQ; ++q) scratch_[static_cast<std::size_t>(q) * n + out] = scratch_[static_cast<std::size_t>(q) * n + prev];
      }
    }
    absorb_outlet();
  }
  f_.swap(scratch_);
}

// Pressure waves bounce between the fixed inlet and the outlet and take tens
// of thousands of steps to die out viscously. In the last eighth of the grid
// density is pulled toward 1 at the local velocity, with a strength ramping
// quadratically up to kSpongeStrength at the outlet column; the velocity
// field is untouched so the steady wake is preserved.
void LbmSolver::absorb_outlet() {
  constexpr double kSpongeStrength = 0.1;
  const int nx = spec_.nx, ny = spec_.ny;
  const std::size_t n = spec_.cells();
  const int width = std::max(4, nx / 8);
  for (int i = nx - width; i < nx; ++i) {
    const double r = static_cast<double>(i - (nx - width) + 1) / width;
    const double s = kSpongeStrength * r * r;
    for (int j = 0; j < ny; ++j) {
      const std::size_t c = spec_.index(i, j);
      if (mask_.solid[c]) continue;
      double f[kQ];
      for (int q = 0; q < kQ; ++q) f[q] = scratch_[static_cast<std::size_t>(q) * n + c];
      const double rho = f[0] + f[1] + f[2] + f[3] + f[4] + f[5] + f[6] + f[7] + f[8];
      const double ux = (f[1] - f[3] + f[5] - f[6] - f[7] + f[8]) / rho;
      const double uy = (f[2] - f[4] + f[5] + f[6] - f[7] - f[8]) / rho;
      for (int q = 0; q < kQ; ++q) {
        scratch_[static_cast<std::size_t>(q) * n + c] += s * (equilibrium(q, 1.0, ux, uy) - equilibrium(q, rho, ux, uy));
      }
    }
  }
}

void LbmSolver::step() {
  const std::size_t n = spec_.cells();
  kernels::CollideSpan span;
  for (int q = 0; q < kQ; ++q) span.f[static_cast<std::size_t>(q)] = f_.data() + static_cast<std::size_t>(q) * n;
  span.solid = mask_.solid.data();
  span.rho = rho_.data();
  span.ux = ux_.data();
  span.uy = uy_.data();
  span.begin = 0;
  span.end = n;
  const kernels::CollideParams params{1.0 / spec_.tau, spec_.body_force_x, spec_.body_force_y};
  const kernels::CollideStats stats = collide_(span, params);
  if (!stats.finite || stats.max_u2 >= 0.09 || stats.min_rho <= 0.0) {
    throw Error(ErrorCode::Diverged, "lattice-Boltzmann solver diverged at iteration " + std::to_string(iterations_) +
                                         " (max |u| = " + std::to_string(std::sqrt(stats.max_u2)) +
                                         ", min rho = " + std::to_string(stats.min_rho) + ")");
  }
  stream();
  ++iterations_;
}

WindField LbmSolver::field() const {
  const std::size_t n = spec_.cells();
  WindField out;
  out.nx = spec_.nx;
  out.ny = spec_.ny;
  out.solid = mask_.solid;
  out.f = f_;
  out.iterations = iterations_;
  out.rho.assign(n, 1.0);
  out.ux.assign(n, 0.0);
  out.uy.assign(n, 0.0);
  const double hgx = 0.5 * spec_.body_force_x;
  const double hgy = 0.5 * spec_.body_force_y;
  for (std::size_t c = 0; c < n; ++c) {
    if (mask_.solid[c]) continue;
    double f[kQ];
    for (int q = 0; q < kQ; ++q) f[q] = f_[static_cast<std::size_t>(q) * n + c];
    const double rho = ((((((((f[0] + f[1]) + f[2]) + f[3]) + f[4]) + f[5]) + f[6]) + f[7]) + f[8]);
    const double mx = (((((f[1] - f[3]) + f[5]) - f[6]) - f[7]) + f[8]);
    const double my = (((((f[2] - f[4]) + f[5]) + f[6]) - f[7]) - f[8]);
    out.rho[c] = rho;
    out.ux[c] = mx / rho + hgx;
    out.uy[c] = my / rho + hgy;
  }
  return out;
}

double LbmSolver::total_mass() const {
  const std::size_t n = spec_.cells();
  double m = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    if (mask_.solid[c]) continue;
    for (int q = 0; q < kQ; ++q) m += f_[static_cast<std::size_t>(q) * n + c];
  }
  return m;
}

WindField step(const WindField& state, const ObstacleMask& mask, const GridSpec& spec) {
  LbmSolver solver(spec, mask, state);
  solver.step();
  WindField out = solver.field();
  out.converged = false;
  return out;
}

namespace {

double max_speed(const WindField& f) {
  double m = 0.0;
  for (std::size_t c = 0; c < f.ux.size(); ++c) m = std::max(m, std::hypot(f.ux[c], f.uy[c]));
  return m;
}

double max_change(const WindField& a, const WindField& b) {
  double m = 0.0;
  for (std::size_t c = 0; c < a.ux.size(); ++c) m = std::max(m, std::hypot(a.ux[c] - b.ux[c], a.uy[c] - b.uy[c]));
  return m;
}

}  // namespace

WindField run_to_steady(const ObstacleMask& mask, const GridSpec& spec, const SteadyOptions& options) {
  spec.validate();
  if (!(options.tolerance > 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");
  if (options.max_iterations < 0) throw Error(ErrorCode::InvalidArgument, "max_iterations must be non-negative");
  if (options.check_every < 1) throw Error(ErrorCode::InvalidArgument, "check interval must be positive");
  LbmSolver solver(spec, mask);
  WindField previous = solver.field();
  double residual = std::numeric_limits<double>::infinity();
  bool converged = false;
  while (solver.iterations() < options.max_iterations) {
    solver.step();
    if (solver.iterations() % options.check_every != 0 && solver.iterations() != options.max_iterations) continue;
    WindField current = solver.field();
    const double scale = max_speed(current);
    residual = max_change(current, previous);
    if (scale > 0.0) residual /= scale;
    previous = std::move(current);
    if (options.on_progress) options.on_progress(solver.iterations(), residual);
    if (solver.iterations() % options.check_every == 0 && residual < options.tolerance) {
      converged = true;
      break;
    }
    if (options.should_stop && options.should_stop()) break;
  }
  WindField out = std::move(previous);
  out.converged = converged;
  out.residual = residual;
  return out;
}

Vec2 cell_velocity_mps(const WindField& field, const GridSpec& spec, int i, int j) {
  const std::size_t c = spec.index(i, j);
  const double scale = spec.inlet_speed_mps / spec.inlet_velocity;
  return {field.ux[c] * scale, field.uy[c] * scale};
}

Vec2 probe(const WindField& field, const GridSpec& spec, const Vec3& world_point) {
  if (field.nx != spec.nx || field.ny != spec.ny) throw Error(ErrorCode::InvalidArgument, "field does not match the grid");
  const double gx = (world_point.x() - spec.origin_x) / spec.dx;
  const double gy = (world_point.y() - spec.origin_y) / spec.dx;
  if (!(gx >= 0.0 && gx <= spec.nx && gy >= 0.0 && gy <= spec.ny)) {
    throw Error(ErrorCode::OutOfDomain, "probe point lies outside the wind grid");
  }
  // Cell centers sit at half-integer grid coordinates.
  const double x = std::clamp(gx - 0.5, 0.0, static_cast<double>(spec.nx - 1));
  const double y = std::clamp(gy - 0.5, 0.0, static_cast<double>(spec.ny - 1));
  const int i0 = std::min(static_cast<int>(x), spec.nx - 2);
  const int j0 = std::min(static_cast<int>(y), spec.ny - 2);
  const double tx = x - i0, ty = y - j0;
  const Vec2 v00 = cell_velocity_mps(field, spec, i0, j0);
  const Vec2 v10 = cell_velocity_mps(field, spec, i0 + 1, j0);
  const Vec2 v01 = cell_velocity_mps(field, spec, i0, j0 + 1);
  const Vec2 v11 = cell_velocity_mps(field, spec, i0 + 1, j0 + 1);
  return (1 - tx) * (1 - ty) * v00 + tx * (1 - ty) * v10 + (1 - tx) * ty * v01 + tx * ty * v11;
}

}  // namespace blockflow
