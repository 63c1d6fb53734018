#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "blockflow/scene.hpp"
#include "blockflow/wind_kernels.hpp"

// 2D lattice-Boltzmann wind on a horizontal slice through the scene.
//
// Lattice units: cell size 1, time step 1. Kinematic viscosity is
// nu = (tau - 0.5) / 3. Physical velocities are obtained by scaling lattice
// velocities by inlet_speed_mps / inlet_velocity. Walls use halfway
// bounce-back, so a channel of ny cells between two walls has width ny and
// cell j sits at y = j + 0.5.

namespace blockflow {

enum class XBoundary {
  InletOutlet,  // equilibrium inlet at x = 0, zero-gradient outlet at x = nx-1
  Periodic,
  Wall,
};
enum class YBoundary { Wall, Periodic };

std::string_view to_string(XBoundary b);
XBoundary x_boundary_from_string(std::string_view s);
std::string_view to_string(YBoundary b);
YBoundary y_boundary_from_string(std::string_view s);

struct GridSpec {
  int nx = 128;
  int ny = 64;
  double dx = 0.005;            // m per cell
  double origin_x = -0.32;      // world x of the grid's lower-left corner
  double origin_y = -0.16;
  double slice_height = 0.0075; // world z of the slice
  double inlet_velocity = 0.05; // lattice units, along +x
  double inlet_speed_mps = 1.0; // physical speed the inlet represents
  double tau = 0.8;
  double body_force_x = 0.0;    // lattice units
  double body_force_y = 0.0;
  XBoundary x_boundary = XBoundary::InletOutlet;
  YBoundary y_boundary = YBoundary::Wall;

  /// Throws ConfigError unless nx, ny >= 16, tau > 0.5 and the inlet
  /// velocity lies in (0, 0.1].
  void validate() const;
  double viscosity() const { return (tau - 0.5) / 3.0; }
  std::size_t cells() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(i); }
  /// World-space (x, y) of a cell center.
  Vec2 cell_center(int i, int j) const { return {origin_x + (i + 0.5) * dx, origin_y + (j + 0.5) * dx}; }
};

/// tau giving a physical kinematic viscosity (m^2/s) under the grid's
/// length scale dx and velocity scale inlet_speed_mps / inlet_velocity.
double tau_for_viscosity(const GridSpec& spec, double viscosity_m2s);

struct ObstacleMask {
  int nx = 0;
  int ny = 0;
  std::vector<std::uint8_t> solid;  // row-major, 1 = solid

  bool at(int i, int j) const { return solid[static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(i)] != 0; }
  std::size_t solid_count() const;
  static ObstacleMask empty(int nx, int ny);
};

/// A cell is solid when its center at slice height lies in a block's box.
/// Throws FullyBlocked when the inlet or outlet column is entirely solid.
ObstacleMask voxelize(const Scene& scene, const GridSpec& spec);

struct WindField {
  int nx = 0;
  int ny = 0;
  std::vector<double> rho;
  std::vector<double> ux;  // lattice units
  std::vector<double> uy;
  std::vector<std::uint8_t> solid;
  std::vector<double> f;  // 9 planes of nx*ny, plane q at offset q*nx*ny
  int iterations = 0;
  bool converged = false;
  double residual = 0.0;

  double total_mass() const;  // sum of rho over fluid cells
};

/// Uniform equilibrium at density rho and velocity (ux, uy) in fluid cells.
WindField equilibrium_field(const GridSpec& spec, const ObstacleMask& mask, double rho, double ux, double uy);

double equilibrium(int q, double rho, double ux, double uy);

class LbmSolver {
 public:
  /// Starts from the inlet equilibrium (InletOutlet) or rest.
  LbmSolver(const GridSpec& spec, ObstacleMask mask);
  LbmSolver(const GridSpec& spec, ObstacleMask mask, const WindField& initial);

  /// One collide + stream step. Throws Diverged when any fluid cell reaches
  /// |u| >= 0.3, rho <= 0 or a non-finite value.
  void step();
  void set_isa(kernels::Isa isa) { collide_ = kernels::collide_kernel(isa); }

  int iterations() const { return iterations_; }
  /// Macroscopic fields recomputed from the current distributions.
  WindField field() const;
  double total_mass() const;
  const GridSpec& spec() const { return spec_; }
  const ObstacleMask& mask() const { return mask_; }
  /// Velocity from the most recent collision, lattice units.
  const std::vector<double>& last_ux() const { return ux_; }
  const std::vector<double>& last_uy() const { return uy_; }

 private:
  void build_links();
  void stream();
  void absorb_outlet();

  GridSpec spec_;
  ObstacleMask mask_;
  std::vector<double> f_;
  std::vector<double> scratch_;
  std::vector<double> rho_, ux_, uy_;
  // (cell, q) pairs whose pull source is a wall or a solid cell.
  std::vector<std::uint32_t> bounce_links_;
  std::vector<double> inlet_feq_;
  kernels::CollideFn collide_;
  int iterations_ = 0;
};

/// One step applied to a copy of `state`.
WindField step(const WindField& state, const ObstacleMask& mask, const GridSpec& spec);

struct SteadyOptions {
  double tolerance = 1e-6;  // relative max velocity change per check
  int max_iterations = 20000;
  int check_every = 100;
  /// Called every check_every iterations with (iteration, residual).
  std::function<void(int, double)> on_progress;
  /// Polled every check_every iterations; true stops the run early.
  std::function<bool()> should_stop;
};

/// Steps until the relative max-velocity change between checks drops below
/// the tolerance or max_iterations is reached (converged = false).
WindField run_to_steady(const ObstacleMask& mask, const GridSpec& spec, const SteadyOptions& options = {});

/// Physical velocity (m/s) at a world point, bilinear between cell centers.
/// Throws OutOfDomain outside the grid.
Vec2 probe(const WindField& field, const GridSpec& spec, const Vec3& world_point);

/// Lattice velocity at cell (i, j) converted to m/s.
Vec2 cell_velocity_mps(const WindField& field, const GridSpec& spec, int i, int j);

}  // namespace blockflow
