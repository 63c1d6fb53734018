#pragma once

#include <filesystem>
#include <string>

#include "blockflow/json_io.hpp"
#include "blockflow/wind.hpp"

// Wind field export.
//   Binary: the ASCII header line "WND1 nx ny dx\n" followed by four
//   row-major planes of nx*ny little-endian float64: rho, ux, uy (lattice
//   units) and solid (0 or 1).
//   Sidecar JSON: grid spec, iteration count, convergence and plane order.
//   CSV (grids up to kMaxCsvCells): i,j,x,y,solid,rho,ux,uy,speed_mps

namespace blockflow {

inline constexpr std::size_t kMaxCsvCells = 1u << 16;

json to_json(const GridSpec& spec);
GridSpec grid_spec_from_json(const json& j);

std::string serialize_wind_binary(const WindField& field, const GridSpec& spec);
/// Returns rho/u/solid planes (no distributions); dx is written to *dx.
WindField parse_wind_binary(const std::string& bytes, double* dx = nullptr);

json wind_sidecar(const WindField& field, const GridSpec& spec);
std::string wind_csv(const WindField& field, const GridSpec& spec);

/// Writes <stem>.wnd and <stem>.json, plus <stem>.csv for small grids.
/// Returns the paths written.
std::vector<std::filesystem::path> export_wind(const std::filesystem::path& stem, const WindField& field, const GridSpec& spec);

}  // namespace blockflow
