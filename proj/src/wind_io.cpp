#include "blockflow/wind_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <set>
#include <sstream>

namespace blockflow {

json to_json(const GridSpec& s) {
  return {{"nx", s.nx},
          {"ny", s.ny},
          {"dx", s.dx},
          {"origin", json::array({s.origin_x, s.origin_y})},
          {"slice_height", s.slice_height},
          {"inlet_velocity", s.inlet_velocity},
          {"inlet_speed_mps", s.inlet_speed_mps},
          {"tau", s.tau},
          {"viscosity_lattice", s.viscosity()},
          {"body_force", json::array({s.body_force_x, s.body_force_y})},
          {"x_boundary", std::string(to_string(s.x_boundary))},
          {"y_boundary", std::string(to_string(s.y_boundary))}};
}

// Missing keys keep their defaults; unknown keys are rejected so typos do
// not silently fall back to defaults.
GridSpec grid_spec_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ParseError, "grid spec must be an object");
  static const std::set<std::string> kKnown{"nx",  "ny",  "dx", "origin", "slice_height", "inlet_velocity", "inlet_speed_mps",
                                            "tau", "viscosity_lattice", "viscosity_m2s", "body_force", "x_boundary",
                                            "y_boundary"};
  for (const auto& [key, value] : j.items()) {
    if (!kKnown.count(key)) throw Error(ErrorCode::ParseError, "grid spec: unknown key '" + key + "'");
  }
  GridSpec s;
  try {
    if (j.contains("nx")) s.nx = j.at("nx").get<int>();
    if (j.contains("ny")) s.ny = j.at("ny").get<int>();
    if (j.contains("dx")) s.dx = j.at("dx").get<double>();
    if (j.contains("origin")) {
      const json& o = j.at("origin");
      if (!o.is_array() || o.size() != 2) throw Error(ErrorCode::ParseError, "grid spec: origin must be [x, y]");
      s.origin_x = o[0].get<double>();
      s.origin_y = o[1].get<double>();
    }
    if (j.contains("slice_height")) s.slice_height = j.at("slice_height").get<double>();
    if (j.contains("inlet_velocity")) s.inlet_velocity = j.at("inlet_velocity").get<double>();
    if (j.contains("inlet_speed_mps")) s.inlet_speed_mps = j.at("inlet_speed_mps").get<double>();
    if (j.contains("tau")) s.tau = j.at("tau").get<double>();
    if (j.contains("body_force")) {
      const json& g = j.at("body_force");
      if (!g.is_array() || g.size() != 2) throw Error(ErrorCode::ParseError, "grid spec: body_force must be [gx, gy]");
      s.body_force_x = g[0].get<double>();
      s.body_force_y = g[1].get<double>();
    }
    if (j.contains("x_boundary")) s.x_boundary = x_boundary_from_string(j.at("x_boundary").get<std::string>());
    if (j.contains("y_boundary")) s.y_boundary = y_boundary_from_string(j.at("y_boundary").get<std::string>());
    if (j.contains("viscosity_m2s")) s.tau = tau_for_viscosity(s, j.at("viscosity_m2s").get<double>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("grid spec: ") + e.what());
  }
  s.validate();
  return s;
}

namespace {

void put_le(std::string& out, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
}

double get_le(const char* p) {
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[b])) << (8 * b);
  return std::bit_cast<double>(bits);
}

void check_field(const WindField& field, const GridSpec& spec) {
  const std::size_t n = spec.cells();
  if (field.nx != spec.nx || field.ny != spec.ny || field.rho.size() != n || field.ux.size() != n ||
      field.uy.size() != n || field.solid.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "wind field does not match the grid spec");
  }
}

}  // namespace

std::string serialize_wind_binary(const WindField& field, const GridSpec& spec) {
  check_field(field, spec);
  std::ostringstream header;
  header.precision(17);
  header << "WND1 " << spec.nx << ' ' << spec.ny << ' ' << spec.dx << '\n';
  std::string out = header.str();
  const std::size_t n = spec.cells();
  out.reserve(out.size() + 4 * n * 8);
  for (double v : field.rho) put_le(out, v);
  for (double v : field.ux) put_le(out, v);
  for (double v : field.uy) put_le(out, v);
  for (std::uint8_t v : field.solid) put_le(out, v ? 1.0 : 0.0);
  return out;
}

WindField parse_wind_binary(const std::string& bytes, double* dx) {
  const std::size_t eol = bytes.find('\n');
  if (eol == std::string::npos || bytes.compare(0, 5, "WND1 ") != 0) {
    throw Error(ErrorCode::ParseError, "wind binary: missing WND1 header");
  }
  std::istringstream header(bytes.substr(5, eol - 5));
  WindField field;
  double d = 0.0;
  if (!(header >> field.nx >> field.ny >> d) || field.nx <= 0 || field.ny <= 0) {
    throw Error(ErrorCode::ParseError, "wind binary: malformed header");
  }
  const std::size_t n = static_cast<std::size_t>(field.nx) * static_cast<std::size_t>(field.ny);
  if (bytes.size() != eol + 1 + 4 * n * 8) {
    throw Error(ErrorCode::ParseError, "wind binary: expected " + std::to_string(4 * n * 8) + " payload bytes");
  }
  const char* p = bytes.data() + eol + 1;
  auto plane = [&](std::vector<double>& v) {
    v.resize(n);
    for (std::size_t i = 0; i < n; ++i, p += 8) v[i] = get_le(p);
  };
  plane(field.rho);
  plane(field.ux);
  plane(field.uy);
  field.solid.resize(n);
  for (std::size_t i = 0; i < n; ++i, p += 8) field.solid[i] = get_le(p) != 0.0 ? 1 : 0;
  if (dx) *dx = d;
  return field;
}

json wind_sidecar(const WindField& field, const GridSpec& spec) {
  check_field(field, spec);
  json j{{"format", "WND1"},
         {"spec", to_json(spec)},
         {"iterations", field.iterations},
         {"converged", field.converged},
         {"planes", json::array({"rho", "ux", "uy", "solid"})},
         {"units", "lattice; multiply velocity by inlet_speed_mps / inlet_velocity for m/s"},
         {"solid_cells", std::count(field.solid.begin(), field.solid.end(), std::uint8_t{1})}};
  j["residual"] = std::isfinite(field.residual) ? json(field.residual) : json(nullptr);
  return j;
}

std::string wind_csv(const WindField& field, const GridSpec& spec) {
  check_field(field, spec);
  if (spec.cells() > kMaxCsvCells) throw Error(ErrorCode::InvalidArgument, "grid too large for CSV export");
  std::ostringstream out;
  out.precision(17);
  out << "i,j,x,y,solid,rho,ux,uy,speed_mps\n";
  for (int j = 0; j < spec.ny; ++j) {
    for (int i = 0; i < spec.nx; ++i) {
      const std::size_t c = spec.index(i, j);
      const Vec2 p = spec.cell_center(i, j);
      out << i << ',' << j << ',' << p.x() << ',' << p.y() << ',' << int(field.solid[c]) << ',' << field.rho[c] << ','
          << field.ux[c] << ',' << field.uy[c] << ',' << cell_velocity_mps(field, spec, i, j).norm() << '\n';
    }
  }
  return out.str();
}

std::vector<std::filesystem::path> export_wind(const std::filesystem::path& stem, const WindField& field,
                                               const GridSpec& spec) {
  std::vector<std::filesystem::path> written;
  auto with_ext = [&](const char* ext) {
    std::filesystem::path p = stem;
    p += ext;
    return p;
  };
  written.push_back(with_ext(".wnd"));
  write_text_file(written.back(), serialize_wind_binary(field, spec));
  written.push_back(with_ext(".json"));
  write_text_file(written.back(), wind_sidecar(field, spec).dump(2) + "\n");
  if (spec.cells() <= kMaxCsvCells) {
    written.push_back(with_ext(".csv"));
    write_text_file(written.back(), wind_csv(field, spec));
  }
  return written;
}

}  // namespace blockflow
