#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "blockflow/point_cloud.hpp"

namespace blockflow {
namespace {

static_assert(std::endian::native == std::endian::little, "binary PLY reader assumes a little-endian host");

enum class ScalarType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

std::optional<ScalarType> scalar_type(const std::string& name) {
  if (name == "char" || name == "int8") return ScalarType::Int8;
  if (name == "uchar" || name == "uint8") return ScalarType::UInt8;
  if (name == "short" || name == "int16") return ScalarType::Int16;
  if (name == "ushort" || name == "uint16") return ScalarType::UInt16;
  if (name == "int" || name == "int32") return ScalarType::Int32;
  if (name == "uint" || name == "uint32") return ScalarType::UInt32;
  if (name == "float" || name == "float32") return ScalarType::Float32;
  if (name == "double" || name == "float64") return ScalarType::Float64;
  return std::nullopt;
}

std::size_t type_size(ScalarType t) {
  switch (t) {
    case ScalarType::Int8:
    case ScalarType::UInt8: return 1;
    case ScalarType::Int16:
    case ScalarType::UInt16: return 2;
    case ScalarType::Int32:
    case ScalarType::UInt32:
    case ScalarType::Float32: return 4;
    case ScalarType::Float64: return 8;
  }
  return 0;
}

struct Property {
  std::string name;
  ScalarType type = ScalarType::Float32;
  bool is_list = false;
  ScalarType count_type = ScalarType::UInt8;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

[[noreturn]] void fail_line(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + what);
}

[[noreturn]] void fail_offset(std::size_t offset, const std::string& what) {
  throw Error(ErrorCode::ParseError, "byte offset " + std::to_string(offset) + ": " + what);
}

template <typename T>
T read_raw(const std::string& bytes, std::size_t& pos) {
  if (pos + sizeof(T) > bytes.size()) fail_offset(pos, "unexpected end of binary data");
  T value;
  std::memcpy(&value, bytes.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

double read_binary(const std::string& bytes, std::size_t& pos, ScalarType t) {
  switch (t) {
    case ScalarType::Int8: return read_raw<std::int8_t>(bytes, pos);
    case ScalarType::UInt8: return read_raw<std::uint8_t>(bytes, pos);
    case ScalarType::Int16: return read_raw<std::int16_t>(bytes, pos);
    case ScalarType::UInt16: return read_raw<std::uint16_t>(bytes, pos);
    case ScalarType::Int32: return read_raw<std::int32_t>(bytes, pos);
    case ScalarType::UInt32: return read_raw<std::uint32_t>(bytes, pos);
    case ScalarType::Float32: return read_raw<float>(bytes, pos);
    case ScalarType::Float64: return read_raw<double>(bytes, pos);
  }
  return 0.0;
}

struct VertexLayout {
  int x = -1, y = -1, z = -1, red = -1, green = -1, blue = -1;
  bool has_color() const { return red >= 0 && green >= 0 && blue >= 0; }
};

VertexLayout vertex_layout(const Element& vertex) {
  VertexLayout layout;
  for (int i = 0; i < static_cast<int>(vertex.properties.size()); ++i) {
    const auto& p = vertex.properties[static_cast<std::size_t>(i)];
    if (p.is_list) continue;
    if (p.name == "x") layout.x = i;
    else if (p.name == "y") layout.y = i;
    else if (p.name == "z") layout.z = i;
    else if (p.name == "red") layout.red = i;
    else if (p.name == "green") layout.green = i;
    else if (p.name == "blue") layout.blue = i;
  }
  return layout;
}

void store_vertex(PointCloud& cloud, const VertexLayout& layout, const std::vector<double>& values) {
  cloud.points.emplace_back(values[layout.x], values[layout.y], values[layout.z]);
  if (layout.has_color()) {
    auto byte = [](double v) { return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0)); };
    cloud.colors.push_back({byte(values[layout.red]), byte(values[layout.green]), byte(values[layout.blue])});
  }
}

}  // namespace

PointCloud parse_ply(const std::string& bytes) {
  std::size_t pos = 0;
  std::size_t line_no = 0;
  auto next_line = [&]() -> std::optional<std::string> {
    if (pos >= bytes.size()) return std::nullopt;
    std::size_t end = bytes.find('\n', pos);
    if (end == std::string::npos) end = bytes.size();
    std::string line = bytes.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pos = std::min(end + 1, bytes.size());
    ++line_no;
    return line;
  };

  auto magic = next_line();
  if (!magic || *magic != "ply") fail_line(1, "missing 'ply' magic");

  std::optional<PlyEncoding> encoding;
  std::vector<Element> elements;
  bool header_done = false;
  while (auto line = next_line()) {
    std::istringstream in(*line);
    std::string keyword;
    in >> keyword;
    if (keyword.empty() || keyword == "comment" || keyword == "obj_info") continue;
    if (keyword == "end_header") {
      header_done = true;
      break;
    }
    if (keyword == "format") {
      std::string fmt, version;
      in >> fmt >> version;
      if (fmt == "ascii") encoding = PlyEncoding::Ascii;
      else if (fmt == "binary_little_endian") encoding = PlyEncoding::BinaryLittleEndian;
      else fail_line(line_no, "unsupported format '" + fmt + "'");
    } else if (keyword == "element") {
      Element e;
      long long count = -1;
      in >> e.name >> count;
      if (e.name.empty() || count < 0) fail_line(line_no, "malformed element declaration");
      e.count = static_cast<std::size_t>(count);
      elements.push_back(std::move(e));
    } else if (keyword == "property") {
      if (elements.empty()) fail_line(line_no, "property before any element");
      Property p;
      std::string type;
      in >> type;
      if (type == "list") {
        std::string count_type, item_type;
        in >> count_type >> item_type >> p.name;
        auto ct = scalar_type(count_type);
        auto it = scalar_type(item_type);
        if (!ct || !it) fail_line(line_no, "unknown list property type");
        p.is_list = true;
        p.count_type = *ct;
        p.type = *it;
      } else {
        auto t = scalar_type(type);
        if (!t) fail_line(line_no, "unknown property type '" + type + "'");
        p.type = *t;
        in >> p.name;
      }
      if (p.name.empty()) fail_line(line_no, "property without a name");
      elements.back().properties.push_back(std::move(p));
    } else {
      fail_line(line_no, "unexpected header keyword '" + keyword + "'");
    }
  }
  if (!header_done) fail_line(line_no, "missing end_header");
  if (!encoding) fail_line(line_no, "missing format line");

  auto vertex_it = std::find_if(elements.begin(), elements.end(), [](const Element& e) { return e.name == "vertex"; });
  if (vertex_it == elements.end()) fail_line(line_no, "no vertex element");
  const VertexLayout layout = vertex_layout(*vertex_it);
  if (layout.x < 0 || layout.y < 0 || layout.z < 0) fail_line(line_no, "vertex element lacks x/y/z");

  PointCloud cloud;
  cloud.points.reserve(vertex_it->count);
  std::vector<double> values;

  for (const Element& element : elements) {
    const bool is_vertex = &element == &*vertex_it;
    for (std::size_t n = 0; n < element.count; ++n) {
      values.clear();
      if (*encoding == PlyEncoding::Ascii) {
        auto line = next_line();
        while (line && line->find_first_not_of(" \t") == std::string::npos) line = next_line();
        if (!line) fail_line(line_no, "unexpected end of file in element '" + element.name + "'");
        const char* p = line->data();
        const char* end = line->data() + line->size();
        auto next_number = [&]() -> double {
          while (p < end && (*p == ' ' || *p == '\t')) ++p;
          double v = 0.0;
          auto [ptr, ec] = std::from_chars(p, end, v);
          if (ec != std::errc()) fail_line(line_no, "expected a number");
          p = ptr;
          return v;
        };
        for (const Property& prop : element.properties) {
          if (prop.is_list) {
            const double cnt = next_number();
            if (cnt < 0 || cnt != std::floor(cnt)) fail_line(line_no, "bad list count");
            for (int i = 0; i < static_cast<int>(cnt); ++i) next_number();
            values.push_back(0.0);
          } else {
            values.push_back(next_number());
          }
        }
      } else {
        for (const Property& prop : element.properties) {
          if (prop.is_list) {
            const double cnt = read_binary(bytes, pos, prop.count_type);
            if (cnt < 0) fail_offset(pos, "negative list count");
            const std::size_t skip = static_cast<std::size_t>(cnt) * type_size(prop.type);
            if (pos + skip > bytes.size()) fail_offset(pos, "unexpected end of binary data");
            pos += skip;
            values.push_back(0.0);
          } else {
            values.push_back(read_binary(bytes, pos, prop.type));
          }
        }
      }
      if (is_vertex) {
        if (!std::isfinite(values[layout.x]) || !std::isfinite(values[layout.y]) || !std::isfinite(values[layout.z])) {
          throw Error(ErrorCode::ParseError, "vertex " + std::to_string(n) + " has non-finite coordinates");
        }
        store_vertex(cloud, layout, values);
      }
    }
    if (is_vertex) break;
  }

  if (cloud.points.empty()) throw Error(ErrorCode::EmptyCloud, "PLY file has no vertices");
  return cloud;
}

PointCloud load_cloud(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_ply(buf.str());
}

std::string serialize_ply(const PointCloud& cloud, PlyEncoding encoding) {
  std::ostringstream out;
  out << "ply\n"
      << (encoding == PlyEncoding::Ascii ? "format ascii 1.0\n" : "format binary_little_endian 1.0\n")
      << "element vertex " << cloud.size() << "\n"
      << "property double x\nproperty double y\nproperty double z\n";
  if (cloud.has_colors()) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "end_header\n";
  if (encoding == PlyEncoding::Ascii) {
    out.precision(17);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const Vec3& p = cloud.points[i];
      out << p.x() << ' ' << p.y() << ' ' << p.z();
      if (cloud.has_colors()) {
        for (auto c : cloud.colors[i]) out << ' ' << static_cast<int>(c);
      }
      out << '\n';
    }
  } else {
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const double xyz[3] = {cloud.points[i].x(), cloud.points[i].y(), cloud.points[i].z()};
      out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
      if (cloud.has_colors()) out.write(reinterpret_cast<const char*>(cloud.colors[i].data()), 3);
    }
  }
  return out.str();
}

void save_cloud(const PointCloud& cloud, const std::filesystem::path& path, PlyEncoding encoding) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << serialize_ply(cloud, encoding);
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace blockflow
