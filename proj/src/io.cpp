#include "seqopt/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace seqopt {

namespace {

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  if (ec != std::errc()) throw std::runtime_error("cannot format value");
  return std::string(buf, end);
}

double parse_double(const std::string& tok) {
  double v = 0.0;
  auto [end, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || end != tok.data() + tok.size())
    throw std::runtime_error("voxel file: bad value '" + tok + "'");
  return v;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::size_t entry_count(const VoxelData& d) {
  return static_cast<std::size_t>(d.extents[0]) * d.extents[1] * (d.dim == 3 ? d.extents[2] : 1);
}

}  // namespace

VoxelData read_voxels(std::istream& in) {
  VoxelData d;
  std::string line;
  std::vector<int> header;
  while (header.empty() && std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream cs(line.substr(1));
      std::string key, value;
      if (cs >> key >> value && key == "mode") d.mode = field_mode_from_string(value);
      continue;
    }
    std::istringstream hs(line);
    int v;
    while (hs >> v) header.push_back(v);
    if (!hs.eof()) throw std::runtime_error("voxel file: malformed header '" + line + "'");
  }
  if (header.size() != 2 && header.size() != 3) throw std::runtime_error("voxel file: header must be 'nx ny [nz]'");
  for (int v : header)
    if (v <= 0) throw std::runtime_error("voxel file: extents must be positive");
  d.dim = static_cast<int>(header.size());
  d.extents = {header[0], header[1], d.dim == 3 ? header[2] : 1};

  const std::size_t n = entry_count(d);
  d.values.reserve(n);
  std::string tok;
  while (in >> tok) {
    if (tok[0] == '#') {
      std::getline(in, line);
      continue;
    }
    d.values.push_back(parse_double(tok));
  }
  if (d.values.size() != n)
    throw std::runtime_error("voxel file: expected " + std::to_string(n) + " values, found " +
                             std::to_string(d.values.size()));
  return d;
}

VoxelData read_voxels(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return read_voxels(in);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void write_voxels(std::ostream& out, const VoxelData& d) {
  if (d.values.size() != entry_count(d)) throw std::invalid_argument("voxel data size does not match extents");
  if (d.mode) out << "# mode " << to_string(*d.mode) << '\n';
  out << d.extents[0] << ' ' << d.extents[1];
  if (d.dim == 3) out << ' ' << d.extents[2];
  out << '\n';
  const std::size_t row = static_cast<std::size_t>(d.extents[0]);
  for (std::size_t i = 0; i < d.values.size(); ++i) {
    out << format_double(d.values[i]);
    out << ((i + 1) % row == 0 ? '\n' : ' ');
  }
}

void write_voxels(const std::filesystem::path& path, const VoxelData& d) {
  auto out = open_out(path);
  write_voxels(out, d);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<std::uint8_t> threshold_mask(const std::vector<double>& values, double threshold) {
  std::vector<std::uint8_t> mask(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) mask[i] = values[i] >= threshold ? 1 : 0;
  return mask;
}

Grid grid_from_voxel_file(const std::filesystem::path& path, StartRegion start, double threshold) {
  const VoxelData d = read_voxels(path);
  Grid g = grid_from_mask(d.extents, d.dim, threshold_mask(d.values, threshold), start);
  g.name = path.filename().string();
  return g;
}

void write_time_field(const std::filesystem::path& path, const Grid& grid, const TimeField& field) {
  VoxelData d;
  d.dim = grid.dim();
  d.mode = field.mode;
  const int extra = field.mode == FieldMode::node ? 1 : 0;
  d.extents = {grid.nel(0) + extra, grid.nel(1) + extra, grid.dim() == 3 ? grid.nel(2) + extra : 1};
  d.values.assign(field.values.data(), field.values.data() + field.values.size());
  write_voxels(path, d);
}

TimeField read_time_field(const std::filesystem::path& path, const Grid& grid) {
  const VoxelData d = read_voxels(path);
  TimeField f;
  f.mode = d.mode.value_or(FieldMode::element);
  const int extra = f.mode == FieldMode::node ? 1 : 0;
  const std::array<int, 3> want{grid.nel(0) + extra, grid.nel(1) + extra, grid.dim() == 3 ? grid.nel(2) + extra : 1};
  if (d.dim != grid.dim() || d.extents != want)
    throw std::runtime_error(path.string() + ": field extents do not match the grid");
  f.values = Eigen::Map<const Eigen::VectorXd>(d.values.data(), static_cast<Eigen::Index>(d.values.size()));
  return f;
}

namespace {

int entries(const Grid& grid, ExportField::Location loc) {
  return loc == ExportField::Location::cell ? grid.num_elements() : grid.num_nodes();
}

void check_field(const Grid& grid, const ExportField& f) {
  if (f.name.empty() || f.name.find_first_of(" \t\n/") != std::string::npos)
    throw std::invalid_argument("export field name '" + f.name + "' is not a plain identifier");
  if (f.components < 1 || f.components > 3)
    throw std::invalid_argument("export field '" + f.name + "' must have 1 to 3 components");
  if (f.data.size() != static_cast<Eigen::Index>(entries(grid, f.location)) * f.components)
    throw std::invalid_argument("export field '" + f.name + "' has the wrong length");
}

void write_vtk_block(std::ostream& out, const ExportField& f, int n) {
  if (f.components == 1) {
    out << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
    for (int i = 0; i < n; ++i) out << format_double(f.data[i]) << '\n';
    return;
  }
  // VTK vectors always have three components.
  out << "VECTORS " << f.name << " double\n";
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) {
      const double v = c < f.components ? f.data[i * f.components + c] : 0.0;
      out << format_double(v) << (c == 2 ? '\n' : ' ');
    }
  }
}

}  // namespace

void export_fields(const Grid& grid, const std::vector<ExportField>& fields, ExportFormat format,
                   const std::filesystem::path& path) {
  if (fields.empty()) return;
  for (const auto& f : fields) check_field(grid, f);

  if (format == ExportFormat::voxel) {
    std::filesystem::create_directories(path);
    for (const auto& f : fields) {
      const int extra = f.location == ExportField::Location::point ? 1 : 0;
      VoxelData d;
      d.dim = grid.dim();
      d.extents = {grid.nel(0) + extra, grid.nel(1) + extra, grid.dim() == 3 ? grid.nel(2) + extra : 1};
      const int n = entries(grid, f.location);
      for (int c = 0; c < f.components; ++c) {
        d.values.resize(n);
        for (int i = 0; i < n; ++i) d.values[i] = f.data[i * f.components + c];
        const std::string file = f.components == 1 ? f.name : f.name + "_" + std::to_string(c);
        write_voxels(path / (file + ".txt"), d);
      }
    }
    return;
  }

  auto out = open_out(path);
  const int nz = grid.dim() == 3 ? grid.nel(2) : 0;
  out << "# vtk DataFile Version 3.0\n" << (grid.name.empty() ? "grid" : grid.name) << "\nASCII\nDATASET STRUCTURED_POINTS\n";
  out << "DIMENSIONS " << grid.nel(0) + 1 << ' ' << grid.nel(1) + 1 << ' ' << nz + 1 << '\n';
  out << "ORIGIN 0 0 0\nSPACING 1 1 1\n";
  for (auto loc : {ExportField::Location::cell, ExportField::Location::point}) {
    bool header = false;
    for (const auto& f : fields) {
      if (f.location != loc) continue;
      if (!header) {
        out << (loc == ExportField::Location::cell ? "CELL_DATA " : "POINT_DATA ") << entries(grid, loc) << '\n';
        header = true;
      }
      write_vtk_block(out, f, entries(grid, loc));
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

ExportField displacement_field(const Grid& grid, const std::string& name, const Eigen::VectorXd& u) {
  if (u.size() != grid.num_dofs()) throw std::invalid_argument("displacement has the wrong length");
  return {name, ExportField::Location::point, grid.dim(), u};
}

}  // namespace seqopt
