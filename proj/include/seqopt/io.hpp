#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "seqopt/grid.hpp"
#include "seqopt/timefield.hpp"

namespace seqopt {

/// Plain-text voxel file:
///
///   # mode node          (optional comment lines start with '#')
///   nx ny [nz]
///   v v v ...            (x fastest, then y, then z; rows bottom-up)
///
/// Values are written with 17 significant digits so reading back is exact.
struct VoxelData {
  std::array<int, 3> extents{0, 0, 1};
  int dim = 2;
  std::optional<FieldMode> mode;
  std::vector<double> values;
};

VoxelData read_voxels(std::istream& in);
VoxelData read_voxels(const std::filesystem::path& path);
void write_voxels(std::ostream& out, const VoxelData& data);
void write_voxels(const std::filesystem::path& path, const VoxelData& data);

/// Element occupancy from 0/1 or density values: active where value >= threshold.
std::vector<std::uint8_t> threshold_mask(const std::vector<double>& values, double threshold = 0.5);

/// Grid from a mask or density voxel file (thresholded).
Grid grid_from_voxel_file(const std::filesystem::path& path, StartRegion start = StartRegion::corner,
                          double threshold = 0.5);

/// Time field files carry their mode; node fields span (nx+1) x (ny+1) [x (nz+1)].
void write_time_field(const std::filesystem::path& path, const Grid& grid, const TimeField& field);
/// Throws if the extents do not fit the grid.
TimeField read_time_field(const std::filesystem::path& path, const Grid& grid);

/// A named field for export. `components` values per entry, entry-major.
struct ExportField {
  enum class Location { cell, point };
  std::string name;
  Location location = Location::cell;
  int components = 1;
  Eigen::VectorXd data;
};

enum class ExportFormat { voxel, vtk };

/// voxel: `path` is a directory; one file <name>.txt per scalar, or
/// <name>_<c>.txt per component of a vector field.
/// vtk: `path` is a legacy ASCII STRUCTURED_POINTS file with all fields.
/// An empty list writes nothing.
void export_fields(const Grid& grid, const std::vector<ExportField>& fields, ExportFormat format,
                   const std::filesystem::path& path);

/// Displacement (dim components per node, full DOF vector) as a point field.
ExportField displacement_field(const Grid& grid, const std::string& name, const Eigen::VectorXd& u);

}  // namespace seqopt
