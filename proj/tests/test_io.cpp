#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "seqopt/io.hpp"

using namespace seqopt;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("seqopt_test_io_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("voxel files round-trip bit for bit") {
  VoxelData d;
  d.extents = {3, 2, 2};
  d.dim = 3;
  d.mode = FieldMode::node;
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 12; ++i) d.values.push_back(u(rng) * std::pow(10.0, i - 6));
  d.values[0] = 0.1;
  d.values[1] = 1.0 / 3.0;
  std::stringstream ss;
  write_voxels(ss, d);
  const VoxelData r = read_voxels(ss);
  CHECK(r.extents == d.extents);
  CHECK(r.dim == 3);
  CHECK(r.mode == FieldMode::node);
  CHECK(r.values == d.values);
}

TEST_CASE("voxel reader handles comments and rejects bad files") {
  std::stringstream ok("# a mask\n# mode element\n2 2\n0 1\n1 1\n");
  const VoxelData r = read_voxels(ok);
  CHECK(r.dim == 2);
  CHECK(r.extents[2] == 1);
  CHECK(r.mode == FieldMode::element);
  CHECK(r.values == std::vector<double>{0, 1, 1, 1});
  std::stringstream few("2 2\n0 1 1\n");
  CHECK_THROWS(read_voxels(few));
  std::stringstream many("2 1\n0 1 1\n");
  CHECK_THROWS(read_voxels(many));
  std::stringstream junk("2 1\n0 x\n");
  CHECK_THROWS(read_voxels(junk));
  CHECK_THROWS(read_voxels(fs::path("/nonexistent/mask.txt")));
}

TEST_CASE("threshold turns densities into a mask") {
  const auto m = threshold_mask({0.0, 0.49, 0.5, 0.9, 1.0}, 0.5);
  CHECK(m == std::vector<std::uint8_t>{0, 0, 1, 1, 1});
}

TEST_CASE("grids load from mask files") {
  const fs::path p = scratch("mask.txt");
  std::ofstream(p) << "3 2\n1 0.2 0.8\n1 1 1\n";
  const Grid g = grid_from_voxel_file(p);
  CHECK(g.dim() == 2);
  CHECK(g.num_elements() == 6);
  CHECK(g.num_active() == 5);
  CHECK_FALSE(g.is_active(g.element_id(1, 0)));
  CHECK(g.is_active(g.element_id(2, 0)));
  fs::remove(p);
}

TEST_CASE("time fields round-trip with their mode") {
  Grid g = build_preset("lshape2d", {8, 6, 0});
  for (FieldMode mode : {FieldMode::element, FieldMode::node}) {
    const TimeField f = init_time_field(g, mode);
    const fs::path p = scratch("field.txt");
    write_time_field(p, g, f);
    const TimeField r = read_time_field(p, g);
    CHECK(r.mode == mode);
    CHECK(r.values == f.values);
    Grid other = build_preset("lshape2d", {10, 6, 0});
    CHECK_THROWS(read_time_field(p, other));
    fs::remove(p);
  }
}

TEST_CASE("exports") {
  Grid g = build_preset("square2d", {2, 2, 0});
  SUBCASE("an empty list writes nothing") {
    const fs::path p = scratch("empty");
    export_fields(g, {}, ExportFormat::voxel, p);
    export_fields(g, {}, ExportFormat::vtk, p / "x.vtk");
    CHECK_FALSE(fs::exists(p));
  }
  ExportField time{"time", ExportField::Location::cell, 1, Eigen::Vector4d(0.0, 0.25, 0.5, 1.0)};
  Eigen::VectorXd u(18);
  for (int i = 0; i < 18; ++i) u[i] = 0.5 * i;
  const ExportField disp = displacement_field(g, "displacement", u);
  CHECK(disp.location == ExportField::Location::point);
  CHECK(disp.components == 2);
  SUBCASE("voxel directory") {
    const fs::path p = scratch("voxel");
    export_fields(g, {time, disp}, ExportFormat::voxel, p);
    const VoxelData t = read_voxels(p / "time.txt");
    CHECK(t.extents == std::array<int, 3>{2, 2, 1});
    CHECK(t.values == std::vector<double>{0.0, 0.25, 0.5, 1.0});
    const VoxelData uy = read_voxels(p / "displacement_1.txt");
    CHECK(uy.extents == std::array<int, 3>{3, 3, 1});
    CHECK(uy.values[4] == 4.5);
    CHECK(fs::exists(p / "displacement_0.txt"));
    fs::remove_all(p);
  }
  SUBCASE("legacy VTK") {
    const fs::path p = scratch("out.vtk");
    export_fields(g, {time, disp}, ExportFormat::vtk, p);
    const std::string s = slurp(p);
    CHECK(s.rfind("# vtk DataFile Version", 0) == 0);
    CHECK(s.find("DATASET STRUCTURED_POINTS") != std::string::npos);
    CHECK(s.find("DIMENSIONS 3 3 1") != std::string::npos);
    CHECK(s.find("CELL_DATA 4") != std::string::npos);
    CHECK(s.find("SCALARS time double 1") != std::string::npos);
    CHECK(s.find("POINT_DATA 9") != std::string::npos);
    CHECK(s.find("VECTORS displacement double") != std::string::npos);
    CHECK(s.find("\n8 8.5 0\n") != std::string::npos);
    fs::remove(p);
  }
  ExportField wrong = time;
  wrong.data.resize(3);
  CHECK_THROWS(export_fields(g, {wrong}, ExportFormat::vtk, scratch("bad.vtk")));
}
