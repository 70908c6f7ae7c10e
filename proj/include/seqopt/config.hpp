#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "seqopt/fem.hpp"
#include "seqopt/grid.hpp"
#include "seqopt/measures.hpp"
#include "seqopt/optimizer.hpp"
#include "seqopt/process.hpp"

namespace seqopt {

/// Validation failure; `path` is the offending key, e.g. "measure.primary.axis".
class ConfigError : public std::runtime_error {
public:
  ConfigError(std::string path, const std::string& message)
      : std::runtime_error(path.empty() ? message : path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

private:
  std::string path_;
};

struct DomainConfig {
  std::string preset;  // lshape2d, bracket2d, square2d, lshape3d
  std::string mask;    // voxel file; exclusive with preset
  std::array<int, 3> resolution{0, 0, 0};
  StartRegion start = StartRegion::corner;
  double threshold = 0.5;
};

/// Either a fixed count or the count implied by a layer thickness and a
/// typical layer length.
struct LayerConfig {
  int count = 8;
  std::optional<double> thickness;
  std::optional<double> length;
};

/// A node selector, or the inner circle of the bracket preset scaled to the
/// grid resolution.
struct SelectorConfig {
  bool bracket_hole = false;
  NodeSelector selector;
};

struct MeasureConfig {
  MeasureKind kind = MeasureKind::edge_flatness;
  SelectorConfig primary;
  std::optional<SelectorConfig> secondary;
};

struct GradcheckConfig {
  std::array<int, 3> resolution{12, 8, 0};
  int layers = 3;
  double beta = 30.0;
  int components = 20;
  unsigned seed = 1;
  double step = 1e-6;
};

struct RunConfig {
  DomainConfig domain;
  LayerConfig layers;
  Material material;
  InherentStrain strain = InherentStrain::isotropic(2, -0.01);
  std::optional<FieldMode> field_mode;  // default: node for aligned strain, element otherwise
  MeasureConfig measure;
  OptSettings optimizer;
  SimulationOptions simulation;
  std::string output = "out";
  GradcheckConfig gradcheck;

  int dim() const;
  FieldMode mode() const;
};

/// Parses and validates. Unknown keys and type mismatches raise ConfigError.
/// A mask domain is read (relative to `base`) to learn its extents.
RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base = {});
RunConfig load_config(const std::filesystem::path& path);
/// Fully expanded config; parse_config(to_json(c)) reproduces c.
nlohmann::json to_json(const RunConfig& c);

/// The domain described by `c.domain`, with `resolution` overriding the
/// configured one when given (used by gradcheck). Mask paths are relative to
/// `base`.
Grid build_grid(const RunConfig& c, const std::filesystem::path& base = {},
                std::optional<std::array<int, 3>> resolution = std::nullopt);
/// Isotropic strain takes the grid's dimension (mask domains reveal it only here).
InherentStrain resolve_strain(const RunConfig& c, const Grid& grid);
int resolve_layer_count(const RunConfig& c, const Grid& grid);
DistortionMeasure resolve_measure(const RunConfig& c, const Grid& grid);

}  // namespace seqopt
