#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "seqopt/config.hpp"

namespace seqopt {

/// Environment variable that overrides the configured thread count.
inline constexpr const char* threads_env = "SEQOPT_THREADS";

struct CliOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;    // overrides the config's output directory
  std::optional<int> threads;                  // overrides config and environment
  bool deterministic = false;                  // single thread
  std::optional<std::filesystem::path> field;  // time field file for simulate/export
  std::string format = "both";                 // export: voxel, vtk or both
};

/// Loads the config and applies command-line and environment overrides.
RunConfig resolve_config(const CliOptions& opts);

/// Each command prints a short report to `out`, errors to `err`, and returns
/// the process exit status.
///
/// optimize: final field, per-layer increments, displacements, VTK, log.csv,
///   summary.json and the resolved config.json in the output directory. Exit
///   status 2 when a stage solve fails.
int cmd_optimize(const CliOptions& opts, std::ostream& out, std::ostream& err);
/// simulate: forward run of --field (planar layers by default) with smooth
///   layers at the final continuation sharpness and with hard layers.
int cmd_simulate(const CliOptions& opts, std::ostream& out, std::ostream& err);
/// gradcheck: adjoint against central differences on the shrunken problem of
///   the config's gradcheck block. Exit status 1 above 1e-3 relative error.
int cmd_gradcheck(const CliOptions& opts, std::ostream& out, std::ostream& err);
/// export: field, hard layer indices and per-stage displacement of --field.
int cmd_export(const CliOptions& opts, std::ostream& out, std::ostream& err);

inline constexpr double gradcheck_limit = 1e-3;

}  // namespace seqopt
