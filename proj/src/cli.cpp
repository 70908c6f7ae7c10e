#include "seqopt/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <memory>
#include <ostream>
#include <random>
#include <sstream>

#include "seqopt/io.hpp"
#include "seqopt/sensitivity.hpp"

namespace seqopt {

using nlohmann::json;
namespace fs = std::filesystem;

RunConfig resolve_config(const CliOptions& opts) {
  if (opts.config.empty()) throw ConfigError("", "--config is required");
  RunConfig c = load_config(opts.config);
  if (const char* env = std::getenv(threads_env)) {
    char* end = nullptr;
    const long t = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || t < 1) throw ConfigError(threads_env, "must be a positive integer");
    c.simulation.threads = static_cast<int>(t);
  }
  if (opts.threads) {
    if (*opts.threads < 1) throw ConfigError("--threads", "must be at least 1");
    c.simulation.threads = *opts.threads;
  }
  if (opts.deterministic) c.simulation.threads = 1;
  if (opts.out) c.output = opts.out->string();
  return c;
}

namespace {

fs::path config_dir(const CliOptions& opts) { return opts.config.parent_path(); }

// Everything a command needs to simulate the configured problem.
struct Setup {
  RunConfig cfg;
  Grid grid;
  std::unique_ptr<ForwardModel> model;
  QuadraticForm Q;
  int layers = 0;
  FieldMode mode = FieldMode::element;
};

Setup make_setup(const CliOptions& opts, std::optional<std::array<int, 3>> resolution = std::nullopt) {
  Setup s;
  s.cfg = resolve_config(opts);
  s.grid = build_grid(s.cfg, config_dir(opts), resolution);
  s.grid.validate();
  s.model = std::make_unique<ForwardModel>(s.grid, s.cfg.material, resolve_strain(s.cfg, s.grid), s.cfg.simulation);
  s.Q = compile(resolve_measure(s.cfg, s.grid), s.grid);
  s.layers = resolve_layer_count(s.cfg, s.grid);
  s.mode = s.cfg.mode();
  return s;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << std::setw(2) << j << '\n';
}

TimeField field_or_planar(const CliOptions& opts, const Setup& s) {
  if (!opts.field) return planar_time_field(s.grid, s.mode);
  fs::path p = *opts.field;
  TimeField f = read_time_field(p, s.grid);
  if (f.mode != s.mode) throw std::runtime_error(p.string() + ": field mode does not match the config");
  return f;
}

Eigen::VectorXd layer_index_field(const Grid& grid, const TimeField& field, int layers) {
  const auto idx = binary_layers(grid, element_times(grid, field), layers);
  Eigen::VectorXd out(idx.size());
  for (std::size_t e = 0; e < idx.size(); ++e) out[e] = idx[e];
  return out;
}

Eigen::VectorXd magnitude(const Grid& grid, const Eigen::VectorXd& u) {
  const int dim = grid.dim();
  Eigen::VectorXd m(grid.num_nodes());
  for (int n = 0; n < grid.num_nodes(); ++n) m[n] = u.segment(n * dim, dim).norm();
  return m;
}

std::string two_digits(int j) {
  std::ostringstream s;
  s << std::setw(2) << std::setfill('0') << j;
  return s.str();
}

void export_both(const Grid& grid, const std::vector<ExportField>& fields, const fs::path& dir, const std::string& stem,
                 const std::string& format) {
  if (format == "voxel" || format == "both") export_fields(grid, fields, ExportFormat::voxel, dir / stem);
  if (format == "vtk" || format == "both") export_fields(grid, fields, ExportFormat::vtk, dir / (stem + ".vtk"));
}

template <class F>
int guarded(std::ostream& err, F body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 64;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

json volumes_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

int cmd_optimize(const CliOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    Setup s = make_setup(opts);
    const fs::path dir = s.cfg.output;
    fs::create_directories(dir);
    write_json(dir / "config.json", to_json(s.cfg));

    OptProblem pb;
    pb.model = s.model.get();
    pb.measure = s.Q;
    pb.initial = init_time_field(s.grid, s.mode);
    pb.layers = s.layers;
    pb.settings = s.cfg.optimizer;

    const double planar = s.Q.evaluate(s.model->simulate_binary(planar_time_field(s.grid, s.mode), s.layers).u);
    out << s.grid.name << ": " << s.grid.num_active() << " active elements, " << s.layers << " layers, "
        << to_string(s.mode) << " field\n";
    const auto t0 = std::chrono::steady_clock::now();
    RunReport rep = run(pb, [&](const LogEntry& e) {
      if (e.iteration % 10 == 0 || e.iteration == pb.settings.max_iters)
        out << "iter " << std::setw(4) << e.iteration << "  d=" << std::setprecision(6) << e.objective
            << "  g0=" << e.g0 << "  vol=" << e.volume_violation << "  beta=" << e.beta << '\n'
            << std::flush;
    });
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    {
      std::ofstream f(dir / "log.csv");
      rep.log.write_csv(f);
    }
    write_time_field(dir / "field.txt", s.grid, rep.field);

    json summary{{"grid", s.grid.name},
                 {"layers", s.layers},
                 {"field_mode", to_string(s.mode)},
                 {"iterations", pb.settings.max_iters},
                 {"aborted", rep.aborted},
                 {"error", rep.error},
                 {"initial_objective", rep.initial_objective},
                 {"planar_binary_objective", planar},
                 {"warnings", rep.warnings},
                 {"restorations", rep.restorations},
                 {"seconds", seconds}};
    if (!rep.aborted) {
      summary["final_objective"] = rep.final_objective;
      summary["final_beta"] = rep.final_beta;
      summary["binary_objective"] = rep.binary_objective;
      summary["reduction_ratio"] = rep.initial_objective > 0.0 ? rep.final_objective / rep.initial_objective : 0.0;
      summary["g0"] = rep.g0;
      summary["volumes"] = volumes_json(rep.volumes);
      summary["feasible"] = rep.feasible;
      summary["continuity_violations"] = rep.minmax_violations.size();

      std::vector<ExportField> fields{{"time", ExportField::Location::cell, 1, element_times(s.grid, rep.field)},
                                      {"layer", ExportField::Location::cell, 1,
                                       layer_index_field(s.grid, rep.field, s.layers)}};
      for (int j = 1; j <= s.layers; ++j)
        fields.push_back({"increment_" + two_digits(j), ExportField::Location::cell, 1,
                          rep.final_sim.densities.drho[j]});
      fields.push_back(displacement_field(s.grid, "displacement", rep.final_sim.u));
      fields.push_back(displacement_field(s.grid, "binary_displacement", rep.binary_sim.u));
      export_both(s.grid, fields, dir, "fields", "both");
    }
    write_json(dir / "summary.json", summary);

    for (const auto& w : rep.warnings) err << "warning: " << w << '\n';
    if (rep.aborted) {
      err << "error: " << rep.error << '\n';
      return 2;
    }
    out << "objective " << rep.initial_objective << " -> " << rep.final_objective << " (hard layers "
        << rep.binary_objective << ", planar " << planar << ")\n";
    out << "outputs in " << dir.string() << '\n';
    return 0;
  });
}

int cmd_simulate(const CliOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    Setup s = make_setup(opts);
    const TimeField field = field_or_planar(opts, s);
    const double beta = continuation_beta(s.cfg.optimizer.max_iters, s.cfg.optimizer.continuation);
    SimulationResult smooth = s.model->simulate(field, {s.layers, beta});
    const SimulationResult hard = s.model->simulate_binary(field, s.layers);
    const double ds = s.Q.evaluate(smooth.u), db = s.Q.evaluate(hard.u);

    const fs::path dir = s.cfg.output;
    fs::create_directories(dir);
    json summary{{"grid", s.grid.name},
                 {"layers", s.layers},
                 {"field", opts.field ? opts.field->string() : "planar"},
                 {"beta", beta},
                 {"objective", ds},
                 {"binary_objective", db}};
    write_json(dir / "simulate.json", summary);
    std::vector<ExportField> fields{{"time", ExportField::Location::cell, 1, element_times(s.grid, field)},
                                    {"layer", ExportField::Location::cell, 1, layer_index_field(s.grid, field, s.layers)},
                                    displacement_field(s.grid, "displacement", smooth.u),
                                    displacement_field(s.grid, "binary_displacement", hard.u)};
    export_both(s.grid, fields, dir, "simulate", "both");

    out << std::setprecision(17) << "objective " << ds << " (beta " << beta << ")\n"
        << "binary_objective " << db << '\n';
    return 0;
  });
}

int cmd_gradcheck(const CliOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    RunConfig probe = resolve_config(opts);
    std::optional<std::array<int, 3>> res;
    if (!probe.domain.preset.empty()) res = probe.gradcheck.resolution;
    Setup s = make_setup(opts, res);
    const GradcheckConfig& gc = s.cfg.gradcheck;

    // A slightly perturbed initial field, so no partial vanishes by symmetry.
    const FieldLayout layout = make_layout(s.grid, s.mode);
    TimeField field = init_time_field(s.grid, s.mode);
    std::mt19937 rng(gc.seed);
    std::uniform_real_distribution<double> jitter(-0.05, 0.05);
    for (int k : layout.free) field.values[k] = std::clamp(field.values[k] + jitter(rng), 0.0, 1.0);

    const ProjectionParams params{gc.layers, gc.beta};
    const auto comp = check_components(*s.model, field, params, s.Q, layout.free, gc.components, gc.seed, gc.step);
    const auto dirs = check_directions(*s.model, field, params, s.Q, layout.free, 5, gc.seed, gc.step);
    out << std::setprecision(3) << s.grid.name << " " << s.grid.nel(0) << "x" << s.grid.nel(1);
    if (s.grid.dim() == 3) out << "x" << s.grid.nel(2);
    out << ", " << gc.layers << " layers, beta " << gc.beta << '\n'
        << "components: " << comp.components.size() << " checked, max relative error " << comp.max_relative_error
        << '\n'
        << "directions: " << dirs.adjoint.size() << " checked, max relative error " << dirs.max_relative_error << '\n';
    const bool ok = comp.max_relative_error <= gradcheck_limit && dirs.max_relative_error <= gradcheck_limit;
    out << (ok ? "PASS" : "FAIL") << '\n';
    return ok ? 0 : 1;
  });
}

int cmd_export(const CliOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opts.format != "voxel" && opts.format != "vtk" && opts.format != "both")
      throw ConfigError("--format", "must be voxel, vtk or both");
    Setup s = make_setup(opts);
    const TimeField field = field_or_planar(opts, s);
    const SimulationResult hard = s.model->simulate_binary(field, s.layers);

    std::vector<ExportField> fields{{"time", ExportField::Location::cell, 1, element_times(s.grid, field)},
                                    {"layer", ExportField::Location::cell, 1, layer_index_field(s.grid, field, s.layers)}};
    for (int j = 1; j <= s.layers; ++j)
      fields.push_back({"displacement_magnitude_" + two_digits(j), ExportField::Location::point, 1,
                        magnitude(s.grid, hard.accumulated(j))});
    fields.push_back(displacement_field(s.grid, "displacement", hard.u));
    const fs::path dir = s.cfg.output;
    export_both(s.grid, fields, dir, "export", opts.format);
    out << "wrote " << fields.size() << " fields to " << dir.string() << '\n';
    return 0;
  });
}

}  // namespace seqopt
