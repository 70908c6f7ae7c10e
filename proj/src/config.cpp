#include "seqopt/config.hpp"

#include <fstream>
#include <set>

#include "seqopt/io.hpp"

namespace seqopt {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// Typed access to one JSON object that remembers which keys were read, so
// leftovers can be reported as unknown.
class Reader {
public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(path_, "expected an object");
  }

  const std::string& path() const { return path_; }
  std::string at(const std::string& key) const { return join(path_, key); }
  bool has(const std::string& key) const { return j_.contains(key); }

  const json* child(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (const json* v = child(key)) {
      if (!v->is_number()) throw ConfigError(at(key), "expected a number");
      out = v->get<double>();
    }
  }
  void integer(const std::string& key, int& out) {
    if (const json* v = child(key)) {
      if (!v->is_number_integer()) throw ConfigError(at(key), "expected an integer");
      out = v->get<int>();
    }
  }
  void boolean(const std::string& key, bool& out) {
    if (const json* v = child(key)) {
      if (!v->is_boolean()) throw ConfigError(at(key), "expected true or false");
      out = v->get<bool>();
    }
  }
  void string(const std::string& key, std::string& out) {
    if (const json* v = child(key)) {
      if (!v->is_string()) throw ConfigError(at(key), "expected a string");
      out = v->get<std::string>();
    }
  }
  template <class T, std::size_t N>
  bool array(const std::string& key, std::array<T, N>& out, std::size_t min_len = N) {
    const json* v = child(key);
    if (!v) return false;
    if (!v->is_array() || v->size() < min_len || v->size() > N)
      throw ConfigError(at(key), "expected an array of " + std::to_string(min_len) +
                                     (min_len == N ? "" : " to " + std::to_string(N)) + " numbers");
    out.fill(T{});
    for (std::size_t i = 0; i < v->size(); ++i) {
      const json& e = (*v)[i];
      if (std::is_integral_v<T> ? !e.is_number_integer() : !e.is_number())
        throw ConfigError(at(key) + "[" + std::to_string(i) + "]", "expected a number");
      out[i] = e.get<T>();
    }
    return true;
  }

  // Converts an std::invalid_argument from a string-to-enum helper into a
  // ConfigError at `key`.
  template <class F>
  auto enumeration(const std::string& key, F from_string) -> std::optional<decltype(from_string(""))> {
    std::string s;
    string(key, s);
    if (!has(key)) return std::nullopt;
    try {
      return from_string(s);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(at(key), e.what());
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(at(it.key()), "unknown key");
  }

private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

// Runs `check` and reports its std::invalid_argument at `path`.
template <class F>
void checked(const std::string& path, F check) {
  try {
    check();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
}

StartRegion start_from_string(std::string_view s) {
  if (s == "corner") return StartRegion::corner;
  if (s == "bottom") return StartRegion::bottom;
  throw std::invalid_argument("unknown start region '" + std::string(s) + "'");
}

std::string_view to_string(StartRegion s) { return s == StartRegion::corner ? "corner" : "bottom"; }

NodeSelector::Kind selector_kind_from_string(std::string_view s) {
  if (s == "plane") return NodeSelector::Kind::plane;
  if (s == "point") return NodeSelector::Kind::point;
  if (s == "circle") return NodeSelector::Kind::circle;
  if (s == "list") return NodeSelector::Kind::list;
  throw std::invalid_argument("unknown selector kind '" + std::string(s) + "'");
}

std::string_view to_string(NodeSelector::Kind k) {
  switch (k) {
    case NodeSelector::Kind::plane: return "plane";
    case NodeSelector::Kind::point: return "point";
    case NodeSelector::Kind::circle: return "circle";
    case NodeSelector::Kind::list: return "list";
  }
  return "?";
}

SelectorConfig parse_selector(const json& j, const std::string& path) {
  Reader r(j, path);
  SelectorConfig out;
  NodeSelector& s = out.selector;
  std::string kind;
  r.string("kind", kind);
  if (kind.empty()) throw ConfigError(r.at("kind"), "required");
  if (kind == "bracket-hole") {
    out.bracket_hole = true;
    s.kind = NodeSelector::Kind::circle;
    r.integer("samples", s.samples);
  } else {
    checked(r.at("kind"), [&] { s.kind = selector_kind_from_string(kind); });
    switch (s.kind) {
      case NodeSelector::Kind::plane: {
        r.integer("axis", s.axis);
        r.integer("position", s.position);
        r.integer("samples", s.samples);
        std::array<double, 3> box{};
        if (r.array("box_lo", box, 2)) s.box_lo = box;
        if (r.array("box_hi", box, 2)) s.box_hi = box;
        if (s.axis < 0 || s.axis > 2) throw ConfigError(r.at("axis"), "must be 0, 1 or 2");
        break;
      }
      case NodeSelector::Kind::point:
        if (!r.array("point", s.point, 2)) throw ConfigError(r.at("point"), "required");
        break;
      case NodeSelector::Kind::circle: {
        std::array<double, 2> c{};
        if (!r.array("center", c)) throw ConfigError(r.at("center"), "required");
        s.center = c;
        r.number("radius", s.radius);
        r.number("tolerance", s.tolerance);
        r.integer("samples", s.samples);
        if (!(s.radius > 0.0)) throw ConfigError(r.at("radius"), "must be positive");
        if (!(s.tolerance > 0.0)) throw ConfigError(r.at("tolerance"), "must be positive");
        break;
      }
      case NodeSelector::Kind::list: {
        const json* v = r.child("nodes");
        if (!v || !v->is_array() || v->empty()) throw ConfigError(r.at("nodes"), "expected a non-empty array");
        for (std::size_t i = 0; i < v->size(); ++i) {
          if (!(*v)[i].is_number_integer() || (*v)[i].get<int>() < 0)
            throw ConfigError(r.at("nodes") + "[" + std::to_string(i) + "]", "expected a node index");
          s.nodes.push_back((*v)[i].get<int>());
        }
        break;
      }
    }
  }
  if (s.samples < 0) throw ConfigError(r.at("samples"), "must be non-negative");
  r.finish();
  return out;
}

json selector_to_json(const SelectorConfig& c) {
  const NodeSelector& s = c.selector;
  if (c.bracket_hole) return {{"kind", "bracket-hole"}, {"samples", s.samples}};
  json j{{"kind", to_string(s.kind)}};
  switch (s.kind) {
    case NodeSelector::Kind::plane:
      j["axis"] = s.axis;
      j["position"] = s.position;
      j["samples"] = s.samples;
      if (s.box_lo) j["box_lo"] = *s.box_lo;
      if (s.box_hi) j["box_hi"] = *s.box_hi;
      break;
    case NodeSelector::Kind::point:
      j["point"] = s.point;
      break;
    case NodeSelector::Kind::circle:
      j["center"] = s.center;
      j["radius"] = s.radius;
      j["tolerance"] = s.tolerance;
      j["samples"] = s.samples;
      break;
    case NodeSelector::Kind::list:
      j["nodes"] = s.nodes;
      break;
  }
  return j;
}

}  // namespace

int RunConfig::dim() const {
  if (!domain.preset.empty()) return domain.preset == "lshape3d" ? 3 : 2;
  return domain.resolution[2] > 0 ? 3 : 2;
}

FieldMode RunConfig::mode() const {
  if (field_mode) return *field_mode;
  return strain.mode == StrainMode::anisotropic_aligned ? FieldMode::node : FieldMode::element;
}

RunConfig parse_config(const json& j, const std::filesystem::path& base) {
  RunConfig c;
  Reader root(j, "");

  // domain
  if (const json* d = root.child("domain")) {
    Reader r(*d, "domain");
    r.string("preset", c.domain.preset);
    r.string("mask", c.domain.mask);
    if (!c.domain.preset.empty() && !c.domain.mask.empty())
      throw ConfigError("domain", "preset and mask are mutually exclusive");
    if (c.domain.preset.empty() && c.domain.mask.empty()) throw ConfigError("domain", "preset or mask is required");
    if (!c.domain.preset.empty()) {
      static const std::set<std::string> presets{"lshape2d", "bracket2d", "square2d", "lshape3d"};
      if (!presets.count(c.domain.preset))
        throw ConfigError("domain.preset", "unknown preset '" + c.domain.preset + "'");
      if (!r.array("resolution", c.domain.resolution, 2)) throw ConfigError("domain.resolution", "required");
      const int need = c.domain.preset == "lshape3d" ? 3 : 2;
      for (int a = 0; a < need; ++a)
        if (c.domain.resolution[a] <= 0) throw ConfigError("domain.resolution", "extents must be positive");
      if (need == 2 && c.domain.resolution[2] != 0)
        throw ConfigError("domain.resolution", "2D presets take two extents");
    } else if (r.has("resolution")) {
      throw ConfigError("domain.resolution", "taken from the mask file");
    } else {
      std::filesystem::path p = c.domain.mask;
      if (p.is_relative() && !base.empty()) p = base / p;
      try {
        const VoxelData v = read_voxels(p);
        c.domain.resolution = {v.extents[0], v.extents[1], v.dim == 3 ? v.extents[2] : 0};
      } catch (const std::exception& e) {
        throw ConfigError("domain.mask", e.what());
      }
    }
    if (auto s = r.enumeration("start", start_from_string)) c.domain.start = *s;
    r.number("threshold", c.domain.threshold);
    if (!(c.domain.threshold > 0.0 && c.domain.threshold <= 1.0))
      throw ConfigError("domain.threshold", "must lie in (0, 1]");
    r.finish();
  } else {
    throw ConfigError("domain", "required");
  }

  // layers
  if (const json* l = root.child("layers")) {
    if (l->is_number_integer()) {
      c.layers.count = l->get<int>();
    } else if (l->is_object()) {
      Reader r(*l, "layers");
      double h = 0.0, len = 0.0;
      r.number("thickness", h);
      r.number("length", len);
      if (!(h > 0.0)) throw ConfigError("layers.thickness", "must be positive");
      if (!(len > 0.0)) throw ConfigError("layers.length", "must be positive");
      c.layers.thickness = h;
      c.layers.length = len;
      r.finish();
    } else {
      throw ConfigError("layers", "expected an integer or {thickness, length}");
    }
    if (!c.layers.thickness && c.layers.count < 1) throw ConfigError("layers", "must be at least 1");
  }

  // material
  if (const json* m = root.child("material")) {
    Reader r(*m, "material");
    r.number("E0", c.material.E0);
    r.number("nu", c.material.nu);
    r.number("Emin", c.material.Emin);
    r.number("p", c.material.p);
    r.number("q", c.material.q);
    r.boolean("plane_strain", c.material.plane_strain);
    r.finish();
    checked("material", [&] { c.material.validate(); });
  }

  // strain
  const int dim = c.dim();
  c.strain = InherentStrain::isotropic(dim, -0.01);
  if (const json* s = root.child("strain")) {
    Reader r(*s, "strain");
    if (auto mode = r.enumeration("mode", strain_mode_from_string)) c.strain.mode = *mode;
    if (c.strain.mode == StrainMode::isotropic) {
      double v = -0.01;
      r.number("value", v);
      c.strain = InherentStrain::isotropic(dim, v);
    } else {
      if (dim != 2) throw ConfigError("strain.mode", "aligned strain is available in 2D only");
      std::array<double, 3> local{-0.01, 0.0, 0.0};
      r.array("local", local);
      c.strain.voigt = Eigen::Vector3d(local[0], local[1], local[2]);
    }
    r.finish();
  }

  if (auto m = root.enumeration("field_mode", field_mode_from_string)) {
    c.field_mode = *m;
    if (c.strain.mode == StrainMode::anisotropic_aligned && *m != FieldMode::node)
      throw ConfigError("field_mode", "aligned strain needs a node field");
  }

  // measure
  if (const json* m = root.child("measure")) {
    Reader r(*m, "measure");
    if (auto k = r.enumeration("kind", measure_kind_from_string)) c.measure.kind = *k;
    if (const json* p = r.child("primary")) {
      c.measure.primary = parse_selector(*p, "measure.primary");
    } else {
      throw ConfigError("measure.primary", "required");
    }
    if (const json* p = r.child("secondary")) c.measure.secondary = parse_selector(*p, "measure.secondary");
    const bool two = c.measure.kind == MeasureKind::perpendicularity || c.measure.kind == MeasureKind::surface_flatness_3d;
    if (two != c.measure.secondary.has_value())
      throw ConfigError("measure.secondary", two ? "required for this measure" : "not used by this measure");
    if (c.measure.kind == MeasureKind::surface_flatness_3d && dim != 3)
      throw ConfigError("measure.kind", "surface-flatness-3d needs a 3D domain");
    if (c.measure.primary.bracket_hole && c.domain.preset != "bracket2d")
      throw ConfigError("measure.primary.kind", "bracket-hole needs the bracket2d preset");
    r.finish();
  } else {
    throw ConfigError("measure", "required");
  }

  // optimizer knobs
  OptSettings& o = c.optimizer;
  if (const json* s = root.child("continuation")) {
    Reader r(*s, "continuation");
    r.number("start", o.continuation.start);
    r.number("step", o.continuation.step);
    r.integer("interval", o.continuation.interval);
    r.number("max", o.continuation.max);
    r.finish();
  }
  root.number("gamma_c", o.gamma_c);
  root.number("gamma_v", o.gamma_v);
  root.integer("max_iters", o.max_iters);
  if (const json* s = root.child("mma")) {
    Reader r(*s, "mma");
    r.number("asyinit", o.mma.asyinit);
    r.number("asydecr", o.mma.asydecr);
    r.number("asyincr", o.mma.asyincr);
    r.number("move", o.mma.move);
    r.number("asymin", o.mma.asymin);
    r.number("albefa", o.mma.albefa);
    r.number("raa0", o.mma.raa0);
    r.number("c", o.mma.c);
    r.number("d", o.mma.d);
    r.number("epsimin", o.mma.epsimin);
    r.integer("max_conservative", o.mma.max_conservative);
    r.finish();
  }
  checked("", [&] { o.validate(); });

  // solver
  if (const json* s = root.child("solver")) {
    Reader r(*s, "solver");
    if (auto k = r.enumeration("kind", solver_kind_from_string)) c.simulation.solver.kind = *k;
    r.number("tolerance", c.simulation.solver.tolerance);
    r.integer("max_iterations", c.simulation.solver.max_iterations);
    r.boolean("retain_factorizations", c.simulation.retain_factorizations);
    if (!(c.simulation.solver.tolerance > 0.0)) throw ConfigError("solver.tolerance", "must be positive");
    if (c.simulation.solver.max_iterations < 1) throw ConfigError("solver.max_iterations", "must be positive");
    r.finish();
  }
  root.integer("threads", c.simulation.threads);
  if (c.simulation.threads < 1) throw ConfigError("threads", "must be at least 1");
  root.string("output", c.output);

  if (const json* g = root.child("gradcheck")) {
    Reader r(*g, "gradcheck");
    GradcheckConfig& gc = c.gradcheck;
    if (r.array("resolution", gc.resolution, 2))
      for (int a = 0; a < dim; ++a)
        if (gc.resolution[a] <= 0) throw ConfigError("gradcheck.resolution", "extents must be positive");
    r.integer("layers", gc.layers);
    r.number("beta", gc.beta);
    r.integer("components", gc.components);
    int seed = static_cast<int>(gc.seed);
    r.integer("seed", seed);
    if (seed < 0) throw ConfigError("gradcheck.seed", "must be non-negative");
    gc.seed = static_cast<unsigned>(seed);
    r.number("step", gc.step);
    if (gc.layers < 1) throw ConfigError("gradcheck.layers", "must be at least 1");
    if (!(gc.beta > 0.0)) throw ConfigError("gradcheck.beta", "must be positive");
    if (gc.components < 1) throw ConfigError("gradcheck.components", "must be at least 1");
    if (!(gc.step > 0.0)) throw ConfigError("gradcheck.step", "must be positive");
    r.finish();
  }
  if (dim == 3 && c.gradcheck.resolution[2] == 0) c.gradcheck.resolution = {8, 4, 6};

  root.finish();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("", path.string() + ": " + e.what());
  }
  return parse_config(j, path.parent_path());
}

json to_json(const RunConfig& c) {
  json j;
  json d{{"start", to_string(c.domain.start)}, {"threshold", c.domain.threshold}};
  if (!c.domain.preset.empty()) {
    d["preset"] = c.domain.preset;
    if (c.dim() == 3)
      d["resolution"] = c.domain.resolution;
    else
      d["resolution"] = std::array<int, 2>{c.domain.resolution[0], c.domain.resolution[1]};
  } else {
    d["mask"] = c.domain.mask;
  }
  j["domain"] = d;
  if (c.layers.thickness)
    j["layers"] = {{"thickness", *c.layers.thickness}, {"length", *c.layers.length}};
  else
    j["layers"] = c.layers.count;
  const Material& m = c.material;
  j["material"] = {{"E0", m.E0}, {"nu", m.nu}, {"Emin", m.Emin}, {"p", m.p}, {"q", m.q}, {"plane_strain", m.plane_strain}};
  if (c.strain.mode == StrainMode::isotropic)
    j["strain"] = {{"mode", to_string(c.strain.mode)}, {"value", c.strain.voigt[0]}};
  else
    j["strain"] = {{"mode", to_string(c.strain.mode)},
                   {"local", std::array<double, 3>{c.strain.voigt[0], c.strain.voigt[1], c.strain.voigt[2]}}};
  j["field_mode"] = to_string(c.mode());
  json meas{{"kind", to_string(c.measure.kind)}, {"primary", selector_to_json(c.measure.primary)}};
  if (c.measure.secondary) meas["secondary"] = selector_to_json(*c.measure.secondary);
  j["measure"] = meas;
  const OptSettings& o = c.optimizer;
  j["continuation"] = {{"start", o.continuation.start},
                       {"step", o.continuation.step},
                       {"interval", o.continuation.interval},
                       {"max", o.continuation.max}};
  j["gamma_c"] = o.gamma_c;
  j["gamma_v"] = o.gamma_v;
  j["max_iters"] = o.max_iters;
  j["mma"] = {{"asyinit", o.mma.asyinit}, {"asydecr", o.mma.asydecr}, {"asyincr", o.mma.asyincr},
              {"move", o.mma.move},       {"asymin", o.mma.asymin},   {"albefa", o.mma.albefa},
              {"raa0", o.mma.raa0},       {"c", o.mma.c},             {"d", o.mma.d},
              {"epsimin", o.mma.epsimin}, {"max_conservative", o.mma.max_conservative}};
  j["solver"] = {{"kind", to_string(c.simulation.solver.kind)},
                 {"tolerance", c.simulation.solver.tolerance},
                 {"max_iterations", c.simulation.solver.max_iterations},
                 {"retain_factorizations", c.simulation.retain_factorizations}};
  j["threads"] = c.simulation.threads;
  j["output"] = c.output;
  const GradcheckConfig& g = c.gradcheck;
  json gres = c.dim() == 3 ? json(g.resolution) : json(std::array<int, 2>{g.resolution[0], g.resolution[1]});
  j["gradcheck"] = {{"resolution", gres}, {"layers", g.layers},     {"beta", g.beta},
                    {"components", g.components}, {"seed", g.seed}, {"step", g.step}};
  return j;
}

Grid build_grid(const RunConfig& c, const std::filesystem::path& base, std::optional<std::array<int, 3>> resolution) {
  Grid g;
  if (!c.domain.preset.empty()) {
    g = build_preset(c.domain.preset, resolution.value_or(c.domain.resolution), c.domain.start);
  } else {
    if (resolution) throw std::invalid_argument("a mask domain cannot be rescaled");
    std::filesystem::path p = c.domain.mask;
    if (p.is_relative() && !base.empty()) p = base / p;
    g = grid_from_voxel_file(p, c.domain.start, c.domain.threshold);
  }
  return g;
}

InherentStrain resolve_strain(const RunConfig& c, const Grid& grid) {
  if (c.strain.mode == StrainMode::isotropic) return InherentStrain::isotropic(grid.dim(), c.strain.voigt[0]);
  if (grid.dim() != 2) throw ConfigError("strain.mode", "aligned strain is available in 2D only");
  return c.strain;
}

int resolve_layer_count(const RunConfig& c, const Grid& grid) {
  if (!c.layers.thickness) return c.layers.count;
  return choose_layer_count(grid.num_active(), *c.layers.thickness, *c.layers.length);
}

DistortionMeasure resolve_measure(const RunConfig& c, const Grid& grid) {
  auto resolve = [&](const SelectorConfig& s) {
    if (!s.bracket_hole) return s.selector;
    namespace pg = preset_geometry;
    NodeSelector out = s.selector;
    const double sx = grid.nel(0) / pg::bracket_ref_width;
    const double sy = grid.nel(1) / pg::bracket_ref_height;
    out.kind = NodeSelector::Kind::circle;
    out.center = {pg::bracket_center_x * sx, pg::bracket_center_y * sy};
    out.radius = pg::bracket_hole_radius * std::min(sx, sy);
    return out;
  };
  DistortionMeasure m;
  m.kind = c.measure.kind;
  m.primary = resolve(c.measure.primary);
  if (c.measure.secondary) m.secondary = resolve(*c.measure.secondary);
  return m;
}

}  // namespace seqopt
