#include "seqopt/measures.hpp"

#include <stdexcept>
#include <string>

namespace seqopt {

void QuadraticForm::add_term(Term term) {
  if (term.dofs.empty()) throw std::invalid_argument("measure term has no degrees of freedom");
  if (term.centered && term.dofs.size() < 2) throw std::invalid_argument("flatness needs at least two nodes");
  for (int d : term.dofs)
    if (d < 0 || d >= num_dofs_) throw std::invalid_argument("measure dof out of range");
  if (!(term.weight >= 0.0)) throw std::invalid_argument("measure weight must be non-negative");
  terms_.push_back(std::move(term));
}

double QuadraticForm::evaluate(const Eigen::VectorXd& u) const {
  double total = 0.0;
  for (const auto& t : terms_) {
    const double n = static_cast<double>(t.dofs.size());
    double mean = 0.0;
    if (t.centered) {
      for (int d : t.dofs) mean += u[d];
      mean /= n;
    }
    double s = 0.0;
    for (int d : t.dofs) s += (u[d] - mean) * (u[d] - mean);
    total += t.centered ? t.weight * s / n : t.weight * s;
  }
  return total;
}

Eigen::VectorXd QuadraticForm::apply(const Eigen::VectorXd& u) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(num_dofs_);
  for (const auto& t : terms_) {
    const double n = static_cast<double>(t.dofs.size());
    if (t.centered) {
      double mean = 0.0;
      for (int d : t.dofs) mean += u[d];
      mean /= n;
      for (int d : t.dofs) out[d] += t.weight / n * (u[d] - mean);
    } else {
      for (int d : t.dofs) out[d] += t.weight * u[d];
    }
  }
  return out;
}

SparseMatrix QuadraticForm::to_sparse() const {
  std::vector<Eigen::Triplet<double, int>> trip;
  for (const auto& t : terms_) {
    const double n = static_cast<double>(t.dofs.size());
    if (t.centered) {
      for (int a : t.dofs) {
        trip.emplace_back(a, a, t.weight / n);
        for (int b : t.dofs) trip.emplace_back(a, b, -t.weight / (n * n));
      }
    } else {
      for (int a : t.dofs) trip.emplace_back(a, a, t.weight);
    }
  }
  SparseMatrix Q(num_dofs_, num_dofs_);
  Q.setFromTriplets(trip.begin(), trip.end());
  return Q;
}

std::string_view to_string(MeasureKind kind) {
  switch (kind) {
    case MeasureKind::node_displacement: return "node-displacement";
    case MeasureKind::edge_flatness: return "edge-flatness";
    case MeasureKind::perpendicularity: return "perpendicularity";
    case MeasureKind::node_set_average: return "node-set-average";
    case MeasureKind::surface_flatness_3d: return "surface-flatness-3d";
  }
  return "?";
}

MeasureKind measure_kind_from_string(std::string_view s) {
  for (auto k : {MeasureKind::node_displacement, MeasureKind::edge_flatness, MeasureKind::perpendicularity,
                 MeasureKind::node_set_average, MeasureKind::surface_flatness_3d})
    if (s == to_string(k)) return k;
  throw std::invalid_argument("unknown measure kind '" + std::string(s) + "'");
}

namespace {

std::vector<int> component_dofs(const Grid& grid, const std::vector<int>& nodes, int component) {
  std::vector<int> dofs;
  dofs.reserve(nodes.size());
  for (int n : nodes) dofs.push_back(n * grid.dim() + component);
  return dofs;
}

std::vector<int> all_dofs(const Grid& grid, const std::vector<int>& nodes) {
  std::vector<int> dofs;
  for (int n : nodes)
    for (int c = 0; c < grid.dim(); ++c) dofs.push_back(n * grid.dim() + c);
  return dofs;
}

const NodeSelector& require_secondary(const DistortionMeasure& m) {
  if (!m.secondary) throw std::invalid_argument(std::string(to_string(m.kind)) + " needs a second node set");
  return *m.secondary;
}

}  // namespace

QuadraticForm compile(const DistortionMeasure& measure, const Grid& grid) {
  QuadraticForm q(grid.num_dofs());
  const auto primary = resolve_nodes(grid, measure.primary);
  const int up = grid.dim() - 1;
  switch (measure.kind) {
    case MeasureKind::node_displacement:
      q.add_term({all_dofs(grid, primary), 1.0, false});
      break;
    case MeasureKind::edge_flatness:
      q.add_term({component_dofs(grid, primary, up), 1.0, true});
      break;
    case MeasureKind::perpendicularity: {
      const auto second = resolve_nodes(grid, require_secondary(measure));
      q.add_term({component_dofs(grid, primary, up), 1.0, true});
      q.add_term({component_dofs(grid, second, 0), 1.0, true});
      break;
    }
    case MeasureKind::node_set_average:
      q.add_term({all_dofs(grid, primary), 1.0 / static_cast<double>(primary.size()), false});
      break;
    case MeasureKind::surface_flatness_3d: {
      if (grid.dim() != 3) throw std::invalid_argument("surface-flatness-3d needs a 3D grid");
      const auto second = resolve_nodes(grid, require_secondary(measure));
      q.add_term({component_dofs(grid, primary, 0), 1.0, true});
      q.add_term({component_dofs(grid, second, 2), 1.0, true});
      break;
    }
  }
  return q;
}

}  // namespace seqopt
