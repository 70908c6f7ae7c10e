#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "seqopt/grid.hpp"
#include "seqopt/linear_system.hpp"

namespace seqopt {

/// Sum of terms over the final displacement vector u:
///   squared:  weight * sum_d u_d^2
///   centered: weight / n * sum_d (u_d - mean)^2
/// i.e. u^T Q u with Q symmetric positive semidefinite. Q is kept in this
/// factored form; to_sparse() materializes it.
class QuadraticForm {
public:
  struct Term {
    std::vector<int> dofs;
    double weight = 1.0;
    bool centered = false;
  };

  QuadraticForm() = default;
  explicit QuadraticForm(int num_dofs) : num_dofs_(num_dofs) {}

  void add_term(Term term);
  int num_dofs() const { return num_dofs_; }
  const std::vector<Term>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  double evaluate(const Eigen::VectorXd& u) const;
  Eigen::VectorXd apply(const Eigen::VectorXd& u) const;  // Q u
  Eigen::VectorXd gradient(const Eigen::VectorXd& u) const { return 2.0 * apply(u); }
  SparseMatrix to_sparse() const;

private:
  int num_dofs_ = 0;
  std::vector<Term> terms_;
};

enum class MeasureKind { node_displacement, edge_flatness, perpendicularity, node_set_average, surface_flatness_3d };

std::string_view to_string(MeasureKind kind);
MeasureKind measure_kind_from_string(std::string_view s);

/// Declarative distortion measure.
///   node_displacement:   |u|^2 summed over `primary` nodes
///   edge_flatness:       centered vertical components over `primary`
///   perpendicularity:    edge_flatness(primary, vertical) + centered x over `secondary`
///   node_set_average:    mean |u|^2 over `primary`
///   surface_flatness_3d: centered x over `primary` + centered z over `secondary`
struct DistortionMeasure {
  MeasureKind kind = MeasureKind::edge_flatness;
  NodeSelector primary;
  std::optional<NodeSelector> secondary;
};

QuadraticForm compile(const DistortionMeasure& measure, const Grid& grid);

}  // namespace seqopt
