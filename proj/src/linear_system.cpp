#include "seqopt/linear_system.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include <Eigen/CholmodSupport>
#include <Eigen/IterativeLinearSolvers>

namespace seqopt {

DofMap::DofMap(const Grid& grid) {
  const int dim = grid.dim();
  reduced_.assign(grid.num_dofs(), 0);
  for (int n : grid.fixed_nodes())
    for (int c = 0; c < dim; ++c) reduced_[n * dim + c] = -1;
  for (int d = 0; d < grid.num_dofs(); ++d) {
    if (reduced_[d] < 0) continue;
    reduced_[d] = static_cast<int>(full_.size());
    full_.push_back(d);
  }
}

Eigen::VectorXd DofMap::restrict(const Eigen::VectorXd& full) const {
  Eigen::VectorXd r(num_free());
  for (int i = 0; i < num_free(); ++i) r[i] = full[full_[i]];
  return r;
}

Eigen::VectorXd DofMap::expand(const Eigen::VectorXd& reduced) const {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(num_dofs());
  for (int i = 0; i < num_free(); ++i) f[full_[i]] = reduced[i];
  return f;
}

StiffnessAssembler::StiffnessAssembler(const Grid& grid, const DofMap& dofs, Eigen::MatrixXd element_matrix)
    : num_elements_(grid.num_elements()), ke_(std::move(element_matrix)) {
  const int dim = grid.dim();
  const int npe = grid.nodes_per_element();
  const int nloc = npe * dim;
  if (ke_.rows() != nloc || ke_.cols() != nloc) throw std::invalid_argument("element matrix has the wrong size");

  auto local_dofs = [&](int e) {
    std::vector<int> r(nloc);
    const auto nodes = grid.element_nodes(e);
    for (int a = 0; a < npe; ++a)
      for (int c = 0; c < dim; ++c) r[a * dim + c] = dofs.reduced(nodes[a] * dim + c);
    return r;
  };

  std::vector<Eigen::Triplet<double, int>> trip;
  for (int e = 0; e < num_elements_; ++e) {
    const auto r = local_dofs(e);
    for (int a = 0; a < nloc; ++a)
      for (int b = 0; b < nloc; ++b)
        if (r[a] >= 0 && r[b] >= 0 && r[a] >= r[b]) trip.emplace_back(r[a], r[b], 0.0);
  }
  pattern_.resize(dofs.num_free(), dofs.num_free());
  pattern_.setFromTriplets(trip.begin(), trip.end());
  pattern_.makeCompressed();
  trip.clear();
  trip.shrink_to_fit();

  const int* outer = pattern_.outerIndexPtr();
  const int* inner = pattern_.innerIndexPtr();
  // Entries per element vary next to fixed nodes, hence offsets.
  offsets_.reserve(num_elements_ + 1);
  offsets_.push_back(0);
  for (int e = 0; e < num_elements_; ++e) {
    const auto r = local_dofs(e);
    for (int a = 0; a < nloc; ++a)
      for (int b = 0; b < nloc; ++b) {
        if (r[a] < 0 || r[b] < 0 || r[a] < r[b]) continue;
        const int* begin = inner + outer[r[b]];
        const int* end = inner + outer[r[b] + 1];
        const int* it = std::lower_bound(begin, end, r[a]);
        slot_.push_back(static_cast<int>(it - inner));
        local_row_.push_back(static_cast<std::uint8_t>(a));
        local_col_.push_back(static_cast<std::uint8_t>(b));
      }
    offsets_.push_back(static_cast<int>(slot_.size()));
  }
}

SparseMatrix StiffnessAssembler::assemble(const Eigen::VectorXd& element_scale) const {
  if (element_scale.size() != num_elements_) throw std::invalid_argument("element scale vector has the wrong size");
  SparseMatrix K = pattern_;
  double* values = K.valuePtr();
  std::fill(values, values + K.nonZeros(), 0.0);
  for (int e = 0; e < num_elements_; ++e) {
    const double s = element_scale[e];
    for (int i = offsets_[e]; i < offsets_[e + 1]; ++i) values[slot_[i]] += s * ke_(local_row_[i], local_col_[i]);
  }
  return K;
}

std::string_view to_string(SolverKind kind) { return kind == SolverKind::direct ? "direct" : "pcg"; }

SolverKind solver_kind_from_string(std::string_view s) {
  if (s == "direct") return SolverKind::direct;
  if (s == "pcg") return SolverKind::pcg;
  throw std::invalid_argument("unknown solver kind '" + std::string(s) + "'");
}

double relative_residual(const SparseMatrix& lower, const Eigen::VectorXd& x, const Eigen::VectorXd& b) {
  const double nb = b.norm();
  const Eigen::VectorXd r = lower.selfadjointView<Eigen::Lower>() * x - b;
  return nb > 0.0 ? r.norm() / nb : r.norm();
}

namespace {

// Supernodal factorization relies on LAPACK; some optimized BLAS builds
// return wrong results on newer CPUs. Every solve is checked against the
// matrix and a failure switches to the BLAS-free simplicial factorization,
// for this and every later solver.
std::atomic<bool> supernodal_unreliable{false};

class CholmodSolver final : public SpdSolver {
public:
  CholmodSolver() {
    auto& common = llt_.cholmod();
    common.print = 0;
    // AMD, plus METIS when AMD's fill is poor (3D grids).
    common.nmethods = 0;
    common.postorder = 1;
  }

  void factorize(const SparseMatrix& lower) override {
    matrix_ = lower;
    norm_ = std::sqrt(2.0) * matrix_.norm();
    simplicial_ = simplicial_ || supernodal_unreliable;
    if (!simplicial_) {
      llt_.setMode(Eigen::CholmodSupernodalLLt);
      llt_.compute(matrix_);
      check_memory();
      if (llt_.info() == Eigen::Success) return;
      simplicial_ = supernodal_unreliable = true;
    }
    refactorize_simplicial();
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const override {
    if (rhs.squaredNorm() == 0.0) {
      last_residual_ = 0.0;
      return Eigen::VectorXd::Zero(rhs.size());
    }
    Eigen::VectorXd x = llt_.solve(rhs);
    last_residual_ = backward_error(x, rhs);
    if (last_residual_ > error_limit && !simplicial_) {
      simplicial_ = supernodal_unreliable = true;
      refactorize_simplicial();
      x = llt_.solve(rhs);
      last_residual_ = backward_error(x, rhs);
    }
    if (!(last_residual_ <= error_limit))
      throw SolverError("sparse Cholesky solve is inaccurate (backward error " + std::to_string(last_residual_) + ")",
                        last_residual_);
    return x;
  }

private:
  // Normwise backward error ||K x - b|| / (||K|| ||x|| + ||b||); a stable
  // factorization stays near machine precision even with quiet elements.
  static constexpr double error_limit = 1e-10;

  double backward_error(const Eigen::VectorXd& x, const Eigen::VectorXd& b) const {
    if (!x.allFinite()) return INFINITY;
    const Eigen::VectorXd r = matrix_.selfadjointView<Eigen::Lower>() * x - b;
    return r.norm() / (norm_ * x.norm() + b.norm());
  }

  void check_memory() const {
    if (llt_.cholmod().status == CHOLMOD_OUT_OF_MEMORY)
      throw SolverError("sparse Cholesky factorization ran out of memory (" + std::to_string(matrix_.rows()) +
                            " unknowns)",
                        INFINITY);
  }

  void refactorize_simplicial() const {
    llt_.setMode(Eigen::CholmodSimplicialLLt);
    llt_.compute(matrix_);
    check_memory();
    if (llt_.info() != Eigen::Success) throw SolverError("sparse Cholesky factorization failed", INFINITY);
  }

  SparseMatrix matrix_;
  double norm_ = 0.0;
  mutable bool simplicial_ = false;
  mutable Eigen::CholmodDecomposition<SparseMatrix, Eigen::Lower> llt_;
};

class PcgSolver final : public SpdSolver {
public:
  explicit PcgSolver(const SolverOptions& o) : options_(o) {}

  void factorize(const SparseMatrix& lower) override {
    matrix_ = lower;
    cg_.setTolerance(options_.tolerance);
    cg_.setMaxIterations(options_.max_iterations);
    cg_.compute(matrix_);
    if (cg_.info() != Eigen::Success) throw SolverError("incomplete Cholesky preconditioner failed", INFINITY);
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const override {
    if (rhs.squaredNorm() == 0.0) {
      last_residual_ = 0.0;
      return Eigen::VectorXd::Zero(rhs.size());
    }
    Eigen::VectorXd x = cg_.solve(rhs);
    last_residual_ = relative_residual(matrix_, x, rhs);
    if (!x.allFinite() || cg_.info() != Eigen::Success)
      throw SolverError("conjugate gradients did not converge (relative residual " + std::to_string(last_residual_) + ")",
                        last_residual_);
    return x;
  }

private:
  SolverOptions options_;
  SparseMatrix matrix_;
  Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower, Eigen::IncompleteCholesky<double, Eigen::Lower>> cg_;
};

}  // namespace

std::unique_ptr<SpdSolver> make_solver(const SolverOptions& options) {
  if (options.kind == SolverKind::direct) return std::make_unique<CholmodSolver>();
  return std::make_unique<PcgSolver>(options);
}

Eigen::VectorXd assemble_and_solve(const Grid& grid, const Eigen::VectorXd& densities, const Eigen::VectorXd& loads,
                                   const Material& material, const SolverOptions& options) {
  if (densities.size() != grid.num_elements()) throw std::invalid_argument("density vector has the wrong size");
  if (loads.size() != grid.num_dofs()) throw std::invalid_argument("load vector has the wrong size");
  const DofMap dofs(grid);
  const StiffnessAssembler assembler(
      grid, dofs, material.E0 * element_stiffness_unit(grid.dim(), material.nu, material.plane_strain));
  Eigen::VectorXd scale(grid.num_elements());
  for (int e = 0; e < grid.num_elements(); ++e) scale[e] = simp_scale(grid.is_active(e) ? densities[e] : 0.0, material);
  const SparseMatrix K = assembler.assemble(scale);
  auto solver = make_solver(options);
  solver->factorize(K);
  const Eigen::VectorXd b = dofs.restrict(loads);
  const Eigen::VectorXd x = solver->solve(b);
  return dofs.expand(x);
}

}  // namespace seqopt
