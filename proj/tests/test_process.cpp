#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "seqopt/process.hpp"

using namespace seqopt;

namespace {

TimeField random_field(const Grid& g, FieldMode mode, unsigned seed) {
  TimeField f = init_time_field(g, mode);
  const auto lay = make_layout(g, mode);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i : lay.free) f.values[i] = u(rng);
  return f;
}

}  // namespace

TEST_CASE("stage solves are independent of their order") {
  Grid g = build_preset("lshape2d", {24, 16, 0});
  ForwardModel model(g, Material{}, InherentStrain::isotropic(2, -0.01));
  const TimeField f = random_field(g, FieldMode::element, 3);
  const int N = 6;
  const auto sim = model.simulate(f, {N, 30.0});

  std::vector<int> order(N);
  std::iota(order.begin(), order.end(), 1);
  std::mt19937 rng(8);
  for (int trial = 0; trial < 3; ++trial) {
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<Eigen::VectorXd> du(N + 1);
    for (int j : order) du[j] = model.solve_stage(sim.densities.rho[j], model.stage_loads(sim, j));
    Eigen::VectorXd u = Eigen::VectorXd::Zero(g.num_dofs());
    for (int j : order) u += du[j];
    CHECK((u - sim.u).lpNorm<Eigen::Infinity>() <= 1e-12);
  }
  CHECK(stage_order_independence_check(sim, 1));
  CHECK(stage_order_independence_check(sim, 99));
  CHECK((sim.accumulated(N) - sim.u).lpNorm<Eigen::Infinity>() <= 1e-15);
}

TEST_CASE("threaded stage solves give identical results") {
  Grid g = build_preset("bracket2d", {36, 24, 0});
  const TimeField f = random_field(g, FieldMode::element, 4);
  SimulationOptions one, four;
  four.threads = 4;
  const auto a = ForwardModel(g, Material{}, InherentStrain::isotropic(2, -0.01), one).simulate(f, {5, 30.0});
  const auto b = ForwardModel(g, Material{}, InherentStrain::isotropic(2, -0.01), four).simulate(f, {5, 30.0});
  CHECK((a.u - b.u).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("one layer is a single solve of the whole component") {
  Grid g = build_preset("lshape2d", {12, 8, 0});
  Material mat;
  ForwardModel model(g, mat, InherentStrain::isotropic(2, -0.01));
  const auto sim = model.simulate(init_time_field(g), {1, 30.0});
  Eigen::VectorXd rho = Eigen::VectorXd::Zero(g.num_elements()), f = Eigen::VectorXd::Zero(g.num_dofs());
  const Eigen::VectorXd fe = equivalent_forces(InherentStrain::isotropic(2, -0.01).voigt, 2, mat.nu);
  for (int e = 0; e < g.num_elements(); ++e) {
    if (!g.is_active(e)) continue;
    rho[e] = 1.0;
    const auto nodes = g.element_nodes(e);
    for (int a = 0; a < 4; ++a)
      for (int c = 0; c < 2; ++c) f[nodes[a] * 2 + c] += fe[a * 2 + c];
  }
  const Eigen::VectorXd u = assemble_and_solve(g, rho, f, mat);
  CHECK((u - sim.u).lpNorm<Eigen::Infinity>() <= 1e-12 * u.lpNorm<Eigen::Infinity>());
  for (int n : g.fixed_nodes()) CHECK(sim.u.segment(2 * n, 2).norm() == 0.0);
}

TEST_CASE("direct and iterative solvers agree on the built material") {
  Grid g = build_preset("lshape2d", {16, 12, 0});
  const TimeField f = init_time_field(g);
  SimulationOptions pcg;
  pcg.solver.kind = SolverKind::pcg;
  pcg.solver.tolerance = 1e-12;
  pcg.retain_factorizations = false;
  const ForwardModel a(g, Material{}, InherentStrain::isotropic(2, -0.01));
  const ForwardModel b(g, Material{}, InherentStrain::isotropic(2, -0.01), pcg);
  const auto sim = a.simulate_binary(f, 4);
  for (int j = 1; j <= 4; ++j) {
    const Eigen::VectorXd& rho = sim.densities.rho[j];
    const Eigen::VectorXd da = a.solve_stage(rho, a.stage_loads(sim, j));
    const Eigen::VectorXd db = b.solve_stage(rho, b.stage_loads(sim, j));
    // Void nodes float on Emin and are only determined to the solver tolerance times the contrast.
    double err = 0.0;
    for (int e = 0; e < g.num_elements(); ++e) {
      if (rho[e] < 1.0) continue;
      const auto nodes = g.element_nodes(e);
      for (int k = 0; k < 4; ++k)
        err = std::max(err, (da - db).segment(2 * nodes[k], 2).cwiseAbs().maxCoeff());
    }
    CHECK(err <= 1e-8 * da.lpNorm<Eigen::Infinity>());
  }
}

TEST_CASE("shrinkage strain contracts an unconstrained column") {
  Grid g = build_preset("square2d", {4, 10, 0}, StartRegion::bottom);
  ForwardModel model(g, Material{}, InherentStrain::isotropic(2, -0.01));
  const auto sim = model.simulate_binary(planar_time_field(g), 5);
  // Later layers sit on already shrunk material: the top moves down.
  const int top = g.node_id(2, 10);
  CHECK(sim.u[2 * top + 1] < 0.0);
  CHECK(sim.binary);
  CHECK(sim.solvers.size() == 6);
}

TEST_CASE("3D stages run and respect the supports") {
  Grid g = build_preset("lshape3d", {6, 2, 4});
  SimulationOptions opt;
  opt.retain_factorizations = false;
  ForwardModel model(g, Material{}, InherentStrain::isotropic(3, -0.01), opt);
  const auto sim = model.simulate(init_time_field(g), {3, 30.0});
  CHECK(sim.u.allFinite());
  CHECK(sim.u.norm() > 0.0);
  CHECK(sim.solvers.empty());
  for (int n : g.fixed_nodes()) CHECK(sim.u.segment(3 * n, 3).norm() == 0.0);
}

TEST_CASE("model rejects inconsistent inputs") {
  Grid g = build_preset("lshape2d", {8, 6, 0});
  CHECK_THROWS(ForwardModel(g, Material{}, InherentStrain::isotropic(3, -0.01)));
  Grid g3 = build_preset("lshape3d", {4, 2, 4});
  InherentStrain aligned{Eigen::VectorXd::Zero(6), StrainMode::anisotropic_aligned};
  CHECK_THROWS(ForwardModel(g3, Material{}, aligned));
  InherentStrain a2{Eigen::Vector3d(-0.01, 0, 0), StrainMode::anisotropic_aligned};
  ForwardModel model(g, Material{}, a2);
  CHECK_THROWS(model.simulate(init_time_field(g, FieldMode::element), {2, 30.0}));
}

TEST_CASE("parallel_for covers every index and forwards exceptions") {
  std::vector<int> hit(37, 0);
  parallel_for(37, 4, [&](int i) { hit[i] += 1; });
  CHECK(std::all_of(hit.begin(), hit.end(), [](int h) { return h == 1; }));
  CHECK_THROWS(parallel_for(5, 3, [](int i) {
    if (i == 2) throw std::runtime_error("boom");
  }));
}
