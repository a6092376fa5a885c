#include "scsd/solver.hpp"

#include "scsd/phantom.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <numbers>
#include <random>

using namespace scsd;

namespace {

Dictionary small_dictionary(double b = 3000.0, int spiral_count = 33) {
  auto acq = icosa_tessellate(2, true).directions;
  acq.b_value = b;
  DirectionSet recon = saff_spiral(spiral_count);
  return build_dictionary(acq, recon, SfrParams{17e-4, 3e-4, b});
}

SignalVolume random_signal(const Dictionary& dict, Dims3 dims, std::uint64_t seed,
                           double noise = 0.01) {
  SignalVolume s;
  s.dims = dims;
  s.acquisition = dict.acquisition;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, dict.num_recon() - 1);
  std::uniform_real_distribution<double> mag(0.2, 1.0);
  std::normal_distribution<double> gauss(0.0, noise);
  s.data.resize(dict.num_samples(), dims.count());
  for (long long i = 0; i < dims.count(); ++i) {
    Eigen::VectorXd f0 = Eigen::VectorXd::Zero(dict.num_recon());
    f0[pick(rng)] = mag(rng);
    f0[pick(rng)] += 0.5 * mag(rng);
    Eigen::VectorXd col = dict.H * f0;
    for (int k = 0; k < col.size(); ++k) col[k] = std::max(col[k] + gauss(rng), 0.0);
    s.data.col(i) = col;
  }
  return s;
}

} // namespace

TEST_CASE("objective special cases") {
  const Dictionary dict = small_dictionary();
  const Dims3 dims{2, 2, 1};
  SolverConfig cfg;
  cfg.include_iso_column = true;
  cfg.lambda = 0.1;
  cfg.mu = 0.2;
  cfg.nu = 0.05;

  MatRM s = MatRM::Constant(dict.num_samples(), dims.count(), 0.3);

  SUBCASE("zero coefficients give half the squared signal norm") {
    const MatRM f = MatRM::Zero(dict.num_recon() + 1, dims.count());
    const auto val = objective(f, dict, s, cfg, dims);
    CHECK(val.feasible);
    CHECK(val.total() == doctest::Approx(0.5 * s.squaredNorm()).epsilon(1e-12));
  }
  SUBCASE("exact sparse code with zero weights has zero objective") {
    SolverConfig plain;
    plain.include_iso_column = true;
    MatRM f0 = MatRM::Zero(dict.num_recon() + 1, dims.count());
    f0(3, 0) = 0.7;
    f0(10, 1) = 0.4;
    f0(dict.num_recon(), 2) = 0.2;
    const MatRM sf = dict.Phi * f0;
    const auto val = objective(f0, dict, sf, plain, dims);
    CHECK(val.total() == doctest::Approx(0.0).epsilon(1e-20));
  }
  SUBCASE("negative entries raise the infinity flag") {
    MatRM f = MatRM::Zero(dict.num_recon() + 1, dims.count());
    f(0, 0) = -1e-6;
    const auto val = objective(f, dict, s, cfg, dims);
    CHECK_FALSE(val.feasible);
    CHECK(std::isinf(val.total()));
    CHECK(std::isfinite(val.finite_part));
  }
}

TEST_CASE("least-squares step satisfies its normal equations") {
  const Dictionary dict = small_dictionary();
  const Dims3 dims{3, 3, 1};
  SolverConfig cfg;
  cfg.include_iso_column = true;
  SignalVolume s = random_signal(dict, dims, 12);
  const PrecomputedLs pre = precompute_ls(dict, s, cfg);
  const int n = dict.num_recon() + 1;

  SolverState st = SolverState::zeros(n, dims.count());
  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss(0.0, 0.5);
  for (auto* m : {&st.u, &st.v, &st.p_u, &st.p_v})
    for (Eigen::Index i = 0; i < m->size(); ++i) *(m->data() + i) = gauss(rng);

  step_ls(st, pre, cfg);

  const MatRM rhs =
      pre.op_t_s + cfg.delta_u * (st.u - st.p_u) + cfg.delta_v * (st.v - st.p_v);
  const MatX normal =
      dict.Phi.transpose() * dict.Phi + MatX::Identity(n, n) * (cfg.delta_u + cfg.delta_v);
  const double resid = (normal * st.f - rhs).cwiseAbs().maxCoeff();
  CHECK(resid < 1e-10);

  SUBCASE("matches a dense direct solve") {
    const MatRM direct = normal.ldlt().solve(MatX(rhs)).eval();
    CHECK((st.f - direct).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("least-squares step fixes a consistent state") {
  const Dictionary dict = small_dictionary();
  const Dims3 dims{2, 2, 1};
  SolverConfig cfg;
  cfg.include_iso_column = true;

  // s = Phi f_prev, u = v = f_prev, duals zero: f must stay put
  const int n = dict.num_recon() + 1;
  MatRM f_prev = MatRM::Zero(n, dims.count());
  f_prev(5, 0) = 0.8;
  f_prev(20, 3) = 0.3;
  SignalVolume s;
  s.dims = dims;
  s.acquisition = dict.acquisition;
  s.data = dict.Phi * f_prev;

  const PrecomputedLs pre = precompute_ls(dict, s, cfg);
  SolverState st = SolverState::zeros(n, dims.count());
  st.u = f_prev;
  st.v = f_prev;
  step_ls(st, pre, cfg);
  CHECK((st.f - f_prev).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("shrinkage table") {
  const Dictionary dict = small_dictionary();
  SolverConfig cfg;
  cfg.lambda = 0.25;
  cfg.delta_u = 0.5; // threshold 0.5
  SolverState st = SolverState::zeros(3, 2);
  st.f.setZero();
  st.p_u.setZero();
  st.f(0, 0) = 0.3;
  st.f(1, 0) = 1.2;
  st.f(2, 0) = -2.0;
  step_shrink(st, cfg);
  CHECK(st.u(0, 0) == 0.0);
  CHECK(st.u(1, 0) == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(st.u(2, 0) == 0.0);
  CHECK(st.u(0, 1) == 0.0);
}

TEST_CASE("spatial step pass-through and constant fixing") {
  const Dictionary dict = small_dictionary(3000.0, 15);
  const Dims3 dims{4, 3, 2};
  const int n = dict.num_recon() + 1;

  SolverState st = SolverState::zeros(n, dims.count());
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (Eigen::Index i = 0; i < st.f.size(); ++i) *(st.f.data() + i) = u01(rng);
  for (Eigen::Index i = 0; i < st.p_v.size(); ++i) *(st.p_v.data() + i) = u01(rng) - 0.5;

  SUBCASE("zero weights copy f + p_v") {
    SolverConfig cfg;
    cfg.include_iso_column = true;
    step_spatial(st, cfg, nullptr, dims);
    CHECK((st.v - (st.f + st.p_v)).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("constant rows are fixed points of both operators") {
    SolverConfig cfg;
    cfg.include_iso_column = true;
    cfg.mu = 0.4;
    cfg.nu = 0.01;
    for (int j = 0; j < n; ++j) st.f.row(j).setConstant(0.1 * (j + 1));
    st.p_v.setZero();
    FilterBank filters(dict.recon_dirs, cfg.tau());
    step_spatial(st, cfg, &filters, dims);
    CHECK((st.v - st.f).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("admm with zero weights matches projected-gradient nonnegative least squares") {
  const Dictionary dict = small_dictionary();
  const Dims3 dims{3, 3, 1};
  SolverConfig cfg;
  cfg.include_iso_column = false;
  cfg.max_iters = 4000;
  cfg.primal_tol = 1e-9;
  cfg.track_objective = false;

  SignalVolume s = random_signal(dict, dims, 99, 0.02);
  const AdmmSolution sol = admm_solve(s, dict, cfg);

  double oracle_obj = 0.0;
  for (long long i = 0; i < dims.count(); ++i) {
    const Eigen::VectorXd x =
        oracle::nnls_projected_gradient(dict.H, s.data.col(i), 200000);
    oracle_obj += 0.5 * (dict.H * x - s.data.col(i).eval()).squaredNorm();
  }
  const double admm_obj =
      objective(sol.coefficients.data, dict, s.data, cfg, dims).total();
  CHECK(std::abs(admm_obj - oracle_obj) < 1e-4);
}

TEST_CASE("admm objective matches a long primal-dual solve of the full cost") {
  const Dictionary dict = small_dictionary();
  const Dims3 dims{4, 4, 1};
  SignalVolume s = random_signal(dict, dims, 2024, 0.02);

  SUBCASE("tv and l1 terms, no fibre continuity") {
    SolverConfig cfg;
    cfg.include_iso_column = true;
    cfg.lambda = 0.07;
    cfg.nu = 0.01;
    cfg.max_iters = 4000;
    cfg.primal_tol = 1e-8;
    cfg.track_objective = false;
    cfg.tv_cfg.max_iters = 200;
    cfg.tv_cfg.tol = 1e-9;

    const AdmmSolution sol = admm_solve(s, dict, cfg);
    const MatRM ref = oracle::pdhg_solve(s, dict, cfg, 100000);
    const double obj_admm = objective(sol.coefficients.data, dict, s.data, cfg, dims).total();
    const double obj_ref = objective(ref, dict, s.data, cfg, dims).total();
    CHECK(std::abs(obj_admm - obj_ref) / obj_ref < 0.005);
  }
  SUBCASE("full configuration including fibre continuity") {
    SolverConfig cfg;
    cfg.include_iso_column = true;
    cfg.lambda = 0.03;
    cfg.mu = 0.4;
    cfg.nu = 0.01;
    cfg.max_iters = 4000;
    cfg.primal_tol = 1e-8;
    cfg.track_objective = false;
    cfg.tv_cfg.max_iters = 200;
    cfg.tv_cfg.tol = 1e-9;

    const AdmmSolution sol = admm_solve(s, dict, cfg);
    const MatRM ref = oracle::pdhg_solve(s, dict, cfg, 100000);
    const double obj_admm = objective(sol.coefficients.data, dict, s.data, cfg, dims).total();
    const double obj_ref = objective(ref, dict, s.data, cfg, dims).total();
    CHECK(std::abs(obj_admm - obj_ref) / obj_ref < 0.005);
  }
}

TEST_CASE("noise-free single-fibre volume is recovered within one mesh step") {
  auto acq = icosa_tessellate(2, true).directions;
  acq.b_value = 3000.0;
  const auto recon = icosa_tessellate(3, true);
  const Dictionary dict = build_dictionary(acq, recon.directions, SfrParams{17e-4, 3e-4, 3000.0});

  const Dims3 dims{4, 4, 2};
  const Vec3 fibre = Vec3(0.35, 0.6, 0.72).normalized(); // deliberately off-grid
  SignalVolume s;
  s.dims = dims;
  s.acquisition = acq;
  const Eigen::VectorXd sig = synth_signal({{fibre, 1.0, 17e-4, 3e-4}}, 0.0, 8e-4, acq);
  s.data.resize(acq.size(), dims.count());
  s.data.colwise() = sig;

  SolverConfig cfg;
  cfg.lambda = 0.03;
  cfg.mu = 0.4;
  cfg.nu = 0.01;
  cfg.include_iso_column = true;
  cfg.num_threads = 2;
  cfg.track_objective = false;

  const AdmmSolution sol = admm_solve(s, dict, cfg);
  for (long long i = 0; i < dims.count(); ++i) {
    Eigen::Index peak = 0;
    sol.coefficients.data.col(i).head(dict.num_recon()).maxCoeff(&peak);
    const double cosang =
        std::clamp(std::abs(recon.directions[static_cast<int>(peak)].dot(fibre)), 0.0, 1.0);
    CHECK(std::acos(cosang) * 180.0 / std::numbers::pi < 8.0);
  }
}

TEST_CASE("purely isotropic volume yields a flat idm and silent fodf rows") {
  auto acq = icosa_tessellate(2, true).directions;
  acq.b_value = 3000.0;
  const auto recon = icosa_tessellate(3, true);
  const Dictionary dict = build_dictionary(acq, recon.directions, SfrParams{17e-4, 3e-4, 3000.0});

  PhantomSpec spec;
  spec.dims = {6, 6, 4};
  spec.p_iso_inside = 1.0; // no anisotropic compartments anywhere
  spec.sfr = SfrParams{17e-4, 3e-4, 3000.0};
  const PhantomData ph = generate_phantom(spec, acq);

  SolverConfig cfg;
  cfg.lambda = 0.03;
  cfg.mu = 0.4;
  cfg.nu = 0.01;
  cfg.include_iso_column = true;
  cfg.num_threads = 2;
  cfg.track_objective = false;

  const AdmmSolution sol = admm_solve(ph.signal, dict, cfg);
  const double iso_true = std::exp(-3000.0 * 8e-4);
  const auto idm = sol.coefficients.idm();
  for (long long i = 0; i < spec.dims.count(); ++i) {
    const double aniso_max = sol.coefficients.data.col(i).head(dict.num_recon()).maxCoeff();
    CHECK(aniso_max < 0.05 * idm[i]);
    CHECK(idm[i] == doctest::Approx(iso_true).epsilon(0.05));
  }
}

TEST_CASE("objective at the returned iterate never exceeds the zero solution") {
  const Dictionary dict = small_dictionary();
  const Dims3 dims{3, 3, 2};
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    SignalVolume s = random_signal(dict, dims, seed, 0.05);
    SolverConfig cfg;
    cfg.include_iso_column = true;
    cfg.lambda = 0.03;
    cfg.nu = 0.01;
    cfg.max_iters = 150;
    cfg.track_objective = false;
    const AdmmSolution sol = admm_solve(s, dict, cfg);
    const double at_u = objective(sol.coefficients.data, dict, s.data, cfg, dims).total();
    CHECK(at_u <= 0.5 * s.data.squaredNorm());
  }
}

TEST_CASE("support is invariant under a mirrored voxel ordering") {
  // reflecting the grid, the gradient scheme, and the reconstruction
  // directions through x -> -x relabels voxels; the detected support must
  // relabel the same way
  auto acq = icosa_tessellate(2, true).directions;
  acq.b_value = 3000.0;
  const auto recon = icosa_tessellate(2, true);

  auto mirror_dirs = [](DirectionSet d) {
    for (auto& v : d.directions) v.x() = -v.x();
    return d;
  };
  const DirectionSet acq_m = mirror_dirs(acq);
  DirectionSet recon_m = mirror_dirs(recon.directions);

  const Dictionary dict = build_dictionary(acq, recon.directions, SfrParams{17e-4, 3e-4, 3000.0});
  const Dictionary dict_m = build_dictionary(acq_m, recon_m, SfrParams{17e-4, 3e-4, 3000.0});
  CHECK((dict.H - dict_m.H).cwiseAbs().maxCoeff() == 0.0);

  PhantomSpec spec;
  spec.dims = {6, 5, 4};
  spec.crossing_angle_deg = 55.0;
  spec.p_iso_inside = 0.25;
  spec.sfr = SfrParams{17e-4, 3e-4, 3000.0};
  spec.snr = 7.0;
  const PhantomData ph = generate_phantom(spec, acq);

  SignalVolume mirrored;
  mirrored.dims = spec.dims;
  mirrored.acquisition = acq_m;
  mirrored.data.resize(ph.signal.data.rows(), ph.signal.data.cols());
  for (int k = 0; k < spec.dims.nz; ++k)
    for (int j = 0; j < spec.dims.ny; ++j)
      for (int i = 0; i < spec.dims.nx; ++i)
        mirrored.data.col(voxel_index(spec.dims.nx - 1 - i, j, k, spec.dims)) =
            ph.signal.data.col(voxel_index(i, j, k, spec.dims));

  SolverConfig cfg;
  cfg.lambda = 0.03;
  cfg.mu = 0.4;
  cfg.nu = 0.01;
  cfg.include_iso_column = true;
  cfg.max_iters = 80;
  cfg.track_objective = false;

  const AdmmSolution a = admm_solve(ph.signal, dict, cfg);
  const AdmmSolution b = admm_solve(mirrored, dict_m, cfg);

  const double thr_a = 1e-3 * a.coefficients.data.maxCoeff();
  const double thr_b = 1e-3 * b.coefficients.data.maxCoeff();
  for (int k = 0; k < spec.dims.nz; ++k)
    for (int j = 0; j < spec.dims.ny; ++j)
      for (int i = 0; i < spec.dims.nx; ++i) {
        const auto ca = a.coefficients.data.col(voxel_index(i, j, k, spec.dims));
        const auto cb =
            b.coefficients.data.col(voxel_index(spec.dims.nx - 1 - i, j, k, spec.dims));
        for (int r = 0; r < ca.size(); ++r)
          CHECK((ca[r] > thr_a) == (cb[r] > thr_b));
      }
}

TEST_CASE("solver rejects inconsistent inputs") {
  const Dictionary dict = small_dictionary();
  SignalVolume s = random_signal(dict, {2, 2, 1}, 1);
  SolverConfig cfg;
  cfg.delta_u = 0.0;
  CHECK_THROWS_AS(admm_solve(s, dict, cfg), std::invalid_argument);

  SolverConfig ok;
  s.data.conservativeResize(s.data.rows() - 1, s.data.cols());
  CHECK_THROWS_AS(admm_solve(s, dict, ok), std::invalid_argument);
}
