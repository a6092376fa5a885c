#include "scsd/presets.hpp"

#include "scsd/phantom.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

using namespace scsd;

TEST_CASE("preset parameter tables") {
  const SolverConfig scsd = make_preset(Method::Scsd);
  CHECK(scsd.lambda == 0.03);
  CHECK(scsd.mu == 0.4);
  CHECK(scsd.nu == 0.01);
  CHECK(scsd.include_iso_column);

  const SolverConfig csd = make_preset(Method::Csd);
  CHECK(csd.lambda == 0.0);
  CHECK(csd.mu == 0.0);
  CHECK(csd.nu == 0.0);
  CHECK_FALSE(csd.include_iso_column);

  const SolverConfig minl1 = make_preset(Method::MinL1);
  CHECK(minl1.lambda == 0.01);
  CHECK_FALSE(minl1.include_iso_column);

  const SolverConfig csdfc = make_preset(Method::CsdFc);
  CHECK(csdfc.lambda == 0.0);
  CHECK(csdfc.mu == 0.01);
  CHECK(csdfc.nu == 0.0);
  CHECK_FALSE(csdfc.include_iso_column);

  const SolverConfig mintv = make_preset(Method::MinTvL1);
  CHECK(mintv.lambda == 0.07);
  CHECK(mintv.mu == 0.0);
  CHECK(mintv.nu == 0.01);
  CHECK(mintv.include_iso_column);

  for (Method m : all_methods()) {
    const SolverConfig c = make_preset(m);
    CHECK(c.delta_u == 0.5);
    CHECK(c.delta_v == 0.5);
  }
}

TEST_CASE("method names round-trip") {
  for (Method m : all_methods()) CHECK(parse_method(method_name(m)) == m);
  CHECK_THROWS_AS(parse_method("dRL"), std::invalid_argument);
}

TEST_CASE("residual idm recovers a constant isotropic offset") {
  auto acq = icosa_tessellate(2, true).directions;
  acq.b_value = 3000.0;
  const DirectionSet recon = saff_spiral(33);
  const Dictionary dict = build_dictionary(acq, recon, SfrParams{17e-4, 3e-4, 3000.0});

  CoefficientVolume fa;
  fa.dims = {3, 2, 1};
  fa.recon_dirs = recon;
  fa.has_iso_row = false;
  fa.data = MatRM::Zero(recon.size(), fa.dims.count());
  fa.data(4, 0) = 0.5;
  fa.data(7, 3) = 0.25;

  SignalVolume s;
  s.dims = fa.dims;
  s.acquisition = acq;

  SUBCASE("exact reconstruction gives zero") {
    s.data = dict.H * fa.data;
    const auto idm = residual_idm(s, dict, fa);
    CHECK(idm.cwiseAbs().maxCoeff() < 1e-14);
  }
  SUBCASE("constant offset is returned per voxel") {
    const double c = 0.09;
    s.data = dict.H * fa.data;
    s.data.array() -= c; // s = H fa - c*1
    const auto idm = residual_idm(s, dict, fa);
    for (Eigen::Index i = 0; i < idm.size(); ++i)
      CHECK(idm[i] == doctest::Approx(c).epsilon(1e-12));
  }
  SUBCASE("volumes with an isotropic row are rejected") {
    fa.has_iso_row = true;
    fa.data.conservativeResize(recon.size() + 1, fa.dims.count());
    s.data = dict.H * fa.data.topRows(recon.size());
    CHECK_THROWS_AS(residual_idm(s, dict, fa), std::invalid_argument);
  }
}

TEST_CASE("csd preset reduces to nonnegative least squares on separable data") {
  auto acq = icosa_tessellate(2, true).directions;
  acq.b_value = 3000.0;
  const DirectionSet recon = saff_spiral(25);
  const Dictionary dict = build_dictionary(acq, recon, SfrParams{17e-4, 3e-4, 3000.0});

  SignalVolume s;
  s.dims = {2, 2, 1};
  s.acquisition = acq;
  MatRM f0 = MatRM::Zero(recon.size(), s.dims.count());
  f0(3, 0) = 0.8;
  f0(11, 1) = 0.6;
  f0(17, 2) = 0.4;
  f0(21, 3) = 0.9;
  s.data = dict.H * f0;

  SolverConfig cfg = make_preset(Method::Csd);
  cfg.max_iters = 3000;
  cfg.primal_tol = 1e-10;
  cfg.track_objective = false;
  const AdmmSolution sol = admm_solve(s, dict, cfg);

  double oracle_obj = 0.0;
  for (long long i = 0; i < s.dims.count(); ++i) {
    const Eigen::VectorXd x = oracle::nnls_projected_gradient(dict.H, s.data.col(i), 100000);
    oracle_obj += 0.5 * (dict.H * x - s.data.col(i).eval()).squaredNorm();
  }
  const double admm_obj = objective(sol.coefficients.data, dict, s.data, cfg, s.dims).total();
  CHECK(std::abs(admm_obj - oracle_obj) < 1e-4);
}
