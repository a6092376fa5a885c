#pragma once

#include "scsd/dirfilter.hpp"
#include "scsd/model.hpp"
#include "scsd/tv.hpp"
#include "scsd/volume.hpp"

#include <Eigen/Cholesky>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

namespace scsd {

struct SolverConfig {
  double lambda = 0.0; // l1 weight
  double mu = 0.0;     // fibre-continuity weight
  double nu = 0.0;     // TV weight on the isotropic row
  double delta_u = 0.5, delta_v = 0.5;
  bool include_iso_column = true; // solve with Phi = [H 1] rather than H
  int max_iters = 200;
  double primal_tol = 1e-4;
  TvConfig tv_cfg{};   // inner TV solve; weight is overridden with nu/delta_v
  int num_threads = 1;
  int filter_grid = 64;
  bool track_objective = true;

  void validate() const;
  double tau() const { return mu / delta_v; }
  int num_rows(const Dictionary& dict) const {
    return dict.num_recon() + (include_iso_column ? 1 : 0);
  }
};

/// Factorization of (Op'Op + (delta_u+delta_v) I). The normal matrix has
/// rank(Op) dominant eigenvalues, so the inverse is applied through the
/// eigenbasis when that is cheaper than a dense multiply.
struct LsFactorization {
  Eigen::LLT<MatX> llt;
  MatX R;              // explicit inverse, for diagnostics and small cases
  MatX Q;              // eigenvectors of Op'Op with non-negligible eigenvalues
  Eigen::VectorXd coef; // 1/(eig+delta) - 1/delta per kept eigenvector
  double inv_delta = 0.0;
  bool use_low_rank = false;

  int size() const { return static_cast<int>(R.rows()); }
  /// dst = (Op'Op + delta I)^-1 src
  void apply(const Eigen::Ref<const MatRM>& src, Eigen::Ref<MatRM> dst) const;
};

LsFactorization factor_normal_matrix(const MatX& op, double delta_sum);

/// Per-solve precomputation: the shared factorization plus Op's.
struct PrecomputedLs {
  std::shared_ptr<const LsFactorization> fact;
  MatRM op_t_s;
};

PrecomputedLs precompute_ls(const Dictionary& dict, const SignalVolume& s,
                            const SolverConfig& cfg,
                            std::shared_ptr<const LsFactorization> shared_fact = nullptr);

struct SolverState {
  MatRM f, u, v, p_u, p_v;
  int iter = 0;
  double primal_res_u = 0.0, primal_res_v = 0.0;

  static SolverState zeros(int rows, long long cols);
};

struct ObjectiveValue {
  double finite_part = 0.0;
  bool feasible = true; // all entries >= -1e-12
  double total() const {
    return feasible ? finite_part : std::numeric_limits<double>::infinity();
  }
};

/// Full cost: 0.5||Op f - s||^2 + lambda ||f||_1 + mu ||f||_a^2
/// + nu TV(iso row) + nonnegativity indicator.
ObjectiveValue objective(const MatRM& f, const Dictionary& dict, const MatRM& s,
                         const SolverConfig& cfg, Dims3 dims);

/// Exact per-voxel least-squares update of f through the cached factorization.
void step_ls(SolverState& state, const PrecomputedLs& precomp, const SolverConfig& cfg);

/// Rectified soft threshold at lambda/delta_u.
void step_shrink(SolverState& state, const SolverConfig& cfg);

/// Fibre-continuity filtering of the fODF rows and TV denoising of the
/// isotropic row; either half passes through when its weight is zero.
void step_spatial(SolverState& state, const SolverConfig& cfg, const FilterBank* filters,
                  Dims3 dims);

struct ConvergenceReport {
  std::vector<double> objective;   // per iteration, evaluated at u
  std::vector<double> primal_res_u, primal_res_v;
  int iterations = 0;
  bool converged = false;
  bool diverged = false; // residual grew for 20 consecutive iterations
};

struct AdmmSolution {
  CoefficientVolume coefficients; // the nonnegative iterate u
  ConvergenceReport report;
};

/// ADMM loop from zero initialization; returns u (nonnegative by
/// construction) once max(||f-u||, ||f-v||)/max(1, ||f||) < primal_tol or
/// max_iters is reached. `shared_filters` and `shared_fact`, when given,
/// must match the dictionary and config.
AdmmSolution admm_solve(const SignalVolume& s, const Dictionary& dict, const SolverConfig& cfg,
                        const FilterBank* shared_filters = nullptr,
                        std::shared_ptr<const LsFactorization> shared_fact = nullptr);

} // namespace scsd
