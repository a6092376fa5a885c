#include "scsd/solver.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace scsd {

void SolverConfig::validate() const {
  if (lambda < 0 || mu < 0 || nu < 0)
    throw std::invalid_argument("SolverConfig: weights must be nonnegative");
  if (!(delta_u > 0) || !(delta_v > 0))
    throw std::invalid_argument("SolverConfig: penalties must be positive");
  if (max_iters < 1) throw std::invalid_argument("SolverConfig: max_iters must be >= 1");
  if (!(primal_tol > 0)) throw std::invalid_argument("SolverConfig: primal_tol must be positive");
  if (num_threads < 1) throw std::invalid_argument("SolverConfig: num_threads must be >= 1");
}

LsFactorization factor_normal_matrix(const MatX& op, double delta_sum) {
  if (!(delta_sum > 0)) throw std::invalid_argument("factor_normal_matrix: delta must be positive");
  const int n = static_cast<int>(op.cols());
  LsFactorization f;
  MatX normal = op.transpose() * op;
  Eigen::SelfAdjointEigenSolver<MatX> eig(normal);
  const auto& evals = eig.eigenvalues(); // ascending
  const double cutoff = std::max(evals[n - 1], 1.0) * 1e-12;
  int first = 0;
  while (first < n && evals[first] <= cutoff) ++first;
  const int r = n - first;

  f.inv_delta = 1.0 / delta_sum;
  f.Q = eig.eigenvectors().rightCols(r);
  f.coef = (evals.tail(r).array() + delta_sum).inverse() - f.inv_delta;
  f.use_low_rank = r * 2 < n;

  normal.diagonal().array() += delta_sum;
  f.llt.compute(normal);
  if (f.llt.info() != Eigen::Success)
    throw std::runtime_error("factor_normal_matrix: factorization failed");
  f.R = f.llt.solve(MatX::Identity(n, n));
  return f;
}

void LsFactorization::apply(const Eigen::Ref<const MatRM>& src, Eigen::Ref<MatRM> dst) const {
  if (use_low_rank) {
    const MatX t = coef.asDiagonal() * (Q.transpose() * src);
    dst.noalias() = Q * t;
    dst += inv_delta * src;
  } else {
    dst.noalias() = R * src;
  }
}

PrecomputedLs precompute_ls(const Dictionary& dict, const SignalVolume& s,
                            const SolverConfig& cfg,
                            std::shared_ptr<const LsFactorization> shared_fact) {
  cfg.validate();
  const MatX& op = cfg.include_iso_column ? dict.Phi : dict.H;
  PrecomputedLs p;
  if (shared_fact) {
    if (shared_fact->size() != op.cols())
      throw std::invalid_argument("precompute_ls: shared factorization has wrong size");
    p.fact = std::move(shared_fact);
  } else {
    p.fact = std::make_shared<LsFactorization>(
        factor_normal_matrix(op, cfg.delta_u + cfg.delta_v));
  }
  p.op_t_s.noalias() = op.transpose() * s.data;
  return p;
}

SolverState SolverState::zeros(int rows, long long cols) {
  SolverState st;
  st.f = MatRM::Zero(rows, cols);
  st.u = st.f;
  st.v = st.f;
  st.p_u = st.f;
  st.p_v = st.f;
  return st;
}

void step_ls(SolverState& state, const PrecomputedLs& precomp, const SolverConfig& cfg) {
  const MatRM rhs = precomp.op_t_s + cfg.delta_u * (state.u - state.p_u) +
                    cfg.delta_v * (state.v - state.p_v);
  const long long cols = rhs.cols();
  if (cfg.num_threads > 1 && cols >= 2 * cfg.num_threads) {
#ifdef _OPENMP
    const int nb = cfg.num_threads;
    const long long chunk = (cols + nb - 1) / nb;
#pragma omp parallel for num_threads(nb) schedule(static)
    for (int b = 0; b < nb; ++b) {
      const long long lo = b * chunk;
      const long long width = std::min(chunk, cols - lo);
      if (width > 0)
        precomp.fact->apply(rhs.middleCols(lo, width), state.f.middleCols(lo, width));
    }
    return;
#endif
  }
  precomp.fact->apply(rhs, state.f);
}

void step_shrink(SolverState& state, const SolverConfig& cfg) {
  const double threshold = cfg.lambda / cfg.delta_u;
  state.u = ((state.f + state.p_u).array() - threshold).max(0.0).matrix();
}

void step_spatial(SolverState& state, const SolverConfig& cfg, const FilterBank* filters,
                  Dims3 dims) {
  const MatRM w = state.f + state.p_v;
  const int rows = static_cast<int>(w.rows());
  const int fodf_rows = cfg.include_iso_column ? rows - 1 : rows;

  if (cfg.mu > 0.0) {
    if (!filters || filters->size() < fodf_rows)
      throw std::invalid_argument("step_spatial: filter bank missing or too small");
#ifdef _OPENMP
#pragma omp parallel num_threads(cfg.num_threads)
    {
      FirWorkspace ws(dims);
#pragma omp for schedule(static)
      for (int j = 0; j < fodf_rows; ++j)
        ws.apply((*filters)[j], w.row(j).data(), state.v.row(j).data());
    }
#else
    FirWorkspace ws(dims);
    for (int j = 0; j < fodf_rows; ++j)
      ws.apply((*filters)[j], w.row(j).data(), state.v.row(j).data());
#endif
  } else {
    state.v.topRows(fodf_rows) = w.topRows(fodf_rows);
  }

  if (cfg.include_iso_column) {
    if (cfg.nu > 0.0) {
      TvConfig tv = cfg.tv_cfg;
      tv.weight = cfg.nu / cfg.delta_v;
      const auto row = w.row(rows - 1);
      const auto res = tv_prox(std::span<const double>(row.data(), static_cast<size_t>(row.size())),
                               tv, dims);
      for (long long i = 0; i < row.size(); ++i) state.v(rows - 1, i) = res.image[static_cast<size_t>(i)];
    } else {
      state.v.row(rows - 1) = w.row(rows - 1);
    }
  }
}

ObjectiveValue objective(const MatRM& f, const Dictionary& dict, const MatRM& s,
                         const SolverConfig& cfg, Dims3 dims) {
  const MatX& op = cfg.include_iso_column ? dict.Phi : dict.H;
  if (f.rows() != op.cols() || f.cols() != s.cols() || s.rows() != op.rows())
    throw std::invalid_argument("objective: shape mismatch");

  ObjectiveValue out;
  out.feasible = (f.array() >= -1e-12).all();

  const MatRM resid = op * f - s;
  out.finite_part = 0.5 * resid.squaredNorm();
  if (cfg.lambda > 0.0) out.finite_part += cfg.lambda * f.cwiseAbs().sum();

  const int rows = static_cast<int>(f.rows());
  const int fodf_rows = cfg.include_iso_column ? rows - 1 : rows;
  if (cfg.mu > 0.0) {
    double a2 = 0.0;
    for (int j = 0; j < fodf_rows; ++j) {
      const auto row = f.row(j);
      const auto d = directional_diff(
          std::span<const double>(row.data(), static_cast<size_t>(row.size())), dims,
          dict.recon_dirs[j]);
      for (double x : d) a2 += x * x;
    }
    out.finite_part += cfg.mu * a2;
  }
  if (cfg.nu > 0.0 && cfg.include_iso_column) {
    const auto row = f.row(rows - 1);
    out.finite_part += cfg.nu * tv_seminorm(
        std::span<const double>(row.data(), static_cast<size_t>(row.size())), dims);
  }
  return out;
}

AdmmSolution admm_solve(const SignalVolume& s, const Dictionary& dict, const SolverConfig& cfg,
                        const FilterBank* shared_filters,
                        std::shared_ptr<const LsFactorization> shared_fact) {
  cfg.validate();
  if (s.data.rows() != dict.num_samples())
    throw std::invalid_argument("admm_solve: signal row count does not match dictionary");
  if (s.data.cols() != s.dims.count())
    throw std::invalid_argument("admm_solve: signal volume shape mismatch");

  const PrecomputedLs precomp = precompute_ls(dict, s, cfg, std::move(shared_fact));

  std::optional<FilterBank> local_filters;
  const FilterBank* filters = shared_filters;
  if (cfg.mu > 0.0 && !filters) {
    local_filters.emplace(dict.recon_dirs, cfg.tau(), cfg.filter_grid);
    filters = &*local_filters;
  }
  if (filters && cfg.mu > 0.0 && std::abs(filters->tau() - cfg.tau()) > 1e-12)
    throw std::invalid_argument("admm_solve: filter bank built for a different tau");

  const int rows = cfg.num_rows(dict);
  SolverState state = SolverState::zeros(rows, s.data.cols());

  AdmmSolution sol;
  auto& rep = sol.report;
  int growth_streak = 0;
  double prev_res = std::numeric_limits<double>::infinity();

  for (state.iter = 1; state.iter <= cfg.max_iters; ++state.iter) {
    step_ls(state, precomp, cfg);
    step_shrink(state, cfg);
    step_spatial(state, cfg, filters, s.dims);
    state.p_u += state.f - state.u;
    state.p_v += state.f - state.v;

    state.primal_res_u = (state.f - state.u).norm();
    state.primal_res_v = (state.f - state.v).norm();
    rep.primal_res_u.push_back(state.primal_res_u);
    rep.primal_res_v.push_back(state.primal_res_v);
    if (cfg.track_objective)
      rep.objective.push_back(objective(state.u, dict, s.data, cfg, s.dims).total());

    const double res = std::max(state.primal_res_u, state.primal_res_v);
    const double rel = res / std::max(1.0, state.f.norm());
    rep.iterations = state.iter;
    if (rel < cfg.primal_tol) {
      rep.converged = true;
      break;
    }
    growth_streak = res > prev_res ? growth_streak + 1 : 0;
    prev_res = res;
    if (growth_streak >= 20) {
      rep.diverged = true;
      break;
    }
  }

  sol.coefficients.dims = s.dims;
  sol.coefficients.recon_dirs = dict.recon_dirs;
  sol.coefficients.has_iso_row = cfg.include_iso_column;
  sol.coefficients.data = std::move(state.u);
  return sol;
}

} // namespace scsd
