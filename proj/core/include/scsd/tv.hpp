#pragma once

#include "scsd/volume.hpp"

#include <span>
#include <vector>

namespace scsd {

struct TvConfig {
  double weight = 0.0;  // regularization weight of the TV term
  int max_iters = 50;
  double step = 0.125;  // dual ascent step; must stay in (0, 0.25] in 3-D
  double tol = 1e-5;    // stop when the dual increment falls below this

  void validate() const;
};

/// Isotropic total variation with backward differences (first sample of
/// each axis contributes nothing): sum_i sqrt(sum_d |grad_d f[i]|^2).
double tv_seminorm(std::span<const double> image, Dims3 dims);

struct TvResult {
  std::vector<double> image;
  int iterations = 0;
  bool converged = false; // dual increment below tol before max_iters
};

/// Approximate minimizer of 0.5*||x - q||^2 + weight*TV(x) by Chambolle's
/// fixed-point projection on the dual field. The dual field is
/// divergence-shaped, so the mean of q is preserved exactly.
TvResult tv_prox(std::span<const double> q, const TvConfig& cfg, Dims3 dims);

} // namespace scsd
