#pragma once

#include "scsd/volume.hpp"

#include <array>
#include <complex>
#include <span>
#include <vector>

namespace scsd {

/// Truncated spatial-domain solver for the per-direction least-squares
/// problem (I + 2*tau*T_v'*T_v) w = q, realized as a 7x7x7 FIR filter
/// synthesized from the closed-form frequency response. Kernel taps are
/// normalized to unit sum so constants pass through unchanged.
/// truncation_error is the relative l2 tap energy discarded by truncation.
struct DirectionalFilter {
  Vec3 direction;
  double tau = 0.0;
  std::array<double, 343> kernel{}; // (dz+3)*49 + (dy+3)*7 + (dx+3)
  double truncation_error = 0.0;

  bool truncation_warning() const { return truncation_error >= 0.01; }
};

/// Directional derivative along v with backward differences; the first
/// sample of each axis has difference zero (replicate boundary).
std::vector<double> directional_diff(std::span<const double> image, Dims3 dims, const Vec3& v);

/// Frequency response of the directional backward-differencing operator:
/// H_v(w) = 2 sum_d v_d sin(w_d/2) exp(-i (w_d - pi)/2).
std::complex<double> freq_response(const Vec3& v, const std::array<double, 3>& omega);

/// Samples (1 + 2*tau*|H_v|^2)^-1 on a grid_n^3 DFT grid (>= 64), inverse
/// transforms and keeps the central 7x7x7 taps.
DirectionalFilter build_filter(const Vec3& v, double tau, int grid_n = 64);

/// Applies the filter with symmetric (mirrored) boundary extension, the
/// discrete realization of the zero-flux condition behind the normal
/// equations. `out` and `image` must not alias.
void apply_filter(const DirectionalFilter& filter, std::span<const double> image, Dims3 dims,
                  std::span<double> out);

/// Minimizer of 0.5*||w - q||^2 + tau*||T_v w||^2 via the truncated FIR
/// approximation; tau = 0 returns q unchanged.
std::vector<double> solve_fc_ls(std::span<const double> q, const Vec3& v, double tau, Dims3 dims);

/// One prebuilt filter per reconstruction direction, sharing tau.
class FilterBank {
public:
  FilterBank() = default;
  FilterBank(const DirectionSet& dirs, double tau, int grid_n = 64);

  int size() const { return static_cast<int>(filters_.size()); }
  double tau() const { return tau_; }
  const DirectionalFilter& operator[](int j) const { return filters_[static_cast<size_t>(j)]; }
  /// Largest truncation error across the bank.
  double max_truncation_error() const;

private:
  std::vector<DirectionalFilter> filters_;
  double tau_ = 0.0;
};

/// Reusable mirror-padded scratch buffer for repeated filter application.
class FirWorkspace {
public:
  explicit FirWorkspace(Dims3 dims);
  /// out += not supported; computes out = filter * image.
  void apply(const DirectionalFilter& filter, const double* image, double* out);

private:
  Dims3 dims_;
  int pnx_, pny_, pnz_;
  std::vector<double> padded_;
  std::vector<int> mirror_x_, mirror_y_, mirror_z_;
};

} // namespace scsd
