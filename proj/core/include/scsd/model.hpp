#pragma once

#include "scsd/sphere.hpp"

#include <Eigen/Core>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace scsd {

using MatX = Eigen::MatrixXd;

/// Single-fibre response parameters for an axially symmetric tensor.
/// alpha_tilde = exp(-b * lambda_perp), beta_tilde = b * (lambda_par - lambda_perp).
struct SfrParams {
  double lambda_par = 17e-4;  // mm^2/s
  double lambda_perp = 3e-4;  // mm^2/s
  double b_value = 3000.0;    // s/mm^2
  /// The physically consistent kernel uses the squared dot product in the
  /// exponent; the switch restores the linear form for comparison runs.
  bool squared_exponent = true;

  double alpha_tilde() const { return std::exp(-b_value * lambda_perp); }
  double beta_tilde() const { return b_value * (lambda_par - lambda_perp); }

  void validate() const;
};

/// Kernel value for a fibre at angle arccos(cos_angle) from the encoding
/// direction: alpha_tilde * exp(-beta_tilde * cos_angle^2).
double sfr_eval(const SfrParams& sfr, double cos_angle);

/// Discretized deconvolution system: H[k][j] = sfr_eval(u_k . v_j) and
/// Phi = [H 1] whose last column absorbs direction-independent signal.
struct Dictionary {
  MatX H;   // K x J
  MatX Phi; // K x (J+1)
  DirectionSet acquisition;
  DirectionSet recon_dirs;
  SfrParams sfr;

  int num_samples() const { return static_cast<int>(H.rows()); }
  int num_recon() const { return static_cast<int>(H.cols()); }
};

Dictionary build_dictionary(const DirectionSet& acq, const DirectionSet& recon,
                            const SfrParams& sfr);

/// One Gaussian compartment of a multi-tensor mixture.
struct TensorCompartment {
  Vec3 direction;
  double volume_fraction = 1.0;
  double lambda_par = 17e-4;
  double lambda_perp = 3e-4;
};

/// Normalized multi-tensor signal with an isotropic admixture:
/// s(u_k) = (1-p_iso) sum_m w_m exp(-b u^T D_m u) + p_iso exp(-b lambda_iso).
Eigen::VectorXd synth_signal(const std::vector<TensorCompartment>& compartments,
                             double iso_fraction, double iso_diffusivity,
                             const DirectionSet& acq);

/// Magnitude-of-complex-Gaussian noise: sqrt((s+n1)^2 + n2^2) with
/// sigma = mean(s)/snr. Deterministic for a fixed seed.
Eigen::VectorXd add_rician_noise(const Eigen::VectorXd& signal, double snr, std::uint64_t seed);

/// Same, drawing from a caller-owned engine (for streaming volumes).
Eigen::VectorXd add_rician_noise(const Eigen::VectorXd& signal, double snr, std::mt19937_64& rng);

/// Log-linear tensor fit over single-fibre voxels, averaged: lambda_par is
/// the mean largest eigenvalue, lambda_perp the mean of the two smaller.
/// Throws if the averaged fit is degenerate (lambda_par <= lambda_perp).
SfrParams fit_sfr(const MatX& signals /* K x num_voxels */, const DirectionSet& acq);

} // namespace scsd
