#pragma once

#include "scsd/phantom.hpp"
#include "scsd/volume.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace scsd {

struct Peak {
  Vec3 direction;
  double magnitude = 0.0;
};

/// Per-voxel fODF peaks, sorted by descending magnitude. Grid peaks are mesh
/// local maxima hard-thresholded at 20% of the voxel maximum and separated
/// by at least the mesh neighbour angle.
struct PeakSet {
  Dims3 dims;
  std::vector<std::vector<Peak>> voxel_peaks;

  const std::vector<Peak>& at(long long voxel) const {
    return voxel_peaks[static_cast<size_t>(voxel)];
  }
};

/// Controls for the peak-model refinement stage.
struct PeakFitConfig {
  int max_iters = 50;
  double step_tol = 1e-8;
  double initial_damping = 1e-3;
};

/// Grid local maxima; if `known_count` is set, the top-M maxima seed a
/// Gauss-Newton fit of sum_l exp(u' A_l u) and each refined direction is the
/// principal eigenvector of its A_l (falling back to the grid maxima when
/// the fit diverges).
PeakSet extract_peaks(const CoefficientVolume& coeffs, const MeshAdjacency& adjacency,
                      std::optional<int> known_count = std::nullopt,
                      const PeakFitConfig& fit = {});

/// Per-voxel known counts (0 entries yield no peaks).
PeakSet extract_peaks(const CoefficientVolume& coeffs, const MeshAdjacency& adjacency,
                      std::span<const int> known_counts, const PeakFitConfig& fit = {});

/// Mean angular error in degrees over voxels whose detected count equals the
/// true count, pairing greedily by smallest angle; antipodal-invariant.
/// Returns NaN when no voxel qualifies.
double aae_deg(const PeakSet& peaks, const GroundTruth& truth);

/// Detection rates over fibre voxels (true count >= 1): fraction with the
/// correct count, and mean positive count excess.
struct TpFp {
  double tp_rate = 0.0;
  double fp_rate = 0.0;
};
TpFp tp_fp(const PeakSet& peaks, const GroundTruth& truth);

/// Region contrast 2|mean_in - mean_out| / (std_in + std_out) with
/// population statistics; +inf when the spread vanishes but the means
/// differ, 0 when both vanish.
double contrast(std::span<const double> idm, const GroundTruth& truth);

struct MetricsReport {
  double aae_deg = std::numeric_limits<double>::quiet_NaN();
  double tp_rate = 0.0;
  double fp_rate = 0.0;
  double contrast = 0.0;
  // configuration metadata
  std::string method;
  double alpha_deg = 0.0, p_iso = 0.0, b_value = 0.0, snr = 0.0;
  std::uint64_t seed = 0;
};

/// Full scoring pipeline: grid peaks decide TP/FP and which voxels qualify
/// for the angular score; qualifying voxels are rescored with the known-count
/// refinement; contrast uses `idm` (the coefficient volume's isotropic row
/// when absent).
MetricsReport compute_metrics(const CoefficientVolume& coeffs, const MeshAdjacency& adjacency,
                              const GroundTruth& truth,
                              std::optional<std::span<const double>> idm = std::nullopt);

} // namespace scsd
