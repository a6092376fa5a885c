#pragma once

#include "scsd/model.hpp"
#include "scsd/volume.hpp"

#include <filesystem>
#include <limits>

namespace scsd {

/// Two straight cylinders of equal radius crossing at `crossing_angle_deg`
/// in the central axial plane, embedded in a purely isotropic background.
struct PhantomSpec {
  Dims3 dims{16, 16, 12};
  double crossing_angle_deg = 60.0; // in [0, 90]
  double fibre_radius_vox = 4.0;    // 8-voxel diameter
  double p_iso_inside = 0.25;       // isotropic volume fraction inside fibres
  double iso_diffusivity = 8e-4;    // mm^2/s
  SfrParams sfr{};
  double snr = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 1;

  void validate() const;
};

/// Per-voxel reference data for scoring reconstructions.
struct GroundTruth {
  Dims3 dims;
  std::vector<int> fibre_count;              // 0, 1 or 2
  std::vector<std::vector<Vec3>> directions; // fibre tangents, fibre_count each
  std::vector<double> idm;                   // p_iso * exp(-b*lambda_iso)
  std::vector<bool> inside;                  // fibre region label
  double b_value = 0.0;
};

struct PhantomData {
  SignalVolume signal;
  GroundTruth truth;
};

/// Builds the crossing phantom: voxels inside one cylinder carry its tangent
/// compartment, overlap voxels carry both at equal fractions, background is
/// purely isotropic; Rician noise is applied at spec.snr.
PhantomData generate_phantom(const PhantomSpec& spec, const DirectionSet& acq);

void save_ground_truth(const GroundTruth& truth, const std::filesystem::path& path);
GroundTruth load_ground_truth(const std::filesystem::path& path);

} // namespace scsd
