#pragma once

#include "scsd/sphere.hpp"

#include <Eigen/Core>
#include <filesystem>
#include <stdexcept>

namespace scsd {

/// Row-major matrices keep each per-direction image contiguous over voxels.
using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Dims3 {
  int nx = 0, ny = 0, nz = 0;

  long long count() const {
    return static_cast<long long>(nx) * ny * nz;
  }
  bool operator==(const Dims3&) const = default;
};

/// Linear voxel index in x-fastest order: i + nx*(j + ny*k).
inline long long voxel_index(int i, int j, int k, Dims3 d) {
  if (i < 0 || i >= d.nx || j < 0 || j >= d.ny || k < 0 || k >= d.nz)
    throw std::out_of_range("voxel_index: coordinates out of bounds");
  return i + static_cast<long long>(d.nx) * (j + static_cast<long long>(d.ny) * k);
}

/// K diffusion measurements per voxel, stored as a K x I matrix whose row k
/// is the image sampled along direction u_k.
struct SignalVolume {
  Dims3 dims;
  DirectionSet acquisition;
  MatRM data; // K x I

  int num_directions() const { return static_cast<int>(data.rows()); }
};

/// Deconvolution coefficients: rows 1..J are the fODF restricted to the
/// reconstruction directions, and when has_iso_row is set the extra last row
/// is the isotropic diffusion map.
struct CoefficientVolume {
  Dims3 dims;
  DirectionSet recon_dirs;
  bool has_iso_row = true;
  MatRM data; // (J+1) x I, or J x I without the isotropic row

  int num_recon() const { return static_cast<int>(recon_dirs.directions.size()); }
  Eigen::Ref<const Eigen::RowVectorXd> idm() const {
    if (!has_iso_row) throw std::logic_error("CoefficientVolume: no isotropic row");
    return data.row(data.rows() - 1);
  }
};

/// Volumes are stored as a `<base>.json` header plus a raw little-endian
/// payload `<base>.raw` with each row contiguous over voxels (x-fastest).
/// Round-trips are bit-exact for f64 payloads.
void save_volume(const SignalVolume& vol, const std::filesystem::path& base,
                 const std::string& dtype = "f64");
void save_volume(const CoefficientVolume& vol, const std::filesystem::path& base,
                 const std::string& dtype = "f64");
SignalVolume load_signal_volume(const std::filesystem::path& base);
CoefficientVolume load_coefficient_volume(const std::filesystem::path& base);

} // namespace scsd
