#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <string>
#include <vector>

namespace scsd {

using Vec3 = Eigen::Vector3d;

/// Ordered set of unit directions on the sphere (or a hemisphere after
/// antipodal reduction), together with the diffusion weighting they were
/// acquired with. Reconstruction grids reuse the same type with b_value = 0.
struct DirectionSet {
  std::vector<Vec3> directions;
  double b_value = 0.0;    // s/mm^2; 0 means "not an acquisition scheme"
  bool hemisphere = false; // one representative per antipodal pair

  int size() const { return static_cast<int>(directions.size()); }
  const Vec3& operator[](int i) const { return directions[static_cast<size_t>(i)]; }
};

/// Neighbour lists of a triangulated direction set. Symmetric by
/// construction; on a reduced hemisphere the neighbours of a vertex are the
/// representatives of its full-sphere mesh neighbours.
struct MeshAdjacency {
  std::vector<std::vector<int>> neighbours;

  int size() const { return static_cast<int>(neighbours.size()); }
  /// Smallest angle (radians) between any two adjacent directions.
  double min_neighbour_angle(const DirectionSet& dirs) const;
};

struct TessellatedSphere {
  DirectionSet directions;
  MeshAdjacency adjacency;
};

/// Vertices of the `order`-times subdivided icosahedron, projected onto the
/// unit sphere. With `hemisphere` one representative per antipodal pair is
/// kept: (z > 0), ties to (y > 0), then (x > 0). order must be in [0, 5].
TessellatedSphere icosa_tessellate(int order, bool hemisphere);

/// Quasi-uniform spherical point set built by the generalized-spiral
/// construction; first and last points are the poles. count >= 2.
DirectionSet saff_spiral(int count);

/// Throws if any direction is not unit length (1e-12) or if two directions
/// coincide or are antipodal within 1e-9 rad.
void validate_directions(const DirectionSet& dirs);

/// Text gradient table: one "x y z" line per direction, '#' comments.
void save_gradient_table(const std::filesystem::path& path, const DirectionSet& dirs);
DirectionSet load_gradient_table(const std::filesystem::path& path, double b_value = 0.0);

} // namespace scsd
