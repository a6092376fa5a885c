#include "scsd/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

namespace scsd {

namespace {

struct Mesh {
  std::vector<Vec3> verts;
  std::vector<std::array<int, 3>> faces;
};

Mesh base_icosahedron() {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  Mesh m;
  for (double s1 : {1.0, -1.0}) {
    for (double s2 : {1.0, -1.0}) {
      m.verts.emplace_back(0.0, s1, s2 * phi);
      m.verts.emplace_back(s1, s2 * phi, 0.0);
      m.verts.emplace_back(s2 * phi, 0.0, s1);
    }
  }
  for (auto& v : m.verts) v.normalize();

  // Faces are the vertex triples with pairwise dot products 1/sqrt(5)
  // (the edge angle of the icosahedron).
  const double edge_dot = 1.0 / std::sqrt(5.0);
  const int n = static_cast<int>(m.verts.size());
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      for (int c = b + 1; c < n; ++c) {
        if (std::abs(m.verts[a].dot(m.verts[b]) - edge_dot) < 1e-9 &&
            std::abs(m.verts[b].dot(m.verts[c]) - edge_dot) < 1e-9 &&
            std::abs(m.verts[a].dot(m.verts[c]) - edge_dot) < 1e-9)
          m.faces.push_back({a, b, c});
      }
  return m;
}

Mesh subdivide_once(const Mesh& in) {
  Mesh out;
  out.verts = in.verts;
  std::map<std::pair<int, int>, int> midpoint;
  auto mid = [&](int i, int j) {
    auto key = std::minmax(i, j);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    Vec3 p = (out.verts[static_cast<size_t>(i)] + out.verts[static_cast<size_t>(j)]).normalized();
    int id = static_cast<int>(out.verts.size());
    out.verts.push_back(p);
    midpoint.emplace(key, id);
    return id;
  };
  for (const auto& [a, b, c] : in.faces) {
    int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
    out.faces.push_back({a, ab, ca});
    out.faces.push_back({ab, b, bc});
    out.faces.push_back({ca, bc, c});
    out.faces.push_back({ab, bc, ca});
  }
  return out;
}

// Antipodal representative rule: keep z > 0, ties broken by y > 0, then x > 0.
bool keep_representative(const Vec3& v) {
  constexpr double tol = 1e-12;
  if (v.z() > tol) return true;
  if (v.z() < -tol) return false;
  if (v.y() > tol) return true;
  if (v.y() < -tol) return false;
  return v.x() > 0.0;
}

} // namespace

double MeshAdjacency::min_neighbour_angle(const DirectionSet& dirs) const {
  double best = std::numbers::pi;
  for (int i = 0; i < size(); ++i)
    for (int j : neighbours[static_cast<size_t>(i)]) {
      double c = std::clamp(std::abs(dirs[i].dot(dirs[j])), 0.0, 1.0);
      best = std::min(best, std::acos(c));
    }
  return best;
}

TessellatedSphere icosa_tessellate(int order, bool hemisphere) {
  if (order < 0 || order > 5)
    throw std::invalid_argument("icosa_tessellate: order must be in [0, 5]");

  Mesh mesh = base_icosahedron();
  for (int i = 0; i < order; ++i) mesh = subdivide_once(mesh);

  const int n = static_cast<int>(mesh.verts.size());
  std::vector<int> rep(static_cast<size_t>(n));      // full-sphere id -> kept full-sphere id
  std::vector<int> kept_id(static_cast<size_t>(n), -1); // kept full-sphere id -> output index

  TessellatedSphere out;
  out.directions.hemisphere = hemisphere;
  if (!hemisphere) {
    out.directions.directions = mesh.verts;
    for (int i = 0; i < n; ++i) {
      rep[static_cast<size_t>(i)] = i;
      kept_id[static_cast<size_t>(i)] = i;
    }
  } else {
    for (int i = 0; i < n; ++i) {
      if (!keep_representative(mesh.verts[static_cast<size_t>(i)])) continue;
      kept_id[static_cast<size_t>(i)] = static_cast<int>(out.directions.directions.size());
      out.directions.directions.push_back(mesh.verts[static_cast<size_t>(i)]);
      rep[static_cast<size_t>(i)] = i;
    }
    for (int i = 0; i < n; ++i) {
      if (kept_id[static_cast<size_t>(i)] >= 0) continue;
      // locate the antipode among kept vertices
      int found = -1;
      for (int j = 0; j < n; ++j) {
        if (kept_id[static_cast<size_t>(j)] < 0) continue;
        if ((mesh.verts[static_cast<size_t>(i)] + mesh.verts[static_cast<size_t>(j)]).norm() < 1e-9) {
          found = j;
          break;
        }
      }
      if (found < 0)
        throw std::logic_error("icosa_tessellate: vertex without antipodal partner");
      rep[static_cast<size_t>(i)] = found;
    }
  }

  std::vector<std::set<int>> adj(out.directions.directions.size());
  for (const auto& [a, b, c] : mesh.faces) {
    const std::pair<int, int> edges[3] = {{a, b}, {b, c}, {c, a}};
    for (auto [i, j] : edges) {
      int ri = kept_id[static_cast<size_t>(rep[static_cast<size_t>(i)])];
      int rj = kept_id[static_cast<size_t>(rep[static_cast<size_t>(j)])];
      if (ri != rj) {
        adj[static_cast<size_t>(ri)].insert(rj);
        adj[static_cast<size_t>(rj)].insert(ri);
      }
    }
  }
  out.adjacency.neighbours.reserve(adj.size());
  for (auto& s : adj) out.adjacency.neighbours.emplace_back(s.begin(), s.end());
  return out;
}

DirectionSet saff_spiral(int count) {
  if (count < 2) throw std::invalid_argument("saff_spiral: count must be >= 2");
  DirectionSet out;
  out.directions.reserve(static_cast<size_t>(count));
  double phi = 0.0;
  for (int k = 1; k <= count; ++k) {
    const double h = -1.0 + 2.0 * (k - 1) / (count - 1);
    const double theta = std::acos(std::clamp(h, -1.0, 1.0));
    if (k == 1 || k == count)
      phi = 0.0;
    else
      phi += 3.6 / std::sqrt(static_cast<double>(count)) / std::sqrt(1.0 - h * h);
    const double st = std::sin(theta);
    out.directions.emplace_back(st * std::cos(phi), st * std::sin(phi), std::cos(theta));
  }
  return out;
}

void validate_directions(const DirectionSet& dirs) {
  const int n = dirs.size();
  for (int i = 0; i < n; ++i) {
    if (std::abs(dirs[i].squaredNorm() - 1.0) > 1e-12)
      throw std::invalid_argument("direction " + std::to_string(i) + " is not unit length");
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double c = std::clamp(std::abs(dirs[i].dot(dirs[j])), 0.0, 1.0);
      if (std::acos(c) < 1e-9)
        throw std::invalid_argument("directions " + std::to_string(i) + " and " +
                                    std::to_string(j) + " coincide or are antipodal");
    }
}

void save_gradient_table(const std::filesystem::path& path, const DirectionSet& dirs) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << "# gradient table: one unit vector per line\n";
  f.precision(17);
  for (const auto& v : dirs.directions) f << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

DirectionSet load_gradient_table(const std::filesystem::path& path, double b_value) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  DirectionSet out;
  out.b_value = b_value;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    double x, y, z;
    if (!(ss >> x >> y >> z))
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": expected three numbers");
    out.directions.emplace_back(x, y, z);
  }
  return out;
}

} // namespace scsd
