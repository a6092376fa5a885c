#include "scsd/sphere.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

using namespace scsd;

namespace {

// brute-force antipodal pairing of a full-sphere set
int count_antipodal_pairs(const DirectionSet& full) {
  int pairs = 0;
  std::set<int> used;
  for (int i = 0; i < full.size(); ++i) {
    if (used.count(i)) continue;
    for (int j = i + 1; j < full.size(); ++j) {
      if (used.count(j)) continue;
      if ((full[i] + full[j]).norm() < 1e-9) {
        ++pairs;
        used.insert(i);
        used.insert(j);
        break;
      }
    }
  }
  return pairs;
}

} // namespace

TEST_CASE("icosahedron vertex counts match the closed form") {
  CHECK(icosa_tessellate(0, false).directions.size() == 12);
  CHECK(icosa_tessellate(1, false).directions.size() == 42);
  CHECK(icosa_tessellate(2, false).directions.size() == 162);
  CHECK(icosa_tessellate(3, false).directions.size() == 642);
}

TEST_CASE("hemisphere reduction keeps one representative per antipodal pair") {
  CHECK(icosa_tessellate(2, true).directions.size() == 81);

  // order 3: subdividing 20 faces three times gives 642 vertices; brute-force
  // pairing confirms they form 321 antipodal pairs, so the hemisphere keeps 321
  const auto full = icosa_tessellate(3, false);
  CHECK(count_antipodal_pairs(full.directions) == 321);
  CHECK(icosa_tessellate(3, true).directions.size() == 321);
}

TEST_CASE("tessellation directions are unit and pairwise distinct") {
  for (int order : {0, 1, 2, 3}) {
    const auto t = icosa_tessellate(order, true);
    CHECK_NOTHROW(validate_directions(t.directions));
  }
}

TEST_CASE("full-sphere adjacency is symmetric with 5 or 6 neighbours") {
  const auto t = icosa_tessellate(2, false);
  const auto& adj = t.adjacency.neighbours;
  for (size_t i = 0; i < adj.size(); ++i) {
    CHECK((adj[i].size() == 5 || adj[i].size() == 6));
    for (int j : adj[i]) {
      const auto& back = adj[static_cast<size_t>(j)];
      CHECK(std::count(back.begin(), back.end(), static_cast<int>(i)) == 1);
    }
  }
}

TEST_CASE("hemisphere adjacency is symmetric") {
  const auto t = icosa_tessellate(3, true);
  const auto& adj = t.adjacency.neighbours;
  for (size_t i = 0; i < adj.size(); ++i)
    for (int j : adj[i]) {
      const auto& back = adj[static_cast<size_t>(j)];
      CHECK(std::count(back.begin(), back.end(), static_cast<int>(i)) == 1);
    }
}

TEST_CASE("tessellation order is range checked") {
  CHECK_THROWS_AS(icosa_tessellate(-1, true), std::invalid_argument);
  CHECK_THROWS_AS(icosa_tessellate(6, true), std::invalid_argument);
}

TEST_CASE("spiral endpoints are the poles") {
  const auto two = saff_spiral(2);
  CHECK(two.directions[0].isApprox(Vec3(0, 0, -1), 1e-12));
  CHECK(two.directions[1].isApprox(Vec3(0, 0, 1), 1e-12));
  CHECK_THROWS_AS(saff_spiral(1), std::invalid_argument);
}

TEST_CASE("64-point spiral is quasi-uniform") {
  const auto s = saff_spiral(64);
  REQUIRE(s.size() == 64);
  for (const auto& v : s.directions) CHECK(std::abs(v.squaredNorm() - 1.0) <= 1e-12);
  double min_angle = std::numbers::pi;
  for (int i = 0; i < s.size(); ++i)
    for (int j = i + 1; j < s.size(); ++j) {
      const double c = std::clamp(s[i].dot(s[j]), -1.0, 1.0);
      min_angle = std::min(min_angle, std::acos(c));
    }
  CHECK(min_angle > 10.0 * std::numbers::pi / 180.0);
}

TEST_CASE("spiral points satisfy the unit invariant for assorted counts") {
  for (int n : {2, 3, 7, 33, 100}) {
    const auto s = saff_spiral(n);
    REQUIRE(s.size() == n);
    for (const auto& v : s.directions) CHECK(std::abs(v.squaredNorm() - 1.0) <= 1e-12);
  }
}

TEST_CASE("gradient tables round-trip through text") {
  const auto t = icosa_tessellate(1, true);
  const auto path = std::filesystem::temp_directory_path() / "scsd_gradtable_test.txt";
  save_gradient_table(path, t.directions);
  const auto loaded = load_gradient_table(path, 1000.0);
  REQUIRE(loaded.size() == t.directions.size());
  CHECK(loaded.b_value == 1000.0);
  for (int i = 0; i < loaded.size(); ++i)
    CHECK((loaded[i] - t.directions[i]).norm() < 1e-15);
  std::filesystem::remove(path);
}

TEST_CASE("gradient table comments and blank lines are skipped") {
  const auto path = std::filesystem::temp_directory_path() / "scsd_gradtable_comments.txt";
  {
    std::ofstream f(path);
    f << "# comment\n\n0 0 1\n  # indented comment\n1 0 0\n";
  }
  const auto loaded = load_gradient_table(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].z() == 1.0);
  CHECK(loaded[1].x() == 1.0);
  std::filesystem::remove(path);
}
