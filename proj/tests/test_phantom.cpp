#include "scsd/phantom.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace scsd;

namespace {

DirectionSet default_acq(double b) {
  auto acq = icosa_tessellate(2, true).directions;
  acq.b_value = b;
  return acq;
}

PhantomSpec default_spec(double b = 3000.0) {
  PhantomSpec spec;
  spec.sfr = SfrParams{17e-4, 3e-4, b};
  return spec;
}

} // namespace

TEST_CASE("default phantom geometry and ground truth") {
  PhantomSpec spec = default_spec();
  spec.crossing_angle_deg = 60.0;
  spec.p_iso_inside = 0.25;
  const PhantomData data = generate_phantom(spec, default_acq(3000.0));

  CHECK(data.signal.data.rows() == 81);
  CHECK(data.signal.data.cols() == 16 * 16 * 12);

  long long overlap = 0, single = 0, outside = 0;
  for (long long i = 0; i < spec.dims.count(); ++i) {
    const int m = data.truth.fibre_count[static_cast<size_t>(i)];
    CHECK(m == static_cast<int>(data.truth.directions[static_cast<size_t>(i)].size()));
    CHECK(data.truth.inside[static_cast<size_t>(i)] == (m >= 1));
    if (m == 2) {
      ++overlap;
      const auto& d = data.truth.directions[static_cast<size_t>(i)];
      const double ang = std::acos(std::clamp(std::abs(d[0].dot(d[1])), 0.0, 1.0));
      CHECK(ang * 180.0 / std::numbers::pi == doctest::Approx(60.0).epsilon(1e-9));
    } else if (m == 1) {
      ++single;
    } else {
      ++outside;
      CHECK(data.truth.idm[static_cast<size_t>(i)] ==
            doctest::Approx(std::exp(-3000.0 * 8e-4)).epsilon(1e-12));
    }
  }
  CHECK(overlap > 0);
  CHECK(single > 0);
  CHECK(outside > 0);
  CHECK(overlap + single + outside == spec.dims.count());

  // inside voxels carry the reduced isotropic weight
  for (long long i = 0; i < spec.dims.count(); ++i)
    if (data.truth.fibre_count[static_cast<size_t>(i)] >= 1)
      CHECK(data.truth.idm[static_cast<size_t>(i)] ==
            doctest::Approx(0.25 * std::exp(-3000.0 * 8e-4)).epsilon(1e-12));
}

TEST_CASE("orthogonal crossing gives orthogonal truth directions") {
  PhantomSpec spec = default_spec();
  spec.crossing_angle_deg = 90.0;
  const PhantomData data = generate_phantom(spec, default_acq(3000.0));
  for (long long i = 0; i < spec.dims.count(); ++i)
    if (data.truth.fibre_count[static_cast<size_t>(i)] == 2) {
      const auto& d = data.truth.directions[static_cast<size_t>(i)];
      CHECK(std::abs(d[0].dot(d[1])) < 1e-12);
    }
}

TEST_CASE("noise-free single-cylinder voxels reproduce the mixture signal exactly") {
  PhantomSpec spec = default_spec();
  spec.p_iso_inside = 0.0;
  spec.snr = std::numeric_limits<double>::infinity();
  const auto acq = default_acq(3000.0);
  const PhantomData data = generate_phantom(spec, acq);
  for (long long i = 0; i < spec.dims.count(); ++i) {
    const auto& dirs = data.truth.directions[static_cast<size_t>(i)];
    if (dirs.size() != 1) continue;
    const auto expected = synth_signal({{dirs[0], 1.0, 17e-4, 3e-4}}, 0.0, 8e-4, acq);
    CHECK((data.signal.data.col(i) - expected).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("signal entries respect the noise tail bound") {
  PhantomSpec spec = default_spec();
  spec.snr = 7.0;
  const PhantomData data = generate_phantom(spec, default_acq(3000.0));
  CHECK((data.signal.data.array() > 0.0).all());
  // sigma is per-voxel mean / snr and means are <= 1
  CHECK(data.signal.data.maxCoeff() <= 1.0 + 6.0 / 7.0);
}

TEST_CASE("phantom is deterministic in its seed") {
  PhantomSpec spec = default_spec();
  spec.snr = 7.0;
  spec.seed = 11;
  const auto acq = default_acq(3000.0);
  const PhantomData a = generate_phantom(spec, acq);
  const PhantomData b = generate_phantom(spec, acq);
  CHECK((a.signal.data - b.signal.data).norm() == 0.0);
  spec.seed = 12;
  const PhantomData c = generate_phantom(spec, acq);
  CHECK((a.signal.data - c.signal.data).norm() > 0.0);
}

TEST_CASE("oversized cylinders are clipped, not an error") {
  PhantomSpec spec = default_spec();
  spec.dims = {6, 6, 4};
  spec.fibre_radius_vox = 10.0;
  const PhantomData data = generate_phantom(spec, default_acq(3000.0));
  long long inside = 0;
  for (long long i = 0; i < spec.dims.count(); ++i)
    inside += data.truth.inside[static_cast<size_t>(i)];
  CHECK(inside == spec.dims.count());
}

TEST_CASE("invalid specs are rejected") {
  PhantomSpec spec = default_spec();
  spec.crossing_angle_deg = 95.0;
  CHECK_THROWS_AS(generate_phantom(spec, default_acq(3000.0)), std::invalid_argument);
  spec = default_spec();
  spec.p_iso_inside = -0.1;
  CHECK_THROWS_AS(generate_phantom(spec, default_acq(3000.0)), std::invalid_argument);
  spec = default_spec();
  spec.dims = {0, 4, 4};
  CHECK_THROWS_AS(generate_phantom(spec, default_acq(3000.0)), std::invalid_argument);
}

TEST_CASE("ground truth round-trips through json") {
  PhantomSpec spec = default_spec();
  spec.dims = {4, 4, 3};
  spec.snr = 20.0;
  const PhantomData data = generate_phantom(spec, default_acq(3000.0));
  const auto path = std::filesystem::temp_directory_path() / "scsd_truth_roundtrip.json";
  save_ground_truth(data.truth, path);
  const GroundTruth loaded = load_ground_truth(path);
  CHECK(loaded.dims == data.truth.dims);
  CHECK(loaded.fibre_count == data.truth.fibre_count);
  CHECK(loaded.inside == data.truth.inside);
  REQUIRE(loaded.directions.size() == data.truth.directions.size());
  for (size_t i = 0; i < loaded.directions.size(); ++i) {
    REQUIRE(loaded.directions[i].size() == data.truth.directions[i].size());
    for (size_t l = 0; l < loaded.directions[i].size(); ++l)
      CHECK((loaded.directions[i][l] - data.truth.directions[i][l]).norm() < 1e-15);
  }
  std::filesystem::remove(path);
}
