#include "scsd/phantom.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numbers>
#include <stdexcept>

namespace scsd {

void PhantomSpec::validate() const {
  if (crossing_angle_deg < 0.0 || crossing_angle_deg > 90.0)
    throw std::invalid_argument("PhantomSpec: crossing angle must be in [0, 90] degrees");
  if (dims.nx < 1 || dims.ny < 1 || dims.nz < 1)
    throw std::invalid_argument("PhantomSpec: dims must be positive");
  if (!(fibre_radius_vox > 0)) throw std::invalid_argument("PhantomSpec: radius must be positive");
  if (p_iso_inside < 0.0 || p_iso_inside > 1.0)
    throw std::invalid_argument("PhantomSpec: p_iso must be in [0, 1]");
  if (!(iso_diffusivity > 0))
    throw std::invalid_argument("PhantomSpec: iso diffusivity must be positive");
  if (!(snr > 0)) throw std::invalid_argument("PhantomSpec: snr must be positive");
  sfr.validate();
}

PhantomData generate_phantom(const PhantomSpec& spec, const DirectionSet& acq) {
  spec.validate();
  if (std::abs(acq.b_value - spec.sfr.b_value) > 1e-9 * std::max(1.0, spec.sfr.b_value))
    throw std::invalid_argument("generate_phantom: acquisition and SFR b-values differ");

  const Dims3 dims = spec.dims;
  const long long I = dims.count();
  const int K = acq.size();
  const double b = spec.sfr.b_value;

  // cylinder axes: the y-axis rotated by +-alpha/2 in the x-y plane,
  // passing through the volume centre
  const double half = spec.crossing_angle_deg * std::numbers::pi / 180.0 / 2.0;
  const Vec3 axis1(-std::sin(half), std::cos(half), 0.0);
  const Vec3 axis2(std::sin(half), std::cos(half), 0.0);
  const Vec3 centre(dims.nx / 2.0, dims.ny / 2.0, dims.nz / 2.0);

  PhantomData out;
  out.signal.dims = dims;
  out.signal.acquisition = acq;
  out.signal.data.resize(K, I);
  auto& t = out.truth;
  t.dims = dims;
  t.b_value = b;
  t.fibre_count.assign(static_cast<size_t>(I), 0);
  t.directions.assign(static_cast<size_t>(I), {});
  t.idm.assign(static_cast<size_t>(I), 0.0);
  t.inside.assign(static_cast<size_t>(I), false);

  const double iso_signal = std::exp(-b * spec.iso_diffusivity);
  std::mt19937_64 rng(spec.seed);

  auto in_cylinder = [&](const Vec3& p, const Vec3& axis) {
    const Vec3 d = p - centre;
    return (d - d.dot(axis) * axis).norm() <= spec.fibre_radius_vox;
  };

  long long idx = 0;
  for (int k = 0; k < dims.nz; ++k)
    for (int j = 0; j < dims.ny; ++j)
      for (int i = 0; i < dims.nx; ++i, ++idx) {
        const Vec3 p(i + 0.5, j + 0.5, k + 0.5);
        const bool in1 = in_cylinder(p, axis1), in2 = in_cylinder(p, axis2);
        const size_t s = static_cast<size_t>(idx);

        std::vector<TensorCompartment> comps;
        double p_iso = 1.0;
        if (in1 || in2) {
          p_iso = spec.p_iso_inside;
          t.inside[s] = true;
          if (in1)
            comps.push_back({axis1, in2 ? 0.5 : 1.0, spec.sfr.lambda_par, spec.sfr.lambda_perp});
          if (in2)
            comps.push_back({axis2, in1 ? 0.5 : 1.0, spec.sfr.lambda_par, spec.sfr.lambda_perp});
          t.fibre_count[s] = static_cast<int>(comps.size());
          for (const auto& c : comps) t.directions[s].push_back(c.direction);
        }
        t.idm[s] = p_iso * iso_signal;

        Eigen::VectorXd sig = synth_signal(comps, p_iso, spec.iso_diffusivity, acq);
        if (std::isfinite(spec.snr)) sig = add_rician_noise(sig, spec.snr, rng);
        out.signal.data.col(idx) = sig;
      }
  return out;
}

void save_ground_truth(const GroundTruth& truth, const std::filesystem::path& path) {
  nlohmann::json j;
  j["dims"] = {truth.dims.nx, truth.dims.ny, truth.dims.nz};
  j["b_value"] = truth.b_value;
  j["fibre_count"] = truth.fibre_count;
  j["idm"] = truth.idm;
  j["inside"] = std::vector<int>(truth.inside.begin(), truth.inside.end());
  nlohmann::json dirs = nlohmann::json::array();
  for (const auto& vd : truth.directions) {
    nlohmann::json vj = nlohmann::json::array();
    for (const auto& v : vd) vj.push_back({v.x(), v.y(), v.z()});
    dirs.push_back(std::move(vj));
  }
  j["directions"] = std::move(dirs);
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << j.dump() << '\n';
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

GroundTruth load_ground_truth(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  nlohmann::json j;
  f >> j;
  GroundTruth t;
  t.dims = {j.at("dims").at(0).get<int>(), j.at("dims").at(1).get<int>(),
            j.at("dims").at(2).get<int>()};
  t.b_value = j.at("b_value").get<double>();
  t.fibre_count = j.at("fibre_count").get<std::vector<int>>();
  t.idm = j.at("idm").get<std::vector<double>>();
  for (int v : j.at("inside").get<std::vector<int>>()) t.inside.push_back(v != 0);
  for (const auto& vj : j.at("directions")) {
    std::vector<Vec3> vd;
    for (const auto& v : vj)
      vd.emplace_back(v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>());
    t.directions.push_back(std::move(vd));
  }
  const auto I = static_cast<size_t>(t.dims.count());
  if (t.fibre_count.size() != I || t.idm.size() != I || t.inside.size() != I ||
      t.directions.size() != I)
    throw std::runtime_error(path.string() + ": ground truth arrays inconsistent with dims");
  return t;
}

} // namespace scsd
