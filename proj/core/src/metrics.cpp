#include "scsd/metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace scsd {

namespace {

constexpr double kHardThreshold = 0.2; // of the per-voxel maximum

double angle_between_deg(const Vec3& a, const Vec3& b) {
  const double c = std::clamp(std::abs(a.dot(b)), 0.0, 1.0);
  return std::acos(c) * 180.0 / std::numbers::pi;
}

std::vector<int> grid_maxima(const Eigen::Ref<const Eigen::VectorXd>& vals,
                             const DirectionSet& dirs, const MeshAdjacency& adj,
                             double min_sep_deg) {
  const int J = static_cast<int>(vals.size());
  const double m = vals.maxCoeff();
  std::vector<int> cand;
  if (!(m > 0.0)) return cand;
  for (int j = 0; j < J; ++j) {
    if (vals[j] < kHardThreshold * m) continue;
    bool is_max = true;
    for (int n : adj.neighbours[static_cast<size_t>(j)])
      if (vals[j] < vals[n]) {
        is_max = false;
        break;
      }
    if (is_max) cand.push_back(j);
  }
  std::sort(cand.begin(), cand.end(), [&](int a, int b) {
    return vals[a] != vals[b] ? vals[a] > vals[b] : a < b;
  });
  std::vector<int> kept;
  for (int j : cand) {
    bool ok = true;
    for (int q : kept)
      if (angle_between_deg(dirs[j], dirs[q]) < min_sep_deg) {
        ok = false;
        break;
      }
    if (ok) kept.push_back(j);
  }
  return kept;
}

// 6-parameter encoding of a symmetric 3x3 matrix: xx, yy, zz, xy, xz, yz
Eigen::Matrix<double, 1, 6> quadratic_features(const Vec3& u) {
  Eigen::Matrix<double, 1, 6> r;
  r << u.x() * u.x(), u.y() * u.y(), u.z() * u.z(),
      2 * u.x() * u.y(), 2 * u.x() * u.z(), 2 * u.y() * u.z();
  return r;
}

Eigen::Matrix3d unpack_symmetric(const Eigen::Ref<const Eigen::VectorXd>& t) {
  Eigen::Matrix3d a;
  a << t[0], t[3], t[4],
       t[3], t[1], t[5],
       t[4], t[5], t[2];
  return a;
}

/// Levenberg-damped Gauss-Newton fit of sum_l exp(u' A_l u) to the fODF
/// samples; returns the principal eigenvectors, or nullopt on divergence.
std::optional<std::vector<Vec3>>
fit_peak_model(const Eigen::Ref<const Eigen::VectorXd>& vals, const DirectionSet& dirs,
               const std::vector<int>& seeds, const PeakFitConfig& cfg) {
  const int M = static_cast<int>(seeds.size());
  const int J = dirs.size();
  const int P = 6 * M;

  MatX features(J, 6);
  for (int j = 0; j < J; ++j) features.row(j) = quadratic_features(dirs[j]);

  Eigen::VectorXd theta(P);
  for (int l = 0; l < M; ++l) {
    const Vec3& v = dirs[seeds[static_cast<size_t>(l)]];
    const double a = std::log(std::max(vals[seeds[static_cast<size_t>(l)]], 1e-8));
    const Eigen::Matrix3d A =
        a * (v * v.transpose()) + (a - 4.0) * (Eigen::Matrix3d::Identity() - v * v.transpose());
    theta.segment(6 * l, 6) << A(0, 0), A(1, 1), A(2, 2), A(0, 1), A(0, 2), A(1, 2);
  }

  auto evaluate = [&](const Eigen::VectorXd& th, Eigen::VectorXd& resid, MatX& jac) {
    resid.setZero(J);
    jac.setZero(J, P);
    for (int l = 0; l < M; ++l) {
      const Eigen::VectorXd e = (features * th.segment(6 * l, 6)).array().exp();
      resid += e;
      jac.middleCols(6 * l, 6) = e.asDiagonal() * features;
    }
    resid -= vals;
  };

  Eigen::VectorXd resid;
  MatX jac;
  evaluate(theta, resid, jac);
  double cost = resid.squaredNorm();
  if (!std::isfinite(cost)) return std::nullopt;

  double damping = cfg.initial_damping;
  bool any_progress = false;
  for (int it = 0; it < cfg.max_iters; ++it) {
    MatX normal = jac.transpose() * jac;
    normal.diagonal().array() += damping;
    const Eigen::VectorXd step = normal.ldlt().solve(-jac.transpose() * resid);
    Eigen::VectorXd resid2;
    MatX jac2;
    const Eigen::VectorXd theta2 = theta + step;
    evaluate(theta2, resid2, jac2);
    const double cost2 = resid2.squaredNorm();
    if (std::isfinite(cost2) && cost2 <= cost) {
      theta = theta2;
      resid.swap(resid2);
      jac.swap(jac2);
      cost = cost2;
      damping = std::max(damping / 10.0, 1e-12);
      any_progress = true;
      if (step.lpNorm<Eigen::Infinity>() < cfg.step_tol) break;
    } else {
      damping *= 10.0;
      if (damping > 1e12) break;
    }
  }
  if (!any_progress && M > 0 && cost > resid.size()) return std::nullopt;

  std::vector<Vec3> out;
  out.reserve(static_cast<size_t>(M));
  for (int l = 0; l < M; ++l) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(unpack_symmetric(theta.segment(6 * l, 6)));
    Vec3 v = eig.eigenvectors().col(2);
    if (!v.allFinite()) return std::nullopt;
    out.push_back(v.normalized());
  }
  return out;
}

PeakSet extract_impl(const CoefficientVolume& coeffs, const MeshAdjacency& adjacency,
                     const int* known_counts, const PeakFitConfig& fit) {
  const int J = coeffs.num_recon();
  if (adjacency.size() != J)
    throw std::invalid_argument("extract_peaks: adjacency does not match reconstruction grid");
  if ((coeffs.data.topRows(J).array() < -1e-12).any())
    throw std::invalid_argument("extract_peaks: coefficients must be nonnegative");

  const double min_sep_deg =
      adjacency.min_neighbour_angle(coeffs.recon_dirs) * 180.0 / std::numbers::pi * (1.0 - 1e-9);

  PeakSet out;
  out.dims = coeffs.dims;
  const long long I = coeffs.dims.count();
  out.voxel_peaks.resize(static_cast<size_t>(I));

  for (long long i = 0; i < I; ++i) {
    const Eigen::VectorXd vals = coeffs.data.block(0, i, J, 1);
    std::vector<int> maxima = grid_maxima(vals, coeffs.recon_dirs, adjacency, min_sep_deg);

    auto& peaks = out.voxel_peaks[static_cast<size_t>(i)];
    if (known_counts == nullptr) {
      for (int j : maxima) peaks.push_back({coeffs.recon_dirs[j], vals[j]});
      continue;
    }

    const int want = known_counts[i];
    if (want <= 0) continue;
    std::vector<int> seeds(maxima.begin(),
                           maxima.begin() + std::min<size_t>(maxima.size(), static_cast<size_t>(want)));
    if (static_cast<int>(seeds.size()) < want) {
      // not enough grid maxima: fill with the strongest remaining vertices
      // that respect the separation rule
      std::vector<int> order(static_cast<size_t>(J));
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        return vals[a] != vals[b] ? vals[a] > vals[b] : a < b;
      });
      for (int j : order) {
        if (static_cast<int>(seeds.size()) == want) break;
        bool ok = true;
        for (int q : seeds)
          if (angle_between_deg(coeffs.recon_dirs[j], coeffs.recon_dirs[q]) < min_sep_deg) {
            ok = false;
            break;
          }
        if (ok) seeds.push_back(j);
      }
    }
    const auto refined = fit_peak_model(vals, coeffs.recon_dirs, seeds, fit);
    for (size_t l = 0; l < seeds.size(); ++l) {
      const Vec3 dir = refined ? (*refined)[l] : coeffs.recon_dirs[seeds[l]];
      peaks.push_back({dir, vals[seeds[l]]});
    }
    std::sort(peaks.begin(), peaks.end(),
              [](const Peak& a, const Peak& b) { return a.magnitude > b.magnitude; });
  }
  return out;
}

} // namespace

PeakSet extract_peaks(const CoefficientVolume& coeffs, const MeshAdjacency& adjacency,
                      std::optional<int> known_count, const PeakFitConfig& fit) {
  if (!known_count) return extract_impl(coeffs, adjacency, nullptr, fit);
  std::vector<int> counts(static_cast<size_t>(coeffs.dims.count()), *known_count);
  return extract_impl(coeffs, adjacency, counts.data(), fit);
}

PeakSet extract_peaks(const CoefficientVolume& coeffs, const MeshAdjacency& adjacency,
                      std::span<const int> known_counts, const PeakFitConfig& fit) {
  if (static_cast<long long>(known_counts.size()) != coeffs.dims.count())
    throw std::invalid_argument("extract_peaks: known_counts size mismatch");
  return extract_impl(coeffs, adjacency, known_counts.data(), fit);
}

double aae_deg(const PeakSet& peaks, const GroundTruth& truth) {
  if (peaks.dims != truth.dims) throw std::invalid_argument("aae_deg: dims mismatch");
  double sum = 0.0;
  long long pairs = 0;
  for (long long i = 0; i < truth.dims.count(); ++i) {
    const auto& detected = peaks.at(i);
    const auto& expected = truth.directions[static_cast<size_t>(i)];
    if (expected.empty() || detected.size() != expected.size()) continue;
    std::vector<Vec3> det;
    for (const auto& p : detected) det.push_back(p.direction);
    std::vector<Vec3> tru = expected;
    while (!det.empty()) {
      double best = std::numeric_limits<double>::infinity();
      size_t bi = 0, bj = 0;
      for (size_t a = 0; a < det.size(); ++a)
        for (size_t b = 0; b < tru.size(); ++b) {
          const double ang = angle_between_deg(det[a], tru[b]);
          if (ang < best) {
            best = ang;
            bi = a;
            bj = b;
          }
        }
      sum += best;
      ++pairs;
      det.erase(det.begin() + static_cast<std::ptrdiff_t>(bi));
      tru.erase(tru.begin() + static_cast<std::ptrdiff_t>(bj));
    }
  }
  if (pairs == 0) return std::numeric_limits<double>::quiet_NaN();
  return sum / static_cast<double>(pairs);
}

TpFp tp_fp(const PeakSet& peaks, const GroundTruth& truth) {
  if (peaks.dims != truth.dims) throw std::invalid_argument("tp_fp: dims mismatch");
  long long fibre_voxels = 0, correct = 0;
  double excess = 0.0;
  for (long long i = 0; i < truth.dims.count(); ++i) {
    const int m0 = truth.fibre_count[static_cast<size_t>(i)];
    if (m0 < 1) continue;
    ++fibre_voxels;
    const int det = static_cast<int>(peaks.at(i).size());
    if (det == m0) ++correct;
    excess += std::max(det - m0, 0);
  }
  if (fibre_voxels == 0) throw std::invalid_argument("tp_fp: ground truth has no fibre voxels");
  return {static_cast<double>(correct) / static_cast<double>(fibre_voxels),
          excess / static_cast<double>(fibre_voxels)};
}

double contrast(std::span<const double> idm, const GroundTruth& truth) {
  if (static_cast<long long>(idm.size()) != truth.dims.count())
    throw std::invalid_argument("contrast: idm size mismatch");
  double sum_in = 0, sum_out = 0;
  long long n_in = 0, n_out = 0;
  for (size_t i = 0; i < idm.size(); ++i) {
    if (truth.inside[i]) {
      sum_in += idm[i];
      ++n_in;
    } else {
      sum_out += idm[i];
      ++n_out;
    }
  }
  if (n_in == 0 || n_out == 0) throw std::invalid_argument("contrast: a region is empty");
  const double mean_in = sum_in / static_cast<double>(n_in);
  const double mean_out = sum_out / static_cast<double>(n_out);
  double var_in = 0, var_out = 0;
  double lo_in = std::numeric_limits<double>::infinity(), hi_in = -lo_in;
  double lo_out = lo_in, hi_out = -lo_in;
  for (size_t i = 0; i < idm.size(); ++i) {
    const double d = idm[i] - (truth.inside[i] ? mean_in : mean_out);
    (truth.inside[i] ? var_in : var_out) += d * d;
    (truth.inside[i] ? lo_in : lo_out) = std::min(truth.inside[i] ? lo_in : lo_out, idm[i]);
    (truth.inside[i] ? hi_in : hi_out) = std::max(truth.inside[i] ? hi_in : hi_out, idm[i]);
  }
  // exactly constant regions have zero spread regardless of summation rounding
  if (lo_in == hi_in) var_in = 0.0;
  if (lo_out == hi_out) var_out = 0.0;
  const double sd = std::sqrt(var_in / static_cast<double>(n_in)) +
                    std::sqrt(var_out / static_cast<double>(n_out));
  const double diff = std::abs(mean_in - mean_out);
  if (sd == 0.0) return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return 2.0 * diff / sd;
}

MetricsReport compute_metrics(const CoefficientVolume& coeffs, const MeshAdjacency& adjacency,
                              const GroundTruth& truth,
                              std::optional<std::span<const double>> idm) {
  const PeakSet grid = extract_peaks(coeffs, adjacency);
  const auto rates = tp_fp(grid, truth);

  // rescore qualifying voxels (grid count == true count) with the
  // known-count refinement; everything else keeps its grid peaks and is
  // excluded by the count gate inside aae_deg
  std::vector<int> counts(static_cast<size_t>(coeffs.dims.count()), 0);
  for (long long i = 0; i < coeffs.dims.count(); ++i) {
    const int m0 = truth.fibre_count[static_cast<size_t>(i)];
    if (m0 >= 1 && static_cast<int>(grid.at(i).size()) == m0)
      counts[static_cast<size_t>(i)] = m0;
  }
  PeakSet refined = extract_peaks(coeffs, adjacency, std::span<const int>(counts));
  for (long long i = 0; i < coeffs.dims.count(); ++i)
    if (counts[static_cast<size_t>(i)] == 0)
      refined.voxel_peaks[static_cast<size_t>(i)] = grid.at(i);

  MetricsReport rep;
  rep.aae_deg = aae_deg(refined, truth);
  rep.tp_rate = rates.tp_rate;
  rep.fp_rate = rates.fp_rate;
  if (idm) {
    rep.contrast = contrast(*idm, truth);
  } else {
    const auto row = coeffs.idm();
    rep.contrast =
        contrast(std::span<const double>(row.data(), static_cast<size_t>(row.size())), truth);
  }
  return rep;
}

} // namespace scsd
