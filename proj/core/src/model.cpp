#include "scsd/model.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace scsd {

void SfrParams::validate() const {
  if (!(lambda_par > lambda_perp) || !(lambda_perp > 0))
    throw std::invalid_argument("SfrParams: requires lambda_par > lambda_perp > 0");
  if (!(b_value > 0)) throw std::invalid_argument("SfrParams: requires b_value > 0");
}

double sfr_eval(const SfrParams& sfr, double cos_angle) {
  if (std::abs(cos_angle) > 1.0 + 1e-12)
    throw std::invalid_argument("sfr_eval: |cos_angle| must be <= 1");
  const double c = std::clamp(cos_angle, -1.0, 1.0);
  const double arg = sfr.squared_exponent ? c * c : c;
  return sfr.alpha_tilde() * std::exp(-sfr.beta_tilde() * arg);
}

Dictionary build_dictionary(const DirectionSet& acq, const DirectionSet& recon,
                            const SfrParams& sfr) {
  sfr.validate();
  if (std::abs(acq.b_value - sfr.b_value) > 1e-9 * std::max(1.0, sfr.b_value))
    throw std::invalid_argument("build_dictionary: acquisition and SFR b-values differ");
  const int K = acq.size(), J = recon.size();
  Dictionary d;
  d.H.resize(K, J);
  for (int j = 0; j < J; ++j)
    for (int k = 0; k < K; ++k)
      d.H(k, j) = sfr_eval(sfr, acq[k].dot(recon[j]));
  d.Phi.resize(K, J + 1);
  d.Phi.leftCols(J) = d.H;
  d.Phi.col(J).setOnes();
  d.acquisition = acq;
  d.recon_dirs = recon;
  d.sfr = sfr;
  return d;
}

Eigen::VectorXd synth_signal(const std::vector<TensorCompartment>& compartments,
                             double iso_fraction, double iso_diffusivity,
                             const DirectionSet& acq) {
  if (iso_fraction < 0.0 || iso_fraction > 1.0)
    throw std::invalid_argument("synth_signal: iso_fraction must be in [0, 1]");
  if (!compartments.empty()) {
    double total = 0.0;
    for (const auto& c : compartments) {
      if (c.volume_fraction < 0.0 || c.volume_fraction > 1.0)
        throw std::invalid_argument("synth_signal: volume fractions must be in [0, 1]");
      total += c.volume_fraction;
    }
    if (std::abs(total - 1.0) > 1e-12)
      throw std::invalid_argument("synth_signal: volume fractions must sum to 1");
  } else if (iso_fraction != 1.0) {
    throw std::invalid_argument("synth_signal: no compartments requires iso_fraction = 1");
  }

  const int K = acq.size();
  const double b = acq.b_value;
  Eigen::VectorXd s = Eigen::VectorXd::Zero(K);
  for (const auto& c : compartments) {
    for (int k = 0; k < K; ++k) {
      const double ca = acq[k].dot(c.direction);
      const double adc = c.lambda_perp + (c.lambda_par - c.lambda_perp) * ca * ca;
      s[k] += (1.0 - iso_fraction) * c.volume_fraction * std::exp(-b * adc);
    }
  }
  s.array() += iso_fraction * std::exp(-b * iso_diffusivity);
  return s;
}

Eigen::VectorXd add_rician_noise(const Eigen::VectorXd& signal, double snr, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return add_rician_noise(signal, snr, rng);
}

Eigen::VectorXd add_rician_noise(const Eigen::VectorXd& signal, double snr, std::mt19937_64& rng) {
  if (!(snr > 0.0)) throw std::invalid_argument("add_rician_noise: snr must be positive");
  if (std::isinf(snr)) return signal;
  const double sigma = signal.mean() / snr;
  if (sigma == 0.0) return signal;
  std::normal_distribution<double> gauss(0.0, sigma);
  Eigen::VectorXd out(signal.size());
  for (Eigen::Index k = 0; k < signal.size(); ++k) {
    const double n1 = gauss(rng), n2 = gauss(rng);
    out[k] = std::hypot(signal[k] + n1, n2);
  }
  return out;
}

SfrParams fit_sfr(const MatX& signals, const DirectionSet& acq) {
  const int K = acq.size();
  if (K < 6) throw std::invalid_argument("fit_sfr: need at least 6 directions");
  if (signals.rows() != K) throw std::invalid_argument("fit_sfr: signal row count != K");
  if ((signals.array() <= 0.0).any())
    throw std::invalid_argument("fit_sfr: signals must be positive");
  const double b = acq.b_value;
  if (!(b > 0)) throw std::invalid_argument("fit_sfr: acquisition b-value must be positive");

  MatX G(K, 6);
  for (int k = 0; k < K; ++k) {
    const Vec3& u = acq[k];
    G.row(k) << u.x() * u.x(), u.y() * u.y(), u.z() * u.z(),
        2 * u.x() * u.y(), 2 * u.x() * u.z(), 2 * u.y() * u.z();
  }
  const auto qr = G.colPivHouseholderQr();

  double sum_par = 0.0, sum_perp = 0.0;
  for (Eigen::Index i = 0; i < signals.cols(); ++i) {
    const Eigen::VectorXd y = -signals.col(i).array().log() / b;
    const Eigen::VectorXd d = qr.solve(y);
    Eigen::Matrix3d D;
    D << d[0], d[3], d[4],
         d[3], d[1], d[5],
         d[4], d[5], d[2];
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(D);
    const auto& ev = eig.eigenvalues(); // ascending
    sum_par += ev[2];
    sum_perp += 0.5 * (ev[0] + ev[1]);
  }
  SfrParams out;
  out.lambda_par = sum_par / static_cast<double>(signals.cols());
  out.lambda_perp = sum_perp / static_cast<double>(signals.cols());
  out.b_value = b;
  // anisotropy below numerical precision is a degenerate (isotropic) fit
  if (!(out.lambda_par - out.lambda_perp > 1e-9 * std::abs(out.lambda_par)) ||
      !(out.lambda_perp > 0))
    throw std::runtime_error("fit_sfr: degenerate fit (lambda_par <= lambda_perp)");
  return out;
}

} // namespace scsd
