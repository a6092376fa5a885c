#include "scsd/presets.hpp"

#include <stdexcept>

namespace scsd {

SolverConfig make_preset(Method method) {
  SolverConfig cfg;
  cfg.delta_u = cfg.delta_v = 0.5;
  switch (method) {
    case Method::Csd:
      cfg.lambda = 0.0; cfg.mu = 0.0; cfg.nu = 0.0;
      cfg.include_iso_column = false;
      break;
    case Method::MinL1:
      cfg.lambda = 0.01; cfg.mu = 0.0; cfg.nu = 0.0;
      cfg.include_iso_column = false;
      break;
    case Method::CsdFc:
      cfg.lambda = 0.0; cfg.mu = 0.01; cfg.nu = 0.0;
      cfg.include_iso_column = false;
      break;
    case Method::MinTvL1:
      cfg.lambda = 0.07; cfg.mu = 0.0; cfg.nu = 0.01;
      cfg.include_iso_column = true;
      break;
    case Method::Scsd:
      cfg.lambda = 0.03; cfg.mu = 0.4; cfg.nu = 0.01;
      cfg.include_iso_column = true;
      break;
    default:
      throw std::invalid_argument("make_preset: unknown method");
  }
  return cfg;
}

const char* method_name(Method method) {
  switch (method) {
    case Method::Csd: return "csd";
    case Method::MinL1: return "minl1";
    case Method::CsdFc: return "csdfc";
    case Method::MinTvL1: return "mintvl1";
    case Method::Scsd: return "scsd";
  }
  throw std::invalid_argument("method_name: unknown method");
}

Method parse_method(const std::string& name) {
  for (Method m : all_methods())
    if (name == method_name(m)) return m;
  throw std::invalid_argument("unknown method '" + name + "'");
}

std::vector<Method> all_methods() {
  return {Method::Csd, Method::MinL1, Method::CsdFc, Method::MinTvL1, Method::Scsd};
}

Eigen::RowVectorXd residual_idm(const SignalVolume& s, const Dictionary& dict,
                                const CoefficientVolume& f_a) {
  if (f_a.has_iso_row)
    throw std::invalid_argument("residual_idm: expects coefficients without an isotropic row");
  if (f_a.data.rows() != dict.num_recon() || s.data.rows() != dict.num_samples() ||
      f_a.data.cols() != s.data.cols())
    throw std::invalid_argument("residual_idm: shape mismatch");
  const MatRM resid = dict.H * f_a.data - s.data;
  return resid.colwise().mean();
}

} // namespace scsd
