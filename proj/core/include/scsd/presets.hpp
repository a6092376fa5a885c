#pragma once

#include "scsd/solver.hpp"

#include <string>
#include <vector>

namespace scsd {

/// Reference deconvolution methods expressed as solver configurations.
enum class Method { Csd, MinL1, CsdFc, MinTvL1, Scsd };

/// CSD:      (0, 0, 0)          on H
/// Min-L1:   (0.01, 0, 0)       on H
/// CSD-FC:   (0, 0.01, 0)       on H
/// Min-TV-L1:(0.07, 0, 0.01)    on Phi
/// SCSD:     (0.03, 0.4, 0.01)  on Phi
/// All presets use delta_u = delta_v = 0.5.
SolverConfig make_preset(Method method);

const char* method_name(Method method);
Method parse_method(const std::string& name); // throws on unknown name
std::vector<Method> all_methods();

/// Residual-based isotropic estimate for methods without an isotropic
/// column: per-voxel mean over directions of (H f_a - s).
Eigen::RowVectorXd residual_idm(const SignalVolume& s, const Dictionary& dict,
                                const CoefficientVolume& f_a);

} // namespace scsd
