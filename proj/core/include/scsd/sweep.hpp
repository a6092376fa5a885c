#pragma once

#include "scsd/metrics.hpp"
#include "scsd/presets.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace scsd {

/// Cartesian experiment grid over phantom and solver settings. Rows are
/// keyed by (method, alpha, p_iso, b, snr, seed); a sweep is resumable
/// because rows already present in the output file are not recomputed.
struct SweepConfig {
  std::vector<double> alphas;                  // degrees
  std::vector<double> p_isos;
  std::vector<std::pair<double, double>> b_snr; // (b-value, SNR) pairs
  std::vector<Method> methods;
  int num_seeds = 3;                            // seeds 1..num_seeds

  Dims3 dims{16, 16, 12};
  double fibre_radius_vox = 4.0;
  double iso_diffusivity = 8e-4;
  double lambda_par = 17e-4, lambda_perp = 3e-4;
  int recon_order = 3;

  int max_iters = 200;
  double primal_tol = 1e-4;
  int jobs = 1;

  static SweepConfig defaults();
  long long row_count() const;
};

struct SweepRow {
  Method method;
  double alpha_deg, p_iso, b_value, snr;
  std::uint64_t seed;
};

using SweepProgress = std::function<void(long long done, long long total, const SweepRow& row)>;

/// Runs the grid, merging with any rows already stored at `csv_path`, and
/// rewrites the file complete and in grid order. Returns the number of rows
/// actually computed. Failures are recorded in the row's status column and
/// do not stop the sweep.
long long run_sweep(const SweepConfig& cfg, const std::filesystem::path& csv_path,
                    const SweepProgress& progress = {});

/// Parsed view of a sweep CSV for downstream aggregation.
struct SweepTable {
  struct Entry {
    SweepRow row;
    MetricsReport metrics;
    int iterations = 0;
    bool converged = false;
    std::string status;
  };
  std::vector<Entry> entries;
};

SweepTable load_sweep_csv(const std::filesystem::path& csv_path);

} // namespace scsd
