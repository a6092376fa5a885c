// Command-line front end for spatially constrained spherical deconvolution:
// phantom generation, single solves, metric scoring, and experiment sweeps.

#include "scsd/metrics.hpp"
#include "scsd/phantom.hpp"
#include "scsd/presets.hpp"
#include "scsd/solver.hpp"
#include "scsd/sweep.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <thread>

namespace {

using namespace scsd;

double parse_snr(const std::string& s) {
  if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
  return std::stod(s);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

struct PhantomArgs {
  std::string output;
  double alpha = 60.0, piso = 0.25, b = 3000.0;
  std::string snr = "7";
  std::uint64_t seed = 1;
  std::vector<int> dims{16, 16, 12};
  double radius = 4.0, iso_diff = 8e-4, lambda_par = 17e-4, lambda_perp = 3e-4;
  int acq_order = 2;
  std::string grad_out;
};

int run_phantom(const PhantomArgs& a) {
  PhantomSpec spec;
  spec.dims = {a.dims[0], a.dims[1], a.dims[2]};
  spec.crossing_angle_deg = a.alpha;
  spec.fibre_radius_vox = a.radius;
  spec.p_iso_inside = a.piso;
  spec.iso_diffusivity = a.iso_diff;
  spec.sfr = {a.lambda_par, a.lambda_perp, a.b};
  spec.snr = parse_snr(a.snr);
  spec.seed = a.seed;

  DirectionSet acq = icosa_tessellate(a.acq_order, true).directions;
  acq.b_value = a.b;
  const PhantomData data = generate_phantom(spec, acq);
  save_volume(data.signal, a.output);
  save_ground_truth(data.truth, a.output + "_truth.json");
  if (!a.grad_out.empty()) save_gradient_table(a.grad_out, acq);
  std::cerr << "wrote " << a.output << ".{json,raw} (" << acq.size() << " directions, "
            << spec.dims.nx << "x" << spec.dims.ny << "x" << spec.dims.nz << ") and "
            << a.output << "_truth.json\n";
  return 0;
}

struct SolveArgs {
  std::string input, output, report, grad_table;
  std::string method = "scsd";
  double lambda = 0, mu = 0, nu = 0;
  double delta = 0.5;
  double dict_bvalue = 0;
  int max_iters = 200;
  double tol = 1e-4;
  int recon_order = 3;
  int threads = 1;
  bool no_iso = false;
  double lambda_par = 17e-4, lambda_perp = 3e-4;
};

int run_solve(const SolveArgs& a) {
  SignalVolume vol = load_signal_volume(a.input);
  if (!a.grad_table.empty())
    vol.acquisition = load_gradient_table(a.grad_table, a.dict_bvalue);
  if (a.dict_bvalue > 0) vol.acquisition.b_value = a.dict_bvalue;
  if (!(vol.acquisition.b_value > 0))
    throw std::runtime_error("no b-value available: pass --dict-bvalue or use a volume header "
                             "that carries one");
  if (vol.acquisition.size() != vol.num_directions())
    throw std::runtime_error("gradient table has " + std::to_string(vol.acquisition.size()) +
                             " directions but the volume has " +
                             std::to_string(vol.num_directions()) + " rows");

  SolverConfig cfg;
  if (a.method == "custom") {
    cfg.lambda = a.lambda;
    cfg.mu = a.mu;
    cfg.nu = a.nu;
    cfg.include_iso_column = !a.no_iso;
  } else {
    cfg = make_preset(parse_method(a.method));
  }
  cfg.delta_u = cfg.delta_v = a.delta;
  cfg.max_iters = a.max_iters;
  cfg.primal_tol = a.tol;
  cfg.num_threads = a.threads;

  SfrParams sfr{a.lambda_par, a.lambda_perp, vol.acquisition.b_value};
  const DirectionSet recon = icosa_tessellate(a.recon_order, true).directions;
  const Dictionary dict = build_dictionary(vol.acquisition, recon, sfr);

  const AdmmSolution sol = admm_solve(vol, dict, cfg);
  save_volume(sol.coefficients, a.output);

  if (!a.report.empty()) {
    nlohmann::json j;
    j["iterations"] = sol.report.iterations;
    j["converged"] = sol.report.converged;
    j["diverged"] = sol.report.diverged;
    j["objective"] = sol.report.objective;
    j["primal_res_u"] = sol.report.primal_res_u;
    j["primal_res_v"] = sol.report.primal_res_v;
    std::ofstream f(a.report);
    if (!f) throw std::runtime_error("cannot open " + a.report);
    f << j.dump(2) << '\n';
  }
  std::cerr << "solved " << a.method << " in " << sol.report.iterations << " iterations ("
            << (sol.report.converged ? "converged" : "max iterations") << ")\n";
  return 0;
}

struct MetricsArgs {
  std::string coeffs, truth, signal, output, json_out;
  int recon_order = 3;
  std::string method = "unknown";
};

int run_metrics(const MetricsArgs& a) {
  const CoefficientVolume coeffs = load_coefficient_volume(a.coeffs);
  const GroundTruth truth = load_ground_truth(a.truth);
  const TessellatedSphere recon = icosa_tessellate(a.recon_order, true);
  if (recon.directions.size() != coeffs.num_recon())
    throw std::runtime_error("--recon-order " + std::to_string(a.recon_order) + " gives " +
                             std::to_string(recon.directions.size()) +
                             " directions but the volume has " +
                             std::to_string(coeffs.num_recon()));

  std::optional<Eigen::RowVectorXd> resid;
  std::optional<std::span<const double>> idm;
  if (!coeffs.has_iso_row) {
    if (a.signal.empty())
      throw std::runtime_error("coefficients lack an isotropic row; pass --signal so the "
                               "residual isotropic estimate can be formed");
    const SignalVolume sig = load_signal_volume(a.signal);
    SfrParams sfr{17e-4, 3e-4, sig.acquisition.b_value};
    const Dictionary dict = build_dictionary(sig.acquisition, coeffs.recon_dirs, sfr);
    resid = residual_idm(sig, dict, coeffs);
    idm = std::span<const double>(resid->data(), static_cast<size_t>(resid->size()));
  }

  const MetricsReport rep = compute_metrics(coeffs, recon.adjacency, truth, idm);
  const std::string csv_header = "method,aae_deg,tp_rate,fp_rate,contrast";
  const std::string csv_row = a.method + "," + fmt(rep.aae_deg) + "," + fmt(rep.tp_rate) + "," +
                              fmt(rep.fp_rate) + "," + fmt(rep.contrast);
  if (a.output.empty()) {
    std::cout << csv_header << '\n' << csv_row << '\n';
  } else {
    std::ofstream f(a.output);
    if (!f) throw std::runtime_error("cannot open " + a.output);
    f << csv_header << '\n' << csv_row << '\n';
  }
  if (!a.json_out.empty()) {
    nlohmann::json j{{"method", a.method},
                     {"aae_deg", rep.aae_deg},
                     {"tp_rate", rep.tp_rate},
                     {"fp_rate", rep.fp_rate},
                     {"contrast", rep.contrast}};
    std::ofstream f(a.json_out);
    if (!f) throw std::runtime_error("cannot open " + a.json_out);
    f << j.dump(2) << '\n';
  }
  return 0;
}

struct SweepArgs {
  std::string output;
  std::vector<std::string> methods;
  int seeds = 3;
  std::vector<double> alphas, pisos;
  std::vector<std::string> b_snr;
  std::vector<int> dims{16, 16, 12};
  int jobs = 0;
  int max_iters = 200;
  double tol = 1e-4;
  int recon_order = 3;
  bool quiet = false;
};

int run_sweep_cmd(const SweepArgs& a) {
  SweepConfig cfg = SweepConfig::defaults();
  if (!a.alphas.empty()) cfg.alphas = a.alphas;
  if (!a.pisos.empty()) cfg.p_isos = a.pisos;
  if (!a.b_snr.empty()) {
    cfg.b_snr.clear();
    for (const auto& s : a.b_snr) {
      const auto pos = s.find(':');
      if (pos == std::string::npos)
        throw std::runtime_error("--b-snr entries must look like 3000:7");
      cfg.b_snr.emplace_back(std::stod(s.substr(0, pos)), parse_snr(s.substr(pos + 1)));
    }
  }
  if (!a.methods.empty()) {
    cfg.methods.clear();
    for (const auto& m : a.methods) cfg.methods.push_back(parse_method(m));
  }
  cfg.num_seeds = a.seeds;
  cfg.dims = {a.dims[0], a.dims[1], a.dims[2]};
  cfg.max_iters = a.max_iters;
  cfg.primal_tol = a.tol;
  cfg.recon_order = a.recon_order;
  cfg.jobs = a.jobs > 0 ? a.jobs : static_cast<int>(std::thread::hardware_concurrency());

  SweepProgress progress;
  if (!a.quiet)
    progress = [](long long done, long long total, const SweepRow& row) {
      std::cerr << "[" << done << "/" << total << "] " << method_name(row.method)
                << " alpha=" << row.alpha_deg << " p_iso=" << row.p_iso << " b=" << row.b_value
                << " seed=" << row.seed << '\n';
    };
  const long long computed = run_sweep(cfg, a.output, progress);
  std::cerr << "sweep complete: " << computed << " rows computed, "
            << cfg.row_count() - computed << " reused\n";
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse spherical deconvolution of single-shell diffusion signals with "
               "spatial regularization"};
  app.require_subcommand(1);

  PhantomArgs pa;
  auto* phantom = app.add_subcommand("phantom", "generate a crossing-fibre phantom volume");
  phantom->set_config("--config", "", "flat key=value configuration file");
  phantom->add_option("--output", pa.output, "output volume base path")->required();
  phantom->add_option("--alpha", pa.alpha, "crossing angle in degrees");
  phantom->add_option("--piso", pa.piso, "isotropic volume fraction inside the fibres");
  phantom->add_option("--b", pa.b, "b-value in s/mm^2");
  phantom->add_option("--snr", pa.snr, "signal-to-noise ratio, or 'inf'");
  phantom->add_option("--seed", pa.seed, "noise seed");
  phantom->add_option("--dims", pa.dims, "volume dimensions nx ny nz")->expected(3);
  phantom->add_option("--radius", pa.radius, "fibre radius in voxels");
  phantom->add_option("--iso-diff", pa.iso_diff, "isotropic diffusivity in mm^2/s");
  phantom->add_option("--lambda-par", pa.lambda_par, "axial diffusivity in mm^2/s");
  phantom->add_option("--lambda-perp", pa.lambda_perp, "radial diffusivity in mm^2/s");
  phantom->add_option("--acq-order", pa.acq_order, "icosahedral order of the acquisition grid");
  phantom->add_option("--grad-out", pa.grad_out, "also write the gradient table here");

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "deconvolve a signal volume");
  solve->set_config("--config", "", "flat key=value configuration file");
  solve->add_option("--input", sa.input, "signal volume base path")->required();
  solve->add_option("--output", sa.output, "coefficient volume base path")->required();
  solve->add_option("--grad-table", sa.grad_table, "gradient table overriding the volume header");
  solve->add_option("--dict-bvalue", sa.dict_bvalue, "b-value for the kernel dictionary");
  auto* method = solve->add_option("--method", sa.method, "csd|minl1|csdfc|mintvl1|scsd|custom")
                     ->check(CLI::IsMember({"csd", "minl1", "csdfc", "mintvl1", "scsd", "custom"}));
  auto* lam = solve->add_option("--lambda", sa.lambda, "l1 weight (custom method only)");
  auto* mu = solve->add_option("--mu", sa.mu, "fibre-continuity weight (custom method only)");
  auto* nu = solve->add_option("--nu", sa.nu, "TV weight (custom method only)");
  solve->add_flag("--no-iso", sa.no_iso, "drop the isotropic column (custom method only)");
  solve->add_option("--delta", sa.delta, "ADMM penalty (delta_u = delta_v)");
  solve->add_option("--max-iters", sa.max_iters, "iteration cap");
  solve->add_option("--tol", sa.tol, "relative primal residual tolerance");
  solve->add_option("--recon-order", sa.recon_order, "icosahedral order of the fODF grid");
  solve->add_option("--threads", sa.threads, "solver threads");
  solve->add_option("--report", sa.report, "write a JSON convergence report here");
  solve->add_option("--lambda-par", sa.lambda_par, "kernel axial diffusivity");
  solve->add_option("--lambda-perp", sa.lambda_perp, "kernel radial diffusivity");
  (void)method;

  MetricsArgs ma;
  auto* metrics = app.add_subcommand("metrics", "score a reconstruction against ground truth");
  metrics->set_config("--config", "", "flat key=value configuration file");
  metrics->add_option("--coeffs", ma.coeffs, "coefficient volume base path")->required();
  metrics->add_option("--truth", ma.truth, "ground-truth JSON sidecar")->required();
  metrics->add_option("--signal", ma.signal,
                      "signal volume (required for methods without an isotropic row)");
  metrics->add_option("--recon-order", ma.recon_order, "icosahedral order of the fODF grid");
  metrics->add_option("--method", ma.method, "method label for the output row");
  metrics->add_option("--output", ma.output, "CSV output path (default: stdout)");
  metrics->add_option("--json", ma.json_out, "JSON output path");

  SweepArgs wa;
  auto* sweep = app.add_subcommand("sweep", "run the full experiment grid");
  sweep->set_config("--config", "", "flat key=value configuration file");
  sweep->add_option("--output", wa.output, "CSV output path")->required();
  sweep->add_option("--methods", wa.methods, "methods to run")->delimiter(',');
  sweep->add_option("--seeds", wa.seeds, "number of seeds (1..N)");
  sweep->add_option("--alphas", wa.alphas, "crossing angles in degrees")->delimiter(',');
  sweep->add_option("--pisos", wa.pisos, "isotropic fractions")->delimiter(',');
  sweep->add_option("--b-snr", wa.b_snr, "b:snr pairs, e.g. 1000:20,3000:7")->delimiter(',');
  sweep->add_option("--dims", wa.dims, "volume dimensions nx ny nz")->expected(3);
  sweep->add_option("--jobs", wa.jobs, "worker threads (default: all cores)");
  sweep->add_option("--max-iters", wa.max_iters, "solver iteration cap");
  sweep->add_option("--tol", wa.tol, "solver tolerance");
  sweep->add_option("--recon-order", wa.recon_order, "icosahedral order of the fODF grid");
  sweep->add_flag("--quiet", wa.quiet, "suppress progress output");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*phantom) return run_phantom(pa);
    if (*solve) {
      if (sa.method != "custom" && (lam->count() || mu->count() || nu->count())) {
        std::cerr << "error: --lambda/--mu/--nu conflict with preset '" << sa.method
                  << "'; use --method custom to set weights directly\n";
        return 2;
      }
      return run_solve(sa);
    }
    if (*metrics) return run_metrics(ma);
    if (*sweep) return run_sweep_cmd(wa);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
