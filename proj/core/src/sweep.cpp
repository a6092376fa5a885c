#include "scsd/sweep.hpp"

#include "scsd/phantom.hpp"
#include "scsd/solver.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

namespace scsd {

namespace {

constexpr const char* kHeader =
    "method,alpha_deg,p_iso,b_value,snr,seed,aae_deg,tp_rate,fp_rate,contrast,"
    "iterations,converged,status";

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string row_key(const SweepRow& r) {
  std::ostringstream k;
  k << method_name(r.method) << ',' << format_double(r.alpha_deg) << ',' << format_double(r.p_iso)
    << ',' << format_double(r.b_value) << ',' << format_double(r.snr) << ',' << r.seed;
  return k.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

/// Immutable per-(b,method-kind) solver inputs shared across rows.
struct SharedResources {
  std::map<double, Dictionary> dicts; // by b-value
  std::map<std::pair<double, bool>, std::shared_ptr<const LsFactorization>> facts;
  std::map<double, std::shared_ptr<const FilterBank>> filter_banks; // by tau
  TessellatedSphere acq_sphere;  // order 2
  TessellatedSphere recon_sphere;
};

SharedResources build_resources(const SweepConfig& cfg) {
  SharedResources res;
  res.acq_sphere = icosa_tessellate(2, true);
  res.recon_sphere = icosa_tessellate(cfg.recon_order, true);

  std::vector<double> taus;
  bool any_iso = false, any_aniso = false;
  for (Method m : cfg.methods) {
    const SolverConfig mc = make_preset(m);
    (mc.include_iso_column ? any_iso : any_aniso) = true;
    if (mc.mu > 0.0) taus.push_back(mc.tau());
  }
  for (auto [b, snr] : cfg.b_snr) {
    (void)snr;
    SfrParams sfr{cfg.lambda_par, cfg.lambda_perp, b};
    DirectionSet acq = res.acq_sphere.directions;
    acq.b_value = b;
    Dictionary dict = build_dictionary(acq, res.recon_sphere.directions, sfr);
    if (any_iso)
      res.facts[{b, true}] = std::make_shared<LsFactorization>(
          factor_normal_matrix(dict.Phi, 1.0));
    if (any_aniso)
      res.facts[{b, false}] = std::make_shared<LsFactorization>(
          factor_normal_matrix(dict.H, 1.0));
    res.dicts.emplace(b, std::move(dict));
  }
  for (double tau : taus)
    if (!res.filter_banks.count(tau))
      res.filter_banks[tau] =
          std::make_shared<const FilterBank>(res.recon_sphere.directions, tau);
  return res;
}

std::string compute_row(const SweepConfig& cfg, const SharedResources& res, const SweepRow& row) {
  MetricsReport rep;
  int iterations = 0;
  bool converged = false;
  std::string status = "ok";
  try {
    PhantomSpec spec;
    spec.dims = cfg.dims;
    spec.crossing_angle_deg = row.alpha_deg;
    spec.fibre_radius_vox = cfg.fibre_radius_vox;
    spec.p_iso_inside = row.p_iso;
    spec.iso_diffusivity = cfg.iso_diffusivity;
    spec.sfr = {cfg.lambda_par, cfg.lambda_perp, row.b_value};
    spec.snr = row.snr;
    spec.seed = row.seed;
    DirectionSet acq = res.acq_sphere.directions;
    acq.b_value = row.b_value;
    const PhantomData data = generate_phantom(spec, acq);

    SolverConfig sc = make_preset(row.method);
    sc.max_iters = cfg.max_iters;
    sc.primal_tol = cfg.primal_tol;
    sc.num_threads = 1;
    const Dictionary& dict = res.dicts.at(row.b_value);
    const FilterBank* filters =
        sc.mu > 0.0 ? res.filter_banks.at(sc.tau()).get() : nullptr;
    auto fact = res.facts.at({row.b_value, sc.include_iso_column});

    AdmmSolution sol = admm_solve(data.signal, dict, sc, filters, fact);
    iterations = sol.report.iterations;
    converged = sol.report.converged;

    std::optional<Eigen::RowVectorXd> resid_idm;
    std::optional<std::span<const double>> idm_span;
    if (!sc.include_iso_column) {
      resid_idm = residual_idm(data.signal, dict, sol.coefficients);
      idm_span = std::span<const double>(resid_idm->data(),
                                         static_cast<size_t>(resid_idm->size()));
    }
    rep = compute_metrics(sol.coefficients, res.recon_sphere.adjacency, data.truth, idm_span);
  } catch (const std::exception& e) {
    status = std::string("error: ") + e.what();
  }

  std::ostringstream line;
  line << row_key(row) << ',' << format_double(rep.aae_deg) << ',' << format_double(rep.tp_rate)
       << ',' << format_double(rep.fp_rate) << ',' << format_double(rep.contrast) << ','
       << iterations << ',' << (converged ? 1 : 0) << ',' << csv_quote(status);
  return line.str();
}

std::map<std::string, std::string> load_existing(const std::filesystem::path& path) {
  std::map<std::string, std::string> rows;
  std::ifstream f(path);
  if (!f) return rows;
  std::string line;
  bool first = true;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (first) {
      first = false;
      continue;
    }
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() < 6) continue;
    std::string key = fields[0];
    for (int i = 1; i < 6; ++i) key += "," + fields[static_cast<size_t>(i)];
    rows.emplace(std::move(key), line);
  }
  return rows;
}

} // namespace

SweepConfig SweepConfig::defaults() {
  SweepConfig c;
  for (int a = 30; a <= 90; a += 5) c.alphas.push_back(a);
  c.p_isos = {0.0, 0.25, 0.5, 0.75};
  c.b_snr = {{1000.0, 20.0}, {3000.0, 7.0}};
  c.methods = all_methods();
  return c;
}

long long SweepConfig::row_count() const {
  return static_cast<long long>(alphas.size()) * static_cast<long long>(p_isos.size()) *
         static_cast<long long>(b_snr.size()) * static_cast<long long>(methods.size()) * num_seeds;
}

long long run_sweep(const SweepConfig& cfg, const std::filesystem::path& csv_path,
                    const SweepProgress& progress) {
  if (cfg.alphas.empty() || cfg.p_isos.empty() || cfg.b_snr.empty() || cfg.methods.empty() ||
      cfg.num_seeds < 1)
    throw std::invalid_argument("run_sweep: empty grid");

  std::vector<SweepRow> grid;
  grid.reserve(static_cast<size_t>(cfg.row_count()));
  for (auto [b, snr] : cfg.b_snr)
    for (double p : cfg.p_isos)
      for (double a : cfg.alphas)
        for (int s = 1; s <= cfg.num_seeds; ++s)
          for (Method m : cfg.methods)
            grid.push_back({m, a, p, b, snr, static_cast<std::uint64_t>(s)});

  const auto tmp_path = std::filesystem::path(csv_path.string() + ".tmp");
  auto existing = load_existing(csv_path);
  for (auto& [k, v] : load_existing(tmp_path)) existing.emplace(k, v);

  const long long n = static_cast<long long>(grid.size());
  std::vector<std::string> lines(static_cast<size_t>(n));
  std::vector<char> ready(static_cast<size_t>(n), 0);
  std::vector<long long> todo;
  for (long long i = 0; i < n; ++i) {
    const auto it = existing.find(row_key(grid[static_cast<size_t>(i)]));
    if (it != existing.end()) {
      lines[static_cast<size_t>(i)] = it->second;
      ready[static_cast<size_t>(i)] = 1;
    } else {
      todo.push_back(i);
    }
  }

  const SharedResources res = build_resources(cfg);

  std::mutex mtx;
  std::condition_variable cv;
  std::atomic<size_t> next{0};
  long long computed = 0;

  auto worker = [&] {
    for (;;) {
      const size_t t = next.fetch_add(1);
      if (t >= todo.size()) return;
      const long long idx = todo[t];
      std::string line = compute_row(cfg, res, grid[static_cast<size_t>(idx)]);
      {
        std::lock_guard<std::mutex> lock(mtx);
        lines[static_cast<size_t>(idx)] = std::move(line);
        ready[static_cast<size_t>(idx)] = 1;
        ++computed;
      }
      cv.notify_one();
    }
  };

  const int jobs = std::max(1, std::min<int>(cfg.jobs, static_cast<int>(todo.size())));
  std::vector<std::thread> pool;
  for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);

  {
    std::ofstream out(tmp_path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp_path.string() + " for writing");
    out << kHeader << '\n';
    for (long long i = 0; i < n; ++i) {
      {
        std::unique_lock<std::mutex> lock(mtx);
        cv.wait(lock, [&] { return ready[static_cast<size_t>(i)] != 0; });
      }
      out << lines[static_cast<size_t>(i)] << '\n';
      out.flush();
      if (progress) progress(i + 1, n, grid[static_cast<size_t>(i)]);
    }
    if (!out) throw std::runtime_error("write failed: " + tmp_path.string());
  }
  for (auto& t : pool) t.join();

  std::filesystem::rename(tmp_path, csv_path);
  return computed;
}

SweepTable load_sweep_csv(const std::filesystem::path& csv_path) {
  std::ifstream f(csv_path);
  if (!f) throw std::runtime_error("cannot open " + csv_path.string());
  SweepTable table;
  std::string line;
  bool first = true;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (first) {
      first = false;
      continue;
    }
    if (line.empty()) continue;
    const auto fi = split_csv_line(line);
    if (fi.size() != 13)
      throw std::runtime_error(csv_path.string() + ": malformed row: " + line);
    SweepTable::Entry e;
    e.row.method = parse_method(fi[0]);
    e.row.alpha_deg = std::stod(fi[1]);
    e.row.p_iso = std::stod(fi[2]);
    e.row.b_value = std::stod(fi[3]);
    e.row.snr = std::stod(fi[4]);
    e.row.seed = std::stoull(fi[5]);
    e.metrics.aae_deg = std::stod(fi[6]);
    e.metrics.tp_rate = std::stod(fi[7]);
    e.metrics.fp_rate = std::stod(fi[8]);
    e.metrics.contrast = std::stod(fi[9]);
    e.metrics.method = fi[0];
    e.metrics.alpha_deg = e.row.alpha_deg;
    e.metrics.p_iso = e.row.p_iso;
    e.metrics.b_value = e.row.b_value;
    e.metrics.snr = e.row.snr;
    e.metrics.seed = e.row.seed;
    e.iterations = std::stoi(fi[10]);
    e.converged = fi[11] == "1";
    e.status = fi[12];
    table.entries.push_back(std::move(e));
  }
  return table;
}

} // namespace scsd
