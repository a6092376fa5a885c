#include "scsd/tv.hpp"

#include <cmath>
#include <stdexcept>

namespace scsd {

void TvConfig::validate() const {
  if (!(step > 0.0) || step > 0.25)
    throw std::invalid_argument("TvConfig: step must be in (0, 0.25]");
  if (!(tol > 0.0)) throw std::invalid_argument("TvConfig: tol must be positive");
  if (max_iters < 1) throw std::invalid_argument("TvConfig: max_iters must be >= 1");
  if (weight < 0.0) throw std::invalid_argument("TvConfig: weight must be nonnegative");
}

double tv_seminorm(std::span<const double> image, Dims3 dims) {
  if (static_cast<long long>(image.size()) != dims.count())
    throw std::invalid_argument("tv_seminorm: image size does not match dims");
  const int nx = dims.nx, ny = dims.ny, nz = dims.nz;
  auto at = [&](int i, int j, int k) {
    return image[static_cast<size_t>(i + nx * (j + static_cast<long long>(ny) * k))];
  };
  double total = 0.0;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const double gx = i > 0 ? at(i, j, k) - at(i - 1, j, k) : 0.0;
        const double gy = j > 0 ? at(i, j, k) - at(i, j - 1, k) : 0.0;
        const double gz = k > 0 ? at(i, j, k) - at(i, j, k - 1) : 0.0;
        total += std::sqrt(gx * gx + gy * gy + gz * gz);
      }
  return total;
}

namespace {

// backward differences, matching the seminorm grouping above; the first
// sample of each axis carries no difference
void gradient(const std::vector<double>& u, Dims3 d, std::vector<double>& gx,
              std::vector<double>& gy, std::vector<double>& gz) {
  const int nx = d.nx, ny = d.ny, nz = d.nz;
  long long i = 0;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int x = 0; x < nx; ++x, ++i) {
        const size_t s = static_cast<size_t>(i);
        gx[s] = x > 0 ? u[s] - u[s - 1] : 0.0;
        gy[s] = j > 0 ? u[s] - u[s - static_cast<size_t>(nx)] : 0.0;
        gz[s] = k > 0 ? u[s] - u[s - static_cast<size_t>(nx) * ny] : 0.0;
      }
}

// negative adjoint of the gradient; sums to zero over the volume
void divergence(const std::vector<double>& px, const std::vector<double>& py,
                const std::vector<double>& pz, Dims3 d, std::vector<double>& out) {
  const int nx = d.nx, ny = d.ny, nz = d.nz;
  long long i = 0;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int x = 0; x < nx; ++x, ++i) {
        const size_t s = static_cast<size_t>(i);
        double v = 0.0;
        if (x > 0) v -= px[s];
        if (x + 1 < nx) v += px[s + 1];
        if (j > 0) v -= py[s];
        if (j + 1 < ny) v += py[s + static_cast<size_t>(nx)];
        if (k > 0) v -= pz[s];
        if (k + 1 < nz) v += pz[s + static_cast<size_t>(nx) * ny];
        out[s] = v;
      }
}

} // namespace

TvResult tv_prox(std::span<const double> q, const TvConfig& cfg, Dims3 dims) {
  cfg.validate();
  if (static_cast<long long>(q.size()) != dims.count())
    throw std::invalid_argument("tv_prox: image size does not match dims");

  TvResult res;
  res.image.assign(q.begin(), q.end());
  if (cfg.weight == 0.0) {
    res.converged = true;
    return res;
  }

  const size_t n = q.size();
  std::vector<double> px(n, 0.0), py(n, 0.0), pz(n, 0.0);
  std::vector<double> div(n, 0.0), gx(n), gy(n), gz(n), work(n);

  const double w = cfg.weight;
  for (res.iterations = 1; res.iterations <= cfg.max_iters; ++res.iterations) {
    for (size_t i = 0; i < n; ++i) work[i] = div[i] - q[i] / w;
    gradient(work, dims, gx, gy, gz);
    double max_delta = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double ax = px[i] + cfg.step * gx[i];
      const double ay = py[i] + cfg.step * gy[i];
      const double az = pz[i] + cfg.step * gz[i];
      const double denom = 1.0 + cfg.step * std::sqrt(gx[i] * gx[i] + gy[i] * gy[i] + gz[i] * gz[i]);
      const double nxp = ax / denom, nyp = ay / denom, nzp = az / denom;
      max_delta = std::max({max_delta, std::abs(nxp - px[i]), std::abs(nyp - py[i]),
                            std::abs(nzp - pz[i])});
      px[i] = nxp;
      py[i] = nyp;
      pz[i] = nzp;
    }
    divergence(px, py, pz, dims, div);
    if (max_delta < cfg.tol) {
      res.converged = true;
      break;
    }
  }
  res.iterations = std::min(res.iterations, cfg.max_iters);
  for (size_t i = 0; i < n; ++i) res.image[i] = q[i] - w * div[i];
  return res;
}

} // namespace scsd
