#include "scsd/dirfilter.hpp"

#include <cmath>
#include <fftw3.h>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace scsd {

namespace {

// FFTW planning is not thread-safe; execution of a plan on its own arrays is.
std::mutex fftw_mutex;

inline int mirror_index(int c, int n) {
  // half-sample symmetric: ..., q[1], q[0] | q[0], q[1], ..., q[n-1] | q[n-1], ...
  if (c < 0) return -1 - c;
  if (c >= n) return 2 * n - 1 - c;
  return c;
}

} // namespace

std::vector<double> directional_diff(std::span<const double> image, Dims3 dims, const Vec3& v) {
  if (static_cast<long long>(image.size()) != dims.count())
    throw std::invalid_argument("directional_diff: image size does not match dims");
  const int nx = dims.nx, ny = dims.ny, nz = dims.nz;
  std::vector<double> out(image.size());
  auto at = [&](int i, int j, int k) {
    return image[static_cast<size_t>(i + nx * (j + static_cast<long long>(ny) * k))];
  };
  long long idx = 0;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i, ++idx) {
        double d = 0.0;
        if (i > 0) d += v.x() * (at(i, j, k) - at(i - 1, j, k));
        if (j > 0) d += v.y() * (at(i, j, k) - at(i, j - 1, k));
        if (k > 0) d += v.z() * (at(i, j, k) - at(i, j, k - 1));
        out[static_cast<size_t>(idx)] = d;
      }
  return out;
}

std::complex<double> freq_response(const Vec3& v, const std::array<double, 3>& omega) {
  std::complex<double> h = 0.0;
  for (int d = 0; d < 3; ++d) {
    const std::complex<double> phase(0.0, -(omega[static_cast<size_t>(d)] - std::numbers::pi) / 2.0);
    h += 2.0 * v[d] * std::sin(omega[static_cast<size_t>(d)] / 2.0) * std::exp(phase);
  }
  return h;
}

DirectionalFilter build_filter(const Vec3& v, double tau, int grid_n) {
  if (!(tau > 0.0)) throw std::invalid_argument("build_filter: tau must be positive");
  if (grid_n < 64) throw std::invalid_argument("build_filter: DFT grid must be at least 64^3");

  const int N = grid_n;
  const size_t total = static_cast<size_t>(N) * N * N;

  fftw_complex* buf;
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_mutex);
    buf = fftw_alloc_complex(total);
    plan = fftw_plan_dft_3d(N, N, N, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
  }

  // H_v(w) = sum_d v_d (1 - e^{-i w_d}), equal to the Eq. form of
  // freq_response; per-axis contributions are cached as 1-D tables. The
  // first (slowest) FFT dimension is z so taps come out z-major like the
  // kernel layout.
  std::vector<double> re(static_cast<size_t>(N) * 3), im(static_cast<size_t>(N) * 3);
  for (int n = 0; n < N; ++n) {
    const double w = 2.0 * std::numbers::pi * n / N;
    for (int d = 0; d < 3; ++d) {
      re[static_cast<size_t>(3 * n + d)] = v[d] * (1.0 - std::cos(w));
      im[static_cast<size_t>(3 * n + d)] = v[d] * std::sin(w);
    }
  }
  size_t idx = 0;
  for (int a = 0; a < N; ++a)     // omega_z
    for (int b = 0; b < N; ++b)   // omega_y
      for (int c = 0; c < N; ++c, ++idx) { // omega_x
        const double hr = re[static_cast<size_t>(3 * a + 2)] + re[static_cast<size_t>(3 * b + 1)] +
                          re[static_cast<size_t>(3 * c + 0)];
        const double hi = im[static_cast<size_t>(3 * a + 2)] + im[static_cast<size_t>(3 * b + 1)] +
                          im[static_cast<size_t>(3 * c + 0)];
        buf[idx][0] = 1.0 / (1.0 + 2.0 * tau * (hr * hr + hi * hi));
        buf[idx][1] = 0.0;
      }

  fftw_execute(plan);

  // taps[m] = (1/N^3) * buf[m mod N]; central 7^3 block via wraparound
  const double scale = 1.0 / static_cast<double>(total);
  double energy_all = 0.0;
  for (size_t i = 0; i < total; ++i) {
    const double t = buf[i][0] * scale;
    energy_all += t * t;
  }

  DirectionalFilter f;
  f.direction = v;
  f.tau = tau;
  double energy_kept = 0.0, sum = 0.0;
  for (int dz = -3; dz <= 3; ++dz)
    for (int dy = -3; dy <= 3; ++dy)
      for (int dx = -3; dx <= 3; ++dx) {
        const int a = (dz + N) % N, b = (dy + N) % N, c = (dx + N) % N;
        const double t = buf[(static_cast<size_t>(a) * N + b) * N + c][0] * scale;
        f.kernel[static_cast<size_t>((dz + 3) * 49 + (dy + 3) * 7 + (dx + 3))] = t;
        energy_kept += t * t;
        sum += t;
      }
  f.truncation_error = std::max(energy_all - energy_kept, 0.0) / energy_all;

  for (auto& t : f.kernel) t /= sum; // unit DC gain

  {
    std::lock_guard<std::mutex> lock(fftw_mutex);
    fftw_destroy_plan(plan);
    fftw_free(buf);
  }
  return f;
}

FirWorkspace::FirWorkspace(Dims3 dims)
    : dims_(dims), pnx_(dims.nx + 6), pny_(dims.ny + 6), pnz_(dims.nz + 6),
      padded_(static_cast<size_t>(pnx_) * pny_ * pnz_) {
  auto fill = [](std::vector<int>& v, int n) {
    v.resize(static_cast<size_t>(n + 6));
    for (int c = -3; c < n + 3; ++c) v[static_cast<size_t>(c + 3)] = mirror_index(c, n);
  };
  fill(mirror_x_, dims.nx);
  fill(mirror_y_, dims.ny);
  fill(mirror_z_, dims.nz);
}

void FirWorkspace::apply(const DirectionalFilter& filter, const double* image, double* out) {
  const int nx = dims_.nx, ny = dims_.ny, nz = dims_.nz;
  // mirror-pad
  for (int pz = 0; pz < pnz_; ++pz) {
    const int sz = mirror_z_[static_cast<size_t>(pz)];
    for (int py = 0; py < pny_; ++py) {
      const int sy = mirror_y_[static_cast<size_t>(py)];
      const double* src = image + (static_cast<long long>(sz) * ny + sy) * nx;
      double* dst = &padded_[(static_cast<size_t>(pz) * pny_ + py) * pnx_];
      for (int px = 0; px < pnx_; ++px) dst[px] = src[mirror_x_[static_cast<size_t>(px)]];
    }
  }
  const long long count = dims_.count();
  std::fill(out, out + count, 0.0);
  // tap-outer accumulation: each tap contributes a shifted copy, so the
  // inner x-loop is a contiguous axpy
  for (int t = 0; t < 343; ++t) {
    const double w = filter.kernel[static_cast<size_t>(t)];
    const int dz = t / 49, dy = (t / 7) % 7, dx = t % 7;
    for (int z = 0; z < nz; ++z) {
      const size_t pbase = (static_cast<size_t>(z + dz) * pny_) * static_cast<size_t>(pnx_);
      for (int y = 0; y < ny; ++y) {
        const double* __restrict src =
            &padded_[pbase + static_cast<size_t>(y + dy) * pnx_ + static_cast<size_t>(dx)];
        double* __restrict dst = out + (static_cast<long long>(z) * ny + y) * nx;
        for (int x = 0; x < nx; ++x) dst[x] += w * src[x];
      }
    }
  }
}

void apply_filter(const DirectionalFilter& filter, std::span<const double> image, Dims3 dims,
                  std::span<double> out) {
  if (static_cast<long long>(image.size()) != dims.count() || out.size() != image.size())
    throw std::invalid_argument("apply_filter: size mismatch");
  FirWorkspace ws(dims);
  ws.apply(filter, image.data(), out.data());
}

std::vector<double> solve_fc_ls(std::span<const double> q, const Vec3& v, double tau, Dims3 dims) {
  if (tau < 0.0) throw std::invalid_argument("solve_fc_ls: tau must be nonnegative");
  if (tau == 0.0) return {q.begin(), q.end()};
  std::vector<double> out(q.size());
  apply_filter(build_filter(v, tau), q, dims, out);
  return out;
}

FilterBank::FilterBank(const DirectionSet& dirs, double tau, int grid_n) : tau_(tau) {
  filters_.reserve(static_cast<size_t>(dirs.size()));
  for (int j = 0; j < dirs.size(); ++j) filters_.push_back(build_filter(dirs[j], tau, grid_n));
}

double FilterBank::max_truncation_error() const {
  double m = 0.0;
  for (const auto& f : filters_) m = std::max(m, f.truncation_error);
  return m;
}

} // namespace scsd
