#include "spectral.hpp"

#include <fftw3.h>

#include <cstring>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

#include "wforge/operators.hpp"

namespace wforge::detail {

namespace {

std::mutex plan_mutex;
int plan_threads = 1;
bool threads_ready = false;

struct PlanCache {
  std::map<std::tuple<int, int, int, int>, fftw_plan> plans;
  ~PlanCache() {
    for (auto& [key, plan] : plans) fftw_destroy_plan(plan);
  }
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

fftw_plan get_plan(int nx, int ny, int sign) {
  std::lock_guard lock(plan_mutex);
  if (!threads_ready) {
    fftw_init_threads();
    threads_ready = true;
  }
  auto key = std::make_tuple(nx, ny, sign, plan_threads);
  auto it = cache().plans.find(key);
  if (it != cache().plans.end()) return it->second;
  fftw_plan_with_nthreads(plan_threads);
  auto* p = fftw_alloc_complex(static_cast<std::size_t>(nx) * ny);
  fftw_plan plan = fftw_plan_dft_2d(nx, ny, p, p, sign, FFTW_ESTIMATE);
  fftw_free(p);
  cache().plans.emplace(key, plan);
  return plan;
}

// Plans assume SIMD-aligned arrays, which std::vector does not guarantee, so
// transforms run in an aligned per-thread buffer.
struct AlignedBuffer {
  fftw_complex* data = nullptr;
  std::size_t size = 0;
  ~AlignedBuffer() { fftw_free(data); }
  fftw_complex* reserve(std::size_t n) {
    if (n > size) {
      fftw_free(data);
      data = fftw_alloc_complex(n);
      size = n;
    }
    return data;
  }
};

void run(std::vector<cplx>& data, int nx, int ny, int sign) {
  fftw_plan plan = get_plan(nx, ny, sign);
  thread_local AlignedBuffer buffer;
  auto* p = buffer.reserve(data.size());
  std::memcpy(static_cast<void*>(p), data.data(), data.size() * sizeof(cplx));
  fftw_execute_dft(plan, p, p);
  std::memcpy(static_cast<void*>(data.data()), p, data.size() * sizeof(cplx));
}

}  // namespace

std::vector<cplx> spectral_pass(std::span<const cplx> in, int nx, int ny,
                                const std::function<void(cplx*)>& edit) {
  fftw_plan fwd = get_plan(nx, ny, FFTW_FORWARD);
  fftw_plan bwd = get_plan(nx, ny, FFTW_BACKWARD);
  thread_local AlignedBuffer buffer;
  auto* p = buffer.reserve(in.size());
  std::memcpy(static_cast<void*>(p), in.data(), in.size() * sizeof(cplx));
  fftw_execute_dft(fwd, p, p);
  edit(reinterpret_cast<cplx*>(p));
  fftw_execute_dft(bwd, p, p);
  const double s = 1.0 / (static_cast<double>(nx) * ny);
  const auto* q = reinterpret_cast<const cplx*>(p);
  std::vector<cplx> out(in.size());
  for (std::size_t k = 0; k < in.size(); ++k) out[k] = q[k] * s;
  return out;
}

void fft_forward(std::vector<cplx>& data, int nx, int ny) {
  run(data, nx, ny, FFTW_FORWARD);
}

void fft_backward(std::vector<cplx>& data, int nx, int ny) {
  run(data, nx, ny, FFTW_BACKWARD);
  const double s = 1.0 / (static_cast<double>(nx) * ny);
  for (auto& v : data) v *= s;
}

int mode_number(int i, int n) { return i <= n / 2 ? i : i - n; }

double wavenumber(int i, int n, double l, bool zero_nyquist) {
  if (zero_nyquist && n % 2 == 0 && i == n / 2) return 0.0;
  return 2.0 * std::numbers::pi * mode_number(i, n) / l;
}

}  // namespace wforge::detail

namespace wforge {

void set_fft_threads(int n) {
  std::lock_guard lock(detail::plan_mutex);
  detail::plan_threads = n > 0 ? n : 1;
}

}  // namespace wforge
