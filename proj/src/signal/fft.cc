#include "dvqe/signal/fft.h"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>

#include "dvqe/common/error.h"

namespace dvqe {
namespace {

// FFTW planning is not thread-safe; execution with the new-array interface
// is. Plans are created once per size and kept for the process lifetime.
std::mutex& plan_mutex() {
  static std::mutex mu;
  return mu;
}

fftw_plan plan_for(std::size_t n, bool forward) {
  static std::map<std::pair<std::size_t, bool>, fftw_plan> cache;
  std::lock_guard<std::mutex> lock(plan_mutex());
  auto it = cache.find({n, forward});
  if (it != cache.end()) return it->second;
  std::vector<double> re(n);
  std::vector<cplx> sp(n / 2 + 1);
  const int ni = static_cast<int>(n);
  auto* cbuf = reinterpret_cast<fftw_complex*>(sp.data());
  fftw_plan p = forward
                    ? fftw_plan_dft_r2c_1d(ni, re.data(), cbuf,
                                           FFTW_ESTIMATE | FFTW_UNALIGNED)
                    : fftw_plan_dft_c2r_1d(ni, cbuf, re.data(),
                                           FFTW_ESTIMATE | FFTW_UNALIGNED);
  cache.emplace(std::make_pair(n, forward), p);
  return p;
}

}  // namespace

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::vector<cplx> rfft(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) throw ConfigError("rfft: empty input");
  std::vector<double> in(x.begin(), x.end());
  std::vector<cplx> out(n / 2 + 1);
  fftw_execute_dft_r2c(plan_for(n, true), in.data(),
                       reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

std::vector<double> irfft(std::span<const cplx> spectrum, std::size_t n) {
  if (n == 0 || spectrum.size() != n / 2 + 1) {
    throw ConfigError("irfft: spectrum size does not match n/2+1");
  }
  // c2r destroys its input.
  std::vector<cplx> in(spectrum.begin(), spectrum.end());
  std::vector<double> out(n);
  fftw_execute_dft_c2r(plan_for(n, false),
                       reinterpret_cast<fftw_complex*>(in.data()), out.data());
  const double scale = 1.0 / static_cast<double>(n);
  for (double& v : out) v *= scale;
  return out;
}

}  // namespace dvqe
