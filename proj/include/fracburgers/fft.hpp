#ifndef FRACBURGERS_FFT_HPP
#define FRACBURGERS_FFT_HPP

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <span>
#include <vector>

#include "errors.hpp"

namespace fburg::fft {

using cplx = std::complex<double>;

// Plans are created once per size and shared. Planning is serialized; execution
// through the new-array interface is thread-safe in FFTW.
struct PlanPair {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

inline const PlanPair& plans_for(int n) {
  static std::mutex mu;
  static std::map<int, PlanPair> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<double> r(n);
  std::vector<cplx> c(n / 2 + 1);
  auto* cp = reinterpret_cast<fftw_complex*>(c.data());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  PlanPair p;
  p.r2c = fftw_plan_dft_r2c_1d(n, r.data(), cp, flags);
  p.c2r = fftw_plan_dft_c2r_1d(n, cp, r.data(), flags | FFTW_DESTROY_INPUT);
  if (!p.r2c || !p.c2r) throw Error("fftw planning failed");
  return cache.emplace(n, p).first->second;
}

// out[k] = sum_j in[j] exp(-2 pi i j k / n), k = 0..n/2 (unnormalized)
inline void forward(std::span<const double> in, std::span<cplx> out) {
  const int n = static_cast<int>(in.size());
  if (out.size() != static_cast<std::size_t>(n / 2 + 1))
    throw DimensionError("fft::forward: output size mismatch");
  const auto& p = plans_for(n);
  fftw_execute_dft_r2c(p.r2c, const_cast<double*>(in.data()),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

// out[j] = sum_k in[k] exp(+2 pi i j k / n) over the Hermitian extension
// (unnormalized). The input is copied, so it is left intact.
inline void inverse(std::span<const cplx> in, std::span<double> out) {
  const int n = static_cast<int>(out.size());
  if (in.size() != static_cast<std::size_t>(n / 2 + 1))
    throw DimensionError("fft::inverse: input size mismatch");
  const auto& p = plans_for(n);
  std::vector<cplx> scratch(in.begin(), in.end());
  fftw_execute_dft_c2r(p.c2r, reinterpret_cast<fftw_complex*>(scratch.data()),
                       out.data());
}

}  // namespace fburg::fft

#endif
