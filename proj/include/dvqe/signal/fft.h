#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace dvqe {

using cplx = std::complex<double>;

std::size_t next_pow2(std::size_t n);

// Real-input forward DFT, unnormalized. Returns n/2+1 bins.
std::vector<cplx> rfft(std::span<const double> x);

// Inverse of rfft for a length-n real signal, scaled by 1/n.
std::vector<double> irfft(std::span<const cplx> spectrum, std::size_t n);

}  // namespace dvqe
