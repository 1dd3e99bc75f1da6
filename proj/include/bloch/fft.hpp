#pragma once

#include <vector>

#include "bloch/types.hpp"

namespace bloch::fft {

// Unnormalized transforms, FFTW sign convention:
//   forward:  out[m] = sum_n in[n] exp(-2*pi*i*m*n/N)
//   inverse:  out[n] = sum_m in[m] exp(+2*pi*i*m*n/N)
// Plans are cached per size; execution is safe from concurrent threads on
// distinct buffers.
void forward(const std::vector<cplx>& in, std::vector<cplx>& out);
void inverse(const std::vector<cplx>& in, std::vector<cplx>& out);

// Signed harmonic for DFT bin m of an N-point transform, in [-N/2, N/2).
inline int signed_index(int m, int n) { return m < (n + 1) / 2 ? m : m - n; }

// DFT bin holding signed harmonic s.
inline int bin_of(int s, int n) { return s >= 0 ? s : s + n; }

}  // namespace bloch::fft
