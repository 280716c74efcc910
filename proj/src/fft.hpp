#pragma once

// Thin FFTW wrapper shared by the OFDM generator and the PSD estimator.

#include <complex>
#include <vector>

namespace imd2::detail {

enum class FftDirection { forward, backward };

/// Unnormalized in-place DFT of `data` (size arbitrary, powers of two are fastest).
void fft_inplace(std::vector<std::complex<double>>& data, FftDirection dir);

} // namespace imd2::detail
