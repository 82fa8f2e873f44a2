#pragma once

#include <complex>

namespace ghostsim::fft {

/// Plain (uncentered, unnormalized) 2-D complex DFT, FFTW convention:
/// forward uses exp(-i 2 pi ...). in/out may alias. Thread-safe; plans are
/// cached per (nx, ny, direction) behind a mutex and executed on aligned
/// scratch buffers.
void transform2d(int nx, int ny, const std::complex<double>* in,
                 std::complex<double>* out, bool inverse);

} // namespace ghostsim::fft
