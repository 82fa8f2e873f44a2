#include "ghostsim/grid.hpp"

#include <cmath>
#include <string>

#include "ghostsim/fft.hpp"

namespace ghostsim {

void GridSpec::validate() const {
    if (nx < 2 || ny < 2)
        throw ConfigError("GridSpec: nx and ny must both be >= 2, got " + std::to_string(nx) +
                          "x" + std::to_string(ny));
    if (!(pitch_x_um > 0.0) || !(pitch_y_um > 0.0))
        throw ConfigError("GridSpec: pitch must be > 0");
}

void ComplexField::validate() const {
    grid.validate();
    if (values.size() != grid.count())
        throw ConfigError("ComplexField: value count does not match grid");
    for (const cplx& v : values)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw NumericError("ComplexField: non-finite sample");
}

IntensityFrame intensity(const ComplexField& field) {
    IntensityFrame out(field.grid);
    const std::size_t n = field.values.size();
    for (std::size_t i = 0; i < n; ++i) out.values[i] = std::norm(field.values[i]);
    return out;
}

namespace {

// Index shift between centered layout (zero frequency / origin at n/2) and
// FFTW's corner-origin layout. rotate_to_corner moves sample n/2 to index 0.
void shift2d(const cplx* in, cplx* out, int nx, int ny, bool to_corner) {
    const int sx = to_corner ? nx / 2 : nx - nx / 2;
    const int sy = to_corner ? ny / 2 : ny - ny / 2;
    for (int iy = 0; iy < ny; ++iy) {
        const int jy = (iy + sy) % ny;
        const cplx* src = in + static_cast<std::size_t>(jy) * nx;
        cplx* dst = out + static_cast<std::size_t>(iy) * nx;
        for (int ix = 0; ix < nx; ++ix) dst[ix] = src[(ix + sx) % nx];
    }
}

} // namespace

ComplexField dft_unitary(const ComplexField& field, FftDirection direction) {
    const int nx = field.grid.nx;
    const int ny = field.grid.ny;
    const std::size_t n = field.grid.count();

    std::vector<cplx> tmp(n);
    shift2d(field.values.data(), tmp.data(), nx, ny, true);

    ComplexField out(field.grid);
    fft::transform2d(nx, ny, tmp.data(), tmp.data(), direction == FftDirection::Inverse);
    shift2d(tmp.data(), out.values.data(), nx, ny, false);

    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (cplx& v : out.values) v *= scale;
    return out;
}

double total_energy(const ComplexField& field) {
    double acc = 0.0;
    for (const cplx& v : field.values) acc += std::norm(v);
    return acc * field.grid.cell_area_um2();
}

double total_power(const IntensityFrame& frame) {
    double acc = 0.0;
    for (double v : frame.values) acc += v;
    return acc * frame.grid.cell_area_um2();
}

} // namespace ghostsim
