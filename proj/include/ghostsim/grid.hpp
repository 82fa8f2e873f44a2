#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "ghostsim/errors.hpp"

namespace ghostsim {

using cplx = std::complex<double>;

/// Uniformly sampled 2-D grid. Sample (ix, iy) sits at physical coordinate
/// ((ix - nx/2) * pitch_x, (iy - ny/2) * pitch_y), all lengths in micrometers.
/// Pixels are square on input planes; transform outputs (focal planes of
/// anisotropic grids, demagnified image planes) may carry distinct pitches
/// per axis.
struct GridSpec {
    int nx = 0;
    int ny = 0;
    double pitch_x_um = 0.0;
    double pitch_y_um = 0.0;

    GridSpec() = default;
    GridSpec(int nx_, int ny_, double pitch_um)
        : nx(nx_), ny(ny_), pitch_x_um(pitch_um), pitch_y_um(pitch_um) {}
    GridSpec(int nx_, int ny_, double px_um, double py_um)
        : nx(nx_), ny(ny_), pitch_x_um(px_um), pitch_y_um(py_um) {}

    static GridSpec square(int n, double pitch_um) { return GridSpec(n, n, pitch_um); }

    std::size_t count() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }

    double x_um(int ix) const { return (ix - nx / 2) * pitch_x_um; }
    double y_um(int iy) const { return (iy - ny / 2) * pitch_y_um; }
    double extent_x_um() const { return nx * pitch_x_um; }
    double extent_y_um() const { return ny * pitch_y_um; }
    /// Frequency-domain pitch in cycles/um along x: 1 / (nx * pitch_x).
    double freq_pitch_x() const { return 1.0 / extent_x_um(); }
    double freq_pitch_y() const { return 1.0 / extent_y_um(); }
    /// Pixel area in um^2.
    double cell_area_um2() const { return pitch_x_um * pitch_y_um; }

    bool same_shape(const GridSpec& o) const { return nx == o.nx && ny == o.ny; }
    bool operator==(const GridSpec& o) const {
        return nx == o.nx && ny == o.ny && pitch_x_um == o.pitch_x_um && pitch_y_um == o.pitch_y_um;
    }

    /// Throws ConfigError unless nx, ny >= 2 and pitches > 0.
    void validate() const;
};

/// Sampled complex scalar field on a grid. Row-major storage, x fastest:
/// values[iy * nx + ix]. Amplitude units are arbitrary; intensity = |v|^2.
struct ComplexField {
    GridSpec grid;
    std::vector<cplx> values;

    ComplexField() = default;
    explicit ComplexField(const GridSpec& g) : grid(g), values(g.count(), cplx(0.0, 0.0)) {}

    cplx& at(int ix, int iy) { return values[static_cast<std::size_t>(iy) * grid.nx + ix]; }
    const cplx& at(int ix, int iy) const { return values[static_cast<std::size_t>(iy) * grid.nx + ix]; }

    /// Throws ConfigError on size mismatch or non-finite samples.
    void validate() const;
};

/// Non-negative detected intensity on a grid, photocount-proportional units.
struct IntensityFrame {
    GridSpec grid;
    std::vector<double> values;

    IntensityFrame() = default;
    explicit IntensityFrame(const GridSpec& g) : grid(g), values(g.count(), 0.0) {}

    double& at(int ix, int iy) { return values[static_cast<std::size_t>(iy) * grid.nx + ix]; }
    double at(int ix, int iy) const { return values[static_cast<std::size_t>(iy) * grid.nx + ix]; }
};

enum class FftDirection { Forward, Inverse };

/// Pixel-wise detection: out = |field|^2 on the same grid.
IntensityFrame intensity(const ComplexField& field);

/// Centered, unitary 2-D DFT. Zero frequency sits at (nx/2, ny/2) in both
/// domains and forward followed by inverse is the identity. Normalization is
/// 1/sqrt(nx*ny) each way so the sample-sum of |values|^2 is preserved
/// exactly (Parseval); physical pitch scaling for propagation lives in the
/// optics operators, not here. The returned field reuses the input GridSpec;
/// the conjugate-domain pitch is 1/(n*pitch) per axis.
ComplexField dft_unitary(const ComplexField& field, FftDirection direction);

/// Sum over pixels of |value|^2 * pitch_x * pitch_y. Under dft_unitary the
/// plain sample-sum is conserved, so total_energy is conserved only up to the
/// pitch factors of the two domains (see dft_unitary).
double total_energy(const ComplexField& field);

/// Sum over pixels of value * pitch_x * pitch_y.
double total_power(const IntensityFrame& frame);

} // namespace ghostsim
