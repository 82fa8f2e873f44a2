#pragma once

#include <variant>
#include <vector>

#include "ghostsim/grid.hpp"

namespace ghostsim {

/// Paraxial free-space gap of length z.
struct FreeSpace {
    double z_um;
};

/// Ideal thin lens of focal length f (quadratic phase).
struct ThinLens {
    double f_um;
};

/// Hard circular aperture (diaphragm) of the given diameter, centered.
struct CircularAperture {
    double diameter_um;
};

/// Exact scaled Fourier transform onto the focal plane of a lens of focal
/// length f placed one focal length from the detector.
struct TwoFSystem {
    double f_um;
};

/// Ideal conjugate-plane imager with magnification m and point inversion,
/// the reduced model of a two-lens relay.
struct MagnifyingImager {
    double m;
};

using OpticalElement =
    std::variant<FreeSpace, ThinLens, CircularAperture, TwoFSystem, MagnifyingImager>;

/// Ordered chain of elements sharing one wavelength. Composition is
/// associative and the empty system is the identity.
struct OpticalSystem {
    double lambda_um = 0.6328;
    std::vector<OpticalElement> elements;

    ComplexField apply(const ComplexField& in) const;
};

/// Critical distance separating the two Fresnel propagator forms on a grid:
/// z_c = n * pitch^2 / lambda (the smaller of the two axes).
double fresnel_critical_z_um(const GridSpec& grid, double lambda_um);

/// Paraxial free-space propagation by z. Selects automatically between the
/// transfer-function form (valid for z <= z_c, grid unchanged) and the
/// single-transform impulse-response form (valid for z >= z_c; output pitch
/// becomes lambda*z/(n*pitch) per axis). z = 0 is the identity. Throws
/// ConfigError when z sits in neither validity window for this grid.
ComplexField fresnel_propagate(const ComplexField& field, double z_um, double lambda_um);

/// Thin-lens quadratic phase exp(-i pi (x^2+y^2) / (lambda f)); modulus
/// unchanged pixel-wise.
ComplexField apply_lens(const ComplexField& field, double f_um, double lambda_um);

/// Hard circular clip: zero outside the centered disc.
ComplexField apply_aperture(const ComplexField& field, double diameter_um);

/// Field in the focal plane of a lens f at distance f from the detector:
/// out(x) = dft_unitary(in) scaled so that output coordinate x maps to
/// spatial frequency q = 2 pi x / (lambda f). Output pitch is
/// lambda*f/(n*pitch_in) per axis; energy is conserved.
ComplexField two_f_system(const ComplexField& field, double f_um, double lambda_um);

/// Ideal conjugate imaging: out(x) = m * in(-m x) on the detector-native grid
/// (same sample count, pitch divided by m), which makes the inverting
/// resample exact and energy-conserving.
ComplexField imaging_system(const ComplexField& field, double m);

/// Same imaging operation resampled onto an explicit output grid (bilinear).
/// Throws ConfigError if the requested window needs input samples beyond the
/// available support.
ComplexField imaging_system_onto(const ComplexField& field, double m, const GridSpec& out_grid);

/// Dense impulse-response matrix h(x_out, x_in) of a system, column j being
/// the response to a unit impulse at input pixel j. Grids above 64x64 are
/// rejected. Row-major: h[row * in_count + col], row = output pixel index.
struct DenseKernel {
    std::size_t out_count = 0;
    std::size_t in_count = 0;
    GridSpec out_grid;
    GridSpec in_grid;
    std::vector<cplx> h;

    cplx& at(std::size_t out, std::size_t in) { return h[out * in_count + in]; }
    const cplx& at(std::size_t out, std::size_t in) const { return h[out * in_count + in]; }
};

DenseKernel impulse_response(const OpticalSystem& system, const GridSpec& in_grid);

/// kernel * field, for checking operator and kernel forms against each other.
ComplexField apply_kernel(const DenseKernel& k, const ComplexField& in);

} // namespace ghostsim
