#include "ghostsim/optics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace ghostsim {

namespace {

constexpr double kPi = std::numbers::pi;

std::string grid_str(const GridSpec& g) {
    return std::to_string(g.nx) + "x" + std::to_string(g.ny) + " @ (" +
           std::to_string(g.pitch_x_um) + ", " + std::to_string(g.pitch_y_um) + ") um";
}

// Transfer-function (convolution) form: exact on the periodic grid, valid
// while the quadratic frequency-domain phase stays sampled, z <= z_c.
ComplexField fresnel_tf(const ComplexField& field, double z_um, double lambda_um) {
    ComplexField spec = dft_unitary(field, FftDirection::Forward);
    const GridSpec& g = spec.grid;
    const double k = 2.0 * kPi / lambda_um;
    const double global = k * z_um;
    const cplx c0(std::cos(global), std::sin(global));
    for (int iy = 0; iy < g.ny; ++iy) {
        const double fy = (iy - g.ny / 2) * g.freq_pitch_y();
        for (int ix = 0; ix < g.nx; ++ix) {
            const double fx = (ix - g.nx / 2) * g.freq_pitch_x();
            const double phase = -kPi * lambda_um * z_um * (fx * fx + fy * fy);
            spec.at(ix, iy) *= c0 * cplx(std::cos(phase), std::sin(phase));
        }
    }
    return dft_unitary(spec, FftDirection::Inverse);
}

// Single-transform impulse-response form: one scaled Fourier transform with
// input and output chirps, valid for z >= z_c. Rescales the grid pitch to
// lambda*z/(n*pitch) per axis.
ComplexField fresnel_single_ft(const ComplexField& field, double z_um, double lambda_um) {
    const GridSpec& g = field.grid;
    ComplexField chirped(g);
    const double inv_lz = 1.0 / (lambda_um * z_um);
    for (int iy = 0; iy < g.ny; ++iy) {
        const double y = g.y_um(iy);
        for (int ix = 0; ix < g.nx; ++ix) {
            const double x = g.x_um(ix);
            const double phase = kPi * (x * x + y * y) * inv_lz;
            chirped.at(ix, iy) = field.at(ix, iy) * cplx(std::cos(phase), std::sin(phase));
        }
    }
    ComplexField spec = dft_unitary(chirped, FftDirection::Forward);

    GridSpec out_grid(g.nx, g.ny, lambda_um * z_um / g.extent_x_um(),
                      lambda_um * z_um / g.extent_y_um());
    ComplexField out(out_grid);
    const double k = 2.0 * kPi / lambda_um;
    const double amp = std::sqrt(static_cast<double>(g.count())) * g.cell_area_um2() * inv_lz;
    // e^{ikz} / i = e^{i(kz - pi/2)}
    const cplx c0 = amp * cplx(std::cos(k * z_um - kPi / 2.0), std::sin(k * z_um - kPi / 2.0));
    for (int iy = 0; iy < out_grid.ny; ++iy) {
        const double y = out_grid.y_um(iy);
        for (int ix = 0; ix < out_grid.nx; ++ix) {
            const double x = out_grid.x_um(ix);
            const double phase = kPi * (x * x + y * y) * inv_lz;
            out.at(ix, iy) = spec.at(ix, iy) * c0 * cplx(std::cos(phase), std::sin(phase));
        }
    }
    return out;
}

} // namespace

double fresnel_critical_z_um(const GridSpec& grid, double lambda_um) {
    const double zx = grid.nx * grid.pitch_x_um * grid.pitch_x_um / lambda_um;
    const double zy = grid.ny * grid.pitch_y_um * grid.pitch_y_um / lambda_um;
    return std::min(zx, zy);
}

ComplexField fresnel_propagate(const ComplexField& field, double z_um, double lambda_um) {
    if (z_um < 0.0) throw ConfigError("fresnel_propagate: z must be >= 0");
    if (lambda_um <= 0.0) throw ConfigError("fresnel_propagate: lambda must be > 0");
    if (z_um == 0.0) return field;

    const GridSpec& g = field.grid;
    const double zcx = g.nx * g.pitch_x_um * g.pitch_x_um / lambda_um;
    const double zcy = g.ny * g.pitch_y_um * g.pitch_y_um / lambda_um;
    if (z_um <= std::min(zcx, zcy)) return fresnel_tf(field, z_um, lambda_um);
    if (z_um >= std::max(zcx, zcy)) return fresnel_single_ft(field, z_um, lambda_um);
    throw ConfigError(
        "fresnel_propagate: z=" + std::to_string(z_um) +
        " um is aliased on the anisotropic grid " + grid_str(g) +
        " (transfer-function form needs z <= " + std::to_string(std::min(zcx, zcy)) +
        ", single-transform form needs z >= " + std::to_string(std::max(zcx, zcy)) + ")");
}

ComplexField apply_lens(const ComplexField& field, double f_um, double lambda_um) {
    if (f_um == 0.0) throw ConfigError("apply_lens: focal length must be nonzero");
    const GridSpec& g = field.grid;
    ComplexField out(g);
    const double c = -kPi / (lambda_um * f_um);
    for (int iy = 0; iy < g.ny; ++iy) {
        const double y = g.y_um(iy);
        for (int ix = 0; ix < g.nx; ++ix) {
            const double x = g.x_um(ix);
            const double phase = c * (x * x + y * y);
            out.at(ix, iy) = field.at(ix, iy) * cplx(std::cos(phase), std::sin(phase));
        }
    }
    return out;
}

ComplexField apply_aperture(const ComplexField& field, double diameter_um) {
    if (diameter_um <= 0.0) throw ConfigError("apply_aperture: diameter must be > 0");
    const GridSpec& g = field.grid;
    ComplexField out(g);
    const double r2max = 0.25 * diameter_um * diameter_um;
    for (int iy = 0; iy < g.ny; ++iy) {
        const double y = g.y_um(iy);
        for (int ix = 0; ix < g.nx; ++ix) {
            const double x = g.x_um(ix);
            out.at(ix, iy) = (x * x + y * y <= r2max) ? field.at(ix, iy) : cplx(0.0, 0.0);
        }
    }
    return out;
}

ComplexField two_f_system(const ComplexField& field, double f_um, double lambda_um) {
    if (f_um <= 0.0) throw ConfigError("two_f_system: focal length must be > 0");
    const GridSpec& g = field.grid;
    ComplexField spec = dft_unitary(field, FftDirection::Forward);

    GridSpec out_grid(g.nx, g.ny, lambda_um * f_um / g.extent_x_um(),
                      lambda_um * f_um / g.extent_y_um());
    ComplexField out(out_grid);
    // (i lambda f)^-1 kernel prefactor in discrete form; the -i makes the
    // operator exactly unitary in the energy sense.
    const double amp =
        std::sqrt(static_cast<double>(g.count())) * g.cell_area_um2() / (lambda_um * f_um);
    const cplx c0(0.0, -amp);
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = spec.values[i] * c0;
    return out;
}

ComplexField imaging_system(const ComplexField& field, double m) {
    if (!(m > 0.0)) throw ConfigError("imaging_system: magnification must be > 0");
    const GridSpec& g = field.grid;
    GridSpec out_grid(g.nx, g.ny, g.pitch_x_um / m, g.pitch_y_um / m);
    ComplexField out(out_grid);
    // Detector-native pitch makes out(x) = m * in(-m x) an exact index flip:
    // output index j reads input index n - j. Row/column 0 has no mirror
    // partner on an even grid and stays dark.
    for (int iy = 0; iy < g.ny; ++iy) {
        const int sy = g.ny - iy;
        if (sy < 0 || sy >= g.ny) continue;
        for (int ix = 0; ix < g.nx; ++ix) {
            const int sx = g.nx - ix;
            if (sx < 0 || sx >= g.nx) continue;
            out.at(ix, iy) = m * field.at(sx, sy);
        }
    }
    return out;
}

ComplexField imaging_system_onto(const ComplexField& field, double m, const GridSpec& out_grid) {
    if (!(m > 0.0)) throw ConfigError("imaging_system: magnification must be > 0");
    const GridSpec& g = field.grid;
    const double x_lo = g.x_um(0);
    const double x_hi = g.x_um(g.nx - 1);
    const double y_lo = g.y_um(0);
    const double y_hi = g.y_um(g.ny - 1);

    ComplexField out(out_grid);
    for (int iy = 0; iy < out_grid.ny; ++iy) {
        const double ys = -m * out_grid.y_um(iy);
        for (int ix = 0; ix < out_grid.nx; ++ix) {
            const double xs = -m * out_grid.x_um(ix);
            if (xs < x_lo || xs > x_hi || ys < y_lo || ys > y_hi)
                throw ConfigError("imaging_system: requested output window exceeds available "
                                  "input support (need input at (" +
                                  std::to_string(xs) + ", " + std::to_string(ys) + ") um)");
            const double fx = (xs - x_lo) / g.pitch_x_um;
            const double fy = (ys - y_lo) / g.pitch_y_um;
            const int i0 = std::min(static_cast<int>(fx), g.nx - 2);
            const int j0 = std::min(static_cast<int>(fy), g.ny - 2);
            const double tx = fx - i0;
            const double ty = fy - j0;
            const cplx v = (1 - tx) * (1 - ty) * field.at(i0, j0) +
                           tx * (1 - ty) * field.at(i0 + 1, j0) +
                           (1 - tx) * ty * field.at(i0, j0 + 1) +
                           tx * ty * field.at(i0 + 1, j0 + 1);
            out.at(ix, iy) = m * v;
        }
    }
    return out;
}

ComplexField OpticalSystem::apply(const ComplexField& in) const {
    ComplexField f = in;
    for (const OpticalElement& e : elements) {
        f = std::visit(
            [&](const auto& el) -> ComplexField {
                using T = std::decay_t<decltype(el)>;
                if constexpr (std::is_same_v<T, FreeSpace>)
                    return fresnel_propagate(f, el.z_um, lambda_um);
                else if constexpr (std::is_same_v<T, ThinLens>)
                    return apply_lens(f, el.f_um, lambda_um);
                else if constexpr (std::is_same_v<T, CircularAperture>)
                    return apply_aperture(f, el.diameter_um);
                else if constexpr (std::is_same_v<T, TwoFSystem>)
                    return two_f_system(f, el.f_um, lambda_um);
                else
                    return imaging_system(f, el.m);
            },
            e);
    }
    return f;
}

DenseKernel impulse_response(const OpticalSystem& system, const GridSpec& in_grid) {
    if (in_grid.nx > 64 || in_grid.ny > 64)
        throw ConfigError("impulse_response: dense kernels are limited to grids <= 64x64, got " +
                          grid_str(in_grid));
    const std::size_t n_in = in_grid.count();

    DenseKernel k;
    k.in_grid = in_grid;
    k.in_count = n_in;

    ComplexField probe(in_grid);
    for (std::size_t j = 0; j < n_in; ++j) {
        probe.values[j] = cplx(1.0, 0.0);
        ComplexField resp = system.apply(probe);
        probe.values[j] = cplx(0.0, 0.0);
        if (j == 0) {
            k.out_grid = resp.grid;
            k.out_count = resp.grid.count();
            if (k.out_count > 64 * 64)
                throw ConfigError("impulse_response: output grid exceeds 64x64");
            k.h.assign(k.out_count * n_in, cplx(0.0, 0.0));
        }
        for (std::size_t i = 0; i < k.out_count; ++i) k.at(i, j) = resp.values[i];
    }
    return k;
}

ComplexField apply_kernel(const DenseKernel& k, const ComplexField& in) {
    if (in.values.size() != k.in_count)
        throw ConfigError("apply_kernel: field size does not match kernel input dimension");
    ComplexField out(k.out_grid);
    for (std::size_t i = 0; i < k.out_count; ++i) {
        cplx acc(0.0, 0.0);
        const cplx* row = k.h.data() + i * k.in_count;
        for (std::size_t j = 0; j < k.in_count; ++j) acc += row[j] * in.values[j];
        out.values[i] = acc;
    }
    return out;
}

} // namespace ghostsim
