#include "ghostsim/speckle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "ghostsim/fft.hpp"
#include "ghostsim/optics.hpp"
#include "ghostsim/rng.hpp"

namespace ghostsim {

namespace {

constexpr double kPi = std::numbers::pi;

// Synthetic source-plane window of the single-transform propagation step:
// extent lambda*z0/pitch per axis, so that the transform lands exactly on the
// target grid pitch.
double source_pitch_um(const SourceSpec& s, int n, double pitch_um) {
    return s.lambda_um * s.z0_um / (n * pitch_um);
}

// Spectral-mode target profile: Gamma(d) = mu * exp(-|d|^2 / (4 sigma^2))
// with 2*sigma = lambda*z/d0, so |Gamma|^2 is Gaussian with std sigma and a
// fit of the normalized intensity-correlation peak recovers sigma directly.
double spectral_sigma_um(const SourceSpec& s) { return 0.5 * s.speckle_size_near_um(); }

// Per-mode nonnegative power spectrum lambda_q (corner layout) of the
// circularly stationary spectral-mode process, scaled so that synthesis is
// a(x) = (1/Npx) * IDFT[sqrt(lambda_q) * w_q] with w ~ CN(0,1) i.i.d.
std::vector<double> spectral_mode_powers(const SourceSpec& s, const GridSpec& g) {
    const std::size_t n = g.count();
    const double sigma = spectral_sigma_um(s);
    std::vector<cplx> corr(n);
    for (int iy = 0; iy < g.ny; ++iy) {
        const double wy = std::min(iy, g.ny - iy) * g.pitch_y_um;
        for (int ix = 0; ix < g.nx; ++ix) {
            const double wx = std::min(ix, g.nx - ix) * g.pitch_x_um;
            const double d2 = wx * wx + wy * wy;
            corr[static_cast<std::size_t>(iy) * g.nx + ix] =
                s.mean_intensity * std::exp(-d2 / (4.0 * sigma * sigma));
        }
    }
    fft::transform2d(g.nx, g.ny, corr.data(), corr.data(), false);
    std::vector<double> powers(n);
    // The wrapped-Gaussian profile is not exactly a periodic summation, so
    // tiny negative spectral values can appear; they are clamped, the total
    // is renormalized to the requested mean intensity, and the oracle
    // correlation is defined from the same clamped spectrum.
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        powers[i] = std::max(corr[i].real(), 0.0);
        total += powers[i];
    }
    const double scale = s.mean_intensity * static_cast<double>(n) * static_cast<double>(n) / total;
    for (double& p : powers) p *= scale;
    return powers;
}

bool envelope_active(const SourceSpec& s, const GridSpec& g) {
    return s.pinhole_d_um < std::max(g.extent_x_um(), g.extent_y_um());
}

void apply_envelope(const SourceSpec& s, ComplexField& f) {
    if (!envelope_active(s, f.grid)) return;
    const double r2max = 0.25 * s.pinhole_d_um * s.pinhole_d_um;
    for (int iy = 0; iy < f.grid.ny; ++iy) {
        const double y = f.grid.y_um(iy);
        for (int ix = 0; ix < f.grid.nx; ++ix) {
            const double x = f.grid.x_um(ix);
            if (x * x + y * y > r2max) f.at(ix, iy) = cplx(0.0, 0.0);
        }
    }
}

ComplexField sample_frame_spectral(const SourceSpec& s, const GridSpec& g, std::uint64_t seed) {
    const std::size_t n = g.count();
    const std::vector<double> powers = spectral_mode_powers(s, g);

    GaussianRng rng(seed);
    std::vector<cplx> modes(n);
    for (std::size_t i = 0; i < n; ++i) modes[i] = rng.circular() * std::sqrt(powers[i]);

    ComplexField out(g);
    fft::transform2d(g.nx, g.ny, modes.data(), out.values.data(), true);
    const double scale = 1.0 / static_cast<double>(n);
    for (cplx& v : out.values) v *= scale;
    apply_envelope(s, out);
    return out;
}

ComplexField sample_frame_physical(const SourceSpec& s, const GridSpec& g, std::uint64_t seed) {
    const std::size_t n = g.count();
    const double psx = source_pitch_um(s, g.nx, g.pitch_x_um);
    const double psy = source_pitch_um(s, g.ny, g.pitch_y_um);
    const GridSpec src_grid(g.nx, g.ny, psx, psy);

    // i.i.d. circular Gaussian phasors on the source disc. The diffuser's
    // quadratic input chirp multiplies i.i.d. circular phasors and therefore
    // changes nothing in the ensemble; it is omitted.
    GaussianRng rng(seed);
    ComplexField src(src_grid);
    const double r2max = 0.25 * s.d0_um * s.d0_um;
    std::size_t cells = 0;
    for (int iy = 0; iy < g.ny; ++iy) {
        const double y = src_grid.y_um(iy);
        for (int ix = 0; ix < g.nx; ++ix) {
            const double x = src_grid.x_um(ix);
            if (x * x + y * y <= r2max) {
                src.at(ix, iy) = rng.circular();
                ++cells;
            }
        }
    }

    ComplexField near = dft_unitary(src, FftDirection::Forward);
    // Mean intensity after the unitary transform is cells/Npx; rescale to the
    // requested level deterministically (no per-frame normalization, which
    // would distort the ensemble statistics).
    const double scale =
        std::sqrt(s.mean_intensity * static_cast<double>(n) / static_cast<double>(cells));
    // Diverging wavefront curvature accumulated over z0.
    const double inv_lz = 1.0 / (s.lambda_um * s.z0_um);
    GridSpec near_grid = g;
    ComplexField beam(near_grid);
    for (int iy = 0; iy < g.ny; ++iy) {
        const double y = near_grid.y_um(iy);
        for (int ix = 0; ix < g.nx; ++ix) {
            const double x = near_grid.x_um(ix);
            const double phase = kPi * (x * x + y * y) * inv_lz;
            beam.at(ix, iy) =
                near.at(ix, iy) * scale * cplx(std::cos(phase), std::sin(phase));
        }
    }

    apply_envelope(s, beam);
    ComplexField out = fresnel_propagate(beam, s.z_pinhole_um, s.lambda_um);
    out.grid = g;
    return out;
}

} // namespace

void SourceSpec::validate(const GridSpec& grid) const {
    grid.validate();
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0)) throw ConfigError(std::string("SourceSpec: ") + name + " must be > 0");
    };
    positive(lambda_um, "lambda_um");
    positive(d0_um, "d0_um");
    positive(z0_um, "z0_um");
    positive(pinhole_d_um, "pinhole_d_um");
    positive(z_pinhole_um, "z_pinhole_um");
    positive(mean_intensity, "mean_intensity");

    const double speckle = speckle_size_near_um();
    const double pmax = std::max(grid.pitch_x_um, grid.pitch_y_um);
    if (speckle < 3.0 * pmax)
        throw ConfigError("SourceSpec: near-field speckle size " + std::to_string(speckle) +
                          " um spans fewer than 3 pixels at pitch " + std::to_string(pmax) +
                          " um; enlarge lambda*z/d0 or reduce the grid pitch");

    if (mode == SourceMode::Physical) {
        const double zc = fresnel_critical_z_um(grid, lambda_um);
        if (z_pinhole_um > zc)
            throw ConfigError(
                "SourceSpec: z_pinhole_um=" + std::to_string(z_pinhole_um) +
                " aliases the quadratic Fresnel kernel on this grid (limit " +
                std::to_string(zc) + " um); shorten z_pinhole_um or enlarge the grid");
        for (int axis = 0; axis < 2; ++axis) {
            const int n = axis == 0 ? grid.nx : grid.ny;
            const double pitch = axis == 0 ? grid.pitch_x_um : grid.pitch_y_um;
            const double ps = source_pitch_um(*this, n, pitch);
            const double window = n * ps;
            if (d0_um > window)
                throw ConfigError("SourceSpec: source diameter d0_um=" + std::to_string(d0_um) +
                                  " exceeds the synthetic source window " +
                                  std::to_string(window) + " um along " +
                                  (axis == 0 ? "x" : "y") + "; reduce grid pitch or z0_um");
            if (d0_um < 2.0 * ps)
                throw ConfigError("SourceSpec: source disc spans fewer than 2 source-plane "
                                  "cells along " +
                                  std::string(axis == 0 ? "x" : "y") +
                                  "; physical mode needs a finer source window (use spectral "
                                  "mode or a larger grid)");
        }
    }
}

ComplexField sample_frame(const SourceSpec& spec, const GridSpec& grid, std::uint64_t seed) {
    spec.validate(grid);
    return spec.mode == SourceMode::Spectral ? sample_frame_spectral(spec, grid, seed)
                                             : sample_frame_physical(spec, grid, seed);
}

CorrelationMap ensemble_gamma(const SourceSpec& spec, const GridSpec& grid, int n_frames,
                              std::uint64_t seed, bool full_matrix, int max_offset) {
    if (n_frames < 2) throw ConfigError("ensemble_gamma: n_frames must be >= 2");
    if (full_matrix && (grid.nx > 64 || grid.ny > 64))
        throw ConfigError("ensemble_gamma: full-matrix form is limited to grids <= 64x64");

    CorrelationMap map;
    map.full = full_matrix;
    map.grid = grid;
    map.n_frames = n_frames;

    const std::size_t n = grid.count();
    if (full_matrix) {
        map.matrix.assign(n * n, cplx(0.0, 0.0));
    } else {
        max_offset = std::min(max_offset, grid.nx - 1);
        for (int d = 0; d <= max_offset; ++d) map.offsets_px.push_back(d);
        map.profile.assign(map.offsets_px.size(), cplx(0.0, 0.0));
    }

    for (int k = 0; k < n_frames; ++k) {
        const ComplexField a = sample_frame(spec, grid, derive_seed(seed, 0x67616d6dULL, k));
        if (full_matrix) {
            for (std::size_t r = 0; r < n; ++r) {
                const cplx ar = std::conj(a.values[r]);
                cplx* row = map.matrix.data() + r * n;
                for (std::size_t c = 0; c < n; ++c) row[c] += ar * a.values[c];
            }
        } else {
            for (std::size_t d = 0; d < map.offsets_px.size(); ++d) {
                const int off = map.offsets_px[d];
                cplx acc(0.0, 0.0);
                std::size_t cnt = 0;
                for (int iy = 0; iy < grid.ny; ++iy) {
                    const cplx* row = a.values.data() + static_cast<std::size_t>(iy) * grid.nx;
                    for (int ix = 0; ix + off < grid.nx; ++ix)
                        acc += std::conj(row[ix]) * row[ix + off];
                    cnt += static_cast<std::size_t>(grid.nx - off);
                }
                map.profile[d] += acc / static_cast<double>(cnt);
            }
        }
    }

    const double inv_n = 1.0 / n_frames;
    for (cplx& v : map.matrix) v *= inv_n;
    for (cplx& v : map.profile) v *= inv_n;
    return map;
}

std::vector<cplx> spectral_gamma_matrix(const SourceSpec& spec, const GridSpec& grid) {
    if (grid.nx > 64 || grid.ny > 64)
        throw ConfigError("spectral_gamma_matrix: limited to grids <= 64x64");
    const std::size_t n = grid.count();

    // Correlation of the synthesized process: inverse transform of the
    // clamped spectrum, circular in the offset.
    std::vector<double> powers = spectral_mode_powers(spec, grid);
    std::vector<cplx> corr(n);
    for (std::size_t i = 0; i < n; ++i) corr[i] = powers[i] / static_cast<double>(n);
    fft::transform2d(grid.nx, grid.ny, corr.data(), corr.data(), true);
    for (cplx& v : corr) v /= static_cast<double>(n);

    std::vector<double> env(n, 1.0);
    if (envelope_active(spec, grid)) {
        const double r2max = 0.25 * spec.pinhole_d_um * spec.pinhole_d_um;
        for (int iy = 0; iy < grid.ny; ++iy)
            for (int ix = 0; ix < grid.nx; ++ix) {
                const double x = grid.x_um(ix);
                const double y = grid.y_um(iy);
                env[static_cast<std::size_t>(iy) * grid.nx + ix] =
                    (x * x + y * y <= r2max) ? 1.0 : 0.0;
            }
    }

    std::vector<cplx> gamma(n * n);
    for (int uy = 0; uy < grid.ny; ++uy)
        for (int ux = 0; ux < grid.nx; ++ux) {
            const std::size_t u = static_cast<std::size_t>(uy) * grid.nx + ux;
            for (int vy = 0; vy < grid.ny; ++vy)
                for (int vx = 0; vx < grid.nx; ++vx) {
                    const std::size_t v = static_cast<std::size_t>(vy) * grid.nx + vx;
                    const int dx = ((vx - ux) % grid.nx + grid.nx) % grid.nx;
                    const int dy = ((vy - uy) % grid.ny + grid.ny) % grid.ny;
                    gamma[u * n + v] =
                        env[u] * env[v] * corr[static_cast<std::size_t>(dy) * grid.nx + dx];
                }
        }
    return gamma;
}

} // namespace ghostsim
