#pragma once

#include <cstdint>
#include <vector>

#include "ghostsim/grid.hpp"

namespace ghostsim {

enum class SourceMode { Physical, Spectral };

/// Thermal speckle source: collimated beam of diameter d0 on a delta-correlated
/// diffuser, free space z0, hard circular diaphragm, free space z_pinhole to
/// the near-field (object) plane.
///
/// Physical mode mirrors that optics train per frame. Spectral mode
/// synthesizes a circularly stationary Gaussian process directly at the
/// near-field plane with a prescribed Gaussian correlation profile of the
/// same coherence length (speckle size lambda*z/d0), then applies the
/// diaphragm as the beam envelope; its ensemble correlation is known in
/// closed form, which is what the quadrature oracle needs.
struct SourceSpec {
    double lambda_um = 0.6328;
    double d0_um = 10000.0;
    double z0_um = 400000.0;
    double pinhole_d_um = 3000.0;
    double z_pinhole_um = 15000.0;
    double mean_intensity = 1.0;
    SourceMode mode = SourceMode::Physical;

    double z_total_um() const { return z0_um + z_pinhole_um; }
    /// Near-field speckle size lambda*z/d0 (the coherence length convention
    /// used throughout; the spectral profile ties itself to this value).
    double speckle_size_near_um() const { return lambda_um * z_total_um() / d0_um; }

    /// Sampling adequacy on the target grid: speckles must span >= 3 pixels,
    /// and in physical mode the diaphragm-to-near-field hop must stay inside
    /// the transfer-function validity window and the synthetic source window
    /// must hold the source disc. Throws ConfigError naming the offending
    /// parameter.
    void validate(const GridSpec& grid) const;
};

/// One statistically independent realization of the near-field speckle
/// field. Identical (spec, grid, seed) gives a bit-identical frame.
ComplexField sample_frame(const SourceSpec& spec, const GridSpec& grid, std::uint64_t seed);

/// Second-order field correlation estimated from an ensemble, either as a
/// dense matrix Gamma(x, x') (grids <= 64x64 only) or as a translation
/// profile Gamma(dx) along x averaged over the grid.
struct CorrelationMap {
    bool full = false;
    GridSpec grid;
    int n_frames = 0;
    std::vector<cplx> matrix;       // full: count x count, row = x index
    std::vector<int> offsets_px;    // profile: x offsets >= 0
    std::vector<cplx> profile;      // profile: Gamma(dx)

    cplx& at(std::size_t r, std::size_t c) { return matrix[r * grid.count() + c]; }
    const cplx& at(std::size_t r, std::size_t c) const { return matrix[r * grid.count() + c]; }
};

CorrelationMap ensemble_gamma(const SourceSpec& spec, const GridSpec& grid, int n_frames,
                              std::uint64_t seed, bool full_matrix = false, int max_offset = 48);

/// Exact ensemble correlation matrix of the spectral-mode process on this
/// grid (the quantity sample_frame realizes), including the envelope.
/// Dense, grids <= 64x64 only.
std::vector<cplx> spectral_gamma_matrix(const SourceSpec& spec, const GridSpec& grid);

} // namespace ghostsim
