#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ghostsim/bench.hpp"
#include "ghostsim/kahan.hpp"

namespace ghostsim {

enum class AccumMode { Full, Bucket, Difference, Auto };

/// Static configuration of a correlation accumulator. Two accumulators can
/// only be merged when their configurations are identical.
struct AccumConfig {
    AccumMode mode = AccumMode::Full;
    GridSpec grid1; // arm-1 detector grid
    GridSpec grid2; // arm-2 detector grid

    std::vector<std::uint8_t> bucket_region; // Bucket: region on grid1

    int max_dx = 0; // Difference/Auto: offsets dx in [-max_dx, max_dx] (Auto: [0, max_dx])
    int max_dy = 0; // Difference: dy in [-max_dy, max_dy]
    int auto_arm = 2;
    std::vector<std::uint8_t> region; // Auto: optional pixel restriction

    void validate() const;
    bool compatible(const AccumConfig& o) const;
};

/// Streaming sufficient statistics for the intensity-fluctuation correlation
/// G = <I1 I2> - <I1><I2> in one of four reduction modes:
///   Full:       dense <I1(x1) I2(x2)> on small grids;
///   Bucket:     B = sum of arm-1 counts over a region, correlated with I2(x2);
///   Difference: sum over x of I1(x) I2(x+d), accumulated per offset d;
///   Auto:       same reduction within a single arm (x offsets only).
/// Main sums are compensated; merging shards is associative to ~1e-9 relative.
class CorrelationAccumulator {
public:
    explicit CorrelationAccumulator(AccumConfig cfg);

    void accumulate(const ShotRecord& shot);
    void merge(const CorrelationAccumulator& other);

    const AccumConfig& config() const { return cfg_; }
    int n_frames() const { return n_; }

    friend struct FinalizeAccess;

private:
    void accumulate_full(const ShotRecord& shot);
    void accumulate_bucket(const ShotRecord& shot);
    void accumulate_pairwise(const ShotRecord& shot); // Difference + Auto

    AccumConfig cfg_;
    int n_ = 0;

    // Per-coordinate product sums (meaning depends on mode) and their plain
    // squared sums for the standard-error estimate.
    KahanVector sum_p_;
    std::vector<double> sum_p2_;
    // Marginals.
    KahanVector sum_i1_;
    KahanVector sum_i2_;
    KahanSum sum_b_;
    double sum_b2_ = 0.0;
    // Difference/Auto: per-offset valid-pixel counts (frame-independent).
    std::vector<double> pair_counts_;
    std::vector<std::pair<int, int>> offsets_;
};

/// Finalized estimate. `values` is the unbiased covariance per output
/// coordinate (n/(n-1) correction), `baseline` the product of means, and
/// `se` the standard error of the mean product term.
struct CorrelationResult {
    AccumMode mode;
    int n_frames = 0;
    bool single_sample = false; // n < 2: values forced to zero
    GridSpec grid1, grid2;

    std::vector<double> values;
    std::vector<double> baseline;
    std::vector<double> se;

    std::vector<std::pair<int, int>> offsets; // Difference/Auto
    double offset_pitch_x_um = 0.0;
    double offset_pitch_y_um = 0.0;

    std::vector<double> mean1; // grid1 mean frame (Full/Bucket/Difference)
    std::vector<double> mean2; // grid2 mean frame
    double mean_bucket = 0.0;

    std::size_t offset_index(int dx, int dy) const;
};

CorrelationResult finalize_g(const CorrelationAccumulator& acc);

/// Bucket-mode reduction: the ghost image over the arm-2 plane,
/// image(x2) = <B I2(x2)> - <B><I2(x2)>.
struct GhostImage {
    GridSpec grid;
    std::vector<double> values, baseline, se;
};
GhostImage ghost_image(const CorrelationResult& r);

/// Difference-mode reduction at dy = 0: the pattern over dx = x2 - x1 in
/// detector micrometers.
struct OffsetProfile {
    std::vector<double> offset_um;
    std::vector<double> values, baseline, se;
};
OffsetProfile ghost_diffraction(const CorrelationResult& r);

/// Auto-mode reduction normalized to the baseline:
/// g2(dx) = <I(x) I(x+dx)> / (<I(x)><I(x+dx)>), peak 2 at dx=0 for
/// chaotic light, 1 at large separation.
OffsetProfile siegert_autocorrelation(const CorrelationResult& r);

/// Full-mode reduction: conditional detection profile over x2 for a fixed
/// arm-1 pixel, P(x2|x1) ~ <I2(x2)> + G(x1,x2)/<I1(x1)>. `values` carries the
/// total, `baseline` the broad <I2> term.
struct ConditionalProfile {
    GridSpec grid;
    std::vector<double> values, baseline, se;
};
ConditionalProfile conditional_probability(const CorrelationResult& r, int ix1, int iy1);

} // namespace ghostsim
