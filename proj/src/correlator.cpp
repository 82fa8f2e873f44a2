#include "ghostsim/correlator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ghostsim/fft.hpp"

namespace ghostsim {

namespace {

// Smallest 2^a 3^b 5^c >= n; FFTW stays fast on these.
int next_fast_size(int n) {
    for (int s = n;; ++s) {
        int m = s;
        while (m % 2 == 0) m /= 2;
        while (m % 3 == 0) m /= 3;
        while (m % 5 == 0) m /= 5;
        if (m == 1) return s;
    }
}

// Linear cross-correlation via zero-padded FFTs:
// out[(dy+max_dy)*(2*max_dx+1) + (dx+max_dx)] = sum_x a(x) * b(x + d).
std::vector<double> xcorr_window(const std::vector<double>& a, const std::vector<double>& b,
                                 int nx, int ny, int max_dx, int max_dy) {
    const int px = next_fast_size(nx + max_dx + 1);
    const int py = next_fast_size(ny + max_dy + 1);
    const std::size_t np = static_cast<std::size_t>(px) * py;

    std::vector<cplx> fa(np, cplx(0, 0)), fb(np, cplx(0, 0));
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix) {
            fa[static_cast<std::size_t>(iy) * px + ix] = a[static_cast<std::size_t>(iy) * nx + ix];
            fb[static_cast<std::size_t>(iy) * px + ix] = b[static_cast<std::size_t>(iy) * nx + ix];
        }
    fft::transform2d(px, py, fa.data(), fa.data(), false);
    fft::transform2d(px, py, fb.data(), fb.data(), false);
    for (std::size_t i = 0; i < np; ++i) fa[i] = std::conj(fa[i]) * fb[i];
    fft::transform2d(px, py, fa.data(), fa.data(), true);

    const double norm = 1.0 / static_cast<double>(np);
    std::vector<double> out(static_cast<std::size_t>(2 * max_dy + 1) * (2 * max_dx + 1));
    std::size_t k = 0;
    for (int dy = -max_dy; dy <= max_dy; ++dy) {
        const int wy = (dy % py + py) % py;
        for (int dx = -max_dx; dx <= max_dx; ++dx, ++k) {
            const int wx = (dx % px + px) % px;
            out[k] = fa[static_cast<std::size_t>(wy) * px + wx].real() * norm;
        }
    }
    return out;
}

} // namespace

void AccumConfig::validate() const {
    grid1.validate();
    grid2.validate();
    switch (mode) {
        case AccumMode::Full:
            if (grid1.count() > 4096 || grid2.count() > 4096)
                throw ConfigError("CorrelationAccumulator: full mode is limited to grids "
                                  "<= 64x64 per arm");
            break;
        case AccumMode::Bucket:
            if (bucket_region.size() != grid1.count())
                throw ConfigError("CorrelationAccumulator: bucket region size does not match "
                                  "the arm-1 grid");
            if (std::count(bucket_region.begin(), bucket_region.end(), 1) == 0)
                throw ConfigError("CorrelationAccumulator: bucket region is empty");
            break;
        case AccumMode::Difference: {
            if (!grid1.same_shape(grid2))
                throw ConfigError("CorrelationAccumulator: difference mode needs both arms on "
                                  "a common grid");
            const double rx = std::abs(grid1.pitch_x_um - grid2.pitch_x_um);
            const double ry = std::abs(grid1.pitch_y_um - grid2.pitch_y_um);
            if (rx > 1e-9 * grid1.pitch_x_um || ry > 1e-9 * grid1.pitch_y_um)
                throw ConfigError("CorrelationAccumulator: difference mode needs registered "
                                  "grids with equal pitch");
            if (max_dx < 0 || max_dx >= grid1.nx || max_dy < 0 || max_dy >= grid1.ny)
                throw ConfigError("CorrelationAccumulator: offset window exceeds the grid");
            break;
        }
        case AccumMode::Auto: {
            if (auto_arm != 1 && auto_arm != 2)
                throw ConfigError("CorrelationAccumulator: auto_arm must be 1 or 2");
            const GridSpec& g = auto_arm == 1 ? grid1 : grid2;
            if (max_dx < 0 || max_dx >= g.nx)
                throw ConfigError("CorrelationAccumulator: offset window exceeds the grid");
            if (!region.empty() && region.size() != g.count())
                throw ConfigError("CorrelationAccumulator: region mask size does not match "
                                  "the grid");
            break;
        }
    }
}

bool AccumConfig::compatible(const AccumConfig& o) const {
    return mode == o.mode && grid1 == o.grid1 && grid2 == o.grid2 &&
           bucket_region == o.bucket_region && max_dx == o.max_dx && max_dy == o.max_dy &&
           auto_arm == o.auto_arm && region == o.region;
}

CorrelationAccumulator::CorrelationAccumulator(AccumConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    const std::size_t n1 = cfg_.grid1.count();
    const std::size_t n2 = cfg_.grid2.count();

    switch (cfg_.mode) {
        case AccumMode::Full:
            sum_p_ = KahanVector(n1 * n2);
            sum_p2_.assign(n1 * n2, 0.0);
            sum_i1_ = KahanVector(n1);
            sum_i2_ = KahanVector(n2);
            break;
        case AccumMode::Bucket:
            sum_p_ = KahanVector(n2);
            sum_p2_.assign(n2, 0.0);
            sum_i2_ = KahanVector(n2);
            break;
        case AccumMode::Difference: {
            for (int dy = -cfg_.max_dy; dy <= cfg_.max_dy; ++dy)
                for (int dx = -cfg_.max_dx; dx <= cfg_.max_dx; ++dx)
                    offsets_.emplace_back(dx, dy);
            sum_p_ = KahanVector(offsets_.size());
            sum_p2_.assign(offsets_.size(), 0.0);
            sum_i1_ = KahanVector(n1);
            sum_i2_ = KahanVector(n2);
            pair_counts_.resize(offsets_.size());
            for (std::size_t k = 0; k < offsets_.size(); ++k) {
                const auto [dx, dy] = offsets_[k];
                pair_counts_[k] = static_cast<double>(cfg_.grid1.nx - std::abs(dx)) *
                                  static_cast<double>(cfg_.grid1.ny - std::abs(dy));
            }
            break;
        }
        case AccumMode::Auto: {
            const GridSpec& g = cfg_.auto_arm == 1 ? cfg_.grid1 : cfg_.grid2;
            for (int dx = 0; dx <= cfg_.max_dx; ++dx) offsets_.emplace_back(dx, 0);
            sum_p_ = KahanVector(offsets_.size());
            sum_p2_.assign(offsets_.size(), 0.0);
            sum_i1_ = KahanVector(g.count());
            pair_counts_.resize(offsets_.size());
            for (std::size_t k = 0; k < offsets_.size(); ++k) {
                const int dx = offsets_[k].first;
                if (cfg_.region.empty()) {
                    pair_counts_[k] =
                        static_cast<double>(g.nx - dx) * static_cast<double>(g.ny);
                } else {
                    std::size_t cnt = 0;
                    for (int iy = 0; iy < g.ny; ++iy)
                        for (int ix = 0; ix + dx < g.nx; ++ix) {
                            const std::size_t i = static_cast<std::size_t>(iy) * g.nx + ix;
                            if (cfg_.region[i] && cfg_.region[i + dx]) ++cnt;
                        }
                    pair_counts_[k] = static_cast<double>(cnt);
                }
                if (pair_counts_[k] == 0.0)
                    throw ConfigError("CorrelationAccumulator: offset window has no valid "
                                      "pixel pairs");
            }
            break;
        }
    }
}

void CorrelationAccumulator::accumulate(const ShotRecord& shot) {
    if (!(shot.frame1.grid == cfg_.grid1) || !(shot.frame2.grid == cfg_.grid2))
        throw ConfigError("CorrelationAccumulator: shot grids do not match the accumulator "
                          "configuration");
    switch (cfg_.mode) {
        case AccumMode::Full: accumulate_full(shot); break;
        case AccumMode::Bucket: accumulate_bucket(shot); break;
        default: accumulate_pairwise(shot); break;
    }
    ++n_;
}

void CorrelationAccumulator::accumulate_full(const ShotRecord& shot) {
    const std::size_t n1 = cfg_.grid1.count();
    const std::size_t n2 = cfg_.grid2.count();
    const double* i1 = shot.frame1.values.data();
    const double* i2 = shot.frame2.values.data();
    for (std::size_t a = 0; a < n1; ++a) {
        const double va = i1[a];
        const std::size_t base = a * n2;
        for (std::size_t b = 0; b < n2; ++b) {
            const double p = va * i2[b];
            sum_p_.add(base + b, p);
            sum_p2_[base + b] += p * p;
        }
    }
    for (std::size_t a = 0; a < n1; ++a) sum_i1_.add(a, i1[a]);
    for (std::size_t b = 0; b < n2; ++b) sum_i2_.add(b, i2[b]);
}

void CorrelationAccumulator::accumulate_bucket(const ShotRecord& shot) {
    const double b = bucket(shot.frame1, cfg_.bucket_region);
    sum_b_.add(b);
    sum_b2_ += b * b;
    const std::size_t n2 = cfg_.grid2.count();
    const double* i2 = shot.frame2.values.data();
    for (std::size_t i = 0; i < n2; ++i) {
        const double p = b * i2[i];
        sum_p_.add(i, p);
        sum_p2_[i] += p * p;
        sum_i2_.add(i, i2[i]);
    }
}

void CorrelationAccumulator::accumulate_pairwise(const ShotRecord& shot) {
    const bool is_auto = cfg_.mode == AccumMode::Auto;
    const IntensityFrame& fa =
        is_auto ? (cfg_.auto_arm == 1 ? shot.frame1 : shot.frame2) : shot.frame1;
    const IntensityFrame& fb = is_auto ? fa : shot.frame2;
    const GridSpec& g = fa.grid;

    if (!is_auto && cfg_.max_dy > 0) {
        // 2-D offset window: FFT cross-correlation, one compensated add per
        // offset per frame.
        std::vector<double> c = xcorr_window(fa.values, fb.values, g.nx, g.ny, cfg_.max_dx,
                                             cfg_.max_dy);
        for (std::size_t k = 0; k < offsets_.size(); ++k) {
            sum_p_.add(k, c[k]);
            sum_p2_[k] += c[k] * c[k];
        }
    } else {
        // Row-offset window: direct sums (plain per frame, compensated across
        // frames). dx may be negative in difference mode.
        const double* a = fa.values.data();
        const double* b = fb.values.data();
        const bool masked = is_auto && !cfg_.region.empty();
        for (std::size_t k = 0; k < offsets_.size(); ++k) {
            const int dx = offsets_[k].first;
            const int x0 = std::max(0, -dx);
            const int x1 = g.nx - std::max(0, dx);
            double s = 0.0;
            if (!masked) {
                for (int iy = 0; iy < g.ny; ++iy) {
                    const double* ra = a + static_cast<std::size_t>(iy) * g.nx;
                    const double* rb = b + static_cast<std::size_t>(iy) * g.nx;
                    double rs = 0.0;
                    for (int ix = x0; ix < x1; ++ix) rs += ra[ix] * rb[ix + dx];
                    s += rs;
                }
            } else {
                for (int iy = 0; iy < g.ny; ++iy) {
                    const std::size_t row = static_cast<std::size_t>(iy) * g.nx;
                    double rs = 0.0;
                    for (int ix = x0; ix < x1; ++ix)
                        if (cfg_.region[row + ix] && cfg_.region[row + ix + dx])
                            rs += a[row + ix] * b[row + ix + dx];
                    s += rs;
                }
            }
            sum_p_.add(k, s);
            sum_p2_[k] += s * s;
        }
    }

    for (std::size_t i = 0; i < fa.values.size(); ++i) sum_i1_.add(i, fa.values[i]);
    if (!is_auto)
        for (std::size_t i = 0; i < fb.values.size(); ++i) sum_i2_.add(i, fb.values[i]);
}

void CorrelationAccumulator::merge(const CorrelationAccumulator& other) {
    if (!cfg_.compatible(other.cfg_))
        throw ConfigError("CorrelationAccumulator: cannot merge accumulators with different "
                          "configurations");
    n_ += other.n_;
    sum_p_.merge(other.sum_p_);
    for (std::size_t i = 0; i < sum_p2_.size(); ++i) sum_p2_[i] += other.sum_p2_[i];
    if (sum_i1_.size()) sum_i1_.merge(other.sum_i1_);
    if (sum_i2_.size()) sum_i2_.merge(other.sum_i2_);
    sum_b_.merge(other.sum_b_);
    sum_b2_ += other.sum_b2_;
}

namespace {

struct Moments {
    double mean = 0.0;
    double se = 0.0; // standard error of the mean product
};

Moments product_moments(double sum_p, double sum_p2, int n) {
    Moments m;
    m.mean = sum_p / n;
    if (n > 1) {
        const double var = std::max(0.0, (sum_p2 - n * m.mean * m.mean) / (n - 1));
        m.se = std::sqrt(var / n);
    }
    return m;
}

} // namespace

struct FinalizeAccess {
    static CorrelationResult run(const CorrelationAccumulator& acc) {
        const AccumConfig& cfg = acc.cfg_;
        const int n = acc.n_;
        if (n < 1) throw ConfigError("finalize_g: no frames accumulated");

        CorrelationResult r;
        r.mode = cfg.mode;
        r.n_frames = n;
        r.grid1 = cfg.grid1;
        r.grid2 = cfg.grid2;
        r.single_sample = n < 2;
        const double corr = r.single_sample ? 0.0 : static_cast<double>(n) / (n - 1);

        switch (cfg.mode) {
            case AccumMode::Full: {
                const std::size_t n1 = cfg.grid1.count();
                const std::size_t n2 = cfg.grid2.count();
                r.mean1.resize(n1);
                r.mean2.resize(n2);
                for (std::size_t i = 0; i < n1; ++i) r.mean1[i] = acc.sum_i1_.value(i) / n;
                for (std::size_t i = 0; i < n2; ++i) r.mean2[i] = acc.sum_i2_.value(i) / n;
                r.values.resize(n1 * n2);
                r.baseline.resize(n1 * n2);
                r.se.resize(n1 * n2);
                for (std::size_t a = 0; a < n1; ++a)
                    for (std::size_t b = 0; b < n2; ++b) {
                        const std::size_t k = a * n2 + b;
                        const Moments m = product_moments(acc.sum_p_.value(k), acc.sum_p2_[k], n);
                        r.baseline[k] = r.mean1[a] * r.mean2[b];
                        r.values[k] = corr * (m.mean - r.baseline[k]);
                        r.se[k] = m.se;
                    }
                break;
            }
            case AccumMode::Bucket: {
                const std::size_t n2 = cfg.grid2.count();
                r.mean_bucket = acc.sum_b_.value() / n;
                r.mean2.resize(n2);
                r.values.resize(n2);
                r.baseline.resize(n2);
                r.se.resize(n2);
                for (std::size_t i = 0; i < n2; ++i) {
                    r.mean2[i] = acc.sum_i2_.value(i) / n;
                    const Moments m = product_moments(acc.sum_p_.value(i), acc.sum_p2_[i], n);
                    r.baseline[i] = r.mean_bucket * r.mean2[i];
                    r.values[i] = corr * (m.mean - r.baseline[i]);
                    r.se[i] = m.se;
                }
                break;
            }
            case AccumMode::Difference:
            case AccumMode::Auto: {
                const bool is_auto = cfg.mode == AccumMode::Auto;
                const GridSpec& g = is_auto ? (cfg.auto_arm == 1 ? cfg.grid1 : cfg.grid2)
                                            : cfg.grid1;
                r.offsets = acc.offsets_;
                r.offset_pitch_x_um = g.pitch_x_um;
                r.offset_pitch_y_um = g.pitch_y_um;

                const std::size_t npx = g.count();
                r.mean1.resize(npx);
                for (std::size_t i = 0; i < npx; ++i) r.mean1[i] = acc.sum_i1_.value(i) / n;
                const std::vector<double>* mb = &r.mean1;
                if (!is_auto) {
                    r.mean2.resize(npx);
                    for (std::size_t i = 0; i < npx; ++i) r.mean2[i] = acc.sum_i2_.value(i) / n;
                    mb = &r.mean2;
                }

                r.values.resize(acc.offsets_.size());
                r.baseline.resize(acc.offsets_.size());
                r.se.resize(acc.offsets_.size());
                for (std::size_t k = 0; k < acc.offsets_.size(); ++k) {
                    const auto [dx, dy] = acc.offsets_[k];
                    // Baseline: mean-map correlation at this offset over the
                    // same valid pixel set.
                    double base = 0.0;
                    for (int iy = std::max(0, -dy); iy < g.ny - std::max(0, dy); ++iy)
                        for (int ix = std::max(0, -dx); ix < g.nx - std::max(0, dx); ++ix) {
                            const std::size_t ia = static_cast<std::size_t>(iy) * g.nx + ix;
                            const std::size_t ib =
                                static_cast<std::size_t>(iy + dy) * g.nx + (ix + dx);
                            if (is_auto && !cfg.region.empty() &&
                                !(cfg.region[ia] && cfg.region[ib]))
                                continue;
                            base += r.mean1[ia] * (*mb)[ib];
                        }
                    const double cnt = acc.pair_counts_[k];
                    const Moments m = product_moments(acc.sum_p_.value(k), acc.sum_p2_[k], n);
                    r.baseline[k] = base / cnt;
                    r.values[k] = corr * (m.mean - base) / cnt;
                    r.se[k] = m.se / cnt;
                }
                break;
            }
        }
        if (r.single_sample) {
            std::fill(r.values.begin(), r.values.end(), 0.0);
            std::fill(r.se.begin(), r.se.end(), 0.0);
        }
        return r;
    }
};

CorrelationResult finalize_g(const CorrelationAccumulator& acc) { return FinalizeAccess::run(acc); }

std::size_t CorrelationResult::offset_index(int dx, int dy) const {
    for (std::size_t k = 0; k < offsets.size(); ++k)
        if (offsets[k].first == dx && offsets[k].second == dy) return k;
    throw ConfigError("CorrelationResult: offset not in the accumulated window");
}

GhostImage ghost_image(const CorrelationResult& r) {
    if (r.mode != AccumMode::Bucket)
        throw ConfigError("ghost_image: needs a bucket-mode result");
    GhostImage img;
    img.grid = r.grid2;
    img.values = r.values;
    img.baseline = r.baseline;
    img.se = r.se;
    return img;
}

OffsetProfile ghost_diffraction(const CorrelationResult& r) {
    if (r.mode != AccumMode::Difference)
        throw ConfigError("ghost_diffraction: needs a difference-mode result");
    OffsetProfile p;
    for (std::size_t k = 0; k < r.offsets.size(); ++k) {
        if (r.offsets[k].second != 0) continue;
        p.offset_um.push_back(r.offsets[k].first * r.offset_pitch_x_um);
        p.values.push_back(r.values[k]);
        p.baseline.push_back(r.baseline[k]);
        p.se.push_back(r.se[k]);
    }
    return p;
}

OffsetProfile siegert_autocorrelation(const CorrelationResult& r) {
    if (r.mode != AccumMode::Auto)
        throw ConfigError("siegert_autocorrelation: needs an auto-mode result");
    OffsetProfile p;
    for (std::size_t k = 0; k < r.offsets.size(); ++k) {
        p.offset_um.push_back(r.offsets[k].first * r.offset_pitch_x_um);
        const double base = r.baseline[k];
        p.values.push_back(base > 0.0 ? 1.0 + r.values[k] / base : 0.0);
        p.baseline.push_back(base);
        p.se.push_back(base > 0.0 ? r.se[k] / base : 0.0);
    }
    return p;
}

ConditionalProfile conditional_probability(const CorrelationResult& r, int ix1, int iy1) {
    if (r.mode != AccumMode::Full)
        throw ConfigError("conditional_probability: needs a full-mode result");
    if (ix1 < 0 || ix1 >= r.grid1.nx || iy1 < 0 || iy1 >= r.grid1.ny)
        throw ConfigError("conditional_probability: pixel outside the arm-1 grid");
    const std::size_t a = static_cast<std::size_t>(iy1) * r.grid1.nx + ix1;
    double peak = 0.0;
    for (double v : r.mean1) peak = std::max(peak, v);
    if (r.mean1[a] <= 1e-12 * peak)
        throw ConfigError("conditional_probability: mean arm-1 intensity vanishes at the "
                          "requested pixel");

    const std::size_t n2 = r.grid2.count();
    ConditionalProfile p;
    p.grid = r.grid2;
    p.values.resize(n2);
    p.baseline.resize(n2);
    p.se.resize(n2);
    const double inv = 1.0 / r.mean1[a];
    for (std::size_t b = 0; b < n2; ++b) {
        const std::size_t k = a * n2 + b;
        p.baseline[b] = r.mean2[b];
        p.values[b] = r.mean2[b] + r.values[k] * inv;
        p.se[b] = r.se[k] * inv;
    }
    return p;
}

} // namespace ghostsim
