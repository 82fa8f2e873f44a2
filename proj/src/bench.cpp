#include "ghostsim/bench.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ghostsim/optics.hpp"
#include "ghostsim/rng.hpp"

namespace ghostsim {

namespace {
constexpr std::uint64_t kNoiseStream = 0x706f6973ULL;
constexpr std::uint64_t kCalStream = 0x63616c69ULL;
} // namespace

void BeamSplitter::validate() const {
    const double s = std::norm(t) + std::norm(r);
    if (std::abs(s - 1.0) > 1e-12)
        throw ConfigError("BeamSplitter: |t|^2 + |r|^2 = " + std::to_string(s) +
                          ", must equal 1 (lossless)");
}

ObjectMask ObjectMask::uniform(const GridSpec& g, double t) {
    ObjectMask m;
    m.grid = g;
    m.transmission.assign(g.count(), cplx(t, 0.0));
    m.provenance = Provenance::Uniform;
    m.validate();
    return m;
}

ObjectMask ObjectMask::needle_in_slit(const GridSpec& g, double needle_d_um, double slit_w_um) {
    if (needle_d_um < 0.0 || slit_w_um <= 0.0 || needle_d_um >= slit_w_um)
        throw ConfigError("needle_in_slit: need 0 <= needle diameter < slit width");
    ObjectMask m;
    m.grid = g;
    m.transmission.assign(g.count(), cplx(0.0, 0.0));
    m.provenance = Provenance::NeedleInSlit;
    m.needle_d_um = needle_d_um;
    m.slit_w_um = slit_w_um;
    for (int ix = 0; ix < g.nx; ++ix) {
        const double ax = std::abs(g.x_um(ix));
        if (ax > 0.5 * needle_d_um && ax < 0.5 * slit_w_um)
            for (int iy = 0; iy < g.ny; ++iy) m.transmission[std::size_t(iy) * g.nx + ix] = 1.0;
    }
    return m;
}

ObjectMask ObjectMask::double_slit(const GridSpec& g, double slit_w_um, double center_sep_um) {
    if (slit_w_um <= 0.0 || center_sep_um <= slit_w_um)
        throw ConfigError("double_slit: need slit width > 0 and separation > width");
    ObjectMask m;
    m.grid = g;
    m.transmission.assign(g.count(), cplx(0.0, 0.0));
    m.provenance = Provenance::DoubleSlit;
    m.slit_w_um = slit_w_um;
    m.slit_sep_um = center_sep_um;
    for (int ix = 0; ix < g.nx; ++ix) {
        const double x = g.x_um(ix);
        const bool open = std::abs(x - 0.5 * center_sep_um) < 0.5 * slit_w_um ||
                          std::abs(x + 0.5 * center_sep_um) < 0.5 * slit_w_um;
        if (open)
            for (int iy = 0; iy < g.ny; ++iy) m.transmission[std::size_t(iy) * g.nx + ix] = 1.0;
    }
    return m;
}

ObjectMask ObjectMask::from_raster(const GridSpec& g, const std::vector<double>& gray01, int nx,
                                   int ny) {
    if (nx != g.nx || ny != g.ny)
        throw ConfigError("ObjectMask::from_raster: raster is " + std::to_string(nx) + "x" +
                          std::to_string(ny) + " but the grid is " + std::to_string(g.nx) + "x" +
                          std::to_string(g.ny));
    ObjectMask m;
    m.grid = g;
    m.provenance = Provenance::Raster;
    m.transmission.resize(g.count());
    for (std::size_t i = 0; i < g.count(); ++i)
        m.transmission[i] = cplx(std::clamp(gray01[i], 0.0, 1.0), 0.0);
    return m;
}

void ObjectMask::validate() const {
    grid.validate();
    if (transmission.size() != grid.count())
        throw ConfigError("ObjectMask: transmission size does not match grid");
    for (const cplx& t : transmission)
        if (std::abs(t) > 1.0 + 1e-12) throw ConfigError("ObjectMask: |T| must be <= 1");
}

void ExperimentConfig::validate() const {
    grid.validate();
    if (!coherent_probe) source.validate(grid);
    bs.validate();
    object.validate();
    if (!object.grid.same_shape(grid))
        throw ConfigError("ExperimentConfig: object mask grid does not match experiment grid");
    if (object_arm != 1 && object_arm != 2)
        throw ConfigError("ExperimentConfig: object_arm must be 1 or 2");
    if (focal_f_um <= 0.0) throw ConfigError("ExperimentConfig: focal_f_um must be > 0");
    if (!(magnification > 0.0)) throw ConfigError("ExperimentConfig: magnification must be > 0");
    if (detector.binning < 1) throw ConfigError("ExperimentConfig: binning must be >= 1");
    if ((grid.nx % detector.binning) || (grid.ny % detector.binning))
        throw ConfigError("ExperimentConfig: binning must divide the grid dimensions");
    if (detector.poisson && detector.photons_per_unit <= 0.0)
        throw ConfigError("ExperimentConfig: photons_per_unit must be > 0");
}

GridSpec ExperimentConfig::arm1_detector_grid() const {
    GridSpec f(grid.nx, grid.ny, focal_f_um * source.lambda_um / grid.extent_x_um(),
               focal_f_um * source.lambda_um / grid.extent_y_um());
    return f;
}

GridSpec ExperimentConfig::arm2_detector_grid() const {
    if (arm2_mode == Arm2Mode::GhostDiffraction) return arm1_detector_grid();
    return GridSpec(grid.nx, grid.ny, grid.pitch_x_um / magnification,
                    grid.pitch_y_um / magnification);
}

std::pair<ComplexField, ComplexField> split(const ComplexField& a, const BeamSplitter& bs) {
    bs.validate();
    ComplexField b1(a.grid), b2(a.grid);
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        b1.values[i] = bs.t * a.values[i];
        b2.values[i] = bs.r * a.values[i];
    }
    return {std::move(b1), std::move(b2)};
}

ComplexField apply_object(const ComplexField& field, const ObjectMask& mask) {
    if (!(field.grid == mask.grid))
        throw ConfigError("apply_object: field and mask grids differ");
    ComplexField out(field.grid);
    for (std::size_t i = 0; i < out.values.size(); ++i)
        out.values[i] = field.values[i] * mask.transmission[i];
    return out;
}

IntensityFrame bin_intensity(const IntensityFrame& frame, int factor) {
    if (factor <= 1) return frame;
    const GridSpec& g = frame.grid;
    if ((g.nx % factor) || (g.ny % factor))
        throw ConfigError("bin_intensity: factor must divide the grid dimensions");
    GridSpec bg(g.nx / factor, g.ny / factor, g.pitch_x_um * factor, g.pitch_y_um * factor);
    IntensityFrame out(bg);
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix)
            out.at(ix / factor, iy / factor) += frame.at(ix, iy);
    return out;
}

namespace {

IntensityFrame detect(const ExperimentConfig& cfg, const ComplexField& field, int arm,
                      std::uint64_t shot_seed) {
    IntensityFrame f = intensity(field);
    if (cfg.detector.binning > 1) f = bin_intensity(f, cfg.detector.binning);
    if (cfg.detector.poisson) {
        GaussianRng rng(derive_seed(shot_seed, kNoiseStream, static_cast<std::uint64_t>(arm)));
        const double eta = cfg.detector.photons_per_unit;
        for (double& v : f.values) {
            const double lam = eta * v;
            double counts;
            if (lam < 30.0) {
                // Knuth product method.
                const double limit = std::exp(-lam);
                double prod = rng.uniform();
                int k = 0;
                while (prod > limit) {
                    prod *= rng.uniform();
                    ++k;
                }
                counts = k;
            } else {
                counts = std::max(0.0, std::round(lam + std::sqrt(lam) * rng.normal()));
            }
            v = counts / eta;
        }
    }
    return f;
}

} // namespace

ShotRecord run_shot(const ExperimentConfig& config, std::uint64_t seed) {
    config.validate();

    ComplexField a;
    if (config.coherent_probe) {
        a = ComplexField(config.grid);
        const cplx amp(std::sqrt(config.source.mean_intensity), 0.0);
        for (cplx& v : a.values) v = amp;
    } else {
        a = sample_frame(config.source, config.grid, seed);
    }

    auto [b1, b2] = split(a, config.bs);

    if (config.object_arm == 1)
        b1 = apply_object(b1, config.object);
    else
        b2 = apply_object(b2, config.object);

    const double lambda = config.source.lambda_um;
    ComplexField d1 = two_f_system(b1, config.focal_f_um, lambda);
    ComplexField d2 = config.arm2_mode == Arm2Mode::GhostDiffraction
                          ? two_f_system(b2, config.focal_f_um, lambda)
                          : imaging_system(b2, config.magnification);

    ShotRecord shot;
    shot.seed = seed;
    shot.frame1 = detect(config, d1, 1, seed);
    shot.frame2 = detect(config, d2, 2, seed);
    return shot;
}

double bucket(const IntensityFrame& frame, const std::vector<std::uint8_t>& region) {
    if (region.size() != frame.values.size())
        throw ConfigError("bucket: region mask size does not match frame");
    double sum = 0.0;
    std::size_t cnt = 0;
    for (std::size_t i = 0; i < region.size(); ++i)
        if (region[i]) {
            sum += frame.values[i];
            ++cnt;
        }
    if (cnt == 0) throw ConfigError("bucket: empty region");
    return sum;
}

std::vector<std::uint8_t> calibrate_bucket_region(const ExperimentConfig& config, int n_cal,
                                                  std::uint64_t seed, double threshold) {
    if (n_cal < 1) throw ConfigError("calibrate_bucket_region: need at least one frame");
    ExperimentConfig cal = config;
    cal.detector.poisson = false;

    std::vector<double> mean;
    for (int k = 0; k < n_cal; ++k) {
        ShotRecord s = run_shot(cal, derive_seed(seed, kCalStream, k));
        if (mean.empty()) mean.assign(s.frame1.values.size(), 0.0);
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += s.frame1.values[i];
    }
    double peak = 0.0;
    for (double v : mean) peak = std::max(peak, v);
    std::vector<std::uint8_t> region(mean.size(), 0);
    for (std::size_t i = 0; i < mean.size(); ++i) region[i] = mean[i] > threshold * peak ? 1 : 0;
    return region;
}

} // namespace ghostsim
