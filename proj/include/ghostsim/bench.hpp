#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ghostsim/grid.hpp"
#include "ghostsim/speckle.hpp"

namespace ghostsim {

/// Lossless two-port splitter, |t|^2 + |r|^2 = 1. The classical vacuum port
/// carries the zero field, so the outputs are t*a and r*a.
struct BeamSplitter {
    cplx t{0.70710678118654752440, 0.0};
    cplx r{0.70710678118654752440, 0.0};

    static BeamSplitter balanced() { return BeamSplitter{}; }
    void validate() const;
};

/// Complex transmission function T(x), |T| <= 1.
struct ObjectMask {
    enum class Provenance { Uniform, NeedleInSlit, DoubleSlit, Raster };

    GridSpec grid;
    std::vector<cplx> transmission;
    Provenance provenance = Provenance::Uniform;
    double needle_d_um = 0.0; // NeedleInSlit
    double slit_w_um = 0.0;   // NeedleInSlit / DoubleSlit slit width
    double slit_sep_um = 0.0; // DoubleSlit center separation

    static ObjectMask uniform(const GridSpec& g, double t = 1.0);
    /// Opaque needle of the given diameter centered in a clear slit:
    /// T = 1 for needle_d/2 < |x| < slit_w/2, 0 elsewhere, uniform along y.
    /// needle_d = 0 degenerates to a single slit.
    static ObjectMask needle_in_slit(const GridSpec& g, double needle_d_um, double slit_w_um);
    static ObjectMask double_slit(const GridSpec& g, double slit_w_um, double center_sep_um);
    /// 8-bit grayscale raster mapped linearly to |T| in [0,1], zero phase.
    /// Dimensions must match the grid.
    static ObjectMask from_raster(const GridSpec& g, const std::vector<double>& gray01, int nx,
                                  int ny);

    void validate() const;
};

struct DetectorSpec {
    int binning = 1;
    bool poisson = false;
    double photons_per_unit = 1.0e4; // counts per unit intensity per pixel
};

enum class Arm2Mode { GhostImage, GhostDiffraction };

/// Full two-arm experiment. Arm 1 (object arm) is fixed: mask, then a 2f
/// system of focal length focal_f onto the detector. Arm 2 is either the
/// conjugate-plane imager (ghost image) or the same 2f system (ghost
/// diffraction); switching arm2_mode never touches arm 1.
struct ExperimentConfig {
    GridSpec grid;
    SourceSpec source;
    BeamSplitter bs;
    ObjectMask object;
    int object_arm = 1;          // 1 normally; 2 for the focusing calibration
    bool coherent_probe = false; // replace the source with a unit plane wave
    double focal_f_um = 80000.0;
    Arm2Mode arm2_mode = Arm2Mode::GhostDiffraction;
    double magnification = 1.2;
    DetectorSpec detector;

    void validate() const;
    GridSpec arm1_detector_grid() const;
    GridSpec arm2_detector_grid() const;
};

/// One acquisition: the pair of detected frames and the seed that made them.
struct ShotRecord {
    IntensityFrame frame1;
    IntensityFrame frame2;
    std::uint64_t seed = 0;
};

/// b1 = t*a, b2 = r*a. Pixel-wise I1 + I2 equals the input intensity.
std::pair<ComplexField, ComplexField> split(const ComplexField& a, const BeamSplitter& bs);

/// Pixel-wise product field * T. Grids must match in shape and pitch.
ComplexField apply_object(const ComplexField& field, const ObjectMask& mask);

/// Sum a detector block of the given pixel factor (grid must divide evenly).
IntensityFrame bin_intensity(const IntensityFrame& frame, int factor);

/// Run one acquisition; deterministic in (config, seed).
ShotRecord run_shot(const ExperimentConfig& config, std::uint64_t seed);

/// Sum of the frame over the region mask (1 = included).
double bucket(const IntensityFrame& frame, const std::vector<std::uint8_t>& region);

/// Default bucket region: arm-1 pixels receiving more than `threshold` of the
/// peak mean intensity over a small noise-free calibration ensemble drawn
/// from a dedicated seed stream.
std::vector<std::uint8_t> calibrate_bucket_region(const ExperimentConfig& config, int n_cal,
                                                  std::uint64_t seed, double threshold = 0.01);

} // namespace ghostsim
