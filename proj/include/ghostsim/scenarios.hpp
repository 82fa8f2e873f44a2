#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ghostsim/analysis.hpp"
#include "ghostsim/correlator.hpp"
#include "ghostsim/io.hpp"

namespace ghostsim {

inline constexpr const char* kVersion = "0.1.0";

enum class Scenario {
    GhostImage,
    GhostDiffraction,
    SiegertNear,
    SiegertFar,
    Conditional,
    CoherentReference,
    OracleCheck,
};

struct MaskSpec {
    enum class Kind { Uniform, SingleSlit, NeedleInSlit, DoubleSlit, Raster };
    Kind kind = Kind::Uniform;
    double transmission = 1.0;
    double needle_d_um = 160.0;
    double slit_w_um = 690.0;
    double slit_sep_um = 0.0;
    std::string raster_path;
};

ObjectMask build_mask(const MaskSpec& spec, const GridSpec& grid);

/// Fully resolved run description: (config, seed, version) determine every
/// output byte. The thread count never changes results; the shard count does
/// (it fixes the reduction tree) and is recorded in the manifest.
struct ScenarioConfig {
    Scenario scenario = Scenario::SiegertNear;
    std::uint64_t seed = 12345;
    int frames = 0;
    int threads = 0; // 0 = hardware concurrency
    int shards = 8;

    GridSpec grid;
    SourceSpec source;
    double bs_t = 0.70710678118654752440;
    double bs_r = 0.70710678118654752440;
    MaskSpec mask;
    int object_arm = 1;
    bool coherent_probe = false;
    double focal_f_um = 80000.0;
    Arm2Mode arm2_mode = Arm2Mode::GhostDiffraction;
    double magnification = 1.2;
    DetectorSpec detector;

    int max_offset_x = 48;
    int max_offset_y = 0;
    double bucket_threshold = 0.01;
    int bucket_cal_frames = 32;
    bool autocorr_central_half = false;
    int conditional_ix = -1; // -1 = grid center
    int conditional_iy = -1;
    bool oracle_dense = true;

    ExperimentConfig experiment() const;
    int resolved_threads() const;
};

Scenario scenario_from_name(const std::string& name);
std::string scenario_name(Scenario s);
std::string scenario_description(Scenario s);
std::vector<Scenario> all_scenarios();

/// Built-in defaults per scenario (reference bench geometry where the desk-scale
/// budget allows it; see README).
ScenarioConfig default_scenario(Scenario s);

/// Defaults + config file. The file must carry schema_version = 1 and a
/// scenario name; unknown keys are rejected by name.
ScenarioConfig config_from_kv(const io::KeyValueFile& kv);
/// Apply one key = value override onto an existing config.
void apply_override(ScenarioConfig& cfg, const std::string& key, const std::string& value);

/// Shard-deterministic parallel ensemble run feeding every accumulator
/// configuration from the same shot stream. Results are independent of the
/// thread count.
std::vector<CorrelationResult> run_correlation(const ScenarioConfig& cfg,
                                               const std::vector<AccumConfig>& acc_cfgs);

struct RunSummary {
    std::filesystem::path outdir;
    io::KeyValueFile manifest;
    std::vector<std::filesystem::path> outputs;
    bool ok = true;        // oracle-check verdict; true elsewhere
    std::string message;
};

/// Execute the scenario and write its CSV/PGM outputs plus manifest.txt
/// under outdir (created if needed).
RunSummary run_scenario(const ScenarioConfig& cfg, const std::filesystem::path& outdir);

/// Gaussian fit of a correlation profile given over separations >= 0;
/// the profile is mirrored about zero before fitting.
GaussianFitResult fit_profile_peak(std::span<const double> offset_um,
                                   std::span<const double> value);

} // namespace ghostsim
