#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "ghostsim/scenarios.hpp"

namespace fs = std::filesystem;
using namespace ghostsim;

namespace {

fs::path default_out_root() {
    if (const char* env = std::getenv("GHOSTSIM_OUTDIR")) return fs::path(env);
    return fs::path("runs");
}

ScenarioConfig load_config(const std::string& scenario_name, const std::string& config_path,
                           const std::vector<std::string>& sets) {
    ScenarioConfig cfg;
    if (!config_path.empty()) {
        cfg = config_from_kv(io::KeyValueFile::read(config_path));
        if (!scenario_name.empty()) cfg.scenario = scenario_from_name(scenario_name);
    } else if (!scenario_name.empty()) {
        cfg = default_scenario(scenario_from_name(scenario_name));
    } else {
        throw ConfigError("simulate: give --scenario or --config");
    }
    for (const std::string& kv : sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--set expects key=value, got '" + kv + "'");
        apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cfg;
}

void print_summary(const RunSummary& s) {
    std::cout << "wrote " << (s.outdir / "manifest.txt").string() << "\n";
    for (const auto& p : s.outputs) std::cout << "  " << p.string() << "\n";
    if (!s.message.empty()) std::cout << s.message << "\n";
}

GaussianFitResult fit_from_csv(const fs::path& path) {
    const io::CsvTable t = io::read_csv(path);
    const std::vector<double> x = t.column("x_um");
    const std::vector<double> v = t.column("value");
    const bool one_sided = !x.empty() && *std::min_element(x.begin(), x.end()) >= 0.0;
    return one_sided ? fit_profile_peak(x, v) : fit_gaussian_peak(x, v);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-arm speckle correlation simulator"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "run a scenario and write its outputs");
    std::string sim_scenario, sim_config, sim_out;
    std::vector<std::string> sim_sets;
    long long sim_seed = -1;
    int sim_frames = -1, sim_threads = -1;
    sim->add_option("--scenario", sim_scenario, "scenario name (see list-scenarios)");
    sim->add_option("--config", sim_config, "key = value configuration file");
    sim->add_option("--set", sim_sets, "override a config key, key=value (repeatable)");
    sim->add_option("--seed", sim_seed, "base seed");
    sim->add_option("--frames", sim_frames, "ensemble size");
    sim->add_option("--threads", sim_threads, "worker threads (0 = hardware)");
    sim->add_option("--out", sim_out, "output directory (default $GHOSTSIM_OUTDIR/<scenario>)");

    // analyze
    auto* ana = app.add_subcommand("analyze", "fit correlation peaks and derive the "
                                              "coherence/resolution report");
    std::string ana_near, ana_far, ana_out;
    double ana_lambda = 0.6328, ana_f = 80000.0, ana_m = 1.2;
    double ana_sigma_near = 0.0, ana_sigma_far = 0.0;
    ana->add_option("--near", ana_near, "near-field autocorrelation CSV");
    ana->add_option("--far", ana_far, "far-field autocorrelation CSV");
    ana->add_option("--lambda-um", ana_lambda, "wavelength");
    ana->add_option("--f-um", ana_f, "focal length of the fixed arm");
    ana->add_option("--m", ana_m, "reference-arm magnification");
    ana->add_option("--sigma-near-um", ana_sigma_near, "inject sigma_n instead of fitting");
    ana->add_option("--sigma-far-um", ana_sigma_far, "inject sigma_f instead of fitting");
    ana->add_option("--out", ana_out, "output directory");

    // oracle-check
    auto* ora = app.add_subcommand("oracle-check", "Monte Carlo versus dense quadrature");
    std::string ora_config, ora_out;
    std::vector<std::string> ora_sets;
    long long ora_seed = -1;
    int ora_frames = -1, ora_threads = -1;
    ora->add_option("--config", ora_config, "key = value configuration file");
    ora->add_option("--set", ora_sets, "override a config key (repeatable)");
    ora->add_option("--seed", ora_seed, "base seed");
    ora->add_option("--frames", ora_frames, "ensemble size");
    ora->add_option("--threads", ora_threads, "worker threads");
    ora->add_option("--out", ora_out, "output directory");

    auto* lst = app.add_subcommand("list-scenarios", "enumerate scenarios and defaults");

    try {
        app.parse(argc, argv);

        if (*lst) {
            for (Scenario s : all_scenarios()) {
                const ScenarioConfig d = default_scenario(s);
                std::cout << scenario_name(s) << "\n    " << scenario_description(s)
                          << "\n    defaults: grid " << d.grid.nx << "x" << d.grid.ny << " @ "
                          << d.grid.pitch_x_um << " um, frames " << d.frames << ", source "
                          << (d.source.mode == SourceMode::Physical ? "physical" : "spectral")
                          << "\n";
            }
            return 0;
        }

        if (*sim || *ora) {
            const bool is_sim = static_cast<bool>(*sim);
            ScenarioConfig cfg =
                is_sim ? load_config(sim_scenario, sim_config, sim_sets)
                       : [&] {
                             ScenarioConfig c = ora_config.empty()
                                                    ? default_scenario(Scenario::OracleCheck)
                                                    : config_from_kv(
                                                          io::KeyValueFile::read(ora_config));
                             c.scenario = Scenario::OracleCheck;
                             for (const std::string& kv : ora_sets) {
                                 const auto eq = kv.find('=');
                                 if (eq == std::string::npos)
                                     throw ConfigError("--set expects key=value");
                                 apply_override(c, kv.substr(0, eq), kv.substr(eq + 1));
                             }
                             return c;
                         }();
            const long long seed = is_sim ? sim_seed : ora_seed;
            const int frames = is_sim ? sim_frames : ora_frames;
            const int threads = is_sim ? sim_threads : ora_threads;
            if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
            if (frames == 0) throw ConfigError("frames must be >= 1");
            if (frames > 0) cfg.frames = frames;
            if (threads >= 0) cfg.threads = threads;

            std::string outstr = is_sim ? sim_out : ora_out;
            const fs::path outdir =
                outstr.empty() ? default_out_root() / scenario_name(cfg.scenario)
                               : fs::path(outstr);
            const RunSummary s = run_scenario(cfg, outdir);
            print_summary(s);
            return s.ok ? 0 : 3;
        }

        if (*ana) {
            GaussianFitResult near_fit, far_fit;
            if (ana_sigma_near > 0.0) {
                near_fit.sigma_um = ana_sigma_near;
                near_fit.converged = true;
            } else if (!ana_near.empty()) {
                near_fit = fit_from_csv(ana_near);
            } else {
                throw ConfigError("analyze: give --near or --sigma-near-um");
            }
            if (ana_sigma_far > 0.0) {
                far_fit.sigma_um = ana_sigma_far;
                far_fit.converged = true;
            } else if (!ana_far.empty()) {
                far_fit = fit_from_csv(ana_far);
            } else {
                throw ConfigError("analyze: give --far or --sigma-far-um");
            }
            if (!near_fit.converged || !far_fit.converged)
                throw NumericError("analyze: peak fit did not converge");

            const CoherenceReport r = coherence_report(near_fit, far_fit, ana_lambda, ana_f, ana_m);
            const fs::path outdir = ana_out.empty() ? default_out_root() / "analyze"
                                                    : fs::path(ana_out);
            std::filesystem::create_directories(outdir);
            io::KeyValueFile kv;
            kv.set("sigma_n_um", r.sigma_n_um);
            kv.set("sigma_f_um", r.sigma_f_um);
            kv.set("magnification", r.magnification);
            kv.set("lambda_um", ana_lambda);
            kv.set("f_um", ana_f);
            kv.set("delta_x_n_um", r.delta_x_n_um);
            kv.set("delta_x_f_um", r.delta_x_f_um);
            kv.set("delta_q_per_um", r.delta_q_per_um);
            kv.set("product", r.product);
            kv.set("product_stderr", r.product_stderr);
            kv.write(outdir / "coherence_report.txt");
            std::cout << "delta_x_n_um = " << io::format_double(r.delta_x_n_um) << "\n"
                      << "delta_x_f_um = " << io::format_double(r.delta_x_f_um) << "\n"
                      << "delta_q_per_um = " << io::format_double(r.delta_q_per_um) << "\n"
                      << "product = " << io::format_double(r.product) << "\n"
                      << "wrote " << (outdir / "coherence_report.txt").string() << "\n";
            return 0;
        }
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
