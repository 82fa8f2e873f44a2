#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ghostsim/io.hpp"
#include "ghostsim/scenarios.hpp"

using namespace ghostsim;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("ghostsim_cli_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

int run(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string(GHOSTSIM_BIN) + " " + args + " > " + log.string() +
                            " 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// fast ghost-image run: thin spectral strip
const char* kTinyArgs = "simulate --scenario ghost-image --frames 150 "
                        "--set grid.nx=256 --set correlator.max_offset_x=16";

} // namespace

TEST_CASE("cli: list-scenarios names every scenario") {
    TempDir tmp;
    const fs::path log = tmp.path / "log.txt";
    CHECK(run("list-scenarios", log) == 0);
    const std::string out = slurp(log);
    for (Scenario s : all_scenarios())
        CHECK(out.find(scenario_name(s)) != std::string::npos);
}

TEST_CASE("cli: simulate writes outputs whose checksums match the manifest") {
    TempDir tmp;
    const fs::path log = tmp.path / "log.txt";
    const fs::path out = tmp.path / "run";
    CHECK(run(std::string(kTinyArgs) + " --seed 7 --out " + out.string(), log) == 0);
    const io::KeyValueFile man = io::KeyValueFile::read(out / "manifest.txt");
    CHECK(man.get("scenario") == "ghost-image");
    CHECK(man.get("seed") == "7");
    int outputs = 0;
    for (const auto& e : man.entries)
        if (e.first.rfind("output.", 0) == 0) {
            ++outputs;
            const fs::path f = out / e.first.substr(7);
            CHECK(fs::exists(f));
            CHECK(io::file_checksum(f) == e.second);
        }
    CHECK(outputs >= 3);
}

TEST_CASE("cli: reruns and thread counts give byte-identical outputs") {
    TempDir tmp;
    const fs::path log = tmp.path / "log.txt";
    const fs::path o1 = tmp.path / "a";
    const fs::path o2 = tmp.path / "b";
    const fs::path o3 = tmp.path / "c";
    CHECK(run(std::string(kTinyArgs) + " --seed 11 --threads 1 --out " + o1.string(), log) == 0);
    CHECK(run(std::string(kTinyArgs) + " --seed 11 --threads 1 --out " + o2.string(), log) == 0);
    CHECK(run(std::string(kTinyArgs) + " --seed 11 --threads 4 --out " + o3.string(), log) == 0);
    CHECK(slurp(o1 / "manifest.txt") == slurp(o2 / "manifest.txt"));
    CHECK(slurp(o1 / "manifest.txt") == slurp(o3 / "manifest.txt"));
}

TEST_CASE("cli: config file drives the run, bad configs are named") {
    TempDir tmp;
    const fs::path log = tmp.path / "log.txt";
    const fs::path cfg = tmp.path / "run.cfg";
    {
        std::ofstream f(cfg);
        f << "schema_version = 1\n"
          << "scenario = ghost-image\n"
          << "frames = 100\n"
          << "grid.nx = 256\n"
          << "correlator.max_offset_x = 12\n"
          << "seed = 3\n";
    }
    const fs::path out = tmp.path / "run";
    CHECK(run("simulate --config " + cfg.string() + " --out " + out.string(), log) == 0);
    CHECK(io::KeyValueFile::read(out / "manifest.txt").get("frames") == "100");

    // unknown key
    {
        std::ofstream f(cfg);
        f << "schema_version = 1\nscenario = ghost-image\ngrid.pitch_nm = 7\n";
    }
    CHECK(run("simulate --config " + cfg.string() + " --out " + out.string(), log) == 1);
    CHECK(slurp(log).find("grid.pitch_nm") != std::string::npos);

    // missing schema version
    {
        std::ofstream f(cfg);
        f << "scenario = ghost-image\n";
    }
    CHECK(run("simulate --config " + cfg.string() + " --out " + out.string(), log) == 1);

    // zero frames is a usage error
    CHECK(run(std::string(kTinyArgs) + " --frames 0 --out " + out.string(), log) == 1);

    // bad scenario name
    CHECK(run("simulate --scenario bogus --out " + out.string(), log) == 1);
}

TEST_CASE("cli: analyze fits synthetic profiles and reproduces the reference product") {
    TempDir tmp;
    const fs::path log = tmp.path / "log.txt";

    // synthetic exact-Gaussian autocorrelation profiles
    auto write_profile = [&](const fs::path& p, double sigma) {
        io::CsvTable t;
        t.header = {"x_um", "value", "baseline", "stderr"};
        for (int i = 0; i <= 40; ++i) {
            const double x = i * sigma / 6.0;
            t.add_row({x, 1.0 + std::exp(-x * x / (2 * sigma * sigma)), 1.0, 0.0});
        }
        io::write_csv(p, t);
    };
    const fs::path nearp = tmp.path / "near.csv";
    const fs::path farp = tmp.path / "far.csv";
    write_profile(nearp, 14.3);
    write_profile(farp, 7.8);
    const fs::path out = tmp.path / "rep";
    CHECK(run("analyze --near " + nearp.string() + " --far " + farp.string() + " --out " +
                  out.string(),
              log) == 0);
    io::KeyValueFile rep = io::KeyValueFile::read(out / "coherence_report.txt");
    CHECK(std::abs(std::stod(rep.get("delta_x_n_um")) - 34.32) < 1e-5);
    CHECK(std::abs(std::stod(rep.get("delta_x_f_um")) - 15.6) < 1e-5);
    CHECK(std::abs(std::stod(rep.get("product")) - 0.06645) < 1e-4);

    // and with the fitted widths injected directly
    CHECK(run("analyze --sigma-near-um 14.3 --sigma-far-um 7.8 --out " + out.string(), log) ==
          0);
    rep = io::KeyValueFile::read(out / "coherence_report.txt");
    CHECK(std::abs(std::stod(rep.get("product")) - 0.066) < 5e-4);

    CHECK(run("analyze --far " + farp.string(), log) == 1); // missing near input
}

TEST_CASE("cli: oracle-check passes on a small matched configuration") {
    TempDir tmp;
    const fs::path log = tmp.path / "log.txt";
    const fs::path out = tmp.path / "oc";
    CHECK(run("oracle-check --frames 2500 --set grid.nx=16 --set grid.ny=16 "
              "--set oracle.dense=off --out " +
                  out.string(),
              log) == 0);
    const io::KeyValueFile man = io::KeyValueFile::read(out / "manifest.txt");
    CHECK(man.get("oracle.verdict") == "pass");
    CHECK(run("oracle-check --frames 0 --out " + out.string(), log) == 1);
}

TEST_CASE("cli: raster masks feed the experiment") {
    TempDir tmp;
    const fs::path log = tmp.path / "log.txt";

    // 8-bit graymap of a centered clear band, |T| mapped linearly
    const int n = 512;
    std::vector<double> gray(static_cast<std::size_t>(n) * n, 0.0);
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix)
            if (std::abs((ix - n / 2) * 7.0) < 345.0)
                gray[static_cast<std::size_t>(iy) * n + ix] = 1.0;
    const fs::path mask = tmp.path / "mask.pgm";
    io::write_pgm(mask, gray, n, n, 0.0, 1.0);

    const fs::path out = tmp.path / "run";
    CHECK(run("simulate --scenario coherent-reference --set object.kind=raster "
              "--set object.raster_path=" +
                  mask.string() + " --out " + out.string(),
              log) == 0);
    // the coherent diffraction of the raster band matches the slit pattern
    const auto x = io::read_csv(out / "coherent_diffraction.csv").column("x_um");
    const auto v = io::read_csv(out / "coherent_diffraction.csv").column("value");
    std::size_t imax = 0;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (v[i] > v[imax]) imax = i;
    CHECK(std::abs(x[imax]) < 15.0); // peak at the center

    // dimension mismatch is rejected by name
    CHECK(run("simulate --scenario coherent-reference --set object.kind=raster "
              "--set grid.nx=256 --set object.raster_path=" +
                  mask.string() + " --out " + out.string(),
              log) == 1);
}

TEST_CASE("cli: GHOSTSIM_OUTDIR selects the default output root") {
    TempDir tmp;
    const fs::path log = tmp.path / "log.txt";
    const std::string cmd = std::string("GHOSTSIM_OUTDIR=") + tmp.path.string() + " " +
                            GHOSTSIM_BIN + " " + kTinyArgs + " > " + log.string() + " 2>&1";
    CHECK(WEXITSTATUS(std::system(cmd.c_str())) == 0);
    CHECK(fs::exists(tmp.path / "ghost-image" / "manifest.txt"));
}
