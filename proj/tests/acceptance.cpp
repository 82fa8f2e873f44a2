// Acceptance suite: one test case per criterion, each printing a PASS/FAIL
// line with the measured figures. Heavy scenario runs are shared between
// criteria through memoized helpers.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ghostsim/oracle.hpp"
#include "ghostsim/scenarios.hpp"
#include "test_util.hpp"

using namespace ghostsim;
using namespace ghostsim::testutil;
namespace fs = std::filesystem;

namespace {

fs::path out_root() {
    static fs::path root = [] {
        fs::path p = fs::temp_directory_path() / "ghostsim_acceptance";
        fs::create_directories(p);
        return p;
    }();
    return root;
}

struct TimedRun {
    RunSummary summary;
    double seconds = 0.0;
};

TimedRun timed_run(const ScenarioConfig& cfg, const std::string& name) {
    const auto t0 = std::chrono::steady_clock::now();
    RunSummary s = run_scenario(cfg, out_root() / name);
    const auto t1 = std::chrono::steady_clock::now();
    return {std::move(s), std::chrono::duration<double>(t1 - t0).count()};
}

double man_num(const RunSummary& s, const std::string& key) {
    return std::stod(s.manifest.get(key));
}

// criterion 1 + 4 share the default near-field autocorrelation run
const TimedRun& near_run() {
    static TimedRun r = [] {
        ScenarioConfig c = default_scenario(Scenario::SiegertNear);
        return timed_run(c, "siegert-near");
    }();
    return r;
}

const TimedRun& far_run() {
    static TimedRun r = [] {
        ScenarioConfig c = default_scenario(Scenario::SiegertFar);
        c.frames = 300; // the spatial average converges in a few hundred frames
        return timed_run(c, "siegert-far");
    }();
    return r;
}

std::vector<double> column(const fs::path& csv, const std::string& name) {
    return io::read_csv(csv).column(name);
}

std::vector<double> gaussian_smooth(const std::vector<double>& v, double sigma_px) {
    const int w = static_cast<int>(std::ceil(3 * sigma_px));
    std::vector<double> out(v.size(), 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) {
        double acc = 0.0, wsum = 0.0;
        for (int d = -w; d <= w; ++d) {
            const std::ptrdiff_t j = static_cast<std::ptrdiff_t>(i) + d;
            if (j < 0 || j >= static_cast<std::ptrdiff_t>(v.size())) continue;
            const double g = std::exp(-0.5 * d * d / (sigma_px * sigma_px));
            acc += g * v[j];
            wsum += g;
        }
        out[i] = acc / wsum;
    }
    return out;
}

} // namespace

TEST_CASE("criterion 1: Siegert contrast at the near-field plane") {
    const TimedRun& r = near_run();
    const double peak = man_num(r.summary, "g2.peak");
    const double base = man_num(r.summary, "g2.tail");
    const bool pass = std::abs(peak - 2.0) <= 0.1 && std::abs(base - 1.0) <= 0.05 &&
                      r.seconds < 120.0;
    std::printf("[%s] criterion 1 (Siegert contrast): g2(0) = %.4f (2.0 +- 0.1), baseline = "
                "%.4f (1.0 +- 0.05), runtime %.0f s (< 120 s, 256^2, 5000 frames)\n",
                pass ? "PASS" : "FAIL", peak, base, r.seconds);
    CHECK(peak == doctest::Approx(2.0).epsilon(0.05));
    CHECK(base == doctest::Approx(1.0).epsilon(0.05));
    CHECK(r.seconds < 120.0);
}

TEST_CASE("criterion 2: ghost diffraction reconstruction") {
    ScenarioConfig c = default_scenario(Scenario::GhostDiffraction);
    const TimedRun r = timed_run(c, "ghost-diffraction");
    const fs::path csv = r.summary.outdir / "pattern1d.csv";
    const auto x = column(csv, "x_um");
    const auto v = column(csv, "value");

    std::vector<double> xs, vs;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (std::abs(x[i]) <= 700.0) {
            xs.push_back(x[i]);
            vs.push_back(v[i]);
        }
    const auto smooth = gaussian_smooth(vs, 1.0);
    const auto analytic = analytic_diffraction(AnalyticMaskKind::NeedleInSlit, 160.0, 690.0,
                                               c.source.lambda_um, c.focal_f_um, xs);
    const double corr = ncc(smooth, analytic);

    // single-slit control: first zeros at +- lambda F / w
    ScenarioConfig cs = c;
    cs.mask.kind = MaskSpec::Kind::SingleSlit;
    const TimedRun rs = timed_run(cs, "ghost-diffraction-slit");
    const auto xs2 = column(rs.summary.outdir / "pattern1d.csv", "x_um");
    const auto vs2 = column(rs.summary.outdir / "pattern1d.csv", "value");
    const double pitch = man_num(rs.summary, "pattern.pitch_um");
    const double expected = c.source.lambda_um * c.focal_f_um / 690.0;
    double zp = 0.0, zm = 0.0;
    std::size_t ic = 0;
    for (std::size_t i = 0; i < xs2.size(); ++i)
        if (xs2[i] == 0.0) ic = i;
    for (std::size_t i = ic + 1; i + 1 < xs2.size(); ++i)
        if (vs2[i] < vs2[i - 1] && vs2[i] <= vs2[i + 1]) {
            zp = xs2[i];
            break;
        }
    for (std::size_t i = ic - 1; i > 0; --i)
        if (vs2[i] < vs2[i + 1] && vs2[i] <= vs2[i - 1]) {
            zm = xs2[i];
            break;
        }
    const bool zeros_ok =
        std::abs(zp - expected) <= pitch && std::abs(zm + expected) <= pitch;
    const bool pass = corr >= 0.95 && zeros_ok;
    std::printf("[%s] criterion 2 (ghost diffraction): NCC = %.4f (>= 0.95, 500 frames), "
                "slit zeros at %+.1f / %+.1f um (73.4 +- %.1f)\n",
                pass ? "PASS" : "FAIL", corr, zm, zp, pitch);
    CHECK(corr >= 0.95);
    CHECK(zeros_ok);
}

TEST_CASE("criterion 3: ghost image reconstruction") {
    ScenarioConfig c = default_scenario(Scenario::GhostImage);
    const TimedRun r = timed_run(c, "ghost-image");
    const fs::path csv = r.summary.outdir / "image_profile.csv";
    const auto x = column(csv, "x_um");
    const auto g = column(csv, "value");
    const double sigma_img = man_num(r.summary, "psf.sigma_um"); // measured |Gamma|^2 width

    // coherent image |T(-m x)|^2 convolved with the measured point spread
    std::vector<double> xs, gs, ref;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (std::abs(x[i]) > 420.0) continue;
        xs.push_back(x[i]);
        gs.push_back(g[i]);
        double acc = 0.0, wsum = 0.0;
        for (double u = -5 * sigma_img; u <= 5 * sigma_img; u += 0.25) {
            const double w = std::exp(-u * u / (2 * sigma_img * sigma_img));
            const double xo = std::abs(-c.magnification * (x[i] - u));
            acc += w * ((xo > 80.0 && xo < 345.0) ? 1.0 : 0.0);
            wsum += w;
        }
        ref.push_back(acc / wsum);
    }
    const double nrms = nrms_scaled(gs, ref);

    // needle dip of the scaled reconstruction vs the coherent dip (= 1)
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < gs.size(); ++i) {
        ma += gs[i];
        mb += ref[i];
    }
    ma /= gs.size();
    mb /= ref.size();
    double cov = 0, var = 0;
    for (std::size_t i = 0; i < gs.size(); ++i) {
        cov += (gs[i] - ma) * (ref[i] - mb);
        var += (gs[i] - ma) * (gs[i] - ma);
    }
    const double alpha = cov / var, beta = mb - alpha * ma;
    double dip = 1e300, plateau = 0.0;
    int np = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double sv = alpha * gs[i] + beta;
        if (std::abs(xs[i]) < 50.0) dip = std::min(dip, sv);
        if (std::abs(xs[i]) > 120.0 && std::abs(xs[i]) < 240.0) {
            plateau += sv;
            ++np;
        }
    }
    plateau /= np;
    const double dip_contrast = 1.0 - dip / plateau;

    // slit width on the detector: outer half-maximum edges at 690/1.2 um
    // apart, within the coherence length
    double first = 0.0, last = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i)
        if (alpha * gs[i] + beta >= 0.5 * plateau) {
            if (first == 0.0) first = xs[i];
            last = xs[i];
        }
    const double width = last - first;
    const double dxn = 2.0 * c.magnification * sigma_img; // coherence length estimate
    const bool width_ok = std::abs(width - 690.0 / 1.2) <= 2.0 * dxn;

    const bool pass = nrms <= 0.10 && dip_contrast >= 0.5 && width_ok;
    std::printf("[%s] criterion 3 (ghost image): NRMS = %.3f (<= 0.10 vs coherent image "
                "convolved with measured PSF sigma = %.1f um), needle dip contrast = %.2f "
                "(>= 0.50 of the coherent dip, 5000 frames), slit width %.0f um (575 +- "
                "%.0f)\n",
                pass ? "PASS" : "FAIL", nrms, sigma_img, dip_contrast, width, 2.0 * dxn);
    CHECK(nrms <= 0.10);
    CHECK(dip_contrast >= 0.5);
    CHECK(width_ok);
}

TEST_CASE("criterion 4: resolution product far below unity") {
    GaussianFitResult near_fit, far_fit;
    near_fit.sigma_um = man_num(near_run().summary, "fit.sigma_um");
    near_fit.converged = man_num(near_run().summary, "fit.converged") > 0;
    far_fit.sigma_um = man_num(far_run().summary, "fit.sigma_um");
    far_fit.converged = man_num(far_run().summary, "fit.converged") > 0;
    const CoherenceReport rep = coherence_report(near_fit, far_fit, 0.6328, 80000.0, 1.2);

    // and the reference widths reproduce the reference product
    GaussianFitResult n2, f2;
    n2.sigma_um = 14.3;
    n2.converged = true;
    f2.sigma_um = 7.8;
    f2.converged = true;
    const CoherenceReport ref = coherence_report(n2, f2, 0.6328, 80000.0, 1.2);

    // same thing end to end through the analyze subcommand
    const fs::path rep_dir = out_root() / "analyze";
    const std::string cmd = std::string(GHOSTSIM_BIN) + " analyze --near " +
                            (near_run().summary.outdir / "autocorr.csv").string() + " --far " +
                            (far_run().summary.outdir / "autocorr.csv").string() + " --out " +
                            rep_dir.string() + " > /dev/null 2>&1";
    REQUIRE(std::system(cmd.c_str()) == 0);
    const double cli_product =
        std::stod(io::KeyValueFile::read(rep_dir / "coherence_report.txt").get("product"));

    const bool pass = near_fit.converged && far_fit.converged && rep.product < 0.15 &&
                      cli_product < 0.15 && std::abs(ref.product - 0.066) < 5e-4;
    std::printf("[%s] criterion 4 (resolution product): fitted sigma_n = %.2f um, sigma_f = "
                "%.2f um -> dx_n*dq = %.4f (< 0.15, analyze CLI %.4f); injected 14.3/7.8 um "
                "-> %.4f (= 0.066 +- 0.0005)\n",
                pass ? "PASS" : "FAIL", near_fit.sigma_um, far_fit.sigma_um, rep.product,
                cli_product, ref.product);
    CHECK(near_fit.converged);
    CHECK(far_fit.converged);
    CHECK(rep.product < 0.15);
    CHECK(cli_product < 0.15);
    CHECK(std::abs(ref.product - 0.066) < 5e-4);
}

TEST_CASE("criterion 5: Monte Carlo matches the dense quadrature") {
    ScenarioConfig c = default_scenario(Scenario::OracleCheck);
    c.oracle_dense = false;
    const TimedRun r = timed_run(c, "oracle-check");
    const double frac = man_num(r.summary, "oracle.fraction_within_3se");
    const double frac_active = man_num(r.summary, "oracle.fraction_active_within_3se");
    const bool pass = r.summary.ok && frac >= 0.95 && r.seconds < 300.0;
    std::printf("[%s] criterion 5 (oracle equivalence): %.1f%% of coordinates within 3 SE "
                "(>= 95%%, 32^2, 10^4 frames), %.1f%% on the signal set, runtime %.0f s "
                "(< 300 s)\n",
                pass ? "PASS" : "FAIL", 100 * frac, 100 * frac_active, r.seconds);
    CHECK(r.summary.ok);
    CHECK(frac >= 0.95);
    CHECK(frac_active >= 0.95);
    CHECK(r.seconds < 300.0);
}

TEST_CASE("criterion 6: property suite") {
    // Parseval / energy conservation at 1e-10
    GridSpec g(512, 512, 7.0);
    ComplexField f = random_field(g, 2024);
    ComplexField spec = dft_unitary(f, FftDirection::Forward);
    double ein = 0.0, eout = 0.0;
    for (const cplx& v : f.values) ein += std::norm(v);
    for (const cplx& v : spec.values) eout += std::norm(v);
    const double parseval = std::abs(eout - ein) / ein;

    // beam-splitter pixel-wise energy split
    auto [b1, b2] = split(f, BeamSplitter::balanced());
    double split_err = 0.0;
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        const double in = std::norm(f.values[i]);
        split_err = std::max(split_err,
                             std::abs(std::norm(b1.values[i]) + std::norm(b2.values[i]) - in) /
                                 (in > 0 ? in : 1.0));
    }

    // accumulator merge associativity
    AccumConfig ac;
    ac.mode = AccumMode::Full;
    ac.grid1 = GridSpec(16, 16, 7.0);
    ac.grid2 = ac.grid1;
    CorrelationAccumulator whole(ac), left(ac), right(ac);
    GaussianRng rng(7);
    for (int k = 0; k < 100; ++k) {
        ShotRecord s;
        s.frame1 = IntensityFrame(ac.grid1);
        s.frame2 = IntensityFrame(ac.grid2);
        for (double& v : s.frame1.values) v = std::norm(rng.circular());
        for (double& v : s.frame2.values) v = std::norm(rng.circular());
        whole.accumulate(s);
        (k < 50 ? left : right).accumulate(s);
    }
    left.merge(right);
    const CorrelationResult rw = finalize_g(whole);
    const CorrelationResult rm = finalize_g(left);
    double mscale = 0.0, merge_err = 0.0;
    for (double v : rw.baseline) mscale = std::max(mscale, v);
    for (std::size_t i = 0; i < rw.values.size(); ++i)
        merge_err = std::max(merge_err, std::abs(rm.values[i] - rw.values[i]) / mscale);

    // Gaussian fit exact recovery
    std::vector<double> xs, ys;
    for (int i = -40; i <= 40; ++i) {
        xs.push_back(i);
        ys.push_back(0.5 + 2.0 * std::exp(-i * i / (2.0 * 81.0)));
    }
    const GaussianFitResult fit = fit_gaussian_peak(xs, ys);
    const double fit_err = std::max({std::abs(fit.sigma_um - 9.0) / 9.0,
                                     std::abs(fit.amplitude - 2.0) / 2.0,
                                     std::abs(fit.baseline - 0.5) / 0.5});

    // determinism: identical checksums across reruns and thread counts
    const std::string tiny = " simulate --scenario ghost-image --frames 120 --seed 5 "
                             "--set grid.nx=256 --set correlator.max_offset_x=12 ";
    auto manifest_of = [&](const std::string& outdir, int threads) {
        const std::string cmd = std::string(GHOSTSIM_BIN) + tiny + "--threads " +
                                std::to_string(threads) + " --out " + outdir + " > /dev/null 2>&1";
        REQUIRE(std::system(cmd.c_str()) == 0);
        std::ifstream fin(outdir + "/manifest.txt");
        std::stringstream ss;
        ss << fin.rdbuf();
        return ss.str();
    };
    const fs::path d = out_root();
    const std::string m1 = manifest_of((d / "det1").string(), 1);
    const std::string m2 = manifest_of((d / "det2").string(), 1);
    const std::string m3 = manifest_of((d / "det3").string(), 4);
    const bool deterministic = (m1 == m2) && (m1 == m3);

    const bool pass = parseval <= 1e-10 && split_err <= 1e-12 && merge_err <= 1e-9 &&
                      fit_err <= 1e-8 && deterministic;
    std::printf("[%s] criterion 6 (properties): Parseval %.1e (<= 1e-10), split %.1e "
                "(pixel-exact), merge %.1e (<= 1e-9), fit recovery %.1e (<= 1e-8), "
                "rerun/thread determinism %s\n",
                pass ? "PASS" : "FAIL", parseval, split_err, merge_err, fit_err,
                deterministic ? "byte-identical" : "BROKEN");
    CHECK(parseval <= 1e-10);
    CHECK(split_err <= 1e-12);
    CHECK(merge_err <= 1e-9);
    CHECK(fit_err <= 1e-8);
    CHECK(deterministic);
}

TEST_CASE("criterion 7: coherence-length scaling laws") {
    // far field: doubling the diaphragm halves the fitted width
    auto far_sigma = [&](double d_um, const std::string& name) {
        ScenarioConfig c = default_scenario(Scenario::SiegertFar);
        c.frames = 200;
        c.source.pinhole_d_um = d_um;
        const TimedRun r = timed_run(c, name);
        REQUIRE(man_num(r.summary, "fit.converged") > 0);
        return man_num(r.summary, "fit.sigma_um");
    };
    const double sf_d15 = far_sigma(1500.0, "sweep-far-d1500");
    const double sf_d30 = far_sigma(3000.0, "sweep-far-d3000");
    const double far_ratio = sf_d15 / sf_d30;

    // near field: independent of the diaphragm, inversely proportional to the
    // source diameter
    auto near_sigma = [&](double d_um, double d0_um, const std::string& name) {
        ScenarioConfig c = default_scenario(Scenario::SiegertNear);
        c.grid = GridSpec::square(512, 7.0);
        c.frames = 500;
        c.source.pinhole_d_um = d_um;
        c.source.d0_um = d0_um;
        c.autocorr_central_half = true; // diaphragm edge diffraction stays out
        const TimedRun r = timed_run(c, name);
        REQUIRE(man_num(r.summary, "fit.converged") > 0);
        return man_num(r.summary, "fit.sigma_um");
    };
    const double sn_d15 = near_sigma(1500.0, 10000.0, "sweep-near-d1500");
    const double sn_d30 = near_sigma(3000.0, 10000.0, "sweep-near-d3000");
    const double near_d_ratio = sn_d15 / sn_d30;
    const double sn_d0_5 = near_sigma(3000.0, 5000.0, "sweep-near-d0-5000");
    const double near_d0_ratio = sn_d0_5 / sn_d30;

    const bool pass = far_ratio > 1.6 && far_ratio < 2.4 && near_d_ratio > 0.85 &&
                      near_d_ratio < 1.15 && near_d0_ratio > 1.6 && near_d0_ratio < 2.4;
    std::printf("[%s] criterion 7 (scaling): sigma_f(D/2)/sigma_f(D) = %.2f (2.0 +- 20%%), "
                "sigma_n(D/2)/sigma_n(D) = %.2f (1.0 +- 15%%), sigma_n(D0/2)/sigma_n(D0) = "
                "%.2f (2.0 +- 20%%)\n",
                pass ? "PASS" : "FAIL", far_ratio, near_d_ratio, near_d0_ratio);
    CHECK(far_ratio > 1.6);
    CHECK(far_ratio < 2.4);
    CHECK(near_d_ratio > 0.85);
    CHECK(near_d_ratio < 1.15);
    CHECK(near_d0_ratio > 1.6);
    CHECK(near_d0_ratio < 2.4);
}
