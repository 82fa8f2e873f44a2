#include <doctest.h>

#include <cmath>

#include "ghostsim/oracle.hpp"
#include "ghostsim/scenarios.hpp"
#include "test_util.hpp"

using namespace ghostsim;
using namespace ghostsim::testutil;

namespace {

ExperimentConfig small_experiment() {
    ScenarioConfig c = default_scenario(Scenario::GhostDiffraction);
    c.grid = GridSpec::square(128, 7.0);
    c.source.z_pinhole_um = 8000.0;
    c.source.pinhole_d_um = 700.0;
    return c.experiment();
}

} // namespace

TEST_CASE("split: beam-splitter relations") {
    GridSpec g(32, 32, 7.0);
    ComplexField a = random_field(g, 3);

    BeamSplitter full;
    full.t = cplx(1.0, 0.0);
    full.r = cplx(0.0, 0.0);
    auto [b1, b2] = split(a, full);
    CHECK(b1.values == a.values);
    for (const cplx& v : b2.values) CHECK(v == cplx(0.0, 0.0));

    BeamSplitter bal = BeamSplitter::balanced();
    auto [c1, c2] = split(a, bal);
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        const double in = std::norm(a.values[i]);
        // pixel-wise lossless split
        CHECK(std::norm(c1.values[i]) + std::norm(c2.values[i]) ==
              doctest::Approx(in).epsilon(2e-15));
        CHECK(std::norm(c1.values[i]) == doctest::Approx(0.5 * in).epsilon(2e-15));
        // b1 b2* = t r* |a|^2
        const cplx cross = c1.values[i] * std::conj(c2.values[i]);
        const cplx expect = bal.t * std::conj(bal.r) * in;
        CHECK(std::abs(cross - expect) <= 1e-12 * std::max(1.0, std::abs(expect)));
    }

    BeamSplitter lossy;
    lossy.t = cplx(0.9, 0.0);
    lossy.r = cplx(0.9, 0.0);
    CHECK_THROWS_AS(split(a, lossy), ConfigError);
}

TEST_CASE("needle_in_slit: open only between the needle and slit edges") {
    GridSpec g(1024, 4, 1.0);
    ObjectMask m = ObjectMask::needle_in_slit(g, 160.0, 690.0);
    auto t_at = [&](double x_um) {
        const int ix = static_cast<int>(x_um) + g.nx / 2;
        return m.transmission[static_cast<std::size_t>(g.nx) + ix].real(); // row 1
    };
    CHECK(t_at(0) == 0.0);
    CHECK(t_at(79) == 0.0);
    CHECK(t_at(80) == 0.0);   // boundary closed
    CHECK(t_at(81) == 1.0);
    CHECK(t_at(-81) == 1.0);
    CHECK(t_at(344) == 1.0);
    CHECK(t_at(345) == 0.0);  // boundary closed
    CHECK(t_at(400) == 0.0);
    CHECK_THROWS_AS(ObjectMask::needle_in_slit(g, 700.0, 690.0), ConfigError);
}

TEST_CASE("apply_object: identity for T = 1, energy never grows") {
    GridSpec g(64, 64, 7.0);
    ComplexField f = random_field(g, 5);
    ObjectMask u = ObjectMask::uniform(g);
    ComplexField out = apply_object(f, u);
    CHECK(out.values == f.values);

    ObjectMask mask = ObjectMask::needle_in_slit(g, 40.0, 200.0);
    CHECK(total_energy(apply_object(f, mask)) <= total_energy(f));

    ObjectMask wrong = ObjectMask::uniform(GridSpec(32, 32, 7.0));
    CHECK_THROWS_AS(apply_object(f, wrong), ConfigError);
}

TEST_CASE("run_shot: deterministic, and arm 1 never sees the arm-2 switch") {
    ExperimentConfig e = small_experiment();
    ShotRecord s1 = run_shot(e, 99);
    ShotRecord s2 = run_shot(e, 99);
    CHECK(s1.frame1.values == s2.frame1.values);
    CHECK(s1.frame2.values == s2.frame2.values);

    ExperimentConfig e2 = e;
    e2.arm2_mode = Arm2Mode::GhostImage;
    ShotRecord s3 = run_shot(e2, 99);
    CHECK(s3.frame1.values == s1.frame1.values); // bit-identical object arm
    CHECK(s3.frame2.values != s1.frame2.values);
}

TEST_CASE("run_shot: single thermal shot shows no diffraction pattern") {
    ExperimentConfig e = small_experiment();
    ShotRecord s = run_shot(e, 7);
    const GridSpec& gf = s.frame1.grid;

    // template |T~|^2 over the central band, broadcast along y
    std::vector<double> frame, templ;
    for (int iy = 0; iy < gf.ny; ++iy)
        for (int ix = 0; ix < gf.nx; ++ix) {
            if (std::abs(gf.x_um(ix)) > 700.0) continue;
            frame.push_back(s.frame1.at(ix, iy));
            const double x[1] = {gf.x_um(ix)};
            templ.push_back(analytic_diffraction(AnalyticMaskKind::NeedleInSlit, 160.0, 690.0,
                                                 e.source.lambda_um, e.focal_f_um, x)[0]);
        }
    CHECK(std::abs(ncc(frame, templ)) < 0.2);
}

TEST_CASE("run_shot: coherent probe reproduces the diffraction pattern and image") {
    ExperimentConfig e = small_experiment();
    e.coherent_probe = true;
    ShotRecord s = run_shot(e, 1);
    const GridSpec& gf = s.frame1.grid;
    std::vector<double> row, templ;
    for (int ix = 0; ix < gf.nx; ++ix) {
        if (std::abs(gf.x_um(ix)) > 700.0) continue;
        row.push_back(s.frame1.at(ix, gf.ny / 2));
        const double x[1] = {gf.x_um(ix)};
        templ.push_back(analytic_diffraction(AnalyticMaskKind::NeedleInSlit, 160.0, 690.0,
                                             e.source.lambda_um, e.focal_f_um, x)[0]);
    }
    CHECK(ncc(row, templ) > 0.95);

    // object temporarily in arm 2, imaging mode: focused |T(-m x)|^2
    ExperimentConfig ei = small_experiment();
    ei.coherent_probe = true;
    ei.object_arm = 2;
    ei.arm2_mode = Arm2Mode::GhostImage;
    ShotRecord si = run_shot(ei, 1);
    const GridSpec& gi = si.frame2.grid;
    int mismatches = 0;
    for (int ix = 0; ix < gi.nx; ++ix) {
        const double xo = std::abs(-ei.magnification * gi.x_um(ix));
        const double expect = (xo > 80.0 && xo < 345.0) ? 1.0 : 0.0;
        const double got = si.frame2.at(ix, gi.ny / 2) /
                           (ei.magnification * ei.magnification * ei.source.mean_intensity);
        if (std::abs(got - expect) > 0.5) ++mismatches;
    }
    CHECK(mismatches <= 4); // only pixels straddling the edges may flip
}

TEST_CASE("bucket: sums the region") {
    GridSpec g(16, 16, 7.0);
    IntensityFrame f(g);
    for (double& v : f.values) v = 0.5;
    std::vector<std::uint8_t> all(g.count(), 1);
    CHECK(bucket(f, all) == doctest::Approx(0.5 * 256).epsilon(1e-12));

    IntensityFrame z(g);
    CHECK(bucket(z, all) == 0.0);

    std::vector<std::uint8_t> none(g.count(), 0);
    CHECK_THROWS_AS(bucket(f, none), ConfigError);

    // restricting to the illuminated support loses nothing
    IntensityFrame sparse(g);
    sparse.at(3, 4) = 2.0;
    sparse.at(10, 12) = 3.0;
    std::vector<std::uint8_t> support(g.count(), 0);
    support[4 * 16 + 3] = 1;
    support[12 * 16 + 10] = 1;
    CHECK(bucket(sparse, support) == doctest::Approx(bucket(sparse, all)).epsilon(1e-12));
}

TEST_CASE("calibrate_bucket_region: covers the mean illuminated support") {
    ExperimentConfig e = small_experiment();
    auto region = calibrate_bucket_region(e, 8, 1234);
    std::size_t n_on = 0;
    for (auto v : region) n_on += v;
    CHECK(n_on > 0);
    CHECK(n_on < region.size());
    // deterministic
    CHECK(region == calibrate_bucket_region(e, 8, 1234));
}

TEST_CASE("bin_intensity: block sums with pitch bookkeeping") {
    GridSpec g(8, 8, 2.0);
    IntensityFrame f(g);
    for (int iy = 0; iy < 8; ++iy)
        for (int ix = 0; ix < 8; ++ix) f.at(ix, iy) = ix;
    IntensityFrame b = bin_intensity(f, 2);
    CHECK(b.grid.nx == 4);
    CHECK(b.grid.pitch_x_um == 4.0);
    CHECK(b.at(0, 0) == doctest::Approx(2.0)); // 0+1 twice
    CHECK_THROWS_AS(bin_intensity(f, 3), ConfigError);
}

TEST_CASE("poisson detection: deterministic, unbiased, nonnegative") {
    ExperimentConfig e = small_experiment();
    e.detector.poisson = true;
    e.detector.photons_per_unit = 50.0;
    ShotRecord a = run_shot(e, 5);
    ShotRecord b = run_shot(e, 5);
    CHECK(a.frame1.values == b.frame1.values);

    ExperimentConfig clean = small_experiment();
    ShotRecord c = run_shot(clean, 5);
    double noisy = 0.0, ideal = 0.0;
    for (std::size_t i = 0; i < c.frame1.values.size(); ++i) {
        CHECK(a.frame1.values[i] >= 0.0);
        noisy += a.frame1.values[i];
        ideal += c.frame1.values[i];
    }
    CHECK(noisy == doctest::Approx(ideal).epsilon(0.02));
}
