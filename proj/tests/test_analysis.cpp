#include <doctest.h>

#include <cmath>

#include "ghostsim/analysis.hpp"
#include "ghostsim/rng.hpp"
#include "ghostsim/scenarios.hpp"

using namespace ghostsim;

namespace {

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) x[i] = lo + (hi - lo) * i / (n - 1);
    return x;
}

std::vector<double> gaussian(const std::vector<double>& x, double b, double a, double c,
                             double s) {
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        y[i] = b + a * std::exp(-(x[i] - c) * (x[i] - c) / (2 * s * s));
    return y;
}

} // namespace

TEST_CASE("fit_gaussian_peak: exact recovery on noiseless data") {
    const auto x = linspace(-40, 40, 81);
    const auto y = gaussian(x, 1.0, 1.0, 0.0, 10.0);
    const GaussianFitResult f = fit_gaussian_peak(x, y);
    CHECK(f.converged);
    CHECK(f.amplitude == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(std::abs(f.center_um) < 1e-8);
    CHECK(f.sigma_um == doctest::Approx(10.0).epsilon(1e-8));
    CHECK(f.baseline == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("fit_gaussian_peak: 1% noise keeps sigma within 3%") {
    const auto x = linspace(-40, 40, 81);
    const auto clean = gaussian(x, 1.0, 1.0, 0.0, 10.0);
    for (int trial = 0; trial < 100; ++trial) {
        GaussianRng rng(1234 + trial);
        std::vector<double> y = clean;
        for (double& v : y) v += 0.01 * rng.normal();
        const GaussianFitResult f = fit_gaussian_peak(x, y);
        CHECK(f.converged);
        CHECK(f.sigma_um == doctest::Approx(10.0).epsilon(0.03));
    }
}

TEST_CASE("fit_gaussian_peak: translation and scaling covariance") {
    const auto x = linspace(-35, 45, 81);
    const auto y = gaussian(x, 0.5, 2.0, 5.0, 8.0);
    const GaussianFitResult f0 = fit_gaussian_peak(x, y);

    std::vector<double> xs = x;
    for (double& v : xs) v += 13.25;
    const GaussianFitResult fs = fit_gaussian_peak(xs, y);
    CHECK(fs.center_um == doctest::Approx(f0.center_um + 13.25).epsilon(1e-8));
    CHECK(fs.sigma_um == doctest::Approx(f0.sigma_um).epsilon(1e-8));
    CHECK(fs.amplitude == doctest::Approx(f0.amplitude).epsilon(1e-8));

    std::vector<double> yk = y;
    for (double& v : yk) v *= 7.0;
    const GaussianFitResult fk = fit_gaussian_peak(x, yk);
    CHECK(fk.amplitude == doctest::Approx(7.0 * f0.amplitude).epsilon(1e-8));
    CHECK(fk.baseline == doctest::Approx(7.0 * f0.baseline).epsilon(1e-8));
    CHECK(fk.center_um == doctest::Approx(f0.center_um).epsilon(1e-8));
    CHECK(fk.sigma_um == doctest::Approx(f0.sigma_um).epsilon(1e-8));
}

TEST_CASE("fit_gaussian_peak: degenerate inputs are rejected") {
    const auto x = linspace(-10, 10, 21);
    std::vector<double> flat(x.size(), 3.0);
    CHECK_THROWS_AS(fit_gaussian_peak(x, flat), ConfigError);
    const std::vector<double> tiny_x = {0, 1, 2};
    const std::vector<double> tiny_y = {0, 1, 0};
    CHECK_THROWS_AS(fit_gaussian_peak(tiny_x, tiny_y), ConfigError);
}

TEST_CASE("coherence_report: reference values") {
    GaussianFitResult near_fit, far_fit;
    near_fit.sigma_um = 14.3;
    near_fit.converged = true;
    far_fit.sigma_um = 7.8;
    far_fit.converged = true;
    const CoherenceReport r = coherence_report(near_fit, far_fit, 0.6328, 80000.0, 1.2);
    CHECK(r.delta_x_n_um == doctest::Approx(34.32).epsilon(1e-12));
    CHECK(std::abs(r.delta_x_n_um - 34.3) < 0.05);
    CHECK(r.delta_x_f_um == doctest::Approx(15.6).epsilon(1e-12));
    CHECK(r.delta_q_per_um == doctest::Approx(1.93e-3).epsilon(0.005));
    CHECK(std::abs(r.product - 0.0662) < 5e-4);
    CHECK(std::abs(r.product - 0.066) < 5e-4);

    GaussianFitResult bad = far_fit;
    bad.converged = false;
    CHECK_THROWS_AS(coherence_report(near_fit, bad, 0.6328, 80000.0, 1.2), NumericError);
}

TEST_CASE("section_average: rows and variance reduction") {
    const int nx = 256, ny = 600;
    std::vector<double> img(static_cast<std::size_t>(nx) * ny);

    // y-uniform image: any row equals the average
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix) img[static_cast<std::size_t>(iy) * nx + ix] = ix * 0.5;
    const auto avg = section_average(img, nx, ny, ProfileAxis::X, 500);
    for (int ix = 0; ix < nx; ++ix) CHECK(avg[ix] == doctest::Approx(ix * 0.5).epsilon(1e-12));
    const auto one = section_average(img, nx, ny, ProfileAxis::X, 1);
    CHECK(one == avg);

    // white noise: averaging 500 rows shrinks the std by sqrt(500)
    GaussianRng rng(9);
    for (double& v : img) v = rng.normal();
    const auto prof = section_average(img, nx, ny, ProfileAxis::X, 500);
    double var = 0.0;
    for (double v : prof) var += v * v;
    const double ratio = std::sqrt(var / nx) * std::sqrt(500.0);
    CHECK(ratio == doctest::Approx(1.0).epsilon(0.1));

    CHECK_THROWS_AS(section_average(img, nx, ny, ProfileAxis::X, 601), ConfigError);
}

TEST_CASE("predict_speckle_sizes: reference geometry and scaling") {
    SourceSpec s;
    s.lambda_um = 0.6328;
    s.d0_um = 10000.0;
    s.z0_um = 400000.0;
    s.z_pinhole_um = 74000.0; // total path 474 mm
    s.pinhole_d_um = 3000.0;
    const auto [dxn, dxf] = predict_speckle_sizes(s, 80000.0);
    CHECK(dxn == doctest::Approx(30.0).epsilon(0.002));
    CHECK(dxf == doctest::Approx(16.87).epsilon(0.01));

    SourceSpec s2 = s;
    s2.d0_um *= 2.0;
    const auto [dxn2, dxf2] = predict_speckle_sizes(s2, 80000.0);
    CHECK(dxn2 == doctest::Approx(0.5 * dxn).epsilon(1e-12));
    CHECK(dxf2 == doctest::Approx(dxf).epsilon(1e-12));

    SourceSpec s3 = s;
    s3.pinhole_d_um *= 2.0;
    const auto [dxn3, dxf3] = predict_speckle_sizes(s3, 80000.0);
    CHECK(dxn3 == doctest::Approx(dxn).epsilon(1e-12));
    CHECK(dxf3 == doctest::Approx(0.5 * dxf).epsilon(1e-12));
}

TEST_CASE("fit_profile_peak: one-sided profiles are mirrored before fitting") {
    const auto x = linspace(0, 60, 31);
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        y[i] = 1.0 + std::exp(-x[i] * x[i] / (2 * 9.0 * 9.0));
    const GaussianFitResult f = fit_profile_peak(x, y);
    CHECK(f.converged);
    CHECK(f.sigma_um == doctest::Approx(9.0).epsilon(1e-6));
    CHECK(std::abs(f.center_um) < 1e-6);
}
