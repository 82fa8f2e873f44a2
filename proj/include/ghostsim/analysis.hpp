#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "ghostsim/grid.hpp"
#include "ghostsim/speckle.hpp"

namespace ghostsim {

struct GaussianFitResult {
    double amplitude = 0.0;
    double center_um = 0.0;
    double sigma_um = 0.0;
    double baseline = 0.0;
    double sigma_stderr_um = 0.0;
    double residual_norm = 0.0;
    bool converged = false;
    int iterations = 0;
};

/// Damped least-squares fit of baseline + amplitude * exp(-(x-c)^2/(2 s^2))
/// to a sampled profile. Deterministic given (data, init); initialization
/// defaults to baseline = median of the outer 20% of samples, amplitude =
/// max - baseline, center = argmax, sigma = HWHM / 1.177. Iteration cap 200,
/// relative parameter tolerance 1e-10. A flat profile is an error; hitting
/// the cap returns the best parameters with converged = false.
/// init order: {baseline, amplitude, center, sigma}.
GaussianFitResult fit_gaussian_peak(std::span<const double> x_um, std::span<const double> y,
                                    std::optional<std::array<double, 4>> init = std::nullopt);

/// Coherence lengths and the resolution product derived from the fitted
/// near- and far-field correlation peaks:
///   dx_n = 2 m sigma_n, dx_f = 2 sigma_f, dq = (2 pi / lambda F) dx_f,
///   product = dx_n * dq.
struct CoherenceReport {
    double sigma_n_um = 0.0;
    double sigma_f_um = 0.0;
    double magnification = 0.0;
    double delta_x_n_um = 0.0;
    double delta_x_f_um = 0.0;
    double delta_q_per_um = 0.0;
    double product = 0.0;
    double product_stderr = 0.0;
};

CoherenceReport coherence_report(const GaussianFitResult& near_fit,
                                 const GaussianFitResult& far_fit, double lambda_um, double f_um,
                                 double magnification);

enum class ProfileAxis { X, Y };

/// Mean over the central `rows` lines of a 2-D array; the profile runs along
/// `axis`. rows must not exceed the transverse extent.
std::vector<double> section_average(std::span<const double> image, int nx, int ny,
                                    ProfileAxis axis, int rows);

/// Order-of-magnitude speckle sizes with unit proportionality constants:
/// near field lambda*z/d0, far field lambda*F/D.
std::pair<double, double> predict_speckle_sizes(const SourceSpec& source, double f_um);

} // namespace ghostsim
