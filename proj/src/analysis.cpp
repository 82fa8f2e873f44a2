#include "ghostsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace ghostsim {

namespace {

using Params = std::array<double, 4>; // baseline, amplitude, center, sigma

double model(const Params& p, double x) {
    const double u = (x - p[2]) / p[3];
    return p[0] + p[1] * std::exp(-0.5 * u * u);
}

double cost(const Params& p, std::span<const double> x, std::span<const double> y) {
    double c = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - model(p, x[i]);
        c += r * r;
    }
    return c;
}

// Solve a 4x4 linear system in place; returns false when singular.
bool solve4(std::array<std::array<double, 4>, 4>& a, std::array<double, 4>& b) {
    for (int col = 0; col < 4; ++col) {
        int piv = col;
        for (int r = col + 1; r < 4; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (std::abs(a[piv][col]) < 1e-300) return false;
        std::swap(a[piv], a[col]);
        std::swap(b[piv], b[col]);
        for (int r = 0; r < 4; ++r) {
            if (r == col) continue;
            const double f = a[r][col] / a[col][col];
            for (int c = col; c < 4; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    for (int r = 0; r < 4; ++r) b[r] /= a[r][r];
    return true;
}

Params default_init(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });

    // Baseline from the outer 20% of samples (both ends).
    std::size_t k = std::max<std::size_t>(1, n / 10);
    std::vector<double> outer;
    for (std::size_t i = 0; i < k; ++i) {
        outer.push_back(y[order[i]]);
        outer.push_back(y[order[n - 1 - i]]);
    }
    std::sort(outer.begin(), outer.end());
    const double baseline = outer[outer.size() / 2];

    std::size_t imax = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (y[i] > y[imax]) imax = i;
    const double amplitude = y[imax] - baseline;
    const double center = x[imax];

    // Half width at half maximum scanned outward from the peak.
    const double half = baseline + 0.5 * amplitude;
    double hwhm = 0.0;
    double span_x = std::abs(x[order[n - 1]] - x[order[0]]);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t i = order[j];
        if (y[i] >= half) {
            const double d = std::abs(x[i] - center);
            hwhm = std::max(hwhm, d);
        }
    }
    if (hwhm <= 0.0) hwhm = span_x / 6.0;
    return {baseline, amplitude, center, hwhm / 1.177};
}

} // namespace

GaussianFitResult fit_gaussian_peak(std::span<const double> x_um, std::span<const double> y,
                                    std::optional<std::array<double, 4>> init) {
    if (x_um.size() != y.size()) throw ConfigError("fit_gaussian_peak: size mismatch");
    if (x_um.size() < 6) throw ConfigError("fit_gaussian_peak: need at least 6 samples");
    const auto [ymin, ymax] = std::minmax_element(y.begin(), y.end());
    if (*ymax == *ymin) throw ConfigError("fit_gaussian_peak: degenerate flat profile");

    Params p = init ? *init : default_init(x_um, y);
    if (p[3] == 0.0) p[3] = 1.0;
    p[3] = std::abs(p[3]);

    const std::size_t n = x_um.size();
    double lambda = 1e-3;
    double c_now = cost(p, x_um, y);
    int iter = 0;
    bool converged = false;
    int stalled = 0;

    for (; iter < 200; ++iter) {
        // Normal equations from the analytic Jacobian.
        std::array<std::array<double, 4>, 4> jtj{};
        std::array<double, 4> jtr{};
        for (std::size_t i = 0; i < n; ++i) {
            const double u = (x_um[i] - p[2]) / p[3];
            const double e = std::exp(-0.5 * u * u);
            const double r = y[i] - (p[0] + p[1] * e);
            const std::array<double, 4> j = {1.0, e, p[1] * e * u / p[3],
                                             p[1] * e * u * u / p[3]};
            for (int a = 0; a < 4; ++a) {
                jtr[a] += j[a] * r;
                for (int b = a; b < 4; ++b) jtj[a][b] += j[a] * j[b];
            }
        }
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < a; ++b) jtj[a][b] = jtj[b][a];

        bool stepped = false;
        for (int tries = 0; tries < 12; ++tries) {
            auto a = jtj;
            auto g = jtr;
            for (int d = 0; d < 4; ++d) a[d][d] += lambda * std::max(jtj[d][d], 1e-300);
            if (!solve4(a, g)) {
                lambda *= 10.0;
                continue;
            }
            Params trial = {p[0] + g[0], p[1] + g[1], p[2] + g[2], p[3] + g[3]};
            trial[3] = std::abs(trial[3]);
            if (trial[3] < 1e-12) trial[3] = 1e-12;
            const double c_trial = cost(trial, x_um, y);
            if (c_trial <= c_now) {
                double rel = 0.0;
                for (int d = 0; d < 4; ++d)
                    rel = std::max(rel, std::abs(trial[d] - p[d]) /
                                            std::max(1e-30, std::abs(p[d]) + 1e-12));
                stalled = (c_now - c_trial) <= 1e-13 * std::max(c_now, 1e-300) ? stalled + 1 : 0;
                p = trial;
                c_now = c_trial;
                lambda = std::max(lambda / 3.0, 1e-12);
                stepped = true;
                if (rel < 1e-10 || stalled >= 2) converged = true;
                break;
            }
            lambda *= 5.0;
        }
        if (converged || !stepped) {
            converged = converged || !stepped; // stalled damping: local minimum
            break;
        }
    }

    GaussianFitResult out;
    out.baseline = p[0];
    out.amplitude = p[1];
    out.center_um = p[2];
    out.sigma_um = std::abs(p[3]);
    out.residual_norm = std::sqrt(c_now);
    out.converged = converged;
    out.iterations = iter;

    // Linearized parameter covariance for the sigma uncertainty.
    if (n > 4) {
        std::array<std::array<double, 4>, 4> jtj{};
        for (std::size_t i = 0; i < n; ++i) {
            const double u = (x_um[i] - p[2]) / p[3];
            const double e = std::exp(-0.5 * u * u);
            const std::array<double, 4> j = {1.0, e, p[1] * e * u / p[3],
                                             p[1] * e * u * u / p[3]};
            for (int a = 0; a < 4; ++a)
                for (int b = a; b < 4; ++b) jtj[a][b] += j[a] * j[b];
        }
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < a; ++b) jtj[a][b] = jtj[b][a];
        // Invert via solves against the sigma unit vector.
        std::array<double, 4> e3 = {0.0, 0.0, 0.0, 1.0};
        auto a = jtj;
        if (solve4(a, e3)) {
            const double s2 = c_now / static_cast<double>(n - 4);
            if (e3[3] > 0.0) out.sigma_stderr_um = std::sqrt(s2 * e3[3]);
        }
    }
    return out;
}

CoherenceReport coherence_report(const GaussianFitResult& near_fit,
                                 const GaussianFitResult& far_fit, double lambda_um, double f_um,
                                 double magnification) {
    if (!near_fit.converged || !far_fit.converged)
        throw NumericError("coherence_report: input fits must be converged");
    if (near_fit.sigma_um <= 0.0 || far_fit.sigma_um <= 0.0)
        throw NumericError("coherence_report: fitted sigma must be positive");
    CoherenceReport r;
    r.sigma_n_um = near_fit.sigma_um;
    r.sigma_f_um = far_fit.sigma_um;
    r.magnification = magnification;
    r.delta_x_n_um = 2.0 * magnification * near_fit.sigma_um;
    r.delta_x_f_um = 2.0 * far_fit.sigma_um;
    r.delta_q_per_um = 2.0 * std::numbers::pi / (lambda_um * f_um) * r.delta_x_f_um;
    r.product = r.delta_x_n_um * r.delta_q_per_um;
    const double rn = near_fit.sigma_um > 0 ? near_fit.sigma_stderr_um / near_fit.sigma_um : 0.0;
    const double rf = far_fit.sigma_um > 0 ? far_fit.sigma_stderr_um / far_fit.sigma_um : 0.0;
    r.product_stderr = r.product * std::sqrt(rn * rn + rf * rf);
    return r;
}

std::vector<double> section_average(std::span<const double> image, int nx, int ny,
                                    ProfileAxis axis, int rows) {
    if (static_cast<std::size_t>(nx) * ny != image.size())
        throw ConfigError("section_average: image size does not match dimensions");
    const int extent = axis == ProfileAxis::X ? ny : nx;
    if (rows < 1 || rows > extent)
        throw ConfigError("section_average: rows exceeds the image extent");
    const int first = (extent - rows) / 2;

    if (axis == ProfileAxis::X) {
        std::vector<double> out(nx, 0.0);
        for (int iy = first; iy < first + rows; ++iy)
            for (int ix = 0; ix < nx; ++ix)
                out[ix] += image[static_cast<std::size_t>(iy) * nx + ix];
        for (double& v : out) v /= rows;
        return out;
    }
    std::vector<double> out(ny, 0.0);
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = first; ix < first + rows; ++ix)
            out[iy] += image[static_cast<std::size_t>(iy) * nx + ix];
    for (double& v : out) v /= rows;
    return out;
}

std::pair<double, double> predict_speckle_sizes(const SourceSpec& source, double f_um) {
    if (f_um <= 0.0) throw ConfigError("predict_speckle_sizes: focal length must be > 0");
    return {source.lambda_um * source.z_total_um() / source.d0_um,
            source.lambda_um * f_um / source.pinhole_d_um};
}

} // namespace ghostsim
