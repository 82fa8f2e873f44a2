#include "ghostsim/oracle.hpp"

#include <cmath>
#include <numbers>

namespace ghostsim {

void OracleProblem::validate() const {
    const std::size_t n = grid_in.count();
    if (n > 4096) throw ConfigError("OracleProblem: dense quadrature is limited to 64x64 grids");
    if (gamma.size() != n * n) throw ConfigError("OracleProblem: gamma must be count x count");
    if (h1.in_count != n || h2.in_count != n)
        throw ConfigError("OracleProblem: kernel input dimensions do not match the grid");
    if (!(bs_factor >= 0.0)) throw ConfigError("OracleProblem: bs_factor must be >= 0");
    double herm = 0.0, scale = 0.0;
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = u; v < n; ++v) {
            herm = std::max(herm, std::abs(gamma[u * n + v] - std::conj(gamma[v * n + u])));
            scale = std::max(scale, std::abs(gamma[u * n + v]));
        }
    if (herm > 1e-9 * std::max(scale, 1e-300))
        throw ConfigError("OracleProblem: gamma is not Hermitian");
}

std::vector<double> g_quadrature(const OracleProblem& problem) {
    problem.validate();
    const std::size_t n = problem.grid_in.count();
    const std::size_t n1 = problem.h1.out_count;
    const std::size_t n2 = problem.h2.out_count;

    // A = conj(H1) * Gamma, then M = A * H2^T, G = |tr|^2 |M|^2.
    std::vector<cplx> a(n1 * n, cplx(0, 0));
    for (std::size_t r = 0; r < n1; ++r) {
        const cplx* h1row = problem.h1.h.data() + r * n;
        cplx* arow = a.data() + r * n;
        for (std::size_t u = 0; u < n; ++u) {
            const cplx c = std::conj(h1row[u]);
            if (c == cplx(0.0, 0.0)) continue;
            const cplx* grow = problem.gamma.data() + u * n;
            for (std::size_t v = 0; v < n; ++v) arow[v] += c * grow[v];
        }
    }

    std::vector<double> g(n1 * n2, 0.0);
    for (std::size_t r = 0; r < n1; ++r) {
        const cplx* arow = a.data() + r * n;
        for (std::size_t s = 0; s < n2; ++s) {
            const cplx* h2row = problem.h2.h.data() + s * n;
            cplx m(0.0, 0.0);
            for (std::size_t v = 0; v < n; ++v) m += arow[v] * h2row[v];
            g[r * n2 + s] = problem.bs_factor * std::norm(m);
        }
    }
    return g;
}

DenseKernel object_arm_kernel(const ObjectMask& mask, double f_um, double lambda_um) {
    OpticalSystem sys;
    sys.lambda_um = lambda_um;
    sys.elements.push_back(TwoFSystem{f_um});
    DenseKernel k = impulse_response(sys, mask.grid);
    for (std::size_t r = 0; r < k.out_count; ++r)
        for (std::size_t c = 0; c < k.in_count; ++c) k.at(r, c) *= mask.transmission[c];
    return k;
}

std::vector<double> analytic_diffraction(AnalyticMaskKind kind, double needle_d_um,
                                         double slit_w_um, double lambda_um, double f_um,
                                         std::span<const double> x_um) {
    if (slit_w_um <= 0.0) throw ConfigError("analytic_diffraction: slit width must be > 0");
    if (kind == AnalyticMaskKind::SingleSlit) needle_d_um = 0.0;
    if (needle_d_um < 0.0 || needle_d_um >= slit_w_um)
        throw ConfigError("analytic_diffraction: need 0 <= needle < slit width");

    auto sinc = [](double u) { return u == 0.0 ? 1.0 : std::sin(u) / u; };
    std::vector<double> out(x_um.size());
    for (std::size_t i = 0; i < x_um.size(); ++i) {
        const double q = 2.0 * std::numbers::pi * x_um[i] / (lambda_um * f_um);
        const double amp =
            slit_w_um * sinc(0.5 * q * slit_w_um) - needle_d_um * sinc(0.5 * q * needle_d_um);
        out[i] = amp * amp;
    }
    return out;
}

} // namespace ghostsim
