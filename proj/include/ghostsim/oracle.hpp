#pragma once

#include <span>
#include <vector>

#include "ghostsim/bench.hpp"
#include "ghostsim/optics.hpp"

namespace ghostsim {

/// Inputs of the deterministic two-arm correlation quadrature: the prescribed
/// field correlation matrix Gamma(x', x'') on the source-plane grid, the two
/// dense arm kernels, and the splitter factor |t r|^2.
struct OracleProblem {
    GridSpec grid_in;
    std::vector<cplx> gamma; // count x count, Hermitian PSD, row = first index
    DenseKernel h1;
    DenseKernel h2;
    double bs_factor = 0.25;

    void validate() const;
};

/// Brute-force evaluation of
///   G(x1, x2) = |tr|^2 * | sum_{u,v} conj(h1(x1,u)) h2(x2,v) Gamma(u,v) |^2
/// by dense matrix products; exact up to floating point. Output is
/// h1.out_count x h2.out_count, row-major in x1.
std::vector<double> g_quadrature(const OracleProblem& problem);

/// Dense kernel of arm 1: the 2f transform after the object mask,
/// column-scaled by T.
DenseKernel object_arm_kernel(const ObjectMask& mask, double f_um, double lambda_um);

enum class AnalyticMaskKind { SingleSlit, NeedleInSlit };

/// Closed-form diffraction intensity |T~(q)|^2 at q = 2 pi x / (lambda F):
/// slit of width w gives (w sinc(q w / 2))^2; an opaque needle of diameter d
/// inside the slit subtracts d sinc(q d / 2) from the amplitude. Values are
/// in (um)^2 amplitude-squared units, not normalized.
std::vector<double> analytic_diffraction(AnalyticMaskKind kind, double needle_d_um,
                                         double slit_w_um, double lambda_um, double f_um,
                                         std::span<const double> x_um);

} // namespace ghostsim
