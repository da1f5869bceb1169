#ifndef NCWICK_EUCLID_HPP
#define NCWICK_EUCLID_HPP

#include <functional>

#include "ncwick/types.hpp"

namespace ncwick {

// Uniform periodic lattice on [-R, R) with its dual grid of n frequencies
// at spacing 1/(2R).  The node weight is the cell length and the dual
// weight the frequency spacing, which makes the discrete transform pair
// below exactly unitary: Parseval holds to rounding on every grid vector.
struct LineGrid {
    double radius = 0.0;
    int n = 0;
    // When set, profiles sampled onto the grid are treated as 2R-periodic
    // and windows sum their wrapped images; the lattice operations below
    // are periodic either way, so the flag only changes how off-lattice
    // profiles are brought onto it.
    bool periodized = true;
    RVec nodes;   // x_j = -R + j h
    RVec freqs;   // xi_k = k / (2R), k = -n/2 .. n/2 - 1
    double dx = 0.0;
    double dxi = 0.0;
    Mat phase;    // phase(k, j) = exp(-2 pi i x_j xi_k)

    // node index of the displacement (j - i) h wrapped into [-R, R)
    std::size_t wrap(std::ptrdiff_t j, std::ptrdiff_t i) const;
};

// Defaults sized so that unit-scale Gaussians vanish at the boundary to
// better than 1e-10 and the dual grid reaches |xi| = 8.
LineGrid line_grid(double radius = 8.0, int n = 256, bool periodized = true);

// hat f(xi_k) = sum_j h f(x_j) e^{-2 pi i x_j xi_k}, and its inverse.
Vec line_fourier(const LineGrid& g, const Vec& f);
Vec line_inverse_fourier(const LineGrid& g, const Vec& fhat);

// Samples of sigma(x_j, xi_k) as an n x n matrix, rows indexed by x.
Mat make_line_symbol(const LineGrid& g,
                     const std::function<cplx(double, double)>& sig);

// Frequency-wise quantization: (Op f)(x) = sum_k dxi e^{2 pi i x xi_k}
// sigma(x, xi_k) hat f(xi_k).
Vec euclid_opkn(const LineGrid& g, const Mat& sigma, const Vec& f);

// Dense matrix of the same operator in the normalized spike basis.
Mat euclid_opkn_matrix(const LineGrid& g, const Mat& sigma);

// Unit-mass Gaussian profile pi^{-1/4} e^{-x^2/2} at scale t, periodized
// over the box and renormalized to unit discrete size.  Throws when the
// wrapped tails exceed 1e-10 relative to the peak.
Vec line_window(const LineGrid& g, double t);

// Windowed analysis tau(x_i, xi_k) = sum_j h f(x_j) a(x_j - x_i)
// e^{-2 pi i x_j xi_k}; on this lattice it is an exact isometry for every
// grid vector, because translation is an index shift and the transform is
// unitary.  The adjoint inverts it exactly.
Mat euclid_bargmann(const LineGrid& g, const Vec& a, const Vec& f);
Vec euclid_bargmann_adjoint(const LineGrid& g, const Vec& a, const Mat& tau);
double phase_space_norm(const LineGrid& g, const Mat& tau);

// Windowed quantization: analysis, pointwise multiplication by sigma,
// synthesis.
Vec euclid_opwick(const LineGrid& g, const Vec& a, const Mat& sigma,
                  const Vec& f);
Mat euclid_wick_matrix(const LineGrid& g, const Vec& a, const Mat& sigma);

// Convolution-kernel route to the same operator: rows are the kernels
// kappa^w_x(y_m) = sum_l h a(x_l - y_m) conj(a(x_l)) kappa_{x - x_l}(y_m),
// with kappa the inverse transform of sigma in its frequency slot, and
// euclid_wick_symbol their forward transforms, so that the frequency-wise
// quantization of the result reproduces euclid_opwick on the lattice.
Mat euclid_wick_kernel(const LineGrid& g, const Vec& a, const Mat& sigma);
Mat euclid_wick_symbol(const LineGrid& g, const Vec& a, const Mat& sigma);

// Difference operator on the symbol: row x of the result is the forward
// transform of q times the convolution kernel of row x.
Mat euclid_delta_q(const LineGrid& g, const Vec& q, const Mat& sigma);

// Gram matrix of the dual-weighted norm with multiplier
// (1 + 4 pi^2 xi^2)^{-1/2} on the squares, used as the lower-order side
// of the bound below.
Mat dual_weight_gram(const LineGrid& g, double order = -0.5);

// Lower-bound certificate for a positive symbol, following the chain
// direct = mollified-direct + (windowed - mollified-direct) + windowed:
// the windowed part dominates c_min exactly, the mollification defect is
// charged to the identity at its operator norm, and the middle bracket is
// charged to the dual-weighted norm at its largest generalized eigenvalue.
// The resulting guarantee on every grid vector f reads
//   Re (direct f, f) >= c_eff ||f||^2 - C_eff ||f||_{-1/2}^2.
struct EuclidGardingReport {
    double c_min = 0.0;      // grid minimum of Re sigma
    double window_t = 0.0;   // smoothing scale actually used
    double c_eff = 0.0;      // c_min minus the mollification defect norm
    double C_eff = 0.0;      // dual-weighted charge on the bracket
    double lambda_min = 0.0; // spectrum floor of the symmetrized operator
};
EuclidGardingReport euclid_garding_check(const LineGrid& g, const Mat& sigma,
                                         double window_t = 0.5);

} // namespace ncwick

#endif
