#ifndef NCWICK_CALCULUS_HPP
#define NCWICK_CALCULUS_HPP

#include <string>
#include <vector>

#include "ncwick/fourier.hpp"
#include "ncwick/kn.hpp"

namespace ncwick {

// Heat kernel on su2 at time t > 0:
//   p_t = sum_l (2l+1) e^{-t l(l+1)} chi_l   (half-integer steps),
// truncated at the smallest cutoff whose dropped sup-norm mass
// sum_{l > cutoff} (2l+1)^2 e^{-t l(l+1)} falls below HEAT_TAIL_TARGET.
struct HeatKernel {
    double t = 0.0;
    double cutoff = 0.0;        // largest label kept
    double tail_bound = 0.0;    // sup-norm bound on the dropped terms
    std::vector<double> labels; // 0, 1/2, ..., cutoff
    std::vector<double> coeff;  // e^{-t l(l+1)}
    GridFunction samples;
};

constexpr double HEAT_TAIL_TARGET = 1e-8;

// Throws InvalidInputError when the required cutoff exceeds the quadrature's
// exact dual band (the sampled series would alias); use a finer quadrature
// or a larger t.
HeatKernel heat_kernel(const QuadPtr& quad, double t);

// The truncated series at an arbitrary point (p_t is real and central).
double heat_kernel_value(const HeatKernel& p, const GroupPoint& g);

// Unit-mass mollifier families, all normalized against the quadrature:
//   "su2-heat":    p_t, parameter t = heat time;
//   "torus-fejer": Fejer kernel of band K = ceil(1/t);
//   "h1-dilated":  t^{-Q} phi(delta_{1/t} g) for a fixed unit Gaussian phi.
struct ApproxIdentity {
    std::string family;
    double t = 0.0;
    GridFunction samples;
};
ApproxIdentity approx_identity(const QuadPtr& quad, const std::string& family,
                               double t);

// Difference operator acting on the kernel side: the right-convolution
// kernel of Delta_q sigma is q(y) kappa_x(y), transformed back fiberwise.
SymbolField delta_q(const GridFunction& q, const SymbolField& sigma);

// (sigma * phi)(x, pi) = sum_z w_z sigma(z, pi) phi(z^{-1} x): x-wise group
// convolution of each matrix entry.  Compact backends run through the
// quadrature's exact dual band (entries are projected onto it); heisenberg
// uses the direct sum with phi interpolated off-grid.
SymbolField symbol_convolve(const SymbolField& sigma, const GridFunction& phi);

// Spectral Sobolev norm,
//   ||f||_{H^s}^2 = sum_labels weight * || (1 + lambda)^{s/2} f_hat ||_HS^2,
// with lambda the Laplace eigenvalue (torus 4 pi^2 k^2, su2 l(l+1)) and, on
// heisenberg, the truncated sub-Laplacian image 2 pi |lambda| (2m+1) acting
// on the row index of f_hat (the left-action side of the transform).
double sobolev_norm(const GridFunction& f, double s, const SlicePtr& slice);

} // namespace ncwick

#endif
