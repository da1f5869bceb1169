#ifndef NCWICK_SEMICLASSICAL_HPP
#define NCWICK_SEMICLASSICAL_HPP

#include <array>
#include <cstddef>
#include <functional>
#include <vector>

#include "ncwick/wick.hpp"

// Small-parameter quantization on the heisenberg box.  The scaled operator
// family acts through kernels kappa^(eps)_x(y) = eps^{-Q} kappa_x(delta_eps^{-1} y)
// with Q = 4, its window-averaged counterpart composes the analysis window at
// scale sqrt(eps) with the kernel, and the sweep measures how fast the two
// quantizations approach each other as eps shrinks.

namespace ncwick {

// One separated term of a smooth kernel field kappa_x(y) = phi(x) psi(y).
// phi is a real bump supported strictly inside the box; an empty callable
// means the constant 1 and marks the term independent of x.  psi is a
// Schwartz-type profile evaluated anywhere in the box; its node samples must
// fall below 1e-8 of their peak on the boundary planes, so that everything
// the box cannot see is negligible.
struct A0Term {
    std::function<double(const GroupPoint&)> phi;
    std::function<cplx(const GroupPoint&)> psi;
};

// A symbol given through its convolution-kernel factorization, kept in
// callable form because the scaled operators need kernel values at points
// that no fixed grid contains (dilated arguments, group shifts by window
// nodes).  positivity_certified is set only by the g * g^* builder below.
struct A0Symbol {
    QuadPtr quad;
    std::vector<A0Term> terms;
    bool x_independent = false;
    bool positivity_certified = false;

    cplx kernel(const GroupPoint& x, const GroupPoint& y) const;
    double phi_at(std::size_t term, const GroupPoint& x) const;
};

// Validates the support and decay rules above and fills the flags.
A0Symbol make_a0_symbol(const QuadPtr& quad, std::vector<A0Term> terms);

// Positivity-certified symbol kappa_x = phi(x) (g * g^*)(y) with
// g^*(y) = conj(g(inv y)) and phi >= 0: the dual transform of g * g^* is
// ghat^* ghat, positive semidefinite in every representation, and a
// nonnegative bump in x keeps the product psd.  The correlation integral is
// evaluated by quadrature over conv_quad (the symbol grid when null), so
// psi stays evaluable at arbitrary points.  Pass an empty phi for the
// x-independent version.
A0Symbol a0_positive_symbol(const QuadPtr& quad,
                            const std::function<double(const GroupPoint&)>& phi,
                            const std::function<cplx(const GroupPoint&)>& g,
                            const QuadPtr& conv_quad = nullptr);

// Closed form of the correlation g * g^* for the centered chart Gaussian
// g(v) = exp(-|v|^2 / (2 s^2)): completing the square through the group
// twist gives
//   psi(x,y,t) = pi^{3/2} s^3 (1 + r^2/16)^{-1/2}
//                exp(-r^2/(4 s^2) - 4 t^2 / (s^2 (16 + r^2))),
// with r^2 = x^2 + y^2.  As a two-point kernel psi(u^{-1} v) this is the
// Gram matrix of left translates of g, so any node restriction of it is
// positive semidefinite exactly; it is also the continuum limit of the
// quadrature builder above, which tests check against it.  O(1) per
// evaluation, which keeps the matrix assemblies cheap.
std::function<cplx(const GroupPoint&)> gaussian_autocorrelation(double s);

// Node samples of the kernel as a field on (x node, y node); x-independent
// symbols store one row.
KernelField a0_sample_kernel(const A0Symbol& sigma);

// Per-axis root-mean-square widths of the pooled row envelope of a kernel
// field, the scale the resolution guard below compares against the spacing.
std::array<double, 3> kernel_axis_widths(const KernelField& kappa);

// kappa^(eps)_x(y) = eps^{-4} kappa_x(delta_{1/eps} y) resampled on the same
// grid through trilinear interpolation (exact at nodes, zero outside the
// box).  Requires 0 < eps <= 1, a kernel whose boundary samples are below
// 1e-5 of the peak (otherwise mass the box never saw would be pulled
// inside), and enough resolution: each axis width of the kernel, contracted
// by eps (eps^2 on the central axis), must stay above 0.9 grid spacings,
// else the shrunken profile falls between the nodes and the error names the
// smallest epsilon the grid can hold.
KernelField rescale_kernel(const KernelField& kappa, double eps);

// The scaled quantization applied in the lab frame,
//   out(x) = sum_y mu_y f(y) eps^{-4} kappa_x(delta_{1/eps}(y^{-1} x)),
// evaluated from the symbol's callables.  The same resolution guard as
// rescale_kernel applies (the quadrature cannot see a kernel narrower than
// the grid).  A non-empty `at` restricts evaluation to those x nodes,
// leaving zeros elsewhere.
GridFunction op_eps_apply(const A0Symbol& sigma, double eps,
                          const GridFunction& f,
                          const std::vector<std::size_t>& at = {});

// Matrix of the scaled quantization over the basis, assembled in the zoomed
// frame: conjugating by the unitary L2 dilation (U_eps f)(y) =
// eps^{-2} f(delta_{1/eps} y) turns Op_eps into the plain kernel operator
//   (T g)(u) = sum_v mu_v g(v) kappa_{delta_eps u}(v^{-1} u),
// which has the same spectrum and norm but keeps the kernel at unit scale,
// so one fixed grid resolves every eps; equivalently, the lab-frame sample
// set contracts with eps inside the fixed box at constant storage.  At
// eps = 1 this is the ordinary grid matrix of the quantization.  The basis
// may live on a coarser grid than the symbol (same box).
OperatorMatrix op_eps_matrix(const A0Symbol& sigma, double eps,
                             const OperatorBasis& basis,
                             bool symmetrize = false);

// The window-averaged kernel at scale eps on (x node, w node),
//   kappa^{eps,W}_x(w) = sum_z mu_z a(z delta_{sqrt eps} w^{-1}) conj(a(z))
//                        kappa_{x delta_{sqrt eps} z^{-1}}(w),
// the convolution kernel of the averaged quantization: quantizing it with
// op_eps reproduces the window average of the symbol.  The z quadrature
// runs over z_quad (the symbol grid when null; the window must be
// normalized on the symbol grid, which the sum reduces to exactly when the
// shifts vanish).  x-independent symbols give an x-independent result.
KernelField wick_eps_kernel(const Window& w, const A0Symbol& sigma,
                            double eps, const QuadPtr& z_quad = nullptr);

// Lab-frame application of the averaged quantization through the composed
// kernel above; `at` as in op_eps_apply.  Same resolution guard.
GridFunction wick_eps_apply(const Window& w, const A0Symbol& sigma,
                            double eps, const GridFunction& f,
                            const std::vector<std::size_t>& at = {});

// Matrix of the averaged quantization over the basis, in the same zoomed
// frame as op_eps_matrix.  The composed kernel is evaluated directly at the
// required off-grid points through the z quadrature of the symbol grid, so
// a coarse basis with a fine symbol grid keeps the cost at
// basis^2 x symbol nodes.
OperatorMatrix wick_eps_matrix(const Window& w, const A0Symbol& sigma,
                               double eps, const OperatorBasis& basis,
                               bool symmetrize = false);

// The three kernel-defect quadratures behind the first-order comparison:
//   total = integral over w of sup_x |kappa_x(w) - kappa^{eps,W}_x(w)|,
// and the exact algebraic split total-integrand = transport + correlation:
//   i1: the kernel transported along the window shifts,
//       sum_z mu_z |a(z)|^2 (kappa_x(w) - kappa_{x delta_{sqrt eps} z^{-1}}(w)),
//   i2: the window correlated against itself,
//       sum_z mu_z (a(z) - a(z delta_{sqrt eps} w^{-1})) conj(a(z))
//              kappa_{x delta_{sqrt eps} z^{-1}}(w).
// total <= i1 + i2 holds exactly at the discrete level (triangle inequality
// on a shared quadrature).  For even real windows both pieces lose their
// half-order term (odd first moments of |a|^2 and the real first moment of
// a X_j a vanish), so each decays at full first order in eps.  sup_x runs
// over the nodes of x_quad (the symbol grid when null).
struct A0Defect {
    double total = 0;
    double i1 = 0;
    double i2 = 0;
};
A0Defect a0_defect_terms(const Window& w, const A0Symbol& sigma, double eps,
                         const QuadPtr& x_quad = nullptr);

// One scale point of a sweep.  wick_lambda_min is the most negative
// eigenvalue of the Hermitian part of the averaged matrix; the averaged
// operator is positive semidefinite in exact arithmetic, so its measured
// negativity estimates the quadrature noise floor for the lower-bound
// metric at the same scale.
struct EpsilonRecord {
    double eps = 0;
    double lambda_min = 0;       // smallest eigenvalue of Re(op matrix)
    double garding_metric = 0;   // max(0, -lambda_min)
    double comparison_norm = 0;  // op norm of (op matrix - averaged matrix)
    double a0_defect = 0;
    double i1 = 0;
    double i2 = 0;
    double wick_lambda_min = 0;
};

// Least-squares fit of log(metric) against log(eps).  Scale points whose
// metric sits below 10x the estimated noise floor are excluded; a fit where
// every metric is below 1e-12 is reported as vacuous (slope undefined, the
// bound holds with nothing to measure).
struct SlopeFit {
    double slope = 0;
    double intercept = 0;
    double residual = 0;  // rms of log residuals
    int points = 0;
    bool vacuous = false;
    std::vector<int> used;  // record indices that entered the fit
};

struct EpsilonSweep {
    std::vector<EpsilonRecord> records;  // descending eps
    // Noise floors: the lower-bound floor comes from the measured
    // negativity of the averaged matrices across the sweep; the defect
    // floors from recomputing the smallest-eps metrics on a refined z
    // quadrature (the difference estimates the quadrature error).
    double garding_floor = 0;
    double comparison_floor = 0;
    double a0_floor = 0;
    double i1_floor = 0;
    double i2_floor = 0;
    SlopeFit garding;
    SlopeFit comparison;
    SlopeFit a0;
    SlopeFit i1;
    SlopeFit i2;
};

// Scales 2^-k, k = 0..6, descending.
std::vector<double> default_eps_list();

// Runs the per-scale records over the list (at least 4 scales), fits the
// slopes, and fills the floors.  The basis carries the matrix nodes (a
// coarser grid than the symbol keeps the averaged-matrix cost down); the
// window must live on the symbol grid.  Scale points are independent and
// the records are merged in list order.
EpsilonSweep sweep(const Window& w, const A0Symbol& sigma,
                   const OperatorBasis& basis,
                   std::vector<double> eps_list = {});

// Slope fit on its own, for reuse and direct testing.
SlopeFit fit_log_slope(const std::vector<double>& eps,
                       const std::vector<double>& metric, double floor);

// Deterministic power-iteration estimate of the largest singular value
// (lower bound, tight at these sizes), for matrices too large for a dense
// SVD.
double spectral_norm_estimate(const Mat& m, int iters = 200);

} // namespace ncwick

#endif
