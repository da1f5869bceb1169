#ifndef NCWICK_WICK_HPP
#define NCWICK_WICK_HPP

#include <cstddef>
#include <functional>

#include "ncwick/kn.hpp"

namespace ncwick {

// Analysis window: a unit-L2-norm function with node samples plus a
// pointwise evaluator, because the transforms below need window values at
// products of nodes, which are off the node set on su2.  Normalization is
// enforced at construction against the discrete L2 norm, so the samples and
// the evaluator always describe the same unit vector.
struct Window {
    GridFunction a;                              // normalized node samples
    std::function<cplx(const GroupPoint&)> eval; // same function, any point
    bool even = false;                           // a(inv(g)) == a(g) sampled
    bool real = false;                           // imag part zero sampled
    // Dual cutoff of the window when it has one (constant: 0, heat window:
    // its truncation cutoff, periodized torus Gaussian: where coefficients
    // drop below 1e-14); -1 when unbounded.  Tests size slices with it:
    // transform identities are discrete-exact only when window band plus
    // field band fit inside the slice with quadrature headroom.
    double band_limit = -1.0;
};

// Normalizes `raw` in the discrete L2 norm and detects the evenness and
// realness flags by sampling (defect threshold 1e-10 on both).
Window make_window(const QuadPtr& quad,
                   const std::function<cplx(const GroupPoint&)>& raw,
                   double band_limit = -1.0);

// Constant window (the normalized constant function; exactly 1 on the
// compact backends, where the total mass is 1).
Window constant_window(const QuadPtr& quad);

// Torus: periodized Gaussian of the given width; heisenberg: centered
// Gaussian in the exponential coordinates (even and real by construction).
// su2 rejects this family; use heat_window there.
Window gaussian_window(const QuadPtr& quad, double width);

// su2: the heat kernel at time t, truncated by its own tail rule and then
// normalized.  Band-limited at the truncation cutoff, strictly positive,
// even (it is a class function invariant under inversion) and real.
Window heat_window(const QuadPtr& quad, double t);

// su2: pointwise square root of the truncated heat kernel, normalized.
// Positive and even but not band-limited (band_limit stays -1), so the
// transform identities hold only up to its spectral leakage; construction
// throws when the truncated kernel is not safely positive at the nodes.
Window sqrt_heat_window(const QuadPtr& quad, double t);

// The analysis transform of f against a window: one matrix per (node,
// label), value[i][j] = F(f a(x_i^{-1} .))(pi_j), the dual transform of the
// windowed copy of f centered at node i.
struct BargmannField {
    Backend backend = Backend::Torus;
    QuadPtr quad;
    SlicePtr slice;
    std::vector<std::vector<Mat>> value; // value[node][label]
};

// L2 norm over the product of the quadrature and the slice weights; equals
// the L2 norm of the analyzed function when the bands fit (isometry).
double l2_norm(const BargmannField& tau);

// Default cap for dense (node x packed-slice) layouts, in bytes.
inline constexpr std::size_t WICK_FIELD_CAP = std::size_t{2} << 30;

BargmannField bargmann(const Window& w, const GridFunction& f,
                       const SlicePtr& slice,
                       std::size_t cap_bytes = WICK_FIELD_CAP);

// Adjoint of the analysis transform under the discrete inner products:
// out(y) = sum_x w_x conj(a(x^{-1} y)) sum_j weight_j tr(tau(x, j) pi_j(y)).
// The adjointness (bargmann(f), tau) == (f, bargmann_adjoint(tau)) is exact
// algebra at any truncation; the identity bargmann_adjoint(bargmann(f)) == f
// additionally needs band headroom.
GridFunction bargmann_adjoint(const Window& w, const BargmannField& tau);

// The window quantization: analysis, pointwise left multiplication by the
// symbol on every (node, label), synthesis.  Contractive from the symbol's
// sup operator norm, positivity-preserving for pointwise-psd symbols, and
// equal to the trace-form quantization of the averaged symbol produced by
// wick_kernel.  The symbol's slice doubles as the analysis band.
GridFunction opwick_apply(const Window& w, const SymbolField& sigma,
                          const GridFunction& f,
                          std::size_t cap_bytes = WICK_FIELD_CAP);

// Window-averaged convolution kernel of sigma:
//   kappa^w_x(v) = sum_z mu_z a(z v^{-1}) conj(a(z)) kappa_{x z^{-1}}(v),
// with kappa the kernel of sigma.  Quantizing the result with the trace
// form reproduces opwick_apply.  Evaluating kappa at the off-node points
// x z^{-1} needs the symbol's dependence on x to be reconstructible, so
// x-dependent symbols require `x_band`, a slice carrying their x-content
// (compact backends only); x-independent symbols pass nullptr.  The output
// kernel's band in v grows by the window band (band_limit reflects that
// when both bands are known).
KernelField wick_kernel(const Window& w, const SymbolField& sigma,
                        const SlicePtr& x_band = nullptr);

// Frame coefficients of f: the inner products of f against the wave-packet
// family g_{x,pi,k,l}(y) = conj(a(x^{-1} y)) pi(y)_{lk} in the standard
// coordinate basis of every label, stored as coef[node][label](k, l).
// Computed by direct summation, independently of the packed transforms.
struct FrameTable {
    Backend backend = Backend::Torus;
    QuadPtr quad;
    SlicePtr slice;
    std::vector<std::vector<Mat>> coef; // coef[node][label](k, l)
};

FrameTable frame_coefficients(const Window& w, const GridFunction& f,
                              const SlicePtr& slice,
                              std::size_t cap_bytes = WICK_FIELD_CAP);

// sum_x w_x sum_j weight_j sum_{k,l} |coef(k, l)|^2; equals ||f||^2 when
// the bands fit (the decomposition sum rule).
double frame_sum(const FrameTable& t);

// Matrix of the window quantization over a test basis, M[i][j] =
// (op b_j, b_i) under the weighted discrete inner product; same basis
// kinds and conventions as the trace-form assembly.
OperatorMatrix assemble_wick_matrix(const Window& w, const SymbolField& sigma,
                                    const OperatorBasis& basis,
                                    bool symmetrize = false,
                                    std::size_t cap_bytes = WICK_FIELD_CAP);

} // namespace ncwick

#endif
