#ifndef NCWICK_FOURIER_HPP
#define NCWICK_FOURIER_HPP

#include <functional>
#include <memory>
#include <vector>

#include "ncwick/groups.hpp"

namespace ncwick {

using QuadPtr = std::shared_ptr<const HaarQuadrature>;
using SlicePtr = std::shared_ptr<const IrrepSlice>;

// Complex samples on the nodes of a Haar quadrature.
struct GridFunction {
    Backend backend = Backend::Torus;
    QuadPtr quad;
    Vec samples;
    // Declared dual band-limit (exact representability cutoff); < 0 when
    // undeclared.  Drives the compact off-grid interpolation rule.
    double band_limit = -1.0;
    // Set by convolve on H1 when needed values fell outside the box.
    bool support_warning = false;
};

// One matrix per dual label of an IrrepSlice.
struct FourierField {
    Backend backend = Backend::Torus;
    SlicePtr slice;
    std::vector<Mat> coeff;
};

// sigma(x_i, pi_j): one dims[j]^2 matrix per (node, label).
struct SymbolField {
    Backend backend = Backend::Torus;
    QuadPtr quad;
    SlicePtr slice;
    // value[node][label]; x_independent stores shares one row.
    std::vector<std::vector<Mat>> value;
    bool x_independent = false;
    bool self_adjoint = false;

    const Mat& at(std::size_t node, std::size_t label) const {
        return value[x_independent ? 0 : node][label];
    }
};

GridFunction make_grid_function(
    const QuadPtr& quad,
    const std::function<cplx(const GroupPoint&)>& f,
    double band_limit = -1.0);

// Constant-in-x symbol from a multiplier; general symbol from a callable.
SymbolField make_symbol(const QuadPtr& quad, const SlicePtr& slice,
                        const std::function<Mat(const GroupPoint&, std::size_t)>& sig);
SymbolField make_multiplier_symbol(const QuadPtr& quad, const SlicePtr& slice,
                                   const std::function<Mat(std::size_t)>& sig);

double l2_norm(const GridFunction& f);
cplx l2_inner(const GridFunction& f, const GridFunction& g);
double l1_norm(const GridFunction& f);

// || . ||_{L^2(G_hat)} over the slice weights.
double l2_norm_dual(const FourierField& F);
// sup over labels of the operator norm (the L^infty(G_hat) norm).
double linf_norm_dual(const FourierField& F);
// L^infty(G x G_hat) norm of a symbol field: max over (node, label) of the
// operator norm; and the L^2(G x G_hat) norm.
double linf_norm(const SymbolField& s);
double l2_norm(const SymbolField& s);

// f_hat(pi) = sum_j w_j f(node_j) pi(node_j)^*.
FourierField fourier(const GridFunction& f, const SlicePtr& slice);

// f(x) = sum_labels weight * tr(pi(x) F(pi)), evaluated on quadrature nodes.
GridFunction inverse_fourier(const FourierField& F, const QuadPtr& quad);

// Pointwise inversion series at an arbitrary point (compact backends: exact
// for band-limited data; heisenberg: the same truncated series).
cplx evaluate_inversion(const FourierField& F, const GroupPoint& p);

// Off-grid evaluation of a grid function: band-limited trigonometric series
// on compacts (uses a cached Fourier side), trilinear interpolation on H1.
class Interpolant {
public:
    Interpolant(const GridFunction& f, const SlicePtr& slice_for_compact);
    cplx operator()(const GroupPoint& p) const;
    bool out_of_box(const GroupPoint& p) const; // H1 only: p outside grid box
private:
    Backend backend_;
    QuadPtr quad_;
    Vec samples_;
    FourierField hat_;
};

// (f * g)(x) = sum_y w_y f(y) g(y^{-1} x) on the nodes of f's quadrature.
GridFunction convolve(const GridFunction& f, const GridFunction& g,
                      const SlicePtr& slice);

// | (f,g)_{L^2(G)} - sum weights tr(f_hat g_hat^*) | / (||f|| ||g|| + tiny)
double plancherel_defect(const GridFunction& f, const GridFunction& g,
                         const SlicePtr& slice);

// Max entrywise |sigma(x,pi) - sigma(x,pi)^*|; the self_adjoint flag claims
// this is <= 1e-12.
double self_adjoint_defect(const SymbolField& s);

// Standard heisenberg probe: separable Gaussian modulated in t so that its
// dual mass concentrates near lambda0, inside the default lambda band.
GridFunction h1_probe(const QuadPtr& quad, double sigma_xy = 0.46,
                      double sigma_t = 1.2, double lambda0 = 0.75);

} // namespace ncwick

#endif
