#ifndef NCWICK_KN_HPP
#define NCWICK_KN_HPP

#include <string>
#include <vector>

#include "ncwick/fourier.hpp"

namespace ncwick {

// Convolution-kernel picture of a symbol: values(i, j) = kappa_{x_i}(y_j),
// both indices over the nodes of the same quadrature (one row when the
// symbol does not depend on x).
struct KernelField {
    Backend backend = Backend::Torus;
    QuadPtr quad;
    SlicePtr slice; // dual band content of every row
    Mat values;     // (x node, y node)
    bool x_independent = false;
    double band_limit = -1.0;
    // heisenberg: largest |kappa_x(y)| over boundary y nodes, a decay
    // check for the box truncation; 0 on compact backends.
    double boundary_max = 0.0;
};

// Fiberwise dual transforms in the second variable.
KernelField symbol_to_kernel(const SymbolField& sigma);
SymbolField kernel_to_symbol(const KernelField& kappa, const SlicePtr& slice);

// Integral over y of sup over x nodes of |kappa_x(y)|; bounds the operator
// norm of the quantization from above (Young).
double a0_norm(const KernelField& kappa);

// Trace form (Op f)(x) = sum_labels weight tr(pi(x) sigma(x,pi) f_hat(pi)).
GridFunction opkn_apply(const SymbolField& sigma, const GridFunction& f);

// Kernel form (f * kappa_x)(x), the defining formula.  Each kernel value at
// a warped point y^{-1} x is evaluated through the dual series, so no
// interpolation enters; the only error left is the y-quadrature.  `at`
// restricts the computation to a subset of x nodes (all nodes when empty);
// the result has one value per requested node.
Vec opkn_apply_kernel(const SymbolField& sigma, const GridFunction& f,
                      const std::vector<std::size_t>& at = {});

// Orthonormal test basis for operator matrices.  Two kinds:
//   "peter-weyl": sqrt(d) pi_{mn} coefficient functions over a slice
//                 (compact backends; orthonormal when the quadrature is
//                 exact for coefficient products, which default_quadrature
//                 guarantees up to its cutoff);
//   "grid":       weighted node indicators 1_{x_i}/sqrt(w_i), orthonormal
//                 by construction, stored implicitly.
struct OperatorBasis {
    Backend backend = Backend::Torus;
    QuadPtr quad;
    std::string kind;
    Mat samples; // (node, basis function); empty for the grid kind

    std::size_t size() const {
        return kind == "grid" ? quad->size()
                              : static_cast<std::size_t>(samples.cols());
    }
};

OperatorBasis peter_weyl_basis(const QuadPtr& quad, const SlicePtr& slice);
OperatorBasis grid_basis(const QuadPtr& quad);

struct OperatorMatrix {
    Backend backend = Backend::Torus;
    Mat m;
    bool symmetrized = false;
};

// M[i][j] = (Op(sigma) b_j, b_i) over the basis; symmetrize replaces M by
// its Hermitian part, the matrix of the quadratic form Re(Op f, f).
OperatorMatrix assemble_matrix(const SymbolField& sigma,
                               const OperatorBasis& basis,
                               bool symmetrize = false);

// Largest singular value (Hermitian part: largest |eigenvalue|).
double op_norm(const OperatorMatrix& M);
double hs_norm(const OperatorMatrix& M);

} // namespace ncwick

#endif
