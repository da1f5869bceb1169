#ifndef NCWICK_GROUPS_HPP
#define NCWICK_GROUPS_HPP

#include <memory>
#include <vector>

#include "ncwick/types.hpp"

namespace ncwick {

// ---------------------------------------------------------------------------
// Group law
// ---------------------------------------------------------------------------

GroupPoint identity(Backend b);
GroupPoint mul(const GroupPoint& p, const GroupPoint& q);
GroupPoint inv(const GroupPoint& p);

// Canonical chart representative (torus mod 1, su2 angle ranges, heisenberg
// unchanged).  mul/inv already return canonical coordinates.
GroupPoint canonical(const GroupPoint& p);

// Distance that vanishes exactly when p and q are the same group element
// (torus: circle distance; su2: Frobenius distance of defining matrices,
// immune to Euler-chart cuts; heisenberg: coordinate l1).  Used by tests for
// node matching; not a Riemannian metric.
double coord_dist(const GroupPoint& p, const GroupPoint& q);

// Distance to the identity element in the metric whose Laplacian matches the
// spectral data of the backend (torus: arc length; su2: geodesic distance on
// the radius-2 sphere S^3, so that -Delta has eigenvalue l(l+1) on D^l;
// heisenberg: the homogeneous quasi-norm).  Feeds Taylor-remainder majorants.
double dist_to_identity(const GroupPoint& p);

// ---------------------------------------------------------------------------
// Heisenberg dilations
// ---------------------------------------------------------------------------

// delta_r(x,y,t) = (r x, r y, r^2 t); weights (1,1,2), Q = 4.
constexpr double H1_HOMOGENEOUS_DIM = 4.0;

GroupPoint dilate(const GroupPoint& p, double r);
double quasi_norm(const GroupPoint& p); // ((x^2+y^2)^2 + t^2)^(1/4)

// ---------------------------------------------------------------------------
// Haar quadrature
// ---------------------------------------------------------------------------

struct HaarQuadrature {
    Backend backend = Backend::Torus;
    std::vector<GroupPoint> nodes;
    std::vector<double> weights;
    // Dual cutoff up to which single matrix coefficients integrate exactly
    // (torus: |k|; su2: l, half-integer steps).  0 for heisenberg (Riemann
    // sums on a box, no exactness degree).
    double exactness_degree = 0.0;
    double total_mass = 1.0;

    // torus layout
    int n_points = 0;

    // su2 layout (tensor grid, uniform alpha/gamma, Gauss-Legendre in cos beta)
    int n_alpha = 0, n_beta = 0, n_gamma = 0;
    std::vector<double> beta_nodes, beta_weights;

    // heisenberg layout (uniform grid on [-R,R]^3)
    int pts_per_axis = 0;
    double box_radius = 0.0;
    double spacing = 0.0;

    std::size_t size() const { return nodes.size(); }
    // heisenberg flat index of grid point (ix, iy, it)
    std::size_t h1_index(int ix, int iy, int it) const;
};

// torus: n uniform nodes (trapezoid); exact for |k| <= n-1.
HaarQuadrature torus_quadrature(int n);
// su2: smallest tensor grid integrating all D^l coefficients, l <= degree.
HaarQuadrature su2_quadrature(double degree);
// heisenberg: uniform grid on [-R,R]^3, cell-volume weights.
HaarQuadrature h1_quadrature(double box_radius, int pts_per_axis);

// Convenience: the default quadrature paired with a dual cutoff.
HaarQuadrature default_quadrature(Backend b, double dual_cutoff);

// ---------------------------------------------------------------------------
// Truncated unitary dual
// ---------------------------------------------------------------------------

struct IrrepSlice {
    Backend backend = Backend::Torus;
    // torus: integers k; su2: half-integers l; heisenberg: lambda values.
    std::vector<double> labels;
    std::vector<int> dims;
    // Plancherel weights: torus 1, su2 d_pi, heisenberg c_P*|lambda|*dlambda.
    std::vector<double> weights;

    // heisenberg parameters
    int hermite_N = 0;
    double lambda_min = 0.0, lambda_max = 0.0, dlambda = 0.0;
    double c_plancherel = 1.0;

    std::size_t size() const { return labels.size(); }
    int label_index(double label) const; // -1 if absent

    // The unitary matrix pi_label(p), dims[i] x dims[i].
    Mat evaluate(std::size_t label_index, const GroupPoint& p) const;
    // All labels at once (shares the per-point setup; main Fourier kernel).
    std::vector<Mat> evaluate_all(const GroupPoint& p) const;

    double sum_dim_sq() const;
};

IrrepSlice torus_slice(int K);
IrrepSlice su2_slice(double L); // labels 0, 1/2, ..., L
// Symmetric midpoint lambda-grid on +-[lambda_min, lambda_max], n_per_side
// cells per side, Hermite truncation N.  c_P defaults to 1 until calibrated.
IrrepSlice h1_slice(double lambda_min, double lambda_max, int n_per_side, int N,
                    double c_plancherel = 1.0);

// ---------------------------------------------------------------------------
// SU(2) special functions
// ---------------------------------------------------------------------------

// Wigner d-matrices d^l(beta) for l = 0, 1/2, ..., L (Varshalovich
// convention), computed by the standard three-term recursion in l.
// Element (m, n) of stack[i] is d^{l_i}_{m n} with m = l_i - row.
std::vector<RMat> wigner_d_stack(double L, double beta);

// Clebsch-Gordan coefficient <j1 m1; j2 m2 | J M> (Condon-Shortley phases).
double clebsch_gordan(double j1, double m1, double j2, double m2, double J,
                      double M);

// Haar integral of D^{lc}_{mc nc} * D^{lj}_{mj nj} * conj(D^{li}_{mi ni}).
double su2_triple_integral(double lc, double mc, double nc, double lj,
                           double mj, double nj, double li, double mi,
                           double ni);

// Character chi_l(p) = sin((2l+1)phi)/sin(phi), phi the rotation half-angle.
double su2_character(double l, const GroupPoint& p);
// Rotation half-angle phi in [0, pi]: eigenvalues of the 2x2 matrix are
// e^{+-i phi}.
double su2_half_angle(const GroupPoint& p);

// Euler angles <-> 2x2 SU(2) matrix (the l = 1/2 representation).
Mat su2_matrix(const GroupPoint& p);
GroupPoint su2_from_matrix(const Mat& u);

// ---------------------------------------------------------------------------
// Heisenberg Schroedinger model
// ---------------------------------------------------------------------------

// Matrix of pi_lambda(x,y,t) on the first N Hermite functions of the
// sub-Laplacian oscillator (length scale (2 pi |lambda|)^(-1/2)):
//   (pi_lambda(x,y,t) h)(u) = e^{2 pi i lambda (t + y u + x y / 2)} h(u + x).
// Closed form: e^{2 pi i lambda t} times a Weyl displacement operator, whose
// Hermite matrix elements are associated Laguerre polynomials.
Mat h1_pi_matrix(double lambda, int N, const GroupPoint& p);

// ---------------------------------------------------------------------------
// Plancherel calibration (heisenberg)
// ---------------------------------------------------------------------------

struct GridFunction; // fourier.hpp

// Returns c_P minimizing |  ||probe||^2 - c_P * sum_lambda |lambda| dlambda
// ||probe^(pi_lambda)||_HS^2 | and stores it in the slice.
double calibrate_plancherel(IrrepSlice& slice, const HaarQuadrature& quad,
                            const GridFunction& probe);

} // namespace ncwick

#endif
