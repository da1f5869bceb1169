#include "ncwick/groups.hpp"

#include <cmath>
#include <cstdlib>

namespace ncwick {

std::string backend_name(Backend b) {
    switch (b) {
    case Backend::Torus: return "torus";
    case Backend::Su2: return "su2";
    case Backend::Heisenberg: return "heisenberg";
    }
    return "?";
}

int thread_count() {
    static const int n = [] {
        const char* env = std::getenv("NCWICK_THREADS");
        if (!env) return 1;
        int v = std::atoi(env);
        return v >= 1 ? v : 1;
    }();
    return n;
}

namespace {

double mod1(double x) {
    double y = std::fmod(x, 1.0);
    if (y < 0) y += 1.0;
    // fmod can return exactly 1.0 after the correction when x = -eps
    if (y >= 1.0) y -= 1.0;
    return y;
}

double mod2pi(double x) {
    double y = std::fmod(x, 2 * PI);
    if (y < 0) y += 2 * PI;
    if (y >= 2 * PI) y -= 2 * PI;
    return y;
}

double mod4pi(double x) {
    double y = std::fmod(x, 4 * PI);
    if (y < 0) y += 4 * PI;
    if (y >= 4 * PI) y -= 4 * PI;
    return y;
}

void check_same(const GroupPoint& p, const GroupPoint& q) {
    if (p.backend != q.backend)
        throw BackendMismatchError("group operation mixes " +
                                   backend_name(p.backend) + " and " +
                                   backend_name(q.backend) + " points");
}

double circ_dist(double a, double b, double period) {
    double d = std::fabs(std::fmod(a - b, period));
    return std::min(d, period - d);
}

} // namespace

GroupPoint identity(Backend b) { return GroupPoint{b, {0.0, 0.0, 0.0}}; }

GroupPoint canonical(const GroupPoint& p) {
    switch (p.backend) {
    case Backend::Torus:
        return GroupPoint{p.backend, {mod1(p.c[0]), 0.0, 0.0}};
    case Backend::Su2: {
        // Clamp beta into [0, pi]; push sign flips into alpha/gamma via the
        // 2x2 matrix round-trip only when beta is out of range.
        double beta = p.c[1];
        if (beta < 0.0 || beta > PI) return su2_from_matrix(su2_matrix(p));
        GroupPoint q{p.backend, {mod2pi(p.c[0]), beta, mod4pi(p.c[2])}};
        // At the chart-degenerate poles the pair (alpha, gamma) is defined
        // only through alpha +- gamma; normalize alpha to 0 there.
        if (beta == 0.0) {
            q.c[2] = mod4pi(q.c[0] + q.c[2]);
            q.c[0] = 0.0;
        } else if (beta == PI) {
            q.c[2] = mod4pi(q.c[2] - q.c[0]);
            q.c[0] = 0.0;
        }
        return q;
    }
    case Backend::Heisenberg: return p;
    }
    return p;
}

GroupPoint mul(const GroupPoint& p, const GroupPoint& q) {
    check_same(p, q);
    switch (p.backend) {
    case Backend::Torus:
        return GroupPoint{p.backend, {mod1(p.c[0] + q.c[0]), 0.0, 0.0}};
    case Backend::Su2:
        return su2_from_matrix(su2_matrix(p) * su2_matrix(q));
    case Backend::Heisenberg: {
        // (x,y,t)(x',y',t') = (x+x', y+y', t+t'+(xy'-yx')/2), the product of
        // unipotent upper-triangular exponentials in exponential coordinates.
        const double x = p.c[0], y = p.c[1], t = p.c[2];
        const double X = q.c[0], Y = q.c[1], T = q.c[2];
        return GroupPoint{p.backend,
                          {x + X, y + Y, t + T + 0.5 * (x * Y - y * X)}};
    }
    }
    return p;
}

GroupPoint inv(const GroupPoint& p) {
    switch (p.backend) {
    case Backend::Torus:
        return GroupPoint{p.backend, {mod1(-p.c[0]), 0.0, 0.0}};
    case Backend::Su2:
        return su2_from_matrix(su2_matrix(p).adjoint());
    case Backend::Heisenberg:
        return GroupPoint{p.backend, {-p.c[0], -p.c[1], -p.c[2]}};
    }
    return p;
}

double coord_dist(const GroupPoint& p, const GroupPoint& q) {
    check_same(p, q);
    switch (p.backend) {
    case Backend::Torus:
        return circ_dist(p.c[0], q.c[0], 1.0);
    case Backend::Su2:
        // Compare defining matrices.  Per-axis circle distances break at the
        // Euler cut alpha = 0: (2pi - eps, beta, gamma) is the central flip of
        // (eps, beta, gamma), not its neighbor, and roundoff puts products of
        // exact grid points on either side of the cut.
        return (su2_matrix(p) - su2_matrix(q)).norm();
    case Backend::Heisenberg:
        return std::fabs(p.c[0] - q.c[0]) + std::fabs(p.c[1] - q.c[1]) +
               std::fabs(p.c[2] - q.c[2]);
    }
    return 0.0;
}

double dist_to_identity(const GroupPoint& p) {
    switch (p.backend) {
    case Backend::Torus: {
        double x = mod1(p.c[0]);
        return std::min(x, 1.0 - x);
    }
    case Backend::Su2:
        // Geodesic distance on the radius-2 sphere: 2 * half-angle, so that
        // the Laplacian eigenvalue on D^l is l(l+1).
        return 2.0 * su2_half_angle(p);
    case Backend::Heisenberg:
        return quasi_norm(p);
    }
    return 0.0;
}

GroupPoint dilate(const GroupPoint& p, double r) {
    if (p.backend != Backend::Heisenberg)
        throw BackendMismatchError("dilations are defined on heisenberg only");
    if (!(r > 0.0)) throw InvalidInputError("dilation scale must be positive");
    return GroupPoint{p.backend, {r * p.c[0], r * p.c[1], r * r * p.c[2]}};
}

double quasi_norm(const GroupPoint& p) {
    if (p.backend != Backend::Heisenberg)
        throw BackendMismatchError("quasi-norm is defined on heisenberg only");
    const double s = p.c[0] * p.c[0] + p.c[1] * p.c[1];
    return std::pow(s * s + p.c[2] * p.c[2], 0.25);
}

std::size_t HaarQuadrature::h1_index(int ix, int iy, int it) const {
    return (static_cast<std::size_t>(ix) * pts_per_axis + iy) * pts_per_axis +
           it;
}

double IrrepSlice::sum_dim_sq() const {
    double s = 0;
    for (int d : dims) s += static_cast<double>(d) * d;
    return s;
}

int IrrepSlice::label_index(double label) const {
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (std::fabs(labels[i] - label) < 1e-12) return static_cast<int>(i);
    return -1;
}

HaarQuadrature default_quadrature(Backend b, double dual_cutoff) {
    switch (b) {
    case Backend::Torus:
        return torus_quadrature(
            std::max(33, 4 * static_cast<int>(dual_cutoff) + 2));
    case Backend::Su2: return su2_quadrature(dual_cutoff);
    case Backend::Heisenberg: return h1_quadrature(4.0, 33);
    }
    throw InvalidInputError("unknown backend");
}

} // namespace ncwick
