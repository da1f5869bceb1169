#include "ncwick/groups.hpp"

#include <cmath>

namespace ncwick {

HaarQuadrature h1_quadrature(double box_radius, int pts_per_axis) {
    if (!(box_radius > 0) || pts_per_axis < 2)
        throw InvalidInputError("heisenberg grid needs R > 0 and >= 2 points");
    HaarQuadrature q;
    q.backend = Backend::Heisenberg;
    q.pts_per_axis = pts_per_axis;
    q.box_radius = box_radius;
    q.spacing = 2.0 * box_radius / (pts_per_axis - 1);
    const double cell = q.spacing * q.spacing * q.spacing;
    q.total_mass = cell * pts_per_axis * pts_per_axis * pts_per_axis;
    q.exactness_degree = 0.0;
    const std::size_t n =
        static_cast<std::size_t>(pts_per_axis) * pts_per_axis * pts_per_axis;
    q.nodes.reserve(n);
    q.weights.assign(n, cell);
    for (int ix = 0; ix < pts_per_axis; ++ix) {
        const double x = -box_radius + ix * q.spacing;
        for (int iy = 0; iy < pts_per_axis; ++iy) {
            const double y = -box_radius + iy * q.spacing;
            for (int it = 0; it < pts_per_axis; ++it) {
                const double t = -box_radius + it * q.spacing;
                q.nodes.push_back(GroupPoint{Backend::Heisenberg, {x, y, t}});
            }
        }
    }
    return q;
}

IrrepSlice h1_slice(double lambda_min, double lambda_max, int n_per_side,
                    int N, double c_plancherel) {
    if (!(lambda_min > 0))
        throw InvalidInputError(
            "heisenberg slice requires lambda_min > 0 (degenerate stratum "
            "excluded)");
    if (!(lambda_max > lambda_min) || n_per_side < 1 || N < 1)
        throw InvalidInputError("bad heisenberg slice parameters");
    IrrepSlice s;
    s.backend = Backend::Heisenberg;
    s.hermite_N = N;
    s.lambda_min = lambda_min;
    s.lambda_max = lambda_max;
    s.dlambda = (lambda_max - lambda_min) / n_per_side;
    s.c_plancherel = c_plancherel;
    // midpoint grid on [lambda_min, lambda_max], mirrored to negative lambda
    for (int j = n_per_side - 1; j >= 0; --j) {
        const double lam = lambda_min + (j + 0.5) * s.dlambda;
        s.labels.push_back(-lam);
    }
    for (int j = 0; j < n_per_side; ++j) {
        const double lam = lambda_min + (j + 0.5) * s.dlambda;
        s.labels.push_back(lam);
    }
    for (std::size_t i = 0; i < s.labels.size(); ++i) {
        s.dims.push_back(N);
        s.weights.push_back(c_plancherel * std::fabs(s.labels[i]) * s.dlambda);
    }
    return s;
}

Mat h1_pi_matrix(double lambda, int N, const GroupPoint& p) {
    if (p.backend != Backend::Heisenberg)
        throw BackendMismatchError("h1_pi_matrix needs a heisenberg point");
    if (lambda == 0.0)
        throw InvalidInputError("lambda = 0 is outside the dual slice");
    const double x = p.c[0], y = p.c[1], t = p.c[2];
    const double alpha = std::sqrt(2 * PI * std::fabs(lambda));
    const double sgn = lambda > 0 ? 1.0 : -1.0;
    // pi_lambda(g) = e^{2 pi i lambda t} D(beta),  D(beta) = e^{beta a+ - conj(beta) a},
    // beta = -(alpha/sqrt(2)) (x - i sgn(lambda) y).
    const cplx beta = -(alpha / std::sqrt(2.0)) * cplx(x, -sgn * y);
    const double r2 = std::norm(beta);
    const cplx phase = std::exp(cplx(0, 2 * PI * lambda * t));

    Mat D(N, N);
    // lower-degree Laguerre recursion per diagonal: for n >= m,
    //   D_{nm} = sqrt(m!/n!) beta^{n-m} e^{-r2/2} L_m^{(n-m)}(r2)
    //   D_{mn} = sqrt(m!/n!) (-conj(beta))^{n-m} e^{-r2/2} L_m^{(n-m)}(r2)
    const double er = std::exp(-0.5 * r2);
    for (int k = 0; k < N; ++k) { // k = n - m
        // ratio sqrt(m!/n!) built incrementally along the diagonal
        double ratio = 1.0;
        for (int j = 1; j <= k; ++j) ratio /= std::sqrt(double(j));
        cplx bk = 1.0;
        for (int j = 0; j < k; ++j) bk *= beta;
        cplx bkm = 1.0;
        for (int j = 0; j < k; ++j) bkm *= -std::conj(beta);
        double L0 = 1.0, L1 = 1.0 + k - r2; // L_0^{(k)}, L_1^{(k)}
        for (int m = 0; m + k < N; ++m) {
            double Lm;
            if (m == 0) Lm = L0;
            else if (m == 1) Lm = L1;
            else {
                Lm = ((2 * (m - 1) + 1 + k - r2) * L1 - (m - 1 + k) * L0) / m;
                L0 = L1;
                L1 = Lm;
            }
            const int n = m + k;
            if (m >= 1)
                ratio *= std::sqrt(double(m) / double(n));
            D(n, m) = ratio * bk * er * Lm;
            if (k > 0) D(m, n) = ratio * bkm * er * Lm;
        }
    }
    return phase * D;
}

Mat IrrepSlice::evaluate(std::size_t i, const GroupPoint& p) const {
    if (i >= labels.size()) throw InvalidInputError("unknown dual label");
    if (p.backend != backend)
        throw BackendMismatchError("evaluate_irrep: point/slice backend mismatch");
    switch (backend) {
    case Backend::Torus: {
        Mat m(1, 1);
        m(0, 0) = std::exp(cplx(0, 2 * PI * labels[i] * p.c[0]));
        return m;
    }
    case Backend::Su2: {
        const auto stack = wigner_d_stack(labels[i], p.c[1]);
        const int tl = static_cast<int>(std::llround(2 * labels[i]));
        const int dim = tl + 1;
        Mat D(dim, dim);
        const double l = labels[i];
        for (int r = 0; r < dim; ++r) {
            const double m = l - r;
            const cplx pa = std::exp(cplx(0, -m * p.c[0]));
            for (int cidx = 0; cidx < dim; ++cidx) {
                const double n = l - cidx;
                D(r, cidx) = pa * stack[tl](r, cidx) *
                             std::exp(cplx(0, -n * p.c[2]));
            }
        }
        return D;
    }
    case Backend::Heisenberg:
        return h1_pi_matrix(labels[i], hermite_N, p);
    }
    throw InvalidInputError("unknown backend");
}

std::vector<Mat> IrrepSlice::evaluate_all(const GroupPoint& p) const {
    std::vector<Mat> out(labels.size());
    if (backend == Backend::Su2 && !labels.empty()) {
        // share one Wigner-d recursion across all labels
        const double L = labels.back();
        const auto stack = wigner_d_stack(L, p.c[1]);
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const int tl = static_cast<int>(std::llround(2 * labels[i]));
            const int dim = tl + 1;
            const double l = labels[i];
            Mat D(dim, dim);
            for (int r = 0; r < dim; ++r) {
                const double m = l - r;
                const cplx pa = std::exp(cplx(0, -m * p.c[0]));
                for (int cidx = 0; cidx < dim; ++cidx) {
                    const double n = l - cidx;
                    D(r, cidx) = pa * stack[tl](r, cidx) *
                                 std::exp(cplx(0, -n * p.c[2]));
                }
            }
            out[i] = std::move(D);
        }
        return out;
    }
    if (backend == Backend::Heisenberg) {
        // pi_{-lambda}(p) is the entrywise conjugate of pi_lambda(p), so a
        // symmetric grid needs only the positive half computed directly.
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] > 0 || out[i].size() > 0) continue;
            out[i] = h1_pi_matrix(labels[i], hermite_N, p);
            const std::size_t mirror = labels.size() - 1 - i;
            if (mirror != i &&
                std::fabs(labels[mirror] + labels[i]) < 1e-14 &&
                out[mirror].size() == 0)
                out[mirror] = out[i].conjugate();
        }
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (out[i].size() == 0)
                out[i] = h1_pi_matrix(labels[i], hermite_N, p);
        return out;
    }
    for (std::size_t i = 0; i < labels.size(); ++i) out[i] = evaluate(i, p);
    return out;
}

} // namespace ncwick
