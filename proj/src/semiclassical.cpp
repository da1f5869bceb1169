#include "ncwick/semiclassical.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ncwick/fourier.hpp"
#include "ncwick/kn.hpp"

namespace ncwick {

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

void require_h1(Backend b, const char* who) {
    if (b != Backend::Heisenberg)
        throw BackendMismatchError(std::string(who) +
                                   ": the scaled quantization needs the "
                                   "heisenberg backend (dilations)");
}

bool same_grid(const HaarQuadrature& a, const HaarQuadrature& b) {
    return a.backend == b.backend && a.pts_per_axis == b.pts_per_axis &&
           std::fabs(a.box_radius - b.box_radius) < 1e-12;
}

bool same_box(const HaarQuadrature& a, const HaarQuadrature& b) {
    return a.backend == b.backend &&
           std::fabs(a.box_radius - b.box_radius) < 1e-12;
}

// Boundary flag per node: any coordinate on the outermost planes.
std::vector<char> boundary_mask(const HaarQuadrature& q) {
    const int n = q.pts_per_axis;
    std::vector<char> mask(q.size(), 0);
    std::size_t idx = 0;
    for (int ix = 0; ix < n; ++ix)
        for (int iy = 0; iy < n; ++iy)
            for (int it = 0; it < n; ++it, ++idx)
                mask[idx] = (ix == 0 || ix == n - 1 || iy == 0 ||
                             iy == n - 1 || it == 0 || it == n - 1)
                                ? 1
                                : 0;
    return mask;
}

// Smallest admissible scale for a given kernel width profile: each axis
// width contracts by eps^upsilon (upsilon = 1, 1, 2) and must stay above
// 0.9 spacings for the grid to see the profile.
double smallest_admissible_eps(const std::array<double, 3>& width, double h) {
    const double need = 0.9 * h;
    double e = 0.0;
    if (width[0] > 0) e = std::max(e, need / width[0]);
    if (width[1] > 0) e = std::max(e, need / width[1]);
    if (width[2] > 0) e = std::max(e, std::sqrt(need / width[2]));
    return e;
}

void check_resolution(const std::array<double, 3>& width, double h,
                      double eps, const char* who) {
    if (!(eps > 0) || eps > 1.0)
        throw InvalidInputError(std::string(who) +
                                ": the scale must lie in (0, 1]");
    const double e_min = smallest_admissible_eps(width, h);
    if (eps < e_min)
        throw TruncationError(
            std::string(who) + ": at scale " + fmt(eps) +
            " the contracted kernel falls between the grid nodes; this grid "
            "resolves scales down to " + fmt(e_min) +
            " (widen the kernel or refine the grid)");
}

std::array<double, 3> widths_from_rows(const HaarQuadrature& q,
                                       const Mat& values) {
    // pooled envelope over rows, then rms width per axis
    RVec env = RVec::Zero(values.cols());
    for (Eigen::Index r = 0; r < values.rows(); ++r)
        env = env.cwiseMax(values.row(r).cwiseAbs().transpose());
    double mass = 0, mx = 0, my = 0, mt = 0;
    for (std::size_t m = 0; m < q.size(); ++m) {
        const double v = env(static_cast<Eigen::Index>(m));
        const GroupPoint& p = q.nodes[m];
        mass += v;
        mx += v * p.c[0] * p.c[0];
        my += v * p.c[1] * p.c[1];
        mt += v * p.c[2] * p.c[2];
    }
    if (!(mass > 0))
        throw InvalidInputError("kernel width: the field vanishes");
    return {std::sqrt(mx / mass), std::sqrt(my / mass),
            std::sqrt(mt / mass)};
}

std::array<double, 3> symbol_widths(const A0Symbol& sigma) {
    // envelope of |psi_t| over the terms, sampled on the symbol grid
    const HaarQuadrature& q = *sigma.quad;
    RVec env = RVec::Zero(static_cast<Eigen::Index>(q.size()));
    for (const A0Term& t : sigma.terms)
        for (std::size_t m = 0; m < q.size(); ++m)
            env(static_cast<Eigen::Index>(m)) =
                std::max(env(static_cast<Eigen::Index>(m)),
                         std::abs(t.psi(q.nodes[m])));
    Mat row(1, env.size());
    row.row(0) = env.transpose().cast<cplx>();
    return widths_from_rows(q, row);
}

// Matrix of a zoom-frame kernel operator over a basis:
//   A(i, j) = K(u_i, u_j^{-1} u_i)  on the basis grid,
// grid kind -> sqrt(mu_i mu_j) A(i, j); sampled kind -> S^H W A W S.
OperatorMatrix zoom_matrix(
    const OperatorBasis& basis,
    const std::function<cplx(std::size_t, const GroupPoint&,
                             const GroupPoint&)>& K,
    bool symmetrize) {
    const HaarQuadrature& q = *basis.quad;
    const std::size_t n = q.size();
    Mat A(n, n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        for (std::size_t j = 0; j < n; ++j) {
            const GroupPoint w = mul(inv(q.nodes[j]), q.nodes[i]);
            A(ii, static_cast<Eigen::Index>(j)) = K(i, q.nodes[i], w);
        }
    }
    OperatorMatrix out;
    out.backend = basis.backend;
    if (basis.kind == "grid") {
        Vec sq(n);
        for (std::size_t i = 0; i < n; ++i)
            sq(static_cast<Eigen::Index>(i)) = std::sqrt(q.weights[i]);
        out.m = sq.asDiagonal() * A * sq.asDiagonal();
    } else {
        Vec wv(n);
        for (std::size_t i = 0; i < n; ++i)
            wv(static_cast<Eigen::Index>(i)) = q.weights[i];
        out.m = basis.samples.adjoint() * wv.asDiagonal() * A *
                wv.asDiagonal() * basis.samples;
    }
    if (symmetrize) {
        out.m = 0.5 * (out.m + out.m.adjoint()).eval();
        out.symmetrized = true;
    }
    return out;
}

double herm_min_eig(const Mat& m) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.adjoint()),
                                          Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

} // namespace

cplx A0Symbol::kernel(const GroupPoint& x, const GroupPoint& y) const {
    cplx s = 0;
    for (std::size_t t = 0; t < terms.size(); ++t)
        s += phi_at(t, x) * terms[t].psi(y);
    return s;
}

double A0Symbol::phi_at(std::size_t term, const GroupPoint& x) const {
    const auto& phi = terms[term].phi;
    return phi ? phi(x) : 1.0;
}

A0Symbol make_a0_symbol(const QuadPtr& quad, std::vector<A0Term> terms) {
    if (!quad) throw InvalidInputError("a0 symbol: missing quadrature");
    require_h1(quad->backend, "a0 symbol");
    if (terms.empty())
        throw InvalidInputError("a0 symbol: needs at least one term");
    const std::vector<char> bdry = boundary_mask(*quad);

    A0Symbol s;
    s.quad = quad;
    s.terms = std::move(terms);
    s.x_independent = true;
    for (const A0Term& t : s.terms) {
        if (!t.psi)
            throw InvalidInputError("a0 symbol: term without a profile");
        double peak = 0, edge = 0, phi_max = 0, phi_edge = 0;
        for (std::size_t m = 0; m < quad->size(); ++m) {
            const double v = std::abs(t.psi(quad->nodes[m]));
            peak = std::max(peak, v);
            if (bdry[m]) edge = std::max(edge, v);
            if (t.phi) {
                const double pv = std::fabs(t.phi(quad->nodes[m]));
                phi_max = std::max(phi_max, pv);
                if (bdry[m]) phi_edge = std::max(phi_edge, pv);
            }
        }
        if (!(peak > 0))
            throw InvalidInputError(
                "a0 symbol: a profile vanishes on the grid");
        if (edge > 1e-8 * peak)
            throw TruncationError(
                "a0 symbol: profile boundary samples reach " +
                fmt(edge / peak) +
                " of the peak (limit 1e-8); narrow the profile or enlarge "
                "the box");
        if (t.phi) {
            s.x_independent = false;
            if (!(phi_max > 0))
                throw InvalidInputError(
                    "a0 symbol: a bump vanishes on the grid");
            if (phi_edge > 1e-12 * phi_max)
                throw InvalidInputError(
                    "a0 symbol: the bump must be supported strictly inside "
                    "the box (boundary value " + fmt(phi_edge) + ")");
        }
    }
    return s;
}

std::function<cplx(const GroupPoint&)> gaussian_autocorrelation(double s) {
    if (!(s > 0))
        throw InvalidInputError(
            "gaussian correlation: the width must be positive");
    const double s2 = s * s;
    const double amp = std::pow(PI, 1.5) * s2 * s;
    return [s2, amp](const GroupPoint& p) -> cplx {
        const double r2 = p.c[0] * p.c[0] + p.c[1] * p.c[1];
        const double t = p.c[2];
        return amp / std::sqrt(1.0 + r2 / 16.0) *
               std::exp(-r2 / (4.0 * s2) -
                        4.0 * t * t / (s2 * (16.0 + r2)));
    };
}

A0Symbol a0_positive_symbol(
    const QuadPtr& quad, const std::function<double(const GroupPoint&)>& phi,
    const std::function<cplx(const GroupPoint&)>& g,
    const QuadPtr& conv_quad) {
    if (!quad) throw InvalidInputError("positive symbol: missing quadrature");
    require_h1(quad->backend, "positive symbol");
    if (!g) throw InvalidInputError("positive symbol: missing factor");
    const QuadPtr cq = conv_quad ? conv_quad : quad;
    require_h1(cq->backend, "positive symbol");
    if (phi) {
        for (std::size_t m = 0; m < quad->size(); ++m)
            if (phi(quad->nodes[m]) < -1e-14)
                throw InvalidInputError(
                    "positive symbol: the bump must be nonnegative");
    }
    // psi(y) = (g * g^*)(y) = sum_v mu_v g(v) conj(g(y^{-1} v))
    const std::size_t nv = cq->size();
    auto gv = std::make_shared<std::vector<cplx>>(nv);
    for (std::size_t v = 0; v < nv; ++v) (*gv)[v] = g(cq->nodes[v]);
    auto psi = [cq, gv, g](const GroupPoint& y) {
        const GroupPoint yi = inv(y);
        cplx s = 0;
        for (std::size_t v = 0; v < cq->size(); ++v)
            s += cq->weights[v] * (*gv)[v] *
                 std::conj(g(mul(yi, cq->nodes[v])));
        return s;
    };
    A0Symbol s = make_a0_symbol(quad, {A0Term{phi, psi}});
    s.positivity_certified = true;
    return s;
}

KernelField a0_sample_kernel(const A0Symbol& sigma) {
    const HaarQuadrature& q = *sigma.quad;
    const std::size_t n = q.size();
    KernelField out;
    out.backend = Backend::Heisenberg;
    out.quad = sigma.quad;
    out.x_independent = sigma.x_independent;
    const std::size_t rows = sigma.x_independent ? 1 : n;
    out.values = Mat(rows, n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(rows); ++r)
        for (std::size_t m = 0; m < n; ++m)
            out.values(r, static_cast<Eigen::Index>(m)) =
                sigma.kernel(q.nodes[static_cast<std::size_t>(r)],
                             q.nodes[m]);
    const std::vector<char> bdry = boundary_mask(q);
    double edge = 0;
    for (std::size_t m = 0; m < n; ++m)
        if (bdry[m])
            edge = std::max(
                edge, out.values.col(static_cast<Eigen::Index>(m))
                          .cwiseAbs()
                          .maxCoeff());
    out.boundary_max = edge;
    return out;
}

std::array<double, 3> kernel_axis_widths(const KernelField& kappa) {
    return widths_from_rows(*kappa.quad, kappa.values);
}

KernelField rescale_kernel(const KernelField& kappa, double eps) {
    require_h1(kappa.backend, "rescale");
    const HaarQuadrature& q = *kappa.quad;
    const double peak = kappa.values.cwiseAbs().maxCoeff();
    if (!(peak > 0))
        throw InvalidInputError("rescale: the kernel vanishes");
    const std::vector<char> bdry = boundary_mask(q);
    double edge = 0;
    for (std::size_t m = 0; m < q.size(); ++m)
        if (bdry[m])
            edge = std::max(edge,
                            kappa.values.col(static_cast<Eigen::Index>(m))
                                .cwiseAbs()
                                .maxCoeff());
    if (edge > 1e-5 * peak)
        throw TruncationError(
            "rescale: kernel boundary samples reach " + fmt(edge / peak) +
            " of the peak; contracting the argument would pull unsampled "
            "mass into the box");
    check_resolution(widths_from_rows(q, kappa.values), q.spacing, eps,
                     "rescale");

    const double pref = 1.0 / (eps * eps * eps * eps);
    const double inv_eps = 1.0 / eps;
    KernelField out;
    out.backend = kappa.backend;
    out.quad = kappa.quad;
    out.slice = kappa.slice;
    out.x_independent = kappa.x_independent;
    out.band_limit = -1.0;
    out.values = Mat(kappa.values.rows(), kappa.values.cols());
    for (Eigen::Index r = 0; r < kappa.values.rows(); ++r) {
        GridFunction row;
        row.backend = kappa.backend;
        row.quad = kappa.quad;
        row.samples = kappa.values.row(r).transpose();
        const Interpolant interp(row, nullptr);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t m = 0;
             m < static_cast<std::ptrdiff_t>(q.size()); ++m)
            out.values(r, m) =
                pref *
                interp(dilate(q.nodes[static_cast<std::size_t>(m)],
                              inv_eps));
    }
    double oedge = 0;
    for (std::size_t m = 0; m < q.size(); ++m)
        if (bdry[m])
            oedge = std::max(oedge,
                             out.values.col(static_cast<Eigen::Index>(m))
                                 .cwiseAbs()
                                 .maxCoeff());
    out.boundary_max = oedge;
    return out;
}

GridFunction op_eps_apply(const A0Symbol& sigma, double eps,
                          const GridFunction& f,
                          const std::vector<std::size_t>& at) {
    require_h1(sigma.quad->backend, "scaled apply");
    if (f.backend != Backend::Heisenberg || !same_grid(*sigma.quad, *f.quad))
        throw BackendMismatchError(
            "scaled apply: the function must live on the symbol grid");
    check_resolution(symbol_widths(sigma), sigma.quad->spacing, eps,
                     "scaled apply");
    const HaarQuadrature& q = *sigma.quad;
    const std::size_t n = q.size();
    const double pref = 1.0 / (eps * eps * eps * eps);
    const double inv_eps = 1.0 / eps;

    std::vector<std::size_t> nodes = at;
    if (nodes.empty()) {
        nodes.resize(n);
        for (std::size_t i = 0; i < n; ++i) nodes[i] = i;
    }
    for (std::size_t i : nodes)
        if (i >= n)
            throw InvalidInputError("scaled apply: node index out of range");
    GridFunction out;
    out.backend = f.backend;
    out.quad = f.quad;
    out.samples = Vec::Zero(static_cast<Eigen::Index>(n));
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(nodes.size());
         ++k) {
        const std::size_t i = nodes[static_cast<std::size_t>(k)];
        const GroupPoint& x = q.nodes[i];
        cplx acc = 0;
        for (std::size_t y = 0; y < n; ++y) {
            const GroupPoint arg = dilate(mul(inv(q.nodes[y]), x), inv_eps);
            acc += q.weights[y] * f.samples(static_cast<Eigen::Index>(y)) *
                   sigma.kernel(x, arg);
        }
        out.samples(static_cast<Eigen::Index>(i)) = pref * acc;
    }
    return out;
}

OperatorMatrix op_eps_matrix(const A0Symbol& sigma, double eps,
                             const OperatorBasis& basis, bool symmetrize) {
    require_h1(sigma.quad->backend, "scaled matrix");
    if (!basis.quad || !same_box(*sigma.quad, *basis.quad))
        throw BackendMismatchError(
            "scaled matrix: the basis must share the symbol's box");
    if (!(eps > 0) || eps > 1.0)
        throw InvalidInputError("scaled matrix: the scale must lie in (0, 1]");
    return zoom_matrix(
        basis,
        [&sigma, eps](std::size_t, const GroupPoint& u, const GroupPoint& w) {
            return sigma.kernel(dilate(u, eps), w);
        },
        symmetrize);
}

KernelField wick_eps_kernel(const Window& w, const A0Symbol& sigma,
                            double eps, const QuadPtr& z_quad) {
    require_h1(sigma.quad->backend, "averaged kernel");
    if (w.a.backend != Backend::Heisenberg ||
        !same_grid(*sigma.quad, *w.a.quad))
        throw BackendMismatchError(
            "averaged kernel: the window must live on the symbol grid");
    if (!(eps > 0) || eps > 1.0)
        throw InvalidInputError(
            "averaged kernel: the scale must lie in (0, 1]");
    const QuadPtr zq = z_quad ? z_quad : sigma.quad;
    require_h1(zq->backend, "averaged kernel");
    const HaarQuadrature& q = *sigma.quad;
    const HaarQuadrature& z = *zq;
    const std::size_t nw = q.size(), nz = z.size();
    const double se = std::sqrt(eps);
    const std::size_t nterms = sigma.terms.size();

    // window values and the shifted x arguments, shared across terms
    Vec abar(static_cast<Eigen::Index>(nz));
    std::vector<GroupPoint> zshift(nz); // delta_{sqrt eps} z^{-1}
    for (std::size_t k = 0; k < nz; ++k) {
        abar(static_cast<Eigen::Index>(k)) =
            z.weights[k] * std::conj(w.eval(z.nodes[k]));
        zshift[k] = dilate(inv(z.nodes[k]), se);
    }
    // B(m, k) = mu_k a(z_k delta w_m^{-1}) conj(a(z_k))
    Mat B(nw, nz);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t m = 0; m < static_cast<std::ptrdiff_t>(nw); ++m) {
        const GroupPoint wshift =
            dilate(inv(q.nodes[static_cast<std::size_t>(m)]), se);
        for (std::size_t k = 0; k < nz; ++k)
            B(m, static_cast<Eigen::Index>(k)) =
                abar(static_cast<Eigen::Index>(k)) *
                w.eval(mul(z.nodes[k], wshift));
    }

    KernelField out;
    out.backend = Backend::Heisenberg;
    out.quad = sigma.quad;
    out.x_independent = sigma.x_independent;
    const std::size_t rows = sigma.x_independent ? 1 : nw;
    out.values = Mat::Zero(static_cast<Eigen::Index>(rows),
                           static_cast<Eigen::Index>(nw));
    for (std::size_t t = 0; t < nterms; ++t) {
        Vec psi(static_cast<Eigen::Index>(nw));
        for (std::size_t m = 0; m < nw; ++m)
            psi(static_cast<Eigen::Index>(m)) =
                sigma.terms[t].psi(q.nodes[m]);
        Mat Phi(rows, nz);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(rows);
             ++r)
            for (std::size_t k = 0; k < nz; ++k)
                Phi(r, static_cast<Eigen::Index>(k)) = sigma.phi_at(
                    t, mul(q.nodes[static_cast<std::size_t>(r)], zshift[k]));
        out.values.noalias() += (Phi * B.transpose()) * psi.asDiagonal();
    }
    const std::vector<char> bdry = boundary_mask(q);
    double edge = 0;
    for (std::size_t m = 0; m < nw; ++m)
        if (bdry[m])
            edge = std::max(edge,
                            out.values.col(static_cast<Eigen::Index>(m))
                                .cwiseAbs()
                                .maxCoeff());
    out.boundary_max = edge;
    return out;
}

GridFunction wick_eps_apply(const Window& w, const A0Symbol& sigma,
                            double eps, const GridFunction& f,
                            const std::vector<std::size_t>& at) {
    require_h1(sigma.quad->backend, "averaged apply");
    if (f.backend != Backend::Heisenberg || !same_grid(*sigma.quad, *f.quad))
        throw BackendMismatchError(
            "averaged apply: the function must live on the symbol grid");
    if (w.a.backend != Backend::Heisenberg ||
        !same_grid(*sigma.quad, *w.a.quad))
        throw BackendMismatchError(
            "averaged apply: the window must live on the symbol grid");
    check_resolution(symbol_widths(sigma), sigma.quad->spacing, eps,
                     "averaged apply");
    const HaarQuadrature& q = *sigma.quad;
    const std::size_t n = q.size();
    const double pref = 1.0 / (eps * eps * eps * eps);
    const double inv_eps = 1.0 / eps;
    const double se = std::sqrt(eps);

    Vec abar(static_cast<Eigen::Index>(n));
    std::vector<GroupPoint> zshift(n);
    for (std::size_t k = 0; k < n; ++k) {
        abar(static_cast<Eigen::Index>(k)) =
            q.weights[k] * std::conj(w.eval(q.nodes[k]));
        zshift[k] = dilate(inv(q.nodes[k]), se);
    }
    std::vector<std::size_t> nodes = at;
    if (nodes.empty()) {
        nodes.resize(n);
        for (std::size_t i = 0; i < n; ++i) nodes[i] = i;
    }
    for (std::size_t i : nodes)
        if (i >= n)
            throw InvalidInputError(
                "averaged apply: node index out of range");
    const std::size_t nterms = sigma.terms.size();
    GridFunction out;
    out.backend = f.backend;
    out.quad = f.quad;
    out.samples = Vec::Zero(static_cast<Eigen::Index>(n));
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t kk = 0;
         kk < static_cast<std::ptrdiff_t>(nodes.size()); ++kk) {
        const std::size_t i = nodes[static_cast<std::size_t>(kk)];
        const GroupPoint& x = q.nodes[i];
        // the x side of the z sum does not move with y
        Mat px(nterms, n);
        for (std::size_t t = 0; t < nterms; ++t)
            for (std::size_t k = 0; k < n; ++k)
                px(static_cast<Eigen::Index>(t),
                   static_cast<Eigen::Index>(k)) =
                    abar(static_cast<Eigen::Index>(k)) *
                    sigma.phi_at(t, mul(x, zshift[k]));
        cplx acc = 0;
        for (std::size_t y = 0; y < n; ++y) {
            const cplx fy = f.samples(static_cast<Eigen::Index>(y));
            if (fy == cplx(0)) continue;
            const GroupPoint warg = dilate(mul(inv(q.nodes[y]), x), inv_eps);
            const GroupPoint wshift = dilate(inv(warg), se);
            Vec s = Vec::Zero(static_cast<Eigen::Index>(nterms));
            for (std::size_t k = 0; k < n; ++k) {
                const cplx av = w.eval(mul(q.nodes[k], wshift));
                for (std::size_t t = 0; t < nterms; ++t)
                    s(static_cast<Eigen::Index>(t)) +=
                        px(static_cast<Eigen::Index>(t),
                           static_cast<Eigen::Index>(k)) *
                        av;
            }
            cplx kv = 0;
            for (std::size_t t = 0; t < nterms; ++t)
                kv += s(static_cast<Eigen::Index>(t)) *
                      sigma.terms[t].psi(warg);
            acc += q.weights[y] * fy * kv;
        }
        out.samples(static_cast<Eigen::Index>(i)) = pref * acc;
    }
    return out;
}

OperatorMatrix wick_eps_matrix(const Window& w, const A0Symbol& sigma,
                               double eps, const OperatorBasis& basis,
                               bool symmetrize) {
    require_h1(sigma.quad->backend, "averaged matrix");
    if (!basis.quad || !same_box(*sigma.quad, *basis.quad))
        throw BackendMismatchError(
            "averaged matrix: the basis must share the symbol's box");
    if (w.a.backend != Backend::Heisenberg ||
        !same_grid(*sigma.quad, *w.a.quad))
        throw BackendMismatchError(
            "averaged matrix: the window must live on the symbol grid");
    if (!(eps > 0) || eps > 1.0)
        throw InvalidInputError(
            "averaged matrix: the scale must lie in (0, 1]");
    const HaarQuadrature& z = *sigma.quad;
    const std::size_t nz = z.size();
    const std::size_t nu = basis.quad->size();
    const double se = std::sqrt(eps);
    const std::size_t nterms = sigma.terms.size();

    Vec abar(static_cast<Eigen::Index>(nz));
    std::vector<GroupPoint> zshift(nz);
    for (std::size_t k = 0; k < nz; ++k) {
        abar(static_cast<Eigen::Index>(k)) =
            z.weights[k] * std::conj(w.eval(z.nodes[k]));
        zshift[k] = dilate(inv(z.nodes[k]), se);
    }
    // Phi[t](i, k) = phi_t(delta_eps u_i . delta_{sqrt eps} z_k^{-1}),
    // a-weighted so the (i, j) entry is a plain dot with the a(z c_ij) row.
    std::vector<Mat> R(nterms, Mat(nu, nz));
    for (std::size_t t = 0; t < nterms; ++t) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(nu); ++i) {
            const GroupPoint xi =
                dilate(basis.quad->nodes[static_cast<std::size_t>(i)], eps);
            for (std::size_t k = 0; k < nz; ++k)
                R[t](i, static_cast<Eigen::Index>(k)) =
                    abar(static_cast<Eigen::Index>(k)) *
                    sigma.phi_at(t, mul(xi, zshift[k]));
        }
    }
    auto K = [&](std::size_t i, const GroupPoint&, const GroupPoint& wp) {
        const GroupPoint c = dilate(inv(wp), se);
        Vec az(static_cast<Eigen::Index>(nz));
        for (std::size_t k = 0; k < nz; ++k)
            az(static_cast<Eigen::Index>(k)) = w.eval(mul(z.nodes[k], c));
        cplx s = 0;
        for (std::size_t t = 0; t < nterms; ++t)
            s += R[t]
                     .row(static_cast<Eigen::Index>(i))
                     .cwiseProduct(az.transpose())
                     .sum() *
                 sigma.terms[t].psi(wp);
        return s;
    };
    return zoom_matrix(basis, K, symmetrize);
}

A0Defect a0_defect_terms(const Window& w, const A0Symbol& sigma, double eps,
                         const QuadPtr& x_quad) {
    require_h1(sigma.quad->backend, "kernel defect");
    if (w.a.backend != Backend::Heisenberg ||
        !same_grid(*sigma.quad, *w.a.quad))
        throw BackendMismatchError(
            "kernel defect: the window must live on the symbol grid");
    if (!(eps > 0) || eps > 1.0)
        throw InvalidInputError("kernel defect: the scale must lie in (0, 1]");
    const QuadPtr xq = x_quad ? x_quad : sigma.quad;
    require_h1(xq->backend, "kernel defect");
    const HaarQuadrature& q = *sigma.quad; // w and z grid
    const HaarQuadrature& x = *xq;
    const std::size_t nw = q.size(), nz = q.size();
    const std::size_t nx = sigma.x_independent ? 1 : x.size();
    const double se = std::sqrt(eps);
    const std::size_t nterms = sigma.terms.size();

    Vec a(static_cast<Eigen::Index>(nz)), asq(static_cast<Eigen::Index>(nz));
    std::vector<GroupPoint> zshift(nz);
    for (std::size_t k = 0; k < nz; ++k) {
        a(static_cast<Eigen::Index>(k)) = w.eval(q.nodes[k]);
        asq(static_cast<Eigen::Index>(k)) =
            q.weights[k] * std::norm(a(static_cast<Eigen::Index>(k)));
        zshift[k] = dilate(inv(q.nodes[k]), se);
    }
    // B1(m, k) = mu_k (a - a shifted) conj(a); B2(m, k) = mu_k a-shifted conj(a)
    Mat B1(nw, nz), B2(nw, nz);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t m = 0; m < static_cast<std::ptrdiff_t>(nw); ++m) {
        const GroupPoint wshift =
            dilate(inv(q.nodes[static_cast<std::size_t>(m)]), se);
        for (std::size_t k = 0; k < nz; ++k) {
            const cplx ash = w.eval(mul(q.nodes[k], wshift));
            const cplx wt =
                q.weights[k] *
                std::conj(a(static_cast<Eigen::Index>(k)));
            B2(m, static_cast<Eigen::Index>(k)) = wt * ash;
            B1(m, static_cast<Eigen::Index>(k)) =
                wt * (a(static_cast<Eigen::Index>(k)) - ash);
        }
    }
    // Per term: transport piece D(i) = phi(x_i) - sum_k asq_k phi(x_i shift),
    // correlation piece through the B1 contraction, total through B2.
    Mat E1 = Mat::Zero(nx, nw), E2 = Mat::Zero(nx, nw),
        ET = Mat::Zero(nx, nw);
    for (std::size_t t = 0; t < nterms; ++t) {
        Vec psi(static_cast<Eigen::Index>(nw));
        for (std::size_t m = 0; m < nw; ++m)
            psi(static_cast<Eigen::Index>(m)) =
                sigma.terms[t].psi(q.nodes[m]);
        Mat Phi(nx, nz);
        Vec phi0(static_cast<Eigen::Index>(nx));
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(nx); ++i) {
            const GroupPoint& xi = x.nodes[static_cast<std::size_t>(i)];
            phi0(i) = sigma.phi_at(t, xi);
            for (std::size_t k = 0; k < nz; ++k)
                Phi(i, static_cast<Eigen::Index>(k)) =
                    sigma.phi_at(t, mul(xi, zshift[k]));
        }
        const Vec Dm = phi0 - Phi * asq; // nx
        E1.noalias() += Dm * psi.transpose();
        E2.noalias() += (Phi * B1.transpose()) * psi.asDiagonal();
        ET.noalias() += phi0 * psi.transpose() -
                        (Phi * B2.transpose()) * psi.asDiagonal();
    }
    A0Defect d;
    for (std::size_t m = 0; m < nw; ++m) {
        const Eigen::Index mm = static_cast<Eigen::Index>(m);
        d.i1 += q.weights[m] * E1.col(mm).cwiseAbs().maxCoeff();
        d.i2 += q.weights[m] * E2.col(mm).cwiseAbs().maxCoeff();
        d.total += q.weights[m] * ET.col(mm).cwiseAbs().maxCoeff();
    }
    return d;
}

std::vector<double> default_eps_list() {
    std::vector<double> v;
    for (int k = 0; k <= 6; ++k) v.push_back(std::ldexp(1.0, -k));
    return v;
}

SlopeFit fit_log_slope(const std::vector<double>& eps,
                       const std::vector<double>& metric, double floor) {
    if (eps.size() != metric.size())
        throw InvalidInputError("slope fit: mismatched lengths");
    SlopeFit f;
    f.vacuous = true;
    for (double m : metric)
        if (m >= 1e-12) f.vacuous = false;
    if (f.vacuous) return f;
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < eps.size(); ++i) {
        if (metric[i] < 10.0 * floor || !(metric[i] > 0)) continue;
        f.used.push_back(static_cast<int>(i));
        lx.push_back(std::log(eps[i]));
        ly.push_back(std::log(metric[i]));
    }
    f.points = static_cast<int>(lx.size());
    if (f.points < 2) return f;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < f.points; ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    const double n = f.points;
    const double den = n * sxx - sx * sx;
    f.slope = (n * sxy - sx * sy) / den;
    f.intercept = (sy - f.slope * sx) / n;
    double r2 = 0;
    for (int i = 0; i < f.points; ++i) {
        const double e = ly[i] - (f.intercept + f.slope * lx[i]);
        r2 += e * e;
    }
    f.residual = std::sqrt(r2 / n);
    return f;
}

EpsilonSweep sweep(const Window& w, const A0Symbol& sigma,
                   const OperatorBasis& basis,
                   std::vector<double> eps_list) {
    if (eps_list.empty()) eps_list = default_eps_list();
    if (eps_list.size() < 4)
        throw InvalidInputError("sweep: needs at least 4 scales");
    for (double e : eps_list)
        if (!(e > 0) || e > 1.0)
            throw InvalidInputError("sweep: scales must lie in (0, 1]");
    require_h1(sigma.quad->backend, "sweep");
    if (!basis.quad || !same_box(*sigma.quad, *basis.quad))
        throw BackendMismatchError(
            "sweep: the basis must share the symbol's box");
    if (w.a.backend != Backend::Heisenberg ||
        !same_grid(*sigma.quad, *w.a.quad))
        throw BackendMismatchError(
            "sweep: the window must live on the symbol grid");
    std::sort(eps_list.begin(), eps_list.end(), std::greater<double>());

    EpsilonSweep out;
    out.records.resize(eps_list.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0;
         i < static_cast<std::ptrdiff_t>(eps_list.size()); ++i) {
        const double e = eps_list[static_cast<std::size_t>(i)];
        EpsilonRecord r;
        r.eps = e;
        const OperatorMatrix Mop = op_eps_matrix(sigma, e, basis, false);
        const OperatorMatrix Mw = wick_eps_matrix(w, sigma, e, basis, false);
        r.lambda_min = herm_min_eig(Mop.m);
        r.garding_metric = std::max(0.0, -r.lambda_min);
        r.wick_lambda_min = herm_min_eig(Mw.m);
        r.comparison_norm = op_norm(
            OperatorMatrix{Backend::Heisenberg, Mop.m - Mw.m, false});
        const A0Defect d = a0_defect_terms(w, sigma, e, basis.quad);
        r.a0_defect = d.total;
        r.i1 = d.i1;
        r.i2 = d.i2;
        out.records[static_cast<std::size_t>(i)] = r;
    }
    // Noise floors.  The averaged operator is psd in exact arithmetic, so
    // its measured negativity across the sweep floors the lower-bound
    // metric; the defect metrics are refloored by recomputing the smallest
    // scale on a refined z quadrature and taking the shift as the error
    // estimate.
    for (const EpsilonRecord& r : out.records)
        out.garding_floor = std::max(
            out.garding_floor, std::max(0.0, -r.wick_lambda_min));
    {
        const double e = eps_list.back();
        int pr = sigma.quad->pts_per_axis +
                 (sigma.quad->pts_per_axis - 1) / 2;
        if (pr % 2 == 0) ++pr;
        const QuadPtr zq = std::make_shared<const HaarQuadrature>(
            h1_quadrature(sigma.quad->box_radius, pr));
        const EpsilonRecord& last = out.records.back();
        // same formulas, z and w quadratures on the refined grid
        A0Symbol s2 = sigma;
        s2.quad = zq;
        Window w2 = w;
        w2.a.quad = zq;
        {
            Vec samp(static_cast<Eigen::Index>(zq->size()));
            for (std::size_t m = 0; m < zq->size(); ++m)
                samp(static_cast<Eigen::Index>(m)) = w.eval(zq->nodes[m]);
            w2.a.samples = samp;
        }
        const A0Defect dr = a0_defect_terms(w2, s2, e, basis.quad);
        const OperatorMatrix Mop = op_eps_matrix(sigma, e, basis, false);
        const OperatorMatrix Mwr =
            wick_eps_matrix(w2, s2, e, basis, false);
        const double cmp_r = op_norm(
            OperatorMatrix{Backend::Heisenberg, Mop.m - Mwr.m, false});
        out.comparison_floor = std::fabs(last.comparison_norm - cmp_r);
        out.a0_floor = std::fabs(last.a0_defect - dr.total);
        out.i1_floor = std::fabs(last.i1 - dr.i1);
        out.i2_floor = std::fabs(last.i2 - dr.i2);
    }
    std::vector<double> eps(out.records.size());
    std::vector<double> mg(out.records.size()), mc(out.records.size()),
        ma(out.records.size()), m1(out.records.size()), m2(out.records.size());
    for (std::size_t i = 0; i < out.records.size(); ++i) {
        eps[i] = out.records[i].eps;
        mg[i] = out.records[i].garding_metric;
        mc[i] = out.records[i].comparison_norm;
        ma[i] = out.records[i].a0_defect;
        m1[i] = out.records[i].i1;
        m2[i] = out.records[i].i2;
    }
    out.garding = fit_log_slope(eps, mg, out.garding_floor);
    out.comparison = fit_log_slope(eps, mc, out.comparison_floor);
    out.a0 = fit_log_slope(eps, ma, out.a0_floor);
    out.i1 = fit_log_slope(eps, m1, out.i1_floor);
    out.i2 = fit_log_slope(eps, m2, out.i2_floor);
    return out;
}

double spectral_norm_estimate(const Mat& m, int iters) {
    if (m.rows() == 0) return 0.0;
    Vec v = Vec::Ones(m.cols());
    for (Eigen::Index i = 0; i < v.size(); ++i)
        v(i) += cplx(0.3 * std::sin(1.7 * double(i + 1)),
                     0.2 * std::cos(2.3 * double(i + 1)));
    v.normalize();
    double last = 0;
    for (int it = 0; it < iters; ++it) {
        const Vec av = m * v;
        const Vec w2 = m.adjoint() * av;
        const double n2 = w2.norm();
        if (!(n2 > 0)) return 0.0;
        const double est = av.norm(); // ||m v|| with ||v|| = 1
        v = w2 / n2;
        if (it > 4 && std::fabs(est - last) <= 1e-12 * std::max(est, 1.0))
            return est;
        last = est;
    }
    return last;
}

} // namespace ncwick
