#include "ncwick/wick.hpp"

#include <cmath>
#include <cstddef>
#include <memory>

#include "ncwick/calculus.hpp"
#include "pack.hpp"

namespace ncwick {

using detail::SlicePack;
using detail::check_backend;
using detail::h1_boundary_node;
using detail::make_pack;
using detail::max_abs_label;

namespace {

void guard_cap(std::size_t entries, std::size_t cap_bytes, const char* what) {
    if (entries * sizeof(cplx) > cap_bytes)
        throw CapacityError(
            std::string(what) + ": dense layout needs " +
            std::to_string(entries * sizeof(cplx)) +
            " bytes, above the cap of " + std::to_string(cap_bytes) +
            " bytes; shrink the slice or raise the cap");
}

// Packed representation matrices over a slice: P(y, off_j + m d + n) =
// pi_j(y)_{mn}.  The adjoint-side twist: entry (m, n) of a transform
// sum_y conj(pi_j(y)_{nm}) v(y) lands at packed row off_j + n d + m.
Mat pack_matrix(const HaarQuadrature& qd, const IrrepSlice& sl,
                const SlicePack& pack) {
    Mat P(qd.size(), pack.total);
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(qd.size());
#pragma omp parallel for schedule(dynamic) num_threads(thread_count())
    for (std::ptrdiff_t y = 0; y < n; ++y) {
        const std::vector<Mat> pis = sl.evaluate_all(qd.nodes[y]);
        for (std::size_t j = 0; j < sl.size(); ++j) {
            const int d = sl.dims[j];
            for (int m = 0; m < d; ++m)
                for (int nn = 0; nn < d; ++nn)
                    P(y, pack.off[j] + static_cast<std::size_t>(m) * d + nn) =
                        pis[j](m, nn);
        }
    }
    return P;
}

// Window values at inverse-shifted nodes: A(y, k) = a(x_{x0+k}^{-1} y).
Mat window_block(const Window& w, const HaarQuadrature& qd, std::size_t x0,
                 std::size_t nb) {
    Mat A(qd.size(), nb);
    const std::ptrdiff_t cols = static_cast<std::ptrdiff_t>(nb);
#pragma omp parallel for schedule(dynamic) num_threads(thread_count())
    for (std::ptrdiff_t k = 0; k < cols; ++k) {
        const GroupPoint xi = inv(qd.nodes[x0 + static_cast<std::size_t>(k)]);
        for (std::size_t y = 0; y < qd.size(); ++y)
            A(y, static_cast<std::size_t>(k)) = w.eval(mul(xi, qd.nodes[y]));
    }
    return A;
}

std::size_t block_columns(std::size_t n) {
    const std::size_t bytes = std::size_t{32} << 20;
    return std::max<std::size_t>(1, bytes / (sizeof(cplx) * n));
}

double window_band(const Window& w) { return w.band_limit; }

double output_band(const Window& w, const IrrepSlice& sl) {
    if (sl.backend == Backend::Heisenberg || window_band(w) < 0) return -1.0;
    return max_abs_label(sl) + window_band(w);
}

// Images of every column of `fin` under the window quantization, sharing
// one pass of window evaluations and packed GEMMs per node block.
Mat opwick_batched(const Window& w, const SymbolField& sigma, const Mat& fin,
                   std::size_t cap_bytes) {
    const HaarQuadrature& qd = *sigma.quad;
    const IrrepSlice& sl = *sigma.slice;
    const SlicePack pack = make_pack(sl);
    const std::size_t n = qd.size();
    const std::size_t m = static_cast<std::size_t>(fin.cols());
    guard_cap(n * pack.total + 2 * pack.total * m + n * m, cap_bytes,
              "opwick_apply");

    const Mat P = pack_matrix(qd, sl, pack);
    Vec wtsc(n);
    for (std::size_t i = 0; i < n; ++i) wtsc(i) = qd.weights[i];
    Mat out = Mat::Zero(n, m);
    const std::size_t bx = block_columns(n);

    for (std::size_t x0 = 0; x0 < n; x0 += bx) {
        const std::size_t nb = std::min(bx, n - x0);
        const Mat A = window_block(w, qd, x0, nb);
        const std::ptrdiff_t cols = static_cast<std::ptrdiff_t>(nb);
#pragma omp parallel num_threads(thread_count())
        {
            Mat acc = Mat::Zero(n, m);
            Mat bx_mat(pack.total, m), qt(pack.total, m), bm, tm;
#pragma omp for schedule(dynamic)
            for (std::ptrdiff_t k = 0; k < cols; ++k) {
                const std::size_t xi = x0 + static_cast<std::size_t>(k);
                const Vec win = wtsc.cwiseProduct(A.col(k));
                // analysis: B(x, j)_{mn} at packed row off + n d + m
                bx_mat.noalias() =
                    P.adjoint() * (fin.array().colwise() * win.array())
                                      .matrix();
                // pointwise symbol action per label and column
                for (std::size_t j = 0; j < sl.size(); ++j) {
                    const int d = sl.dims[j];
                    const Mat& sg = sigma.at(xi, j);
                    bm.resize(d, d);
                    for (std::size_t c = 0; c < m; ++c) {
                        for (int mm = 0; mm < d; ++mm)
                            for (int nn = 0; nn < d; ++nn)
                                bm(mm, nn) = bx_mat(
                                    pack.off[j] +
                                        static_cast<std::size_t>(nn) * d + mm,
                                    c);
                        tm.noalias() = sg * bm;
                        for (int mm = 0; mm < d; ++mm)
                            for (int nn = 0; nn < d; ++nn)
                                qt(pack.off[j] +
                                       static_cast<std::size_t>(nn) * d + mm,
                                   c) = sl.weights[j] * tm(mm, nn);
                    }
                }
                // synthesis contribution of this node
                const Mat syn = P * qt;
                acc += qd.weights[xi] * (syn.array().colwise() *
                                         A.col(k).conjugate().array())
                                            .matrix();
            }
#pragma omp critical
            out += acc;
        }
    }
    return out;
}

} // namespace

Window make_window(const QuadPtr& quad,
                   const std::function<cplx(const GroupPoint&)>& raw,
                   double band_limit) {
    const std::size_t n = quad->size();
    Vec samples(n);
    for (std::size_t i = 0; i < n; ++i) samples(i) = raw(quad->nodes[i]);
    double nrm2 = 0;
    for (std::size_t i = 0; i < n; ++i)
        nrm2 += quad->weights[i] * std::norm(samples(i));
    if (!(nrm2 > 0))
        throw InvalidInputError(
            "make_window: the window vanishes on the quadrature nodes");
    const double nrm = std::sqrt(nrm2);

    Window w;
    w.a.backend = quad->backend;
    w.a.quad = quad;
    w.a.samples = samples / nrm;
    w.a.band_limit = band_limit;
    w.band_limit = band_limit;
    w.eval = [raw, nrm](const GroupPoint& p) { return raw(p) / nrm; };

    double even_defect = 0, imag_defect = 0;
    for (std::size_t i = 0; i < n; ++i) {
        even_defect = std::max(
            even_defect,
            std::abs(w.eval(inv(quad->nodes[i])) - w.a.samples(i)));
        imag_defect = std::max(imag_defect, std::abs(w.a.samples(i).imag()));
    }
    w.even = even_defect <= 1e-10;
    w.real = imag_defect <= 1e-10;
    return w;
}

Window constant_window(const QuadPtr& quad) {
    return make_window(
        quad, [](const GroupPoint&) { return cplx(1.0); }, 0.0);
}

Window gaussian_window(const QuadPtr& quad, double width) {
    if (!(width > 0))
        throw InvalidInputError("gaussian_window: width must be positive");
    if (quad->backend == Backend::Su2)
        throw InvalidInputError(
            "gaussian_window: no Gaussian family on su2; use heat_window");
    if (quad->backend == Backend::Torus) {
        // Periodized Gaussian; coefficients fall below 1e-14 relative past
        // k = 1.28 / width, which is the declared band.
        const double band = std::ceil(1.2784 / width);
        return make_window(
            quad,
            [width](const GroupPoint& p) {
                const double r = p.c[0] - std::round(p.c[0]);
                double s = 0;
                for (int k = -8; k <= 8; ++k)
                    s += std::exp(-(r - k) * (r - k) / (2 * width * width));
                return cplx(s);
            },
            band);
    }
    return make_window(quad, [width](const GroupPoint& p) {
        const double r2 =
            p.c[0] * p.c[0] + p.c[1] * p.c[1] + p.c[2] * p.c[2];
        return cplx(std::exp(-r2 / (2 * width * width)));
    });
}

Window heat_window(const QuadPtr& quad, double t) {
    const auto hk = std::make_shared<const HeatKernel>(heat_kernel(quad, t));
    return make_window(
        quad,
        [hk](const GroupPoint& p) { return cplx(heat_kernel_value(*hk, p)); },
        hk->cutoff);
}

Window sqrt_heat_window(const QuadPtr& quad, double t) {
    const auto hk = std::make_shared<const HeatKernel>(heat_kernel(quad, t));
    // the square root amplifies relative error near zero, so the node
    // values must clear the truncation uncertainty by two orders
    const double mn = hk->samples.samples.real().minCoeff();
    if (mn <= 100 * hk->tail_bound)
        throw InvalidInputError(
            "sqrt_heat_window: the truncated heat kernel is not safely "
            "positive at the nodes; increase t");
    return make_window(quad, [hk](const GroupPoint& p) {
        return cplx(std::sqrt(std::max(heat_kernel_value(*hk, p), 0.0)));
    });
}

double l2_norm(const BargmannField& tau) {
    const HaarQuadrature& qd = *tau.quad;
    const IrrepSlice& sl = *tau.slice;
    double acc = 0;
    for (std::size_t i = 0; i < qd.size(); ++i) {
        double fx = 0;
        for (std::size_t j = 0; j < sl.size(); ++j)
            fx += sl.weights[j] * tau.value[i][j].squaredNorm();
        acc += qd.weights[i] * fx;
    }
    return std::sqrt(acc);
}

BargmannField bargmann(const Window& w, const GridFunction& f,
                       const SlicePtr& slice, std::size_t cap_bytes) {
    check_backend(f.backend, slice->backend, "bargmann");
    check_backend(f.backend, w.a.backend, "bargmann");
    const HaarQuadrature& qd = *f.quad;
    const IrrepSlice& sl = *slice;
    const SlicePack pack = make_pack(sl);
    const std::size_t n = qd.size();
    guard_cap(n * pack.total, cap_bytes, "bargmann");

    const Mat P = pack_matrix(qd, sl, pack);
    Vec wf(n);
    for (std::size_t y = 0; y < n; ++y)
        wf(y) = qd.weights[y] * f.samples(y);

    BargmannField tau;
    tau.backend = f.backend;
    tau.quad = f.quad;
    tau.slice = slice;
    tau.value.resize(n);

    const std::size_t bx = block_columns(n);
    for (std::size_t x0 = 0; x0 < n; x0 += bx) {
        const std::size_t nb = std::min(bx, n - x0);
        const Mat A = window_block(w, qd, x0, nb);
        const Mat blk =
            P.adjoint() * (A.array().colwise() * wf.array()).matrix();
        const std::ptrdiff_t cols = static_cast<std::ptrdiff_t>(nb);
#pragma omp parallel for schedule(dynamic) num_threads(thread_count())
        for (std::ptrdiff_t k = 0; k < cols; ++k) {
            const std::size_t xi = x0 + static_cast<std::size_t>(k);
            tau.value[xi].resize(sl.size());
            for (std::size_t j = 0; j < sl.size(); ++j) {
                const int d = sl.dims[j];
                Mat mjk(d, d);
                for (int mm = 0; mm < d; ++mm)
                    for (int nn = 0; nn < d; ++nn)
                        mjk(mm, nn) = blk(
                            pack.off[j] + static_cast<std::size_t>(nn) * d +
                                mm,
                            k);
                tau.value[xi][j] = std::move(mjk);
            }
        }
    }
    return tau;
}

GridFunction bargmann_adjoint(const Window& w, const BargmannField& tau) {
    check_backend(tau.backend, w.a.backend, "bargmann_adjoint");
    const HaarQuadrature& qd = *tau.quad;
    const IrrepSlice& sl = *tau.slice;
    const SlicePack pack = make_pack(sl);
    const std::size_t n = qd.size();

    const Mat P = pack_matrix(qd, sl, pack);
    GridFunction out;
    out.backend = tau.backend;
    out.quad = tau.quad;
    out.samples = Vec::Zero(n);
    out.band_limit = output_band(w, sl);

    const std::size_t bx = block_columns(n);
    Mat qt(pack.total, bx);
    for (std::size_t x0 = 0; x0 < n; x0 += bx) {
        const std::size_t nb = std::min(bx, n - x0);
        const Mat A = window_block(w, qd, x0, nb);
        for (std::size_t k = 0; k < nb; ++k) {
            const std::size_t xi = x0 + k;
            for (std::size_t j = 0; j < sl.size(); ++j) {
                const int d = sl.dims[j];
                const Mat& t = tau.value[xi][j];
                for (int mm = 0; mm < d; ++mm)
                    for (int nn = 0; nn < d; ++nn)
                        qt(pack.off[j] + static_cast<std::size_t>(nn) * d +
                               mm,
                           k) = sl.weights[j] * t(mm, nn);
            }
        }
        const Mat S = P * qt.leftCols(nb);
        for (std::size_t k = 0; k < nb; ++k)
            out.samples +=
                qd.weights[x0 + k] *
                A.col(k).conjugate().cwiseProduct(S.col(k));
    }
    return out;
}

GridFunction opwick_apply(const Window& w, const SymbolField& sigma,
                          const GridFunction& f, std::size_t cap_bytes) {
    check_backend(sigma.backend, f.backend, "opwick_apply");
    check_backend(sigma.backend, w.a.backend, "opwick_apply");
    if (sigma.quad->size() != f.quad->size())
        throw InvalidInputError(
            "opwick_apply: f must live on the symbol's quadrature");
    const Mat out = opwick_batched(w, sigma, f.samples, cap_bytes);
    GridFunction g;
    g.backend = sigma.backend;
    g.quad = f.quad;
    g.samples = out.col(0);
    g.band_limit = output_band(w, *sigma.slice);
    return g;
}

KernelField wick_kernel(const Window& w, const SymbolField& sigma,
                        const SlicePtr& x_band) {
    check_backend(sigma.backend, w.a.backend, "wick_kernel");
    const HaarQuadrature& qd = *sigma.quad;
    const IrrepSlice& sl = *sigma.slice;
    const std::size_t n = qd.size();

    KernelField out;
    out.backend = sigma.backend;
    out.quad = sigma.quad;
    out.slice = sigma.slice;
    out.x_independent = sigma.x_independent;
    out.band_limit = output_band(w, sl);

    if (sigma.x_independent) {
        // kappa^w_x(v) = kappa(v) * sum_z mu_z a(z v^{-1}) conj(a(z))
        const KernelField k0 = symbol_to_kernel(sigma);
        out.values.resize(1, n);
        const std::ptrdiff_t nv = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic) num_threads(thread_count())
        for (std::ptrdiff_t v = 0; v < nv; ++v) {
            const GroupPoint vi = inv(qd.nodes[v]);
            cplx g = 0;
            for (std::size_t z = 0; z < n; ++z)
                g += qd.weights[z] * w.eval(mul(qd.nodes[z], vi)) *
                     std::conj(w.eval(qd.nodes[z]));
            out.values(0, v) = k0.values(0, v) * g;
        }
        if (sigma.backend == Backend::Heisenberg) {
            double bmax = 0;
            for (std::size_t v = 0; v < n; ++v)
                if (h1_boundary_node(qd, qd.nodes[v]))
                    bmax = std::max(bmax, std::abs(out.values(0, v)));
            out.boundary_max = bmax;
        }
        return out;
    }

    if (sigma.backend == Backend::Heisenberg)
        throw InvalidInputError(
            "wick_kernel: x-dependent symbols on the heisenberg box have no "
            "global x-reconstruction; use the dilation-scaled semiclassical "
            "routines instead");
    if (!x_band)
        throw InvalidInputError(
            "wick_kernel: an x-dependent symbol needs x_band, the slice "
            "carrying its dependence on x");
    check_backend(sigma.backend, x_band->backend, "wick_kernel");

    const IrrepSlice& xb = *x_band;
    const SlicePack pack = make_pack(sl);
    const SlicePack xpack = make_pack(xb);
    const Mat P = pack_matrix(qd, sl, pack);
    const Mat Px = pack_matrix(qd, xb, xpack);
    const Eigen::Map<const RVec> wts(qd.weights.data(),
                                     static_cast<Eigen::Index>(n));

    // x-content of every symbol entry: C(off_q + s d + r, p) is the (r, s)
    // entry of the x-transform of entry p at x-label q.
    Mat E(n, pack.total);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < sl.size(); ++j) {
            const int d = sl.dims[j];
            const Mat& sg = sigma.at(i, j);
            for (int mm = 0; mm < d; ++mm)
                for (int nn = 0; nn < d; ++nn)
                    E(i,
                      pack.off[j] + static_cast<std::size_t>(mm) * d + nn) =
                        sg(mm, nn);
        }
    const Mat C = Px.adjoint() * (E.array().colwise() *
                                  wts.array().cast<cplx>())
                                     .matrix();

    // Window-correlation tensor against the x-band matrix entries:
    // T(off_q + s d + u, v) = sum_z mu_z a(z v^{-1}) conj(a(z))
    //                          conj(pi_q(z)_{su}).
    Vec wbar(n);
    for (std::size_t z = 0; z < n; ++z)
        wbar(z) = qd.weights[z] * std::conj(w.eval(qd.nodes[z]));
    Mat T(xpack.total, n);
    {
        const std::size_t bv = block_columns(n);
        for (std::size_t v0 = 0; v0 < n; v0 += bv) {
            const std::size_t nb = std::min(bv, n - v0);
            Mat Amat(n, nb);
            const std::ptrdiff_t cols = static_cast<std::ptrdiff_t>(nb);
#pragma omp parallel for schedule(dynamic) num_threads(thread_count())
            for (std::ptrdiff_t k = 0; k < cols; ++k) {
                const GroupPoint vi =
                    inv(qd.nodes[v0 + static_cast<std::size_t>(k)]);
                for (std::size_t z = 0; z < n; ++z)
                    Amat(z, static_cast<std::size_t>(k)) =
                        wbar(z) * w.eval(mul(qd.nodes[z], vi));
            }
            T.middleCols(v0, nb).noalias() = Px.adjoint() * Amat;
        }
    }

    out.values.resize(n, n);
    const std::ptrdiff_t nv = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel num_threads(thread_count())
    {
        std::vector<Mat> D(xb.size()), G(xb.size());
        Vec gvec(xpack.total);
#pragma omp for schedule(dynamic)
        for (std::ptrdiff_t v = 0; v < nv; ++v) {
            for (std::size_t q = 0; q < xb.size(); ++q)
                D[q] = Mat::Zero(xb.dims[q], xb.dims[q]);
            // contract the symbol entries with pi_j(v)
            for (std::size_t j = 0; j < sl.size(); ++j) {
                const int d = sl.dims[j];
                for (int mm = 0; mm < d; ++mm)
                    for (int nn = 0; nn < d; ++nn) {
                        const cplx vp =
                            sl.weights[j] *
                            P(v, pack.off[j] +
                                     static_cast<std::size_t>(nn) * d + mm);
                        if (vp == cplx(0)) continue;
                        const std::size_t p =
                            pack.off[j] + static_cast<std::size_t>(mm) * d +
                            nn;
                        for (std::size_t q = 0; q < xb.size(); ++q) {
                            const int dq = xb.dims[q];
                            for (int r = 0; r < dq; ++r)
                                for (int s = 0; s < dq; ++s)
                                    D[q](r, s) +=
                                        vp *
                                        C(xpack.off[q] +
                                              static_cast<std::size_t>(s) *
                                                  dq +
                                              r,
                                          p);
                        }
                    }
            }
            // fold in the window correlation and expand back over x
            for (std::size_t q = 0; q < xb.size(); ++q) {
                const int dq = xb.dims[q];
                Mat Tq(dq, dq);
                for (int s = 0; s < dq; ++s)
                    for (int u = 0; u < dq; ++u)
                        Tq(s, u) = T(
                            xpack.off[q] + static_cast<std::size_t>(s) * dq +
                                u,
                            v);
                G[q].noalias() = D[q].transpose() * Tq;
                for (int r = 0; r < dq; ++r)
                    for (int u = 0; u < dq; ++u)
                        gvec(xpack.off[q] + static_cast<std::size_t>(r) * dq +
                             u) = xb.weights[q] * G[q](r, u);
            }
            out.values.col(v).noalias() = Px * gvec;
        }
    }
    return out;
}

FrameTable frame_coefficients(const Window& w, const GridFunction& f,
                              const SlicePtr& slice, std::size_t cap_bytes) {
    check_backend(f.backend, slice->backend, "frame_coefficients");
    check_backend(f.backend, w.a.backend, "frame_coefficients");
    const HaarQuadrature& qd = *f.quad;
    const IrrepSlice& sl = *slice;
    const SlicePack pack = make_pack(sl);
    const std::size_t n = qd.size();
    guard_cap(2 * n * pack.total, cap_bytes, "frame_coefficients");

    // Direct summation against the wave packets, off the packed GEMM path:
    // coef(k, l) = sum_y w_y f(y) a(x^{-1} y) conj(pi_j(y)_{lk}).
    std::vector<std::vector<Mat>> padj(n);
    const std::ptrdiff_t ni = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic) num_threads(thread_count())
    for (std::ptrdiff_t y = 0; y < ni; ++y) {
        const std::vector<Mat> pis = sl.evaluate_all(qd.nodes[y]);
        padj[y].resize(sl.size());
        for (std::size_t j = 0; j < sl.size(); ++j)
            padj[y][j] = pis[j].adjoint();
    }

    FrameTable tab;
    tab.backend = f.backend;
    tab.quad = f.quad;
    tab.slice = slice;
    tab.coef.resize(n);
#pragma omp parallel for schedule(dynamic) num_threads(thread_count())
    for (std::ptrdiff_t i = 0; i < ni; ++i) {
        const GroupPoint xi = inv(qd.nodes[i]);
        tab.coef[i].resize(sl.size());
        for (std::size_t j = 0; j < sl.size(); ++j)
            tab.coef[i][j] = Mat::Zero(sl.dims[j], sl.dims[j]);
        for (std::size_t y = 0; y < n; ++y) {
            const cplx c = qd.weights[y] * f.samples(y) *
                           w.eval(mul(xi, qd.nodes[y]));
            for (std::size_t j = 0; j < sl.size(); ++j)
                tab.coef[i][j] += c * padj[y][j];
        }
    }
    return tab;
}

double frame_sum(const FrameTable& t) {
    const HaarQuadrature& qd = *t.quad;
    const IrrepSlice& sl = *t.slice;
    double acc = 0;
    for (std::size_t i = 0; i < qd.size(); ++i) {
        double fx = 0;
        for (std::size_t j = 0; j < sl.size(); ++j)
            fx += sl.weights[j] * t.coef[i][j].squaredNorm();
        acc += qd.weights[i] * fx;
    }
    return acc;
}

OperatorMatrix assemble_wick_matrix(const Window& w, const SymbolField& sigma,
                                    const OperatorBasis& basis,
                                    bool symmetrize, std::size_t cap_bytes) {
    check_backend(sigma.backend, basis.backend, "assemble_wick_matrix");
    const HaarQuadrature& qd = *basis.quad;
    const std::size_t n = qd.size();
    if (sigma.quad->size() != n)
        throw InvalidInputError(
            "assemble_wick_matrix: symbol and basis use different "
            "quadratures");

    OperatorMatrix M;
    M.backend = sigma.backend;
    const Eigen::Map<const RVec> wts(qd.weights.data(),
                                     static_cast<Eigen::Index>(n));

    if (basis.kind == "grid") {
        Mat fin = Mat::Zero(n, n);
        for (std::size_t j = 0; j < n; ++j)
            fin(j, j) = 1.0 / std::sqrt(qd.weights[j]);
        const Mat out = opwick_batched(w, sigma, fin, cap_bytes);
        M.m = out;
        for (std::size_t i = 0; i < n; ++i)
            M.m.row(i) *= std::sqrt(qd.weights[i]);
    } else {
        const Mat& B = basis.samples;
        const Mat gram = B.adjoint() * (wts.asDiagonal() * B);
        const double defect =
            (gram - Mat::Identity(gram.rows(), gram.cols()))
                .cwiseAbs()
                .maxCoeff();
        if (defect > 1e-10)
            throw InvalidInputError(
                "assemble_wick_matrix: basis not orthonormal under its "
                "quadrature (Gram defect = " +
                std::to_string(defect) + ")");
        const Mat out = opwick_batched(w, sigma, B, cap_bytes);
        M.m.noalias() = B.adjoint() * (wts.asDiagonal() * out);
    }

    if (symmetrize) {
        M.m = 0.5 * (M.m + M.m.adjoint().eval());
        M.symmetrized = true;
    }
    return M;
}

} // namespace ncwick
