#include "ncwick/kn.hpp"

#include <cmath>
#include <cstddef>

#include "pack.hpp"

namespace ncwick {

using detail::SlicePack;
using detail::check_backend;
using detail::guard_bytes;
using detail::h1_boundary_node;
using detail::make_pack;
using detail::max_abs_label;
using detail::trace_prod;

KernelField symbol_to_kernel(const SymbolField& sigma) {
    const HaarQuadrature& qd = *sigma.quad;
    const IrrepSlice& sl = *sigma.slice;
    const std::size_t n = qd.size();
    const std::size_t nx = sigma.x_independent ? 1 : n;
    const SlicePack pack = make_pack(sl);
    guard_bytes(nx * n + pack.total * nx, "symbol_to_kernel");

    // kappa_x(y) = sum_labels weight tr(pi(y) sigma(x, pi)), organised as a
    // (y, entries) x (entries, x) product and blocked over y to bound the
    // scratch for the pi-value rows.
    Mat Q(pack.total, nx);
    for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t j = 0; j < sl.size(); ++j) {
            const Mat& c = sigma.value[i][j];
            const int d = sl.dims[j];
            for (int m = 0; m < d; ++m)
                for (int nn = 0; nn < d; ++nn)
                    Q(pack.off[j] + m * d + nn, i) =
                        sl.weights[j] * c(nn, m);
        }

    KernelField k;
    k.backend = sigma.backend;
    k.quad = sigma.quad;
    k.slice = sigma.slice;
    k.x_independent = sigma.x_independent;
    k.band_limit =
        sigma.backend == Backend::Heisenberg ? -1.0 : max_abs_label(sl);
    k.values.resize(nx, n);

    const std::size_t block =
        std::max<std::size_t>(1, (std::size_t{64} << 20) /
                                     (sizeof(cplx) * pack.total));
    Mat P(std::min(block, n), pack.total);
    for (std::size_t y0 = 0; y0 < n; y0 += block) {
        const std::size_t rows = std::min(block, n - y0);
        for (std::size_t y = 0; y < rows; ++y) {
            const std::vector<Mat> pis = sl.evaluate_all(qd.nodes[y0 + y]);
            for (std::size_t j = 0; j < sl.size(); ++j) {
                const int d = sl.dims[j];
                for (int m = 0; m < d; ++m)
                    for (int nn = 0; nn < d; ++nn)
                        P(y, pack.off[j] + m * d + nn) = pis[j](m, nn);
            }
        }
        k.values.middleCols(y0, rows) =
            (P.topRows(rows) * Q).transpose();
    }

    if (sigma.backend == Backend::Heisenberg) {
        double bmax = 0;
        for (std::size_t y = 0; y < n; ++y)
            if (h1_boundary_node(qd, qd.nodes[y]))
                bmax = std::max(bmax,
                                k.values.col(y).cwiseAbs().maxCoeff());
        k.boundary_max = bmax;
    }
    return k;
}

SymbolField kernel_to_symbol(const KernelField& kappa, const SlicePtr& slice) {
    check_backend(kappa.backend, slice->backend, "kernel_to_symbol");
    const HaarQuadrature& qd = *kappa.quad;
    const IrrepSlice& sl = *slice;
    const std::size_t n = qd.size();
    const std::size_t nx = static_cast<std::size_t>(kappa.values.rows());
    const SlicePack pack = make_pack(sl);
    guard_bytes(nx * pack.total, "kernel_to_symbol");

    // Row-wise transform sigma(x, pi) = kappa_x^(pi), again blocked over y.
    Mat F = Mat::Zero(nx, pack.total);
    const std::size_t block =
        std::max<std::size_t>(1, (std::size_t{64} << 20) /
                                     (sizeof(cplx) * pack.total));
    Mat R(std::min(block, n), pack.total);
    for (std::size_t y0 = 0; y0 < n; y0 += block) {
        const std::size_t rows = std::min(block, n - y0);
        for (std::size_t y = 0; y < rows; ++y) {
            const std::vector<Mat> pis = sl.evaluate_all(qd.nodes[y0 + y]);
            const double w = qd.weights[y0 + y];
            for (std::size_t j = 0; j < sl.size(); ++j) {
                const int d = sl.dims[j];
                for (int a = 0; a < d; ++a)
                    for (int b = 0; b < d; ++b)
                        R(y, pack.off[j] + a * d + b) =
                            w * std::conj(pis[j](b, a));
            }
        }
        F += kappa.values.middleCols(y0, rows) * R.topRows(rows);
    }

    SymbolField s;
    s.backend = kappa.backend;
    s.quad = kappa.quad;
    s.slice = slice;
    s.x_independent = kappa.x_independent;
    s.value.resize(nx);
    for (std::size_t i = 0; i < nx; ++i) {
        s.value[i].resize(sl.size());
        for (std::size_t j = 0; j < sl.size(); ++j) {
            const int d = sl.dims[j];
            Mat m(d, d);
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b)
                    m(a, b) = F(i, pack.off[j] + a * d + b);
            s.value[i][j] = std::move(m);
        }
    }
    return s;
}

double a0_norm(const KernelField& kappa) {
    const HaarQuadrature& qd = *kappa.quad;
    double s = 0;
    for (std::size_t y = 0; y < qd.size(); ++y)
        s += qd.weights[y] * kappa.values.col(y).cwiseAbs().maxCoeff();
    return s;
}

GridFunction opkn_apply(const SymbolField& sigma, const GridFunction& f) {
    check_backend(sigma.backend, f.backend, "opkn_apply");
    const HaarQuadrature& qd = *sigma.quad;
    const IrrepSlice& sl = *sigma.slice;
    const FourierField F = fourier(f, sigma.slice);

    GridFunction out;
    out.backend = sigma.backend;
    out.quad = sigma.quad;
    out.samples = Vec(qd.size());
    out.band_limit =
        sigma.backend == Backend::Heisenberg ? -1.0 : max_abs_label(sl);

    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(qd.size());
#pragma omp parallel for schedule(dynamic) num_threads(thread_count())
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const std::vector<Mat> pis = sl.evaluate_all(qd.nodes[i]);
        cplx acc = 0;
        for (std::size_t j = 0; j < sl.size(); ++j)
            acc += sl.weights[j] *
                   trace_prod(pis[j], sigma.at(i, j) * F.coeff[j]);
        out.samples(i) = acc;
    }
    return out;
}

Vec opkn_apply_kernel(const SymbolField& sigma, const GridFunction& f,
                      const std::vector<std::size_t>& at) {
    check_backend(sigma.backend, f.backend, "opkn_apply_kernel");
    const HaarQuadrature& qd = *sigma.quad;
    const IrrepSlice& sl = *sigma.slice;
    if (f.quad->size() != qd.size())
        throw InvalidInputError(
            "opkn_apply_kernel: f must live on the symbol's quadrature");

    std::vector<std::size_t> nodes = at;
    if (nodes.empty()) {
        nodes.resize(qd.size());
        for (std::size_t i = 0; i < qd.size(); ++i) nodes[i] = i;
    }
    for (std::size_t xi : nodes)
        if (xi >= qd.size())
            throw InvalidInputError("opkn_apply_kernel: node index out of "
                                    "range");
    const double fmax = f.samples.cwiseAbs().maxCoeff();
    const double skip = 1e-15 * fmax;

    Vec out(nodes.size());
    const std::ptrdiff_t nr = static_cast<std::ptrdiff_t>(nodes.size());
#pragma omp parallel for schedule(dynamic) num_threads(thread_count())
    for (std::ptrdiff_t r = 0; r < nr; ++r) {
        const std::size_t xi = nodes[r];
        const GroupPoint& x = qd.nodes[xi];
        cplx acc = 0;
        for (std::size_t y = 0; y < qd.size(); ++y) {
            const cplx fy = f.samples(y);
            if (std::abs(fy) <= skip) continue;
            const GroupPoint p = mul(inv(qd.nodes[y]), x);
            const std::vector<Mat> pis = sl.evaluate_all(p);
            cplx kap = 0;
            for (std::size_t j = 0; j < sl.size(); ++j)
                kap += sl.weights[j] * trace_prod(pis[j], sigma.at(xi, j));
            acc += qd.weights[y] * fy * kap;
        }
        out(r) = acc;
    }
    return out;
}

OperatorBasis peter_weyl_basis(const QuadPtr& quad, const SlicePtr& slice) {
    check_backend(quad->backend, slice->backend, "peter_weyl_basis");
    if (quad->backend == Backend::Heisenberg)
        throw InvalidInputError(
            "peter_weyl_basis: coefficient bases need a compact backend");
    const SlicePack pack = make_pack(*slice);
    OperatorBasis b;
    b.backend = quad->backend;
    b.quad = quad;
    b.kind = "peter-weyl";
    b.samples.resize(quad->size(), pack.total);
    for (std::size_t i = 0; i < quad->size(); ++i) {
        const std::vector<Mat> pis = slice->evaluate_all(quad->nodes[i]);
        for (std::size_t j = 0; j < slice->size(); ++j) {
            const int d = slice->dims[j];
            const double sd = std::sqrt(static_cast<double>(d));
            for (int m = 0; m < d; ++m)
                for (int nn = 0; nn < d; ++nn)
                    b.samples(i, pack.off[j] + m * d + nn) =
                        sd * pis[j](m, nn);
        }
    }
    return b;
}

OperatorBasis grid_basis(const QuadPtr& quad) {
    OperatorBasis b;
    b.backend = quad->backend;
    b.quad = quad;
    b.kind = "grid";
    return b;
}

OperatorMatrix assemble_matrix(const SymbolField& sigma,
                               const OperatorBasis& basis, bool symmetrize) {
    check_backend(sigma.backend, basis.backend, "assemble_matrix");
    const HaarQuadrature& qd = *basis.quad;
    const IrrepSlice& sl = *sigma.slice;
    const std::size_t n = qd.size();
    if (sigma.quad->size() != n)
        throw InvalidInputError(
            "assemble_matrix: symbol and basis use different quadratures");

    OperatorMatrix M;
    M.backend = sigma.backend;

    if (basis.kind == "grid") {
        // The image of a weighted node indicator under the trace form is an
        // exact dual-series evaluation at warped points:
        //   M[i][j] = sqrt(w_i w_j) sum_labels weight tr(pi(x_i) sigma(x_i)
        //             pi(y_j)^*),
        // assembled as one rank-K product (K = packed slice entries).
        const SlicePack pack = make_pack(sl);
        guard_bytes(2 * n * pack.total + n * n, "assemble_matrix");
        Mat U(n, pack.total), V(n, pack.total);
        const std::ptrdiff_t ni = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic) num_threads(thread_count())
        for (std::ptrdiff_t i = 0; i < ni; ++i) {
            const std::vector<Mat> pis = sl.evaluate_all(qd.nodes[i]);
            for (std::size_t j = 0; j < sl.size(); ++j) {
                const int d = sl.dims[j];
                const Mat prod = sl.weights[j] * (pis[j] * sigma.at(i, j));
                for (int m = 0; m < d; ++m)
                    for (int nn = 0; nn < d; ++nn) {
                        V(i, pack.off[j] + m * d + nn) = pis[j](m, nn);
                        U(i, pack.off[j] + m * d + nn) = prod(m, nn);
                    }
            }
        }
        M.m.noalias() = U * V.adjoint();
        for (std::size_t i = 0; i < n; ++i)
            M.m.row(i) *= std::sqrt(qd.weights[i]);
        for (std::size_t j = 0; j < n; ++j)
            M.m.col(j) *= std::sqrt(qd.weights[j]);
    } else {
        const Mat& B = basis.samples;
        const Eigen::Map<const RVec> w(qd.weights.data(), n);
        const Mat gram = B.adjoint() * (w.asDiagonal() * B);
        const double defect =
            (gram - Mat::Identity(gram.rows(), gram.cols()))
                .cwiseAbs()
                .maxCoeff();
        if (defect > 1e-10)
            throw InvalidInputError(
                "assemble_matrix: basis not orthonormal under its "
                "quadrature (Gram defect = " +
                std::to_string(defect) + ")");

        const std::size_t K = basis.size();
        Mat G(n, K);
        const std::ptrdiff_t nk = static_cast<std::ptrdiff_t>(K);
#pragma omp parallel for schedule(dynamic) num_threads(thread_count())
        for (std::ptrdiff_t col = 0; col < nk; ++col) {
            GridFunction bj;
            bj.backend = basis.backend;
            bj.quad = basis.quad;
            bj.samples = B.col(col);
            G.col(col) = opkn_apply(sigma, bj).samples;
        }
        M.m.noalias() = B.adjoint() * (w.asDiagonal() * G);
    }

    if (symmetrize) {
        M.m = 0.5 * (M.m + M.m.adjoint().eval());
        M.symmetrized = true;
    }
    return M;
}

double op_norm(const OperatorMatrix& M) {
    if (M.m.rows() == 0) return 0.0;
    if (M.symmetrized) {
        Eigen::SelfAdjointEigenSolver<Mat> es(M.m,
                                              Eigen::EigenvaluesOnly);
        return es.eigenvalues().cwiseAbs().maxCoeff();
    }
    if (M.m.rows() <= 96) {
        Eigen::JacobiSVD<Mat> svd(M.m);
        return svd.singularValues()(0);
    }
    Eigen::BDCSVD<Mat> svd(M.m);
    return svd.singularValues()(0);
}

double hs_norm(const OperatorMatrix& M) { return M.m.norm(); }

} // namespace ncwick
