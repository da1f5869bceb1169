#include "ncwick/euclid.hpp"

#include <cmath>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ncwick {

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

} // namespace

std::size_t LineGrid::wrap(std::ptrdiff_t j, std::ptrdiff_t i) const {
    const std::ptrdiff_t m = j - i + n / 2;
    const std::ptrdiff_t r = ((m % n) + n) % n;
    return static_cast<std::size_t>(r);
}

LineGrid line_grid(double radius, int n, bool periodized) {
    if (!(radius > 0.0))
        throw InvalidInputError("line_grid: radius must be positive");
    if (n < 8 || n % 2 != 0)
        throw InvalidInputError("line_grid: need an even node count >= 8");
    LineGrid g;
    g.radius = radius;
    g.n = n;
    g.periodized = periodized;
    g.dx = 2.0 * radius / n;
    g.dxi = 1.0 / (2.0 * radius);
    g.nodes.resize(n);
    g.freqs.resize(n);
    for (int j = 0; j < n; ++j)
        g.nodes(j) = -radius + j * g.dx;
    for (int k = 0; k < n; ++k)
        g.freqs(k) = (k - n / 2) * g.dxi;
    g.phase.resize(n, n);
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            g.phase(k, j) =
                std::exp(cplx(0.0, -2.0 * PI * g.nodes(j) * g.freqs(k)));
    return g;
}

Vec line_fourier(const LineGrid& g, const Vec& f) {
    if (f.size() != g.n)
        throw InvalidInputError("line_fourier: vector does not match the grid");
    return g.dx * (g.phase * f);
}

Vec line_inverse_fourier(const LineGrid& g, const Vec& fhat) {
    if (fhat.size() != g.n)
        throw InvalidInputError(
            "line_inverse_fourier: vector does not match the grid");
    return g.dxi * (g.phase.adjoint() * fhat);
}

Mat make_line_symbol(const LineGrid& g,
                     const std::function<cplx(double, double)>& sig) {
    Mat out(g.n, g.n);
    for (int j = 0; j < g.n; ++j)
        for (int k = 0; k < g.n; ++k)
            out(j, k) = sig(g.nodes(j), g.freqs(k));
    return out;
}

Vec euclid_opkn(const LineGrid& g, const Mat& sigma, const Vec& f) {
    if (sigma.rows() != g.n || sigma.cols() != g.n || f.size() != g.n)
        throw InvalidInputError("euclid_opkn: sizes do not match the grid");
    const Vec fhat = line_fourier(g, f);
    Vec out(g.n);
    for (int j = 0; j < g.n; ++j) {
        cplx acc(0.0, 0.0);
        for (int k = 0; k < g.n; ++k)
            acc += std::conj(g.phase(k, j)) * sigma(j, k) * fhat(k);
        out(j) = g.dxi * acc;
    }
    return out;
}

Mat euclid_opkn_matrix(const LineGrid& g, const Mat& sigma) {
    if (sigma.rows() != g.n || sigma.cols() != g.n)
        throw InvalidInputError(
            "euclid_opkn_matrix: symbol does not match the grid");
    // Row x of kap holds the convolution kernel of that row's symbol,
    // evaluated on the displacement lattice; the matrix entry is the
    // kernel at displacement x_j - x_{j'} times the node weight.
    const Mat kap = g.dxi * (sigma * g.phase.conjugate());
    Mat out(g.n, g.n);
    for (int j = 0; j < g.n; ++j)
        for (int jp = 0; jp < g.n; ++jp)
            out(j, jp) = g.dx * kap(j, g.wrap(j, jp));
    return out;
}

Vec line_window(const LineGrid& g, double t) {
    if (!(t > 0.0))
        throw InvalidInputError("line_window: scale must be positive");
    const double edge = std::exp(-g.radius * g.radius / (2.0 * t * t));
    if (edge > 1e-10)
        throw TruncationError(
            "line_window: scale " + fmt(t) +
            " leaves a wrapped tail of " + fmt(edge) +
            " at the box edge; shrink the scale or enlarge the box");
    Vec a(g.n);
    const double amp = std::pow(PI, -0.25) / std::sqrt(t);
    const int images = g.periodized ? 4 : 0;
    for (int j = 0; j < g.n; ++j) {
        double s = 0.0;
        for (int r = -images; r <= images; ++r) {
            const double u = (g.nodes(j) + 2.0 * g.radius * r) / t;
            s += amp * std::exp(-0.5 * u * u);
        }
        a(j) = s;
    }
    const double nrm = std::sqrt(g.dx * a.squaredNorm());
    a /= nrm;
    return a;
}

namespace {

// shifted window table: A(j, i) = a(x_j - x_i)
Mat window_table(const LineGrid& g, const Vec& a) {
    Mat A(g.n, g.n);
    for (int j = 0; j < g.n; ++j)
        for (int i = 0; i < g.n; ++i)
            A(j, i) = a(g.wrap(j, i));
    return A;
}

void check_window(const LineGrid& g, const Vec& a, const char* where) {
    if (a.size() != g.n)
        throw InvalidInputError(std::string(where) +
                                ": window does not match the grid");
}

} // namespace

Mat euclid_bargmann(const LineGrid& g, const Vec& a, const Vec& f) {
    check_window(g, a, "euclid_bargmann");
    if (f.size() != g.n)
        throw InvalidInputError(
            "euclid_bargmann: vector does not match the grid");
    const Mat A = window_table(g, a);
    Mat windowed(g.n, g.n);
    for (int i = 0; i < g.n; ++i)
        windowed.col(i) = f.cwiseProduct(A.col(i));
    // column i of phase * windowed is the transform of f a(. - x_i)
    return g.dx * (g.phase * windowed).transpose();
}

Vec euclid_bargmann_adjoint(const LineGrid& g, const Vec& a, const Mat& tau) {
    check_window(g, a, "euclid_bargmann_adjoint");
    if (tau.rows() != g.n || tau.cols() != g.n)
        throw InvalidInputError(
            "euclid_bargmann_adjoint: table does not match the grid");
    const Mat A = window_table(g, a);
    // psi(i, j) = sum_k dxi tau(i, k) e^{2 pi i x_j xi_k}
    const Mat psi = g.dxi * (tau * g.phase.conjugate());
    Vec out(g.n);
    for (int j = 0; j < g.n; ++j) {
        cplx acc(0.0, 0.0);
        for (int i = 0; i < g.n; ++i)
            acc += std::conj(A(j, i)) * psi(i, j);
        out(j) = g.dx * acc;
    }
    return out;
}

double phase_space_norm(const LineGrid& g, const Mat& tau) {
    if (tau.rows() != g.n || tau.cols() != g.n)
        throw InvalidInputError(
            "phase_space_norm: table does not match the grid");
    return std::sqrt(g.dx * g.dxi) * tau.norm();
}

Vec euclid_opwick(const LineGrid& g, const Vec& a, const Mat& sigma,
                  const Vec& f) {
    if (sigma.rows() != g.n || sigma.cols() != g.n)
        throw InvalidInputError(
            "euclid_opwick: symbol does not match the grid");
    const Mat tau = euclid_bargmann(g, a, f);
    return euclid_bargmann_adjoint(g, a, tau.cwiseProduct(sigma));
}

Mat euclid_wick_matrix(const LineGrid& g, const Vec& a, const Mat& sigma) {
    check_window(g, a, "euclid_wick_matrix");
    if (sigma.rows() != g.n || sigma.cols() != g.n)
        throw InvalidInputError(
            "euclid_wick_matrix: symbol does not match the grid");
    const int n = g.n;
    const Mat A = window_table(g, a);
    const Mat kap = g.dxi * (sigma * g.phase.conjugate());
    const double w2 = g.dx * g.dx;
    Mat out(n, n);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(thread_count())
#endif
    for (int j = 0; j < n; ++j) {
        for (int jp = 0; jp < n; ++jp) {
            const std::size_t d = g.wrap(j, jp);
            cplx acc(0.0, 0.0);
            for (int i = 0; i < n; ++i)
                acc += std::conj(A(j, i)) * A(jp, i) * kap(i, d);
            out(j, jp) = w2 * acc;
        }
    }
    return out;
}

Mat euclid_wick_kernel(const LineGrid& g, const Vec& a, const Mat& sigma) {
    check_window(g, a, "euclid_wick_kernel");
    if (sigma.rows() != g.n || sigma.cols() != g.n)
        throw InvalidInputError(
            "euclid_wick_kernel: symbol does not match the grid");
    const int n = g.n;
    const Mat kap = g.dxi * (sigma * g.phase.conjugate());
    Mat out(n, n);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(thread_count())
#endif
    for (int j = 0; j < n; ++j) {
        for (int m = 0; m < n; ++m) {
            cplx acc(0.0, 0.0);
            for (int l = 0; l < n; ++l)
                acc += a(g.wrap(l, m)) * std::conj(a(l)) *
                       kap(g.wrap(j, l), m);
            out(j, m) = g.dx * acc;
        }
    }
    return out;
}

Mat euclid_wick_symbol(const LineGrid& g, const Vec& a, const Mat& sigma) {
    const Mat kw = euclid_wick_kernel(g, a, sigma);
    return g.dx * (kw * g.phase.transpose());
}

Mat euclid_delta_q(const LineGrid& g, const Vec& q, const Mat& sigma) {
    if (q.size() != g.n || sigma.rows() != g.n || sigma.cols() != g.n)
        throw InvalidInputError(
            "euclid_delta_q: sizes do not match the grid");
    const Mat kap = g.dxi * (sigma * g.phase.conjugate());
    Mat scaled(g.n, g.n);
    for (int j = 0; j < g.n; ++j)
        scaled.row(j) = kap.row(j).cwiseProduct(q.transpose());
    return g.dx * (scaled * g.phase.transpose());
}

Mat dual_weight_gram(const LineGrid& g, double order) {
    RVec w(g.n);
    for (int k = 0; k < g.n; ++k) {
        const double xi = g.freqs(k);
        w(k) = std::pow(1.0 + 4.0 * PI * PI * xi * xi, order);
    }
    const Mat weighted = w.asDiagonal() * g.phase;
    return (g.dx * g.dx * g.dxi) * (g.phase.adjoint() * weighted);
}

EuclidGardingReport euclid_garding_check(const LineGrid& g, const Mat& sigma,
                                         double window_t) {
    if (sigma.rows() != g.n || sigma.cols() != g.n)
        throw InvalidInputError(
            "euclid_garding_check: symbol does not match the grid");
    const double c_min = sigma.real().minCoeff();
    if (!(c_min > 0.0))
        throw InvalidInputError(
            "euclid_garding_check: needs a symbol with positive grid "
            "minimum, got " + fmt(c_min));

    const Vec a = line_window(g, window_t);
    RVec asq(g.n);
    for (int j = 0; j < g.n; ++j)
        asq(j) = std::norm(a(j));

    // mollified symbol: convolution against |a|^2 in the spatial slot
    Mat smoothed(g.n, g.n);
    for (int j = 0; j < g.n; ++j) {
        smoothed.row(j).setZero();
        for (int l = 0; l < g.n; ++l)
            smoothed.row(j) += (g.dx * asq(l)) * sigma.row(g.wrap(j, l));
    }

    const Mat direct = euclid_opkn_matrix(g, sigma);
    const Mat sym_direct = 0.5 * (direct + direct.adjoint());

    // defect of the mollification, charged at its full operator norm
    const Mat defect = euclid_opkn_matrix(g, Mat(sigma - smoothed));
    Eigen::BDCSVD<Mat> svd(defect);
    const double defect_norm = svd.singularValues()(0);

    // bracket between the windowed operator and the mollified direct one
    const Mat windowed = euclid_wick_matrix(g, a, sigma);
    const Mat mollified = euclid_opkn_matrix(g, smoothed);
    const Mat bracket =
        0.5 * ((windowed - mollified) + (windowed - mollified).adjoint());

    const Mat gram = dual_weight_gram(g, -0.5);
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(
        bracket, gram, Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
    const RVec lam = ges.eigenvalues();
    const double charge =
        std::max(std::abs(lam.minCoeff()), std::abs(lam.maxCoeff()));

    Eigen::SelfAdjointEigenSolver<Mat> es(sym_direct,
                                          Eigen::EigenvaluesOnly);

    EuclidGardingReport rep;
    rep.c_min = c_min;
    rep.window_t = window_t;
    rep.c_eff = c_min - defect_norm;
    rep.C_eff = charge;
    rep.lambda_min = es.eigenvalues().minCoeff();
    return rep;
}

} // namespace ncwick
