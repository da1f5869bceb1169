#include "ncwick/groups.hpp"

#include <cmath>

namespace ncwick {

namespace {

// Factorials as doubles; arguments stay far below 170 at our cutoffs.
double fact(int n) {
    static const std::vector<double> table = [] {
        std::vector<double> t(171);
        t[0] = 1.0;
        for (int i = 1; i <= 170; ++i) t[i] = t[i - 1] * i;
        return t;
    }();
    return table.at(n);
}

double binom(int n, int k) { return fact(n) / (fact(k) * fact(n - k)); }

// Gauss-Legendre nodes/weights on [-1,1], Newton iteration on P_n.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(PI * (i + 0.75) / (n + 0.5));
        double pp = 0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) * z * p1 - j * p2) / (j + 1);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            double dz = p0 / pp;
            z -= dz;
            if (std::fabs(dz) < 1e-15) break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
    }
}

double mod2pi_(double v) {
    double y = std::fmod(v, 2 * PI);
    if (y < 0) y += 2 * PI;
    if (y >= 2 * PI) y -= 2 * PI;
    return y;
}
double mod4pi_(double v) {
    double y = std::fmod(v, 4 * PI);
    if (y < 0) y += 4 * PI;
    if (y >= 4 * PI) y -= 4 * PI;
    return y;
}

} // namespace

Mat su2_matrix(const GroupPoint& p) {
    if (p.backend != Backend::Su2)
        throw BackendMismatchError("su2_matrix needs an su2 point");
    const double al = p.c[0], be = p.c[1], ga = p.c[2];
    const cplx ea = std::exp(cplx(0, -0.5 * (al + ga)));
    const cplx eb = std::exp(cplx(0, -0.5 * (al - ga)));
    const double ch = std::cos(0.5 * be), sh = std::sin(0.5 * be);
    Mat u(2, 2);
    u(0, 0) = ea * ch;
    u(0, 1) = -eb * sh;
    u(1, 0) = std::conj(eb) * sh;
    u(1, 1) = std::conj(ea) * ch;
    return u;
}

GroupPoint su2_from_matrix(const Mat& u) {
    const cplx a = u(0, 0), b = u(0, 1);
    const double beta = 2.0 * std::atan2(std::abs(b), std::abs(a));
    GroupPoint p{Backend::Su2, {0, beta, 0}};
    if (std::abs(b) < 1e-15) {
        p.c[1] = 0.0;
        p.c[0] = 0.0;
        p.c[2] = mod4pi_(-2.0 * std::arg(a));
    } else if (std::abs(a) < 1e-15) {
        p.c[1] = PI;
        p.c[0] = 0.0;
        p.c[2] = mod4pi_(2.0 * std::arg(-b));
    } else {
        const double pa = std::arg(a), pb = std::arg(-b);
        double al = mod2pi_(-(pa + pb));
        // Within a few ulp of the cut, use the alpha = 0 branch: alpha -> 0
        // and the gamma formula below absorbs the 2 pi (central sign) shift,
        // so the element is unchanged up to roundoff.
        if (2 * PI - al < 8e-15) al -= 2 * PI;
        p.c[0] = std::max(al, 0.0);
        p.c[2] = mod4pi_(-2.0 * pa - al);
    }
    return p;
}

double su2_half_angle(const GroupPoint& p) {
    const double ch = std::cos(0.5 * p.c[1]) * std::cos(0.5 * (p.c[0] + p.c[2]));
    return std::acos(std::min(1.0, std::max(-1.0, ch)));
}

double su2_character(double l, const GroupPoint& p) {
    // chi_l(g) = sum_m e^{2 i m phi} over m = -l..l; exact and pole-safe.
    const double phi = su2_half_angle(p);
    const int twol = static_cast<int>(std::llround(2 * l));
    double s = 0.0;
    for (int twom = -twol; twom <= twol; twom += 2) s += std::cos(twom * phi);
    return s;
}

std::vector<RMat> wigner_d_stack(double L, double beta) {
    const int TL = static_cast<int>(std::llround(2 * L));
    const double ch = std::cos(0.5 * beta), sh = std::sin(0.5 * beta);
    const double cb = std::cos(beta);
    std::vector<RMat> d(TL + 1);
    for (int tl = 0; tl <= TL; ++tl) {
        const int dim = tl + 1;
        const double l = 0.5 * tl;
        d[tl] = RMat(dim, dim);
        for (int i = 0; i < dim; ++i) {
            const double m = l - i;
            for (int j = 0; j < dim; ++j) {
                const double n = l - j;
                const double l0 = std::max(std::fabs(m), std::fabs(n));
                if (std::llround(2 * l0) == tl) {
                    // seed row/column in closed form
                    double v;
                    if (std::llround(2 * (m - l)) == 0) {
                        // d^l_{l,n} = (-1)^{l-n} sqrt(C(2l,l-n)) ch^{l+n} sh^{l-n}
                        int ln = static_cast<int>(std::llround(l - n));
                        v = (ln % 2 ? -1 : 1) *
                            std::sqrt(binom(tl, ln)) *
                            std::pow(ch, tl - ln) * std::pow(sh, ln);
                    } else if (std::llround(2 * (m + l)) == 0) {
                        // d^l_{-l,n} = sqrt(C(2l,l+n)) ch^{l-n} sh^{l+n}
                        int ln = static_cast<int>(std::llround(l + n));
                        v = std::sqrt(binom(tl, ln)) *
                            std::pow(ch, tl - ln) * std::pow(sh, ln);
                    } else if (std::llround(2 * (n - l)) == 0) {
                        // d^l_{m,l} = sqrt(C(2l,l-m)) ch^{l+m} sh^{l-m}
                        int lm = static_cast<int>(std::llround(l - m));
                        v = std::sqrt(binom(tl, lm)) *
                            std::pow(ch, tl - lm) * std::pow(sh, lm);
                    } else {
                        // d^l_{m,-l} = (-1)^{l+m} sqrt(C(2l,l+m)) ch^{l-m} sh^{l+m}
                        int lm = static_cast<int>(std::llround(l + m));
                        v = (lm % 2 ? -1 : 1) *
                            std::sqrt(binom(tl, lm)) *
                            std::pow(ch, tl - lm) * std::pow(sh, lm);
                    }
                    d[tl](i, j) = v;
                } else {
                    // three-term recursion in l at fixed (m, n)
                    const double den =
                        std::sqrt((l * l - m * m) * (l * l - n * n));
                    const double a = l * (2 * l - 1) / den;
                    const double lm1 = l - 1;
                    // at l = 1 the only interior entry has m = n = 0, so the
                    // m n / (l (l-1)) term is zero there; guard the 0/0
                    const double t1 =
                        (m * n == 0.0) ? cb : cb - m * n / (l * lm1);
                    double v = t1 * d[tl - 2](i - 1, j - 1);
                    if (tl >= 4 && std::fabs(m) <= l - 2 &&
                        std::fabs(n) <= l - 2) {
                        const double c2 = std::sqrt((lm1 * lm1 - m * m) *
                                                    (lm1 * lm1 - n * n)) /
                                          (lm1 * (2 * l - 1));
                        v -= c2 * d[tl - 4](i - 2, j - 2);
                    }
                    d[tl](i, j) = a * v;
                }
            }
        }
    }
    return d;
}

double clebsch_gordan(double j1, double m1, double j2, double m2, double J,
                      double M) {
    if (std::fabs(m1 + m2 - M) > 1e-9) return 0.0;
    if (J > j1 + j2 + 1e-9 || J < std::fabs(j1 - j2) - 1e-9) return 0.0;
    if (std::fabs(m1) > j1 + 1e-9 || std::fabs(m2) > j2 + 1e-9 ||
        std::fabs(M) > J + 1e-9)
        return 0.0;
    auto iv = [](double x) { return static_cast<int>(std::llround(x)); };
    const int a = iv(j1 + j2 - J), b = iv(j1 - j2 + J), c = iv(-j1 + j2 + J);
    const int jpm = iv(J + M), jmm = iv(J - M);
    const int j1pm = iv(j1 + m1), j1mm = iv(j1 - m1);
    const int j2pm = iv(j2 + m2), j2mm = iv(j2 - m2);
    if (a < 0 || b < 0 || c < 0) return 0.0;
    const double pref =
        std::sqrt((2 * J + 1) * fact(a) * fact(b) * fact(c) /
                  fact(iv(j1 + j2 + J + 1))) *
        std::sqrt(fact(jpm) * fact(jmm) * fact(j1pm) * fact(j1mm) *
                  fact(j2pm) * fact(j2mm));
    double s = 0.0;
    const int kmax = std::min(a, std::min(j1mm, j2pm));
    const int kmin = std::max(0, std::max(-iv(J - j2 + m1), -iv(J - j1 - m2)));
    for (int k = kmin; k <= kmax; ++k) {
        const double den = fact(k) * fact(a - k) * fact(j1mm - k) *
                           fact(j2pm - k) * fact(iv(J - j2 + m1) + k) *
                           fact(iv(J - j1 - m2) + k);
        s += (k % 2 ? -1.0 : 1.0) / den;
    }
    return pref * s;
}

double su2_triple_integral(double lc, double mc, double nc, double lj,
                           double mj, double nj, double li, double mi,
                           double ni) {
    // int D^{lc}_{mc nc} D^{lj}_{mj nj} conj(D^{li}_{mi ni}) dHaar
    return clebsch_gordan(lc, mc, lj, mj, li, mi) *
           clebsch_gordan(lc, nc, lj, nj, li, ni) / (2 * li + 1);
}

HaarQuadrature su2_quadrature(double degree) {
    if (degree < 0) throw InvalidInputError("su2 exactness degree must be >= 0");
    HaarQuadrature q;
    q.backend = Backend::Su2;
    q.exactness_degree = degree;
    q.total_mass = 1.0;
    // Size the product rule so that every single matrix coefficient D^l with
    // l <= 2*degree integrates exactly.  A product of two coefficients with
    // l, l' <= degree decomposes into coefficients of degree <= l + l', so
    // this makes the Schur orthogonality relations exact up to the declared
    // exactness degree.
    const double m = 2 * degree;
    q.n_alpha = static_cast<int>(std::floor(m)) + 2;
    q.n_gamma = static_cast<int>(std::ceil(2 * m)) + 2;
    q.n_beta = static_cast<int>(std::ceil(0.5 * (m + 1))) + 1;
    gauss_legendre(q.n_beta, q.beta_nodes, q.beta_weights);
    q.nodes.reserve(static_cast<std::size_t>(q.n_alpha) * q.n_beta * q.n_gamma);
    q.weights.reserve(q.nodes.capacity());
    const double wa = 2 * PI / q.n_alpha, wg = 4 * PI / q.n_gamma;
    for (int ia = 0; ia < q.n_alpha; ++ia) {
        const double alpha = 2 * PI * ia / q.n_alpha;
        for (int ib = 0; ib < q.n_beta; ++ib) {
            const double beta = std::acos(q.beta_nodes[ib]);
            const double wb = q.beta_weights[ib];
            for (int ig = 0; ig < q.n_gamma; ++ig) {
                const double gamma = 4 * PI * ig / q.n_gamma;
                q.nodes.push_back(
                    GroupPoint{Backend::Su2, {alpha, beta, gamma}});
                q.weights.push_back(wa * wb * wg / (16 * PI * PI));
            }
        }
    }
    return q;
}

IrrepSlice su2_slice(double L) {
    if (L < 0) throw InvalidInputError("su2 cutoff L must be >= 0");
    IrrepSlice s;
    s.backend = Backend::Su2;
    const int TL = static_cast<int>(std::llround(2 * L));
    for (int tl = 0; tl <= TL; ++tl) {
        s.labels.push_back(0.5 * tl);
        s.dims.push_back(tl + 1);
        s.weights.push_back(tl + 1.0);
    }
    if (s.labels.empty()) throw InvalidInputError("empty su2 slice");
    return s;
}

} // namespace ncwick
