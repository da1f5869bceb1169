#include "ncwick/calculus.hpp"

#include <cmath>

#include "ncwick/types.hpp"

namespace ncwick {

namespace {

// sum_{l > L} (2l+1)^2 e^{-t l(l+1)} in half-integer steps; terms decay
// super-exponentially, so a fixed horizon of 400 half-steps is exhaustive.
double heat_tail(double t, double L) {
    double tail = 0.0;
    const int first = static_cast<int>(std::llround(2 * L)) + 1;
    for (int tl = first; tl <= first + 400; ++tl) {
        const double l = 0.5 * tl;
        const double d = 2 * l + 1;
        tail += d * d * std::exp(-t * l * (l + 1));
    }
    return tail;
}

// Transform band the quadrature represents exactly (products of two such
// bands integrate exactly, which is what convolution needs).
SlicePtr exact_dual_band(const QuadPtr& quad) {
    switch (quad->backend) {
    case Backend::Torus:
        return std::make_shared<const IrrepSlice>(
            torus_slice((quad->n_points - 1) / 2));
    case Backend::Su2:
        return std::make_shared<const IrrepSlice>(
            su2_slice(quad->exactness_degree));
    case Backend::Heisenberg:
        break;
    }
    throw BackendMismatchError("no exact dual band on the heisenberg box");
}

GridFunction entry_function(const SymbolField& s, std::size_t label,
                            int row, int col) {
    GridFunction g;
    g.backend = s.backend;
    g.quad = s.quad;
    g.samples = Vec(s.quad->size());
    for (std::size_t i = 0; i < s.quad->size(); ++i)
        g.samples(i) = s.at(i, label)(row, col);
    return g;
}

} // namespace

HeatKernel heat_kernel(const QuadPtr& quad, double t) {
    if (quad->backend != Backend::Su2)
        throw BackendMismatchError("heat_kernel is defined on su2");
    if (!(t > 0.0)) throw InvalidInputError("heat_kernel needs t > 0");

    double cutoff = 0.0;
    while (heat_tail(t, cutoff) >= HEAT_TAIL_TARGET) {
        cutoff += 0.5;
        if (cutoff > quad->exactness_degree)
            throw InvalidInputError(
                "heat_kernel: sup-norm tail stays above the 1e-8 target at "
                "the quadrature's exact band; increase the quadrature degree "
                "or the time t");
    }

    HeatKernel p;
    p.t = t;
    p.cutoff = cutoff;
    p.tail_bound = heat_tail(t, cutoff);
    for (double l = 0.0; l <= cutoff; l += 0.5) {
        p.labels.push_back(l);
        p.coeff.push_back(std::exp(-t * l * (l + 1)));
    }
    p.samples.backend = Backend::Su2;
    p.samples.quad = quad;
    p.samples.band_limit = cutoff;
    p.samples.samples = Vec(quad->size());
    for (std::size_t i = 0; i < quad->size(); ++i)
        p.samples.samples(i) = heat_kernel_value(p, quad->nodes[i]);
    return p;
}

double heat_kernel_value(const HeatKernel& p, const GroupPoint& g) {
    double v = 0.0;
    for (std::size_t j = 0; j < p.labels.size(); ++j) {
        const double l = p.labels[j];
        v += (2 * l + 1) * p.coeff[j] * su2_character(l, g);
    }
    return v;
}

ApproxIdentity approx_identity(const QuadPtr& quad, const std::string& family,
                               double t) {
    if (!(t > 0.0)) throw InvalidInputError("approx_identity needs t > 0");
    ApproxIdentity a;
    a.family = family;
    a.t = t;
    if (family == "su2-heat") {
        a.samples = heat_kernel(quad, t).samples;
    } else if (family == "torus-fejer") {
        if (quad->backend != Backend::Torus)
            throw BackendMismatchError("torus-fejer needs a torus quadrature");
        const int K = static_cast<int>(std::ceil(1.0 / t));
        if (2 * K + 1 > quad->n_points)
            throw InvalidInputError(
                "torus-fejer: band ceil(1/t) exceeds the grid; use more "
                "points or a larger t");
        a.samples = make_grid_function(
            quad,
            [K](const GroupPoint& g) {
                cplx v = 0.0;
                for (int k = -K; k <= K; ++k)
                    v += (1.0 - std::abs(k) / (K + 1.0)) *
                         std::exp(cplx(0, 2 * PI * k * g.c[0]));
                return v;
            },
            K);
    } else if (family == "h1-dilated") {
        if (quad->backend != Backend::Heisenberg)
            throw BackendMismatchError("h1-dilated needs a heisenberg grid");
        const double q = H1_HOMOGENEOUS_DIM;
        const double norm = std::pow(t, -q) / std::pow(2 * PI, 1.5);
        a.samples = make_grid_function(quad, [&](const GroupPoint& g) {
            const GroupPoint s = dilate(g, 1.0 / t);
            const double r2 =
                s.c[0] * s.c[0] + s.c[1] * s.c[1] + s.c[2] * s.c[2];
            return norm * std::exp(-0.5 * r2);
        });
    } else {
        throw InvalidInputError("approx_identity: unknown family " + family);
    }
    // Unit mass against the quadrature itself (box truncation and quadrature
    // error otherwise leak into every moment estimate downstream).
    cplx mass = 0.0;
    for (std::size_t i = 0; i < quad->size(); ++i)
        mass += quad->weights[i] * a.samples.samples(i);
    a.samples.samples /= mass;
    return a;
}

SymbolField delta_q(const GridFunction& q, const SymbolField& sigma) {
    if (q.backend != sigma.backend)
        throw BackendMismatchError("delta_q: q and sigma disagree");
    if (q.quad->size() != sigma.quad->size())
        throw InvalidInputError("delta_q: q lives on a different quadrature");
    KernelField k = symbol_to_kernel(sigma);
    for (std::size_t y = 0; y < sigma.quad->size(); ++y)
        k.values.col(y) *= q.samples(y);
    return kernel_to_symbol(k, sigma.slice);
}

SymbolField symbol_convolve(const SymbolField& sigma, const GridFunction& phi) {
    if (phi.backend != sigma.backend)
        throw BackendMismatchError("symbol_convolve: backends disagree");
    if (phi.quad->size() != sigma.quad->size())
        throw InvalidInputError(
            "symbol_convolve: phi lives on a different quadrature");

    SymbolField out = sigma;
    if (sigma.x_independent) {
        // sigma * phi = sigma times the total mass of phi.
        cplx mass = 0.0;
        for (std::size_t i = 0; i < phi.quad->size(); ++i)
            mass += phi.quad->weights[i] * phi.samples(i);
        for (auto& m : out.value[0]) m *= mass;
        return out;
    }
    out.self_adjoint = false;

    if (sigma.backend == Backend::Heisenberg) {
        for (std::size_t j = 0; j < sigma.slice->size(); ++j) {
            const int d = sigma.slice->dims[j];
            for (int r = 0; r < d; ++r)
                for (int c = 0; c < d; ++c) {
                    const GridFunction conv =
                        convolve(entry_function(sigma, j, r, c), phi, nullptr);
                    for (std::size_t i = 0; i < sigma.quad->size(); ++i)
                        out.value[i][j](r, c) = conv.samples(i);
                }
        }
        return out;
    }

    // Compact backends: entrywise through the exact dual band, where the
    // convolution theorem F(f * g) = g_hat f_hat holds exactly.
    const SlicePtr band = exact_dual_band(sigma.quad);
    const FourierField phat = fourier(phi, band);
    for (std::size_t j = 0; j < sigma.slice->size(); ++j) {
        const int d = sigma.slice->dims[j];
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c) {
                FourierField F =
                    fourier(entry_function(sigma, j, r, c), band);
                for (std::size_t b = 0; b < band->size(); ++b)
                    F.coeff[b] = phat.coeff[b] * F.coeff[b];
                const GridFunction conv = inverse_fourier(F, sigma.quad);
                for (std::size_t i = 0; i < sigma.quad->size(); ++i)
                    out.value[i][j](r, c) = conv.samples(i);
            }
    }
    return out;
}

double sobolev_norm(const GridFunction& f, double s, const SlicePtr& slice) {
    const FourierField F = fourier(f, slice);
    double acc = 0.0;
    for (std::size_t j = 0; j < slice->size(); ++j) {
        const double w = slice->weights[j];
        switch (slice->backend) {
        case Backend::Torus: {
            const double lam =
                4 * PI * PI * slice->labels[j] * slice->labels[j];
            acc += w * std::pow(1 + lam, s) * F.coeff[j].squaredNorm();
            break;
        }
        case Backend::Su2: {
            const double l = slice->labels[j];
            acc += w * std::pow(1 + l * (l + 1), s) * F.coeff[j].squaredNorm();
            break;
        }
        case Backend::Heisenberg: {
            const double al = std::fabs(slice->labels[j]);
            for (int m = 0; m < slice->dims[j]; ++m)
                acc += w * std::pow(1 + 2 * PI * al * (2 * m + 1), s) *
                       F.coeff[j].row(m).squaredNorm();
            break;
        }
        }
    }
    return std::sqrt(acc);
}

} // namespace ncwick
