#include "ncwick/fourier.hpp"

#include <cmath>

namespace ncwick {

namespace {

void check_backend(Backend a, Backend b, const char* what) {
    if (a != b)
        throw BackendMismatchError(std::string(what) + ": backend mismatch (" +
                                   backend_name(a) + " vs " + backend_name(b) +
                                   ")");
}

double op_norm_small(const Mat& m) {
    // largest singular value; labels are small so a direct SVD is fine
    if (m.rows() == 1 && m.cols() == 1) return std::abs(m(0, 0));
    Eigen::JacobiSVD<Mat> svd(m);
    return svd.singularValues()(0);
}

} // namespace

GridFunction make_grid_function(
    const QuadPtr& quad, const std::function<cplx(const GroupPoint&)>& f,
    double band_limit) {
    GridFunction g;
    g.backend = quad->backend;
    g.quad = quad;
    g.band_limit = band_limit;
    g.samples = Vec(quad->size());
    for (std::size_t i = 0; i < quad->size(); ++i)
        g.samples(i) = f(quad->nodes[i]);
    return g;
}

SymbolField make_symbol(
    const QuadPtr& quad, const SlicePtr& slice,
    const std::function<Mat(const GroupPoint&, std::size_t)>& sig) {
    check_backend(quad->backend, slice->backend, "make_symbol");
    SymbolField s;
    s.backend = quad->backend;
    s.quad = quad;
    s.slice = slice;
    s.value.resize(quad->size());
    for (std::size_t i = 0; i < quad->size(); ++i) {
        s.value[i].resize(slice->size());
        for (std::size_t j = 0; j < slice->size(); ++j) {
            s.value[i][j] = sig(quad->nodes[i], j);
            if (s.value[i][j].rows() != slice->dims[j] ||
                s.value[i][j].cols() != slice->dims[j])
                throw InvalidInputError("symbol matrix has wrong dimension");
        }
    }
    return s;
}

SymbolField make_multiplier_symbol(const QuadPtr& quad, const SlicePtr& slice,
                                   const std::function<Mat(std::size_t)>& sig) {
    check_backend(quad->backend, slice->backend, "make_multiplier_symbol");
    SymbolField s;
    s.backend = quad->backend;
    s.quad = quad;
    s.slice = slice;
    s.x_independent = true;
    s.value.resize(1);
    s.value[0].resize(slice->size());
    for (std::size_t j = 0; j < slice->size(); ++j) {
        s.value[0][j] = sig(j);
        if (s.value[0][j].rows() != slice->dims[j])
            throw InvalidInputError("multiplier matrix has wrong dimension");
    }
    return s;
}

double l2_norm(const GridFunction& f) {
    double s = 0;
    for (std::size_t i = 0; i < f.quad->size(); ++i)
        s += f.quad->weights[i] * std::norm(f.samples(i));
    return std::sqrt(s);
}

cplx l2_inner(const GridFunction& f, const GridFunction& g) {
    check_backend(f.backend, g.backend, "l2_inner");
    cplx s = 0;
    for (std::size_t i = 0; i < f.quad->size(); ++i)
        s += f.quad->weights[i] * f.samples(i) * std::conj(g.samples(i));
    return s;
}

double l1_norm(const GridFunction& f) {
    double s = 0;
    for (std::size_t i = 0; i < f.quad->size(); ++i)
        s += f.quad->weights[i] * std::abs(f.samples(i));
    return s;
}

double l2_norm_dual(const FourierField& F) {
    double s = 0;
    for (std::size_t j = 0; j < F.slice->size(); ++j)
        s += F.slice->weights[j] * F.coeff[j].squaredNorm();
    return std::sqrt(s);
}

double linf_norm_dual(const FourierField& F) {
    double s = 0;
    for (const Mat& m : F.coeff) s = std::max(s, op_norm_small(m));
    return s;
}

double linf_norm(const SymbolField& s) {
    double v = 0;
    const std::size_t nx = s.x_independent ? 1 : s.quad->size();
    for (std::size_t i = 0; i < nx; ++i)
        for (const Mat& m : s.value[i]) v = std::max(v, op_norm_small(m));
    return v;
}

double l2_norm(const SymbolField& s) {
    double v = 0;
    for (std::size_t i = 0; i < s.quad->size(); ++i) {
        double row = 0;
        for (std::size_t j = 0; j < s.slice->size(); ++j)
            row += s.slice->weights[j] * s.at(i, j).squaredNorm();
        v += s.quad->weights[i] * row;
    }
    return std::sqrt(v);
}

FourierField fourier(const GridFunction& f, const SlicePtr& slice) {
    check_backend(f.backend, slice->backend, "fourier");
    FourierField F;
    F.backend = f.backend;
    F.slice = slice;
    F.coeff.resize(slice->size());
    for (std::size_t j = 0; j < slice->size(); ++j)
        F.coeff[j] = Mat::Zero(slice->dims[j], slice->dims[j]);
    for (std::size_t i = 0; i < f.quad->size(); ++i) {
        const cplx wf = f.quad->weights[i] * f.samples(i);
        if (wf == cplx(0, 0)) continue;
        const auto pis = slice->evaluate_all(f.quad->nodes[i]);
        for (std::size_t j = 0; j < slice->size(); ++j)
            F.coeff[j].noalias() += wf * pis[j].adjoint();
    }
    return F;
}

cplx evaluate_inversion(const FourierField& F, const GroupPoint& p) {
    const auto pis = F.slice->evaluate_all(p);
    cplx s = 0;
    for (std::size_t j = 0; j < F.slice->size(); ++j)
        s += F.slice->weights[j] * (pis[j] * F.coeff[j]).trace();
    return s;
}

GridFunction inverse_fourier(const FourierField& F, const QuadPtr& quad) {
    check_backend(F.backend, quad->backend, "inverse_fourier");
    GridFunction g;
    g.backend = F.backend;
    g.quad = quad;
    g.samples = Vec(quad->size());
    double band = 0.0;
    for (std::size_t j = 0; j < F.slice->size(); ++j)
        band = std::max(band, std::fabs(F.slice->labels[j]));
    g.band_limit = (F.backend == Backend::Heisenberg) ? -1.0 : band;
    for (std::size_t i = 0; i < quad->size(); ++i)
        g.samples(i) = evaluate_inversion(F, quad->nodes[i]);
    return g;
}

Interpolant::Interpolant(const GridFunction& f, const SlicePtr& slice)
    : backend_(f.backend), quad_(f.quad), samples_(f.samples) {
    if (backend_ != Backend::Heisenberg) {
        if (!slice)
            throw InvalidInputError(
                "compact interpolation needs a dual slice for the "
                "band-limited rule");
        hat_ = fourier(f, slice);
    }
}

bool Interpolant::out_of_box(const GroupPoint& p) const {
    if (backend_ != Backend::Heisenberg) return false;
    const double R = quad_->box_radius + 0.5 * quad_->spacing;
    return std::fabs(p.c[0]) > R || std::fabs(p.c[1]) > R ||
           std::fabs(p.c[2]) > R;
}

cplx Interpolant::operator()(const GroupPoint& p) const {
    if (backend_ != Backend::Heisenberg) return evaluate_inversion(hat_, p);
    // trilinear interpolation, zero outside the box
    const double R = quad_->box_radius, h = quad_->spacing;
    const int n = quad_->pts_per_axis;
    double fr[3];
    int i0[3];
    for (int a = 0; a < 3; ++a) {
        const double u = (p.c[a] + R) / h;
        const double fl = std::floor(u);
        i0[a] = static_cast<int>(fl);
        fr[a] = u - fl;
        if (i0[a] < -1 || i0[a] > n - 1) return 0.0;
    }
    cplx acc = 0;
    for (int dx = 0; dx < 2; ++dx)
        for (int dy = 0; dy < 2; ++dy)
            for (int dt = 0; dt < 2; ++dt) {
                const int ix = i0[0] + dx, iy = i0[1] + dy, it = i0[2] + dt;
                if (ix < 0 || iy < 0 || it < 0 || ix >= n || iy >= n ||
                    it >= n)
                    continue;
                const double w = (dx ? fr[0] : 1 - fr[0]) *
                                 (dy ? fr[1] : 1 - fr[1]) *
                                 (dt ? fr[2] : 1 - fr[2]);
                acc += w * samples_(quad_->h1_index(ix, iy, it));
            }
    return acc;
}

GridFunction convolve(const GridFunction& f, const GridFunction& g,
                      const SlicePtr& slice) {
    check_backend(f.backend, g.backend, "convolve");
    GridFunction out;
    out.backend = f.backend;
    out.quad = f.quad;
    out.samples = Vec::Zero(f.quad->size());
    const Interpolant gi(g, slice);
    const double fmax = f.samples.cwiseAbs().maxCoeff();
    bool warn = false;
    const auto& quad = *f.quad;
    for (std::size_t ix = 0; ix < quad.size(); ++ix) {
        cplx acc = 0;
        for (std::size_t iy = 0; iy < quad.size(); ++iy) {
            const cplx fy = f.samples(iy);
            if (std::abs(fy) < 1e-15 * fmax) continue;
            const GroupPoint z = mul(inv(quad.nodes[iy]), quad.nodes[ix]);
            if (f.backend == Backend::Heisenberg && gi.out_of_box(z))
                warn = true;
            acc += quad.weights[iy] * fy * gi(z);
        }
        out.samples(ix) = acc;
    }
    out.support_warning = warn;
    if (f.band_limit >= 0 && g.band_limit >= 0)
        out.band_limit = std::min(f.band_limit, g.band_limit);
    return out;
}

double plancherel_defect(const GridFunction& f, const GridFunction& g,
                         const SlicePtr& slice) {
    const cplx space = l2_inner(f, g);
    const FourierField F = fourier(f, slice), G = fourier(g, slice);
    cplx dual = 0;
    for (std::size_t j = 0; j < slice->size(); ++j)
        dual += slice->weights[j] * (F.coeff[j] * G.coeff[j].adjoint()).trace();
    constexpr double tiny = 1e-300;
    return std::abs(space - dual) / (l2_norm(f) * l2_norm(g) + tiny);
}

double self_adjoint_defect(const SymbolField& s) {
    double v = 0;
    const std::size_t nx = s.x_independent ? 1 : s.quad->size();
    for (std::size_t i = 0; i < nx; ++i)
        for (const Mat& m : s.value[i])
            v = std::max(v, (m - Mat(m.adjoint())).cwiseAbs().maxCoeff());
    return v;
}

GridFunction h1_probe(const QuadPtr& quad, double sigma_xy, double sigma_t,
                      double lambda0) {
    if (quad->backend != Backend::Heisenberg)
        throw BackendMismatchError("h1_probe needs a heisenberg quadrature");
    return make_grid_function(quad, [=](const GroupPoint& p) {
        const double r2 = p.c[0] * p.c[0] + p.c[1] * p.c[1];
        return std::exp(-r2 / (2 * sigma_xy * sigma_xy) -
                        p.c[2] * p.c[2] / (2 * sigma_t * sigma_t)) *
               std::exp(cplx(0, 2 * PI * lambda0 * p.c[2]));
    });
}

double calibrate_plancherel(IrrepSlice& slice, const HaarQuadrature& quad,
                            const GridFunction& probe) {
    if (slice.backend != Backend::Heisenberg)
        throw BackendMismatchError("calibration applies to heisenberg only");
    auto view = std::make_shared<IrrepSlice>(slice);
    // measure against unit c_P weights
    for (std::size_t j = 0; j < view->size(); ++j)
        view->weights[j] = std::fabs(view->labels[j]) * view->dlambda;
    const FourierField F = fourier(probe, view);
    double hs_mass = 0;
    for (std::size_t j = 0; j < view->size(); ++j)
        hs_mass += view->weights[j] * F.coeff[j].squaredNorm();
    if (hs_mass < 1e-10)
        throw TruncationError(
            "Plancherel calibration ill-conditioned: HS mass " +
            std::to_string(hs_mass) + " below 1e-10");
    const double n = l2_norm(probe);
    const double c = n * n / hs_mass;
    slice.c_plancherel = c;
    for (std::size_t j = 0; j < slice.size(); ++j)
        slice.weights[j] = c * std::fabs(slice.labels[j]) * slice.dlambda;
    (void)quad;
    return c;
}

} // namespace ncwick
