#include "ncwick/groups.hpp"

#include <cmath>

namespace ncwick {

HaarQuadrature torus_quadrature(int n) {
    if (n < 1) throw InvalidInputError("torus quadrature needs >= 1 node");
    HaarQuadrature q;
    q.backend = Backend::Torus;
    q.n_points = n;
    q.exactness_degree = n - 1.0;
    q.total_mass = 1.0;
    q.nodes.reserve(n);
    q.weights.assign(n, 1.0 / n);
    for (int i = 0; i < n; ++i)
        q.nodes.push_back(GroupPoint{Backend::Torus, {double(i) / n, 0, 0}});
    return q;
}

IrrepSlice torus_slice(int K) {
    if (K < 0) throw InvalidInputError("torus cutoff K must be >= 0");
    IrrepSlice s;
    s.backend = Backend::Torus;
    for (int k = -K; k <= K; ++k) {
        s.labels.push_back(k);
        s.dims.push_back(1);
        s.weights.push_back(1.0);
    }
    return s;
}

} // namespace ncwick
