#ifndef NCWICK_SRC_PACK_HPP
#define NCWICK_SRC_PACK_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "ncwick/types.hpp"
#include "ncwick/groups.hpp"

// Internal helpers shared by the dense dual-side transforms.  The packed
// layout flattens a slice's matrix entries as (label, row, col) with offset
// off[j] + row * dim + col, so a field over (node, label) becomes one
// (node, entries) matrix and transforms become GEMMs.

namespace ncwick {
namespace detail {

struct SlicePack {
    std::vector<std::size_t> off;
    std::size_t total = 0;
};

inline SlicePack make_pack(const IrrepSlice& sl) {
    SlicePack p;
    p.off.resize(sl.size());
    for (std::size_t j = 0; j < sl.size(); ++j) {
        p.off[j] = p.total;
        p.total += static_cast<std::size_t>(sl.dims[j]) * sl.dims[j];
    }
    return p;
}

inline void check_backend(Backend a, Backend b, const char* what) {
    if (a != b)
        throw BackendMismatchError(std::string(what) + ": backend mismatch (" +
                                   backend_name(a) + " vs " + backend_name(b) +
                                   ")");
}

inline double max_abs_label(const IrrepSlice& sl) {
    double m = 0;
    for (double l : sl.labels) m = std::max(m, std::abs(l));
    return m;
}

inline void guard_bytes(std::size_t entries, const char* what) {
    if (entries * sizeof(cplx) > (std::size_t{2} << 30))
        throw CapacityError(std::string(what) +
                            ": dense layout exceeds the 2 GiB cap");
}

inline bool h1_boundary_node(const HaarQuadrature& qd, const GroupPoint& p) {
    const double edge = qd.box_radius - 0.5 * qd.spacing;
    return std::abs(p.c[0]) > edge || std::abs(p.c[1]) > edge ||
           std::abs(p.c[2]) > edge;
}

// tr(A B) for same-size square matrices.
inline cplx trace_prod(const Mat& a, const Mat& b) {
    return (a.transpose().array() * b.array()).sum();
}

} // namespace detail
} // namespace ncwick

#endif
