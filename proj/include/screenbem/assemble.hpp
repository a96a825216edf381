#pragma once

#include <cstring>
#include <fstream>
#include <functional>

#include "screenbem/jump.hpp"
#include "screenbem/quadrature.hpp"

namespace screenbem {

using GalerkinMatrix = Eigen::MatrixXd;
using RhsVector = Eigen::VectorXd;

namespace detail {

// In-plane gradient of the nodal shape function at local slot k.
inline Vec3 shape_gradient(const SurfaceMesh& m, int f, int k)
{
    const auto& t = m.facets[f];
    if (m.dim == 2) {
        const Vec3 d = m.vertices[t[1]] - m.vertices[t[0]];
        const Vec3 g = d / d.squaredNorm();
        return (k == 0) ? Vec3(-g) : g;
    }
    const Vec3 n = m.facet_normal(f);
    const Vec3 e = m.vertices[t[(k + 2) % 3]] - m.vertices[t[(k + 1) % 3]];
    return n.cross(e) / (2.0 * m.facet_measure(f));
}

// Scatter of a generalized vertex into jump-basis coefficients: branch j < q-1
// hits its own DOF with +1; the reference branch hits all of the vertex's
// DOFs with -1.
struct Scatter {
    std::vector<std::pair<int, double>> terms;
};

inline std::vector<Scatter> build_scatter(const InflatedMesh& im)
{
    std::vector<Scatter> sc(im.num_gvertices());
    for (int g = 0; g < im.num_gvertices(); ++g) {
        const auto& gv = im.gvertices[g];
        const int q = im.q[gv.vertex];
        if (q < 2) continue;
        if (gv.branch < q - 1) {
            sc[g].terms.emplace_back(im.dof_index(gv.vertex, gv.branch), 1.0);
        } else {
            for (int j = 0; j + 1 < q; ++j)
                sc[g].terms.emplace_back(im.dof_index(gv.vertex, j), -1.0);
        }
    }
    return sc;
}

}  // namespace detail

// Constant surface curl n_t x grad of the linear trace on an oriented facet
// (2D: the out-of-plane component; flips with the side).
inline Vec3 surface_curl(const InflatedMesh& im, int ofacet, const TraceField& trace)
{
    const int f = ofacet / 2;
    Vec3 grad = Vec3::Zero();
    for (int k = 0; k < im.base.facet_nv(); ++k)
        grad += trace.at(im, ofacet, k) * detail::shape_gradient(im.base, f, k);
    return im.oriented_facets[ofacet].normal.cross(grad);
}

// Galerkin matrix of the hypersingular form on the jump basis, assembled as a
// weakly singular curl-curl double sum over oriented facet pairs. The kernel
// pair integral depends only on the geometric pair, so it is computed once
// per unordered pair and scattered over sides and vertices.
inline GalerkinMatrix assemble_W(const InflatedMesh& im, const QuadratureConfig& cfg,
                                 int workers = 1)
{
    const SurfaceMesh& m = im.base;
    const int n = im.num_jump_dofs();
    const int nf = m.num_facets();
    const int nv = m.facet_nv();
    const QuadratureEngine eng(cfg);
    const auto scatter = detail::build_scatter(im);

    // per oriented facet and slot: curl of the unit coefficient at that slot
    std::vector<std::array<Vec3, 3>> slot_curl(im.num_oriented());
    for (int o = 0; o < im.num_oriented(); ++o) {
        const int f = o / 2;
        for (int k = 0; k < nv; ++k)
            slot_curl[o][k] =
                im.oriented_facets[o].normal.cross(detail::shape_gradient(m, f, k));
    }

    const std::int64_t npairs = static_cast<std::int64_t>(nf) * (nf + 1) / 2;
    std::vector<GalerkinMatrix> partial(std::max(workers, 1));

    run_partitioned(npairs, workers, [&](int w, std::int64_t lo, std::int64_t hi) {
        GalerkinMatrix& W = partial[w];
        W = GalerkinMatrix::Zero(n, n);
        for (std::int64_t idx = lo; idx < hi; ++idx) {
            // unrank the (f <= g) pair index
            const int f = static_cast<int>((std::sqrt(8.0 * idx + 1.0) - 1.0) / 2.0);
            int ff = f;
            while (static_cast<std::int64_t>(ff + 1) * (ff + 2) / 2 <= idx) ++ff;
            while (static_cast<std::int64_t>(ff) * (ff + 1) / 2 > idx) --ff;
            const int g = static_cast<int>(idx - static_cast<std::int64_t>(ff) * (ff + 1) / 2);

            const double I = pair_integral(m, ff, g, eng);
            if (!std::isfinite(I))
                throw NumericalError("quadrature produced a non-finite pair integral");

            for (int sa = 0; sa < 2; ++sa)
                for (int sb = 0; sb < 2; ++sb) {
                    const int oa = 2 * ff + sa, ob = 2 * g + sb;
                    for (int ka = 0; ka < nv; ++ka) {
                        const int ga = im.gv_index(m.facets[ff][ka], im.branch_at(oa, ka));
                        if (scatter[ga].terms.empty()) continue;
                        for (int kb = 0; kb < nv; ++kb) {
                            const int gb = im.gv_index(m.facets[g][kb], im.branch_at(ob, kb));
                            if (scatter[gb].terms.empty()) continue;
                            const double c = slot_curl[oa][ka].dot(slot_curl[ob][kb]) * I;
                            for (const auto& [da, wa] : scatter[ga].terms)
                                for (const auto& [db, wb] : scatter[gb].terms) {
                                    const double v = c * wa * wb;
                                    W(da, db) += v;
                                    if (ff != g) W(db, da) += v;
                                }
                        }
                    }
                }
        }
    });

    GalerkinMatrix W = std::move(partial[0]);
    for (int w = 1; w < static_cast<int>(partial.size()); ++w)
        if (partial[w].size() > 0) W += partial[w];

    // mirror the upper triangle so symmetry is exact
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) W(j, i) = W(i, j);
    return W;
}

// Load vector L_nu = sum_t int g . n_t phi_t over the oriented facets; the
// integrand is smooth, so plain Gauss rules suffice.
inline RhsVector assemble_rhs(const InflatedMesh& im,
                              const std::function<Vec3(const Vec3&)>& g,
                              const QuadratureConfig& cfg)
{
    const SurfaceMesh& m = im.base;
    const QuadratureEngine eng(cfg);
    const auto scatter = detail::build_scatter(im);
    RhsVector L = RhsVector::Zero(im.num_jump_dofs());

    for (int f = 0; f < m.num_facets(); ++f) {
        const double meas = m.facet_measure(f);
        const auto& t = m.facets[f];
        const int npt = (m.dim == 2) ? static_cast<int>(eng.seg_far.x.size()) : eng.tri_far.size();
        for (int i = 0; i < npt; ++i) {
            double u, v, w;
            if (m.dim == 2) {
                u = eng.seg_far.x[i];
                v = 0;
                w = eng.seg_far.w[i] * meas;
            } else {
                u = eng.tri_far.u[i];
                v = eng.tri_far.v[i];
                w = eng.tri_far.w[i] * 2.0 * meas;
            }
            Vec3 y = m.vertices[t[0]] + u * (m.vertices[t[1]] - m.vertices[t[0]]);
            if (m.dim == 3) y += v * (m.vertices[t[2]] - m.vertices[t[0]]);
            const Vec3 gy = g(y);
            if (!gy.allFinite()) throw NumericalError("g returned a non-finite value");
            for (int s = 0; s < 2; ++s) {
                const int o = 2 * f + s;
                const double dn = gy.dot(im.oriented_facets[o].normal);
                for (int k = 0; k < m.facet_nv(); ++k) {
                    const double lambda = (k == 0) ? (1.0 - u - v) : ((k == 1) ? u : v);
                    const int gv = im.gv_index(t[k], im.branch_at(o, k));
                    for (const auto& [d, sgn] : scatter[gv].terms)
                        L[d] += w * dn * lambda * sgn;
                }
            }
        }
    }
    return L;
}

// ---------------------------------------------------------------------------
// Matrix dumps: dense binary (16-byte header: magic "SBEMW\0", two pad bytes,
// little-endian u32 n, four pad bytes; then row-major doubles) and an ASCII
// MatrixMarket-style text form.

inline void dump_matrix_binary(const GalerkinMatrix& W, const std::string& path)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ValidationError("cannot open matrix dump file: " + path);
    char header[16] = {};
    std::memcpy(header, "SBEMW\0", 6);
    const std::uint32_t n = static_cast<std::uint32_t>(W.rows());
    std::memcpy(header + 8, &n, 4);
    os.write(header, 16);
    for (int i = 0; i < W.rows(); ++i)
        for (int j = 0; j < W.cols(); ++j) {
            const double v = W(i, j);
            os.write(reinterpret_cast<const char*>(&v), 8);
        }
}

inline GalerkinMatrix load_matrix_binary(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ValidationError("cannot open matrix dump file: " + path);
    char header[16] = {};
    is.read(header, 16);
    if (std::memcmp(header, "SBEMW\0", 6) != 0)
        throw ValidationError("bad magic in matrix dump: " + path);
    std::uint32_t n = 0;
    std::memcpy(&n, header + 8, 4);
    GalerkinMatrix W(n, n);
    for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t j = 0; j < n; ++j) {
            double v;
            is.read(reinterpret_cast<char*>(&v), 8);
            W(i, j) = v;
        }
    if (!is) throw ValidationError("truncated matrix dump: " + path);
    return W;
}

inline void dump_matrix_text(const GalerkinMatrix& W, const std::string& path)
{
    std::ofstream os(path);
    if (!os) throw ValidationError("cannot open matrix dump file: " + path);
    os << "%%MatrixMarket matrix array real general\n";
    os << W.rows() << " " << W.cols() << "\n";
    for (int j = 0; j < W.cols(); ++j)
        for (int i = 0; i < W.rows(); ++i) os << format_sci(W(i, j)) << "\n";
}

}  // namespace screenbem
