#pragma once

#include <complex>

#include "screenbem/assemble.hpp"

namespace screenbem {

// Off-screen evaluation points; construction masks out points too close to
// the screen for the dipole kernel.
struct EvaluationGrid {
    std::vector<Vec3> points;
};

inline EvaluationGrid make_cartesian_grid(const SurfaceMesh& mesh, double lo, double hi, int nx,
                                          int ny, double mask_eps)
{
    EvaluationGrid grid;
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j) {
            const Vec3 p(lo + (hi - lo) * (i + 0.5) / nx, lo + (hi - lo) * (j + 0.5) / ny, 0.0);
            if (mesh.distance_to(p) > mask_eps) grid.points.push_back(p);
        }
    return grid;
}

namespace detail {

// integral of the dipole kernel times the side-0/side-1 value difference over
// one facet, subdividing in barycentric space while the point is close
inline double facet_dipole_integral(const SurfaceMesh& m, const Vec3& n0, const Vec3& x,
                                    const std::array<double, 3>& dvals, const TriangleRule& tri,
                                    const Rule1d& seg, std::array<Vec3, 3> corner, int depth)
{
    const Vec3 phys[3] = {corner[0], corner[1], corner[2]};
    double diam = 0;
    for (int a = 0; a < m.facet_nv(); ++a)
        for (int b = a + 1; b < m.facet_nv(); ++b)
            diam = std::max(diam, (phys[a] - phys[b]).norm());

    const double dist = (m.dim == 2)
                            ? point_segment_distance(x, phys[0], phys[1])
                            : point_triangle_distance(x, phys[0], phys[1], phys[2]);

    if (dist < diam && depth < 24) {
        double acc = 0;
        if (m.dim == 2) {
            const Vec3 mid = 0.5 * (corner[0] + corner[1]);
            const double dm = 0.5 * (dvals[0] + dvals[1]);
            acc += facet_dipole_integral(m, n0, x, {dvals[0], dm, 0}, tri, seg,
                                         {corner[0], mid, Vec3::Zero()}, depth + 1);
            acc += facet_dipole_integral(m, n0, x, {dm, dvals[1], 0}, tri, seg,
                                         {mid, corner[1], Vec3::Zero()}, depth + 1);
        } else {
            const Vec3 m01 = 0.5 * (corner[0] + corner[1]);
            const Vec3 m12 = 0.5 * (corner[1] + corner[2]);
            const Vec3 m02 = 0.5 * (corner[0] + corner[2]);
            const double d01 = 0.5 * (dvals[0] + dvals[1]);
            const double d12 = 0.5 * (dvals[1] + dvals[2]);
            const double d02 = 0.5 * (dvals[0] + dvals[2]);
            acc += facet_dipole_integral(m, n0, x, {dvals[0], d01, d02}, tri, seg,
                                         {corner[0], m01, m02}, depth + 1);
            acc += facet_dipole_integral(m, n0, x, {d01, dvals[1], d12}, tri, seg,
                                         {m01, corner[1], m12}, depth + 1);
            acc += facet_dipole_integral(m, n0, x, {d02, d12, dvals[2]}, tri, seg,
                                         {m02, m12, corner[2]}, depth + 1);
            acc += facet_dipole_integral(m, n0, x, {d01, d12, d02}, tri, seg,
                                         {m01, m12, m02}, depth + 1);
        }
        return acc;
    }

    double acc = 0;
    if (m.dim == 2) {
        const double len = (corner[1] - corner[0]).norm();
        for (size_t i = 0; i < seg.x.size(); ++i) {
            const Vec3 y = corner[0] + seg.x[i] * (corner[1] - corner[0]);
            const double val = (1.0 - seg.x[i]) * dvals[0] + seg.x[i] * dvals[1];
            const Vec3 r = y - x;
            const double rn = r.norm();
            acc += seg.w[i] * len * n0.dot(r) / (2.0 * M_PI * rn * rn) * val;
        }
    } else {
        const double area =
            0.5 * (corner[1] - corner[0]).cross(corner[2] - corner[0]).norm();
        for (int i = 0; i < tri.size(); ++i) {
            const Vec3 y = corner[0] + tri.u[i] * (corner[1] - corner[0]) +
                           tri.v[i] * (corner[2] - corner[0]);
            const double val = (1.0 - tri.u[i] - tri.v[i]) * dvals[0] + tri.u[i] * dvals[1] +
                               tri.v[i] * dvals[2];
            const Vec3 r = y - x;
            const double rn = r.norm();
            acc += tri.w[i] * 2.0 * area * n0.dot(r) / (4.0 * M_PI * rn * rn * rn) * val;
        }
    }
    return acc;
}

}  // namespace detail

// Double-layer potential of a jump density at points off the screen:
// U(x) = sum_t int n_t.(y-x)/(c_d |x-y|^d) phi_t(y), with the two copies of
// each facet combined so single traces cancel exactly.
inline Eigen::VectorXd eval_DL(const JumpVector& v, const InflatedMesh& im,
                               const EvaluationGrid& grid, const QuadratureConfig& cfg,
                               int workers = 1)
{
    const SurfaceMesh& m = im.base;
    const TraceField tf = expand(v, im);
    const TriangleRule tri = triangle_rule(cfg.far_order + 2);
    const Rule1d seg = gauss_legendre(cfg.far_order + 2);
    const double mask = 0.5 * m.max_facet_diameter() * 1e-6;

    Eigen::VectorXd out = Eigen::VectorXd::Zero(grid.points.size());
    run_partitioned(static_cast<std::int64_t>(grid.points.size()), workers,
                    [&](int, std::int64_t lo, std::int64_t hi) {
                        for (std::int64_t p = lo; p < hi; ++p) {
                            const Vec3& x = grid.points[p];
                            if (m.distance_to(x) <= mask)
                                throw ValidationError("evaluation point lies on the screen");
                            double acc = 0;
                            for (int f = 0; f < m.num_facets(); ++f) {
                                std::array<double, 3> dv = {0, 0, 0};
                                for (int k = 0; k < m.facet_nv(); ++k)
                                    dv[k] = tf.at(im, 2 * f, k) - tf.at(im, 2 * f + 1, k);
                                std::array<Vec3, 3> corner = {Vec3::Zero(), Vec3::Zero(),
                                                              Vec3::Zero()};
                                for (int k = 0; k < m.facet_nv(); ++k)
                                    corner[k] = m.vertices[m.facets[f][k]];
                                acc += detail::facet_dipole_integral(
                                    m, im.oriented_facets[2 * f].normal, x, dv, tri, seg,
                                    corner, 0);
                            }
                            out[p] = acc;
                        }
                    });
    return out;
}

// ---------------------------------------------------------------------------
// Reference solution on the plus screen: harmonic off the slit [-1,1] x {0},
// built from the exterior conformal map z = (w + 1/w)/2.

namespace detail {

inline std::complex<double> plus_map_w(std::complex<double> z)
{
    const std::complex<double> s = std::sqrt(z * z - 1.0);
    std::complex<double> w = z + s;
    if (std::abs(w) <= 1.0) w = z - s;
    return w;
}

}  // namespace detail

inline double exact_plus_solution(const Vec3& p)
{
    const std::complex<double> z(p.x(), p.y());
    if (std::abs(p.y()) < 1e-14 && std::abs(p.x()) <= 1.0)
        throw ValidationError("exact solution requested on the slit");
    const std::complex<double> w = detail::plus_map_w(z);
    return std::imag(w) / (2.0 * std::norm(w));
}

inline Eigen::VectorXd exact_plus_solution(const EvaluationGrid& grid)
{
    Eigen::VectorXd out(grid.points.size());
    for (size_t i = 0; i < grid.points.size(); ++i) out[i] = exact_plus_solution(grid.points[i]);
    return out;
}

// Gradient of the reference solution; on the open slit the one-sided limit
// from above is returned (its normal component is side-independent).
inline Vec3 exact_plus_gradient(const Vec3& p)
{
    const double x1 = p.x(), x2 = p.y();
    if (std::abs(x2) < 1e-14 && std::abs(x1) < 1.0) {
        const double s = std::sqrt(1.0 - x1 * x1);
        return Vec3(-x1 / (2.0 * s), -0.5, 0.0);
    }
    const std::complex<double> z(x1, x2);
    const std::complex<double> w = detail::plus_map_w(z);
    const std::complex<double> s = w - z;  // the branch actually used
    const std::complex<double> fp = std::complex<double>(0, -1) / (2.0 * w * s);
    return Vec3(std::real(fp), -std::imag(fp), 0.0);
}

// Discrete l2 distance between two grid samplings.
inline double grid_error(const Eigen::VectorXd& computed, const Eigen::VectorXd& exact)
{
    if (computed.size() != exact.size())
        throw ValidationError("grid error: length mismatch");
    if (computed.size() == 0) return 0.0;
    return std::sqrt((computed - exact).squaredNorm() / computed.size());
}

}  // namespace screenbem
