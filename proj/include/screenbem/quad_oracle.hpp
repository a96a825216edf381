#pragma once

// Brute-force reference integrator for the weakly singular pair integrals,
// independent of the transformed production rules: the outer facet is split
// recursively with a fixed low-order rule until the value stabilizes, the
// inner integral is reduced exactly (closed form over a triangle, adaptive
// refinement over a segment). Test use only.

#include "screenbem/quadrature.hpp"

namespace screenbem {
namespace quad_oracle {

// int_T dA / ||x - y||  over a flat triangle, edge-decomposition closed form.
inline double triangle_inverse_distance_integral(const std::array<Vec3, 3>& tri, const Vec3& x)
{
    const Vec3 n = (tri[1] - tri[0]).cross(tri[2] - tri[0]).normalized();
    const double h = (x - tri[0]).dot(n);
    const Vec3 rho = x - h * n;
    const double scale = detail::triangle_diameter(tri);

    double acc = 0;
    for (int i = 0; i < 3; ++i) {
        const Vec3 a = tri[i], b = tri[(i + 1) % 3];
        const Vec3 s = (b - a).normalized();
        const Vec3 m = s.cross(n);  // outward in-plane normal for CCW order seen from +n
        const double t = (a - rho).dot(m);
        const double lm = (a - rho).dot(s);
        const double lp = (b - rho).dot(s);
        const double r0sq = t * t + h * h;
        const double rm = std::sqrt(lm * lm + r0sq);
        const double rp = std::sqrt(lp * lp + r0sq);

        if (r0sq > 1e-28 * scale * scale) {
            acc += t * std::log((rp + lp) / (rm + lm));
            acc -= std::abs(h) * (std::atan2(t * lp, r0sq + std::abs(h) * rp) -
                                  std::atan2(t * lm, r0sq + std::abs(h) * rm));
        }
        // on the edge line itself the edge term tends to zero
    }
    return acc;
}

// Adaptive  int_segment ln||x - y|| dy  by pure subdivision.
inline double segment_log_adaptive(const Vec3& x, const Vec3& a, const Vec3& b, int depth = 0)
{
    const double len = (b - a).norm();
    const double dist = detail::point_segment_distance(x, a, b);
    if (dist >= 2.0 * len || depth >= 40) {
        static const Rule1d g = gauss_legendre(6);
        double acc = 0;
        for (size_t i = 0; i < g.x.size(); ++i) {
            const double r = (x - (a + g.x[i] * (b - a))).norm();
            acc += g.w[i] * (r > 0 ? std::log(r) : 0.0);
        }
        return acc * len;
    }
    const Vec3 mid = 0.5 * (a + b);
    return segment_log_adaptive(x, a, mid, depth + 1) + segment_log_adaptive(x, mid, b, depth + 1);
}

namespace impl {

inline double inner_kernel_integral(const SurfaceMesh& m, int g, const Vec3& x)
{
    if (m.dim == 2) {
        const Vec3 a = m.vertices[m.facets[g][0]], b = m.vertices[m.facets[g][1]];
        return -segment_log_adaptive(x, a, b) / (2.0 * M_PI);
    }
    const std::array<Vec3, 3> tri = {m.vertices[m.facets[g][0]], m.vertices[m.facets[g][1]],
                                     m.vertices[m.facets[g][2]]};
    return triangle_inverse_distance_integral(tri, x) / (4.0 * M_PI);
}

// fixed low-order rule for the outer integral of F over a sub-facet
inline double outer_rule_tri(const SurfaceMesh& m, int g, const std::array<Vec3, 3>& t)
{
    static const TriangleRule r = triangle_rule(3);
    double acc = 0;
    for (int i = 0; i < r.size(); ++i) {
        const Vec3 x = t[0] + r.u[i] * (t[1] - t[0]) + r.v[i] * (t[2] - t[0]);
        acc += r.w[i] * inner_kernel_integral(m, g, x);
    }
    return acc * 2.0 * detail::triangle_area(t);
}

inline double outer_rule_seg(const SurfaceMesh& m, int g, const Vec3& a, const Vec3& b)
{
    static const Rule1d r = gauss_legendre(4);
    double acc = 0;
    for (size_t i = 0; i < r.x.size(); ++i)
        acc += r.w[i] * inner_kernel_integral(m, g, a + r.x[i] * (b - a));
    return acc * (b - a).norm();
}

inline double adapt_tri(const SurfaceMesh& m, int g, const std::array<Vec3, 3>& t, double coarse,
                        double tol, int depth)
{
    std::array<Vec3, 3> kids[4];
    detail::split4(t, kids);
    double fine = 0;
    std::array<double, 4> kid_val;
    for (int k = 0; k < 4; ++k) {
        kid_val[k] = outer_rule_tri(m, g, kids[k]);
        fine += kid_val[k];
    }
    if (std::abs(fine - coarse) <= tol || depth >= 26) return fine;
    double acc = 0;
    for (int k = 0; k < 4; ++k) acc += adapt_tri(m, g, kids[k], kid_val[k], 0.5 * tol, depth + 1);
    return acc;
}

inline double adapt_seg(const SurfaceMesh& m, int g, const Vec3& a, const Vec3& b, double coarse,
                        double tol, int depth)
{
    const Vec3 mid = 0.5 * (a + b);
    const double v0 = outer_rule_seg(m, g, a, mid);
    const double v1 = outer_rule_seg(m, g, mid, b);
    if (std::abs(v0 + v1 - coarse) <= tol || depth >= 30) return v0 + v1;
    return adapt_seg(m, g, a, mid, v0, 0.5 * tol, depth + 1) +
           adapt_seg(m, g, mid, b, v1, 0.5 * tol, depth + 1);
}

}  // namespace impl

// Reference value of  intint_{|f| x |g|} G(x,y), refined until the outer
// subdivision changes the value by less than rel_tol.
inline double pair_integral(const SurfaceMesh& m, int f, int g, double rel_tol = 1e-9)
{
    if (m.dim == 2) {
        const Vec3 a = m.vertices[m.facets[f][0]], b = m.vertices[m.facets[f][1]];
        const double rough = impl::outer_rule_seg(m, g, a, b);
        const double tol = rel_tol * std::max(std::abs(rough), 1e-12);
        return impl::adapt_seg(m, g, a, b, rough, tol, 0);
    }
    const std::array<Vec3, 3> t = {m.vertices[m.facets[f][0]], m.vertices[m.facets[f][1]],
                                   m.vertices[m.facets[f][2]]};
    const double rough = impl::outer_rule_tri(m, g, t);
    const double tol = rel_tol * std::max(std::abs(rough), 1e-12);
    return impl::adapt_tri(m, g, t, rough, tol, 0);
}

}  // namespace quad_oracle
}  // namespace screenbem
