#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "screenbem/gauss.hpp"
#include "screenbem/mesh.hpp"

namespace screenbem {

struct QuadratureConfig {
    int far_order = 4;        // Gauss order for disjoint pairs
    int singular_order = 8;   // order of the transformed singular rules
    double near_threshold = 2.0;  // distance/diameter ratio below which pairs count as near
};

// Kernel of the weakly singular pair integrals.
inline double kernel(int dim, double r)
{
    if (dim == 3) return 1.0 / (4.0 * M_PI * r);
    return -std::log(r) / (2.0 * M_PI);
}

// One point of a transformed rule for a (possibly singular) triangle pair:
// barycentric coordinates on both triangles plus a weight. The physical
// integral is 4*A*A' * sum w * k(x,y).
struct PairRulePoint {
    double a1, a2, b1, b2, w;
};

// Singularity-removing coordinate transforms for the three touching classes
// of triangle pairs (identical / shared edge / shared vertex). Shared
// vertices must come first, in the same order, in both triangles.
struct SauterRules {
    std::vector<PairRulePoint> identical;
    std::vector<PairRulePoint> edge;
    std::vector<PairRulePoint> vertex;

    explicit SauterRules(int order)
    {
        const Rule1d g = gauss_legendre(order);
        auto push = [](std::vector<PairRulePoint>& out, double x1, double x2, double y1,
                       double y2, double w) {
            // lower-triangle coordinates (x2 <= x1) to barycentric
            out.push_back({x1 - x2, x2, y1 - y2, y2, w});
        };
        for (int i0 = 0; i0 < order; ++i0)
            for (int i1 = 0; i1 < order; ++i1)
                for (int i2 = 0; i2 < order; ++i2)
                    for (int i3 = 0; i3 < order; ++i3) {
                        const double xi = g.x[i0], e1 = g.x[i1], e2 = g.x[i2], e3 = g.x[i3];
                        const double wp = g.w[i0] * g.w[i1] * g.w[i2] * g.w[i3];
                        const double xi3 = xi * xi * xi;

                        {  // identical pair: six subdomains, weight xi^3 e1^2 e2
                            const double w = wp * xi3 * e1 * e1 * e2;
                            push(identical, xi, xi * (1 - e1 + e1 * e2),
                                 xi * (1 - e1 * e2 * e3), xi * (1 - e1), w);
                            push(identical, xi * (1 - e1 * e2 * e3), xi * (1 - e1), xi,
                                 xi * (1 - e1 + e1 * e2), w);
                            push(identical, xi, xi * e1 * (1 - e2 + e2 * e3),
                                 xi * (1 - e1 * e2), xi * e1 * (1 - e2), w);
                            push(identical, xi * (1 - e1 * e2), xi * e1 * (1 - e2), xi,
                                 xi * e1 * (1 - e2 + e2 * e3), w);
                            push(identical, xi * (1 - e1 * e2 * e3), xi * e1 * (1 - e2 * e3),
                                 xi, xi * e1 * (1 - e2), w);
                            push(identical, xi, xi * e1 * (1 - e2),
                                 xi * (1 - e1 * e2 * e3), xi * e1 * (1 - e2 * e3), w);
                        }
                        {  // shared edge: five subdomains
                            const double w1 = wp * xi3 * e1 * e1;
                            const double w2 = wp * xi3 * e1 * e1 * e2;
                            push(edge, xi, xi * e1 * e3, xi * (1 - e1 * e2),
                                 xi * e1 * (1 - e2), w1);
                            push(edge, xi, xi * e1, xi * (1 - e1 * e2 * e3),
                                 xi * e1 * e2 * (1 - e3), w2);
                            push(edge, xi * (1 - e1 * e2), xi * e1 * (1 - e2), xi,
                                 xi * e1 * e2 * e3, w2);
                            push(edge, xi * (1 - e1 * e2 * e3), xi * e1 * e2 * (1 - e3), xi,
                                 xi * e1, w2);
                            push(edge, xi * (1 - e1 * e2 * e3), xi * e1 * (1 - e2 * e3), xi,
                                 xi * e1 * e2, w2);
                        }
                        {  // shared vertex: two subdomains
                            const double w = wp * xi3 * e2;
                            push(vertex, xi, xi * e1, xi * e2, xi * e2 * e3, w);
                            push(vertex, xi * e2, xi * e2 * e3, xi, xi * e1, w);
                        }
                    }
    }
};

// Rules and lookup data reused across one assembly pass.
struct QuadratureEngine {
    QuadratureConfig cfg;
    SauterRules sauter;
    TriangleRule tri_far;
    TriangleRule tri_near;
    Rule1d seg_far;
    Rule1d seg_sing;

    // the transformed rules run two Gauss points above the configured order;
    // the coincident and edge classes need it on skewed triangles
    explicit QuadratureEngine(const QuadratureConfig& c)
        : cfg(c),
          sauter(c.singular_order + 2),
          tri_far(triangle_rule(c.far_order)),
          tri_near(triangle_rule(c.far_order + 2)),
          seg_far(gauss_legendre(c.far_order)),
          seg_sing(gauss_legendre(c.singular_order))
    {
    }
};

namespace detail {

// ---------------------------------------------------------------- 2D pieces

// Closed form of  int_segment ln|x - y| dy  for a segment from a to b.
inline double segment_log_integral(const Vec3& x, const Vec3& a, const Vec3& b)
{
    const Vec3 d = b - a;
    const double L = d.norm();
    const Vec3 dh = d / L;
    const double u0 = (x - a).dot(dh);
    const double eta = ((x - a) - u0 * dh).norm();

    auto anti = [&](double t) {
        if (eta < 1e-300) {
            if (std::abs(t) < 1e-300) return 0.0;
            return t * std::log(std::abs(t)) - t;
        }
        return t * 0.5 * std::log(t * t + eta * eta) - t + eta * std::atan(t / eta);
    };
    return anti(L - u0) - anti(-u0);
}

inline double segment_pair_distance(const Vec3& p0, const Vec3& p1, const Vec3& q0,
                                    const Vec3& q1)
{
    return std::min({point_segment_distance(p0, q0, q1), point_segment_distance(p1, q0, q1),
                     point_segment_distance(q0, p0, p1), point_segment_distance(q1, p0, p1)});
}

// Disjoint segment pair: outer Gauss, analytic inner, with outer subdivision
// when the pair is near.
inline double segment_pair_disjoint(const Vec3& p0, const Vec3& p1, const Vec3& q0,
                                    const Vec3& q1, const QuadratureEngine& eng, int depth)
{
    const double lp = (p1 - p0).norm();
    const double dist = segment_pair_distance(p0, p1, q0, q1);
    if (depth < 24 && dist < eng.cfg.near_threshold * lp) {
        const Vec3 mid = 0.5 * (p0 + p1);
        return segment_pair_disjoint(p0, mid, q0, q1, eng, depth + 1) +
               segment_pair_disjoint(mid, p1, q0, q1, eng, depth + 1);
    }
    const Rule1d& g = (dist < eng.cfg.near_threshold * lp) ? eng.seg_sing : eng.seg_far;
    double acc = 0;
    for (size_t i = 0; i < g.x.size(); ++i) {
        const Vec3 x = p0 + g.x[i] * (p1 - p0);
        acc += g.w[i] * segment_log_integral(x, q0, q1);
    }
    return acc * lp;
}

// Segments sharing one endpoint v: radial substitution splits off the exact
// logarithmic part; the angular factors are smooth.
inline double segment_pair_shared_vertex(const Vec3& v, const Vec3& a, const Vec3& b,
                                         const QuadratureEngine& eng)
{
    const double l1 = (a - v).norm(), l2 = (b - v).norm();
    const Vec3 da = (a - v) / l1, db = (b - v) / l2;
    const Rule1d& g = eng.seg_sing;
    double k = 0;
    for (size_t i = 0; i < g.x.size(); ++i) {
        const double u = g.x[i];
        k += g.w[i] * (std::log((l1 * da - l2 * u * db).norm()) +
                       std::log((l1 * u * da - l2 * db).norm()));
    }
    return l1 * l2 * (-0.5 + 0.5 * k);
}

// ---------------------------------------------------------------- 3D pieces

inline double triangle_pair_distance_estimate(const std::array<Vec3, 3>& t,
                                              const std::array<Vec3, 3>& s)
{
    const Vec3 ct = (t[0] + t[1] + t[2]) / 3.0, cs = (s[0] + s[1] + s[2]) / 3.0;
    double rt = 0, rs = 0;
    for (int k = 0; k < 3; ++k) {
        rt = std::max(rt, (t[k] - ct).norm());
        rs = std::max(rs, (s[k] - cs).norm());
    }
    return std::max(0.0, (ct - cs).norm() - rt - rs);
}

inline double triangle_diameter(const std::array<Vec3, 3>& t)
{
    return std::max({(t[0] - t[1]).norm(), (t[1] - t[2]).norm(), (t[0] - t[2]).norm()});
}

inline double triangle_area(const std::array<Vec3, 3>& t)
{
    return 0.5 * (t[1] - t[0]).cross(t[2] - t[0]).norm();
}

inline double triangle_pair_rule(const std::array<Vec3, 3>& t, const std::array<Vec3, 3>& s,
                                 const TriangleRule& r, int dim)
{
    double acc = 0;
    for (int i = 0; i < r.size(); ++i) {
        const Vec3 x = t[0] + r.u[i] * (t[1] - t[0]) + r.v[i] * (t[2] - t[0]);
        for (int j = 0; j < r.size(); ++j) {
            const Vec3 y = s[0] + r.u[j] * (s[1] - s[0]) + r.v[j] * (s[2] - s[0]);
            acc += r.w[i] * r.w[j] * kernel(dim, (x - y).norm());
        }
    }
    return acc * 4.0 * triangle_area(t) * triangle_area(s);
}

inline void split4(const std::array<Vec3, 3>& t, std::array<Vec3, 3> out[4])
{
    const Vec3 m01 = 0.5 * (t[0] + t[1]), m12 = 0.5 * (t[1] + t[2]), m02 = 0.5 * (t[0] + t[2]);
    out[0] = {t[0], m01, m02};
    out[1] = {m01, t[1], m12};
    out[2] = {m02, m12, t[2]};
    out[3] = {m01, m12, m02};
}

inline double triangle_pair_disjoint(const std::array<Vec3, 3>& t, const std::array<Vec3, 3>& s,
                                     const QuadratureEngine& eng, int depth)
{
    const double diam = std::max(triangle_diameter(t), triangle_diameter(s));
    const double dist = triangle_pair_distance_estimate(t, s);
    if (dist >= eng.cfg.near_threshold * diam || depth >= 5)
        return triangle_pair_rule(t, s, depth == 0 ? eng.tri_far : eng.tri_near, 3);
    // subdivide the larger facet
    std::array<Vec3, 3> kids[4];
    double acc = 0;
    if (triangle_diameter(t) >= triangle_diameter(s)) {
        split4(t, kids);
        for (int k = 0; k < 4; ++k) acc += triangle_pair_disjoint(kids[k], s, eng, depth + 1);
    } else {
        split4(s, kids);
        for (int k = 0; k < 4; ++k) acc += triangle_pair_disjoint(t, kids[k], eng, depth + 1);
    }
    return acc;
}

inline double triangle_pair_sauter(const std::array<Vec3, 3>& t, const std::array<Vec3, 3>& s,
                                   const std::vector<PairRulePoint>& rule)
{
    const double scale = 4.0 * triangle_area(t) * triangle_area(s);
    double acc = 0;
    for (const auto& p : rule) {
        const Vec3 x = t[0] + p.a1 * (t[1] - t[0]) + p.a2 * (t[2] - t[0]);
        const Vec3 y = s[0] + p.b1 * (s[1] - s[0]) + p.b2 * (s[2] - s[0]);
        acc += p.w / (x - y).norm();
    }
    return acc * scale / (4.0 * M_PI);
}

}  // namespace detail

// Weakly singular pair integral  intint_{|f| x |g|} G(x,y)  over two facets of
// a mesh, dispatched on the adjacency class of the underlying geometric pair.
inline double pair_integral(const SurfaceMesh& m, int f, int g, const QuadratureEngine& eng)
{
    if (m.dim == 2) {
        const Vec3 p0 = m.vertices[m.facets[f][0]], p1 = m.vertices[m.facets[f][1]];
        const Vec3 q0 = m.vertices[m.facets[g][0]], q1 = m.vertices[m.facets[g][1]];
        double raw;  // int int ln|x-y|
        if (f == g) {
            const double L = (p1 - p0).norm();
            raw = L * L * (std::log(L) - 1.5);
        } else {
            int sf = -1, sg = -1;
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    if (m.facets[f][i] == m.facets[g][j]) {
                        sf = i;
                        sg = j;
                    }
            if (sf >= 0) {
                const Vec3 v = m.vertices[m.facets[f][sf]];
                const Vec3 a = m.vertices[m.facets[f][1 - sf]];
                const Vec3 b = m.vertices[m.facets[g][1 - sg]];
                raw = detail::segment_pair_shared_vertex(v, a, b, eng);
            } else {
                raw = detail::segment_pair_disjoint(p0, p1, q0, q1, eng, 0);
            }
        }
        return -raw / (2.0 * M_PI);
    }

    // 3D: permute both triangles so shared vertices come first in matching order
    std::array<int, 3> pf = {-1, -1, -1}, pg = {-1, -1, -1};
    int shared = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (m.facets[f][i] == m.facets[g][j]) {
                pf[shared] = i;
                pg[shared] = j;
                ++shared;
                break;
            }
    auto fill_rest = [](std::array<int, 3>& p, int have) {
        for (int k = 0; k < 3; ++k) {
            bool used = false;
            for (int q = 0; q < have; ++q) used |= (p[q] == k);
            if (!used) p[have++] = k;
        }
    };
    fill_rest(pf, shared);
    fill_rest(pg, shared);

    std::array<Vec3, 3> t, s;
    for (int k = 0; k < 3; ++k) {
        t[k] = m.vertices[m.facets[f][pf[k]]];
        s[k] = m.vertices[m.facets[g][pg[k]]];
    }

    switch (shared) {
        case 3:
            return detail::triangle_pair_sauter(t, s, eng.sauter.identical);
        case 2:
            return detail::triangle_pair_sauter(t, s, eng.sauter.edge);
        case 1:
            return detail::triangle_pair_sauter(t, s, eng.sauter.vertex);
        default:
            return detail::triangle_pair_disjoint(t, s, eng, 0);
    }
}

}  // namespace screenbem
