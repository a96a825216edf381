#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "screenbem/common.hpp"

namespace screenbem {

// Simplicial screen mesh: segments in the plane (dim 2) or triangles in
// space (dim 3). 2D vertices carry z = 0; segment facets use slot [2] = -1.
struct SurfaceMesh {
    int dim = 3;
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> facets;
    std::vector<int> tags;

    int facet_nv() const { return dim; }
    int num_vertices() const { return static_cast<int>(vertices.size()); }
    int num_facets() const { return static_cast<int>(facets.size()); }

    Vec3 facet_centroid(int f) const
    {
        Vec3 c = Vec3::Zero();
        for (int k = 0; k < facet_nv(); ++k) c += vertices[facets[f][k]];
        return c / facet_nv();
    }

    double facet_diameter(int f) const
    {
        double d = 0;
        for (int a = 0; a < facet_nv(); ++a)
            for (int b = a + 1; b < facet_nv(); ++b)
                d = std::max(d, (vertices[facets[f][a]] - vertices[facets[f][b]]).norm());
        return d;
    }

    // Segment length or triangle area.
    double facet_measure(int f) const
    {
        const auto& t = facets[f];
        if (dim == 2) return (vertices[t[1]] - vertices[t[0]]).norm();
        return 0.5 * (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]).norm();
    }

    // Unit right-hand normal from the stored vertex order (in-plane 90-degree
    // rotation of the direction for segments).
    Vec3 facet_normal(int f) const
    {
        const auto& t = facets[f];
        if (dim == 2) {
            const Vec3 d = (vertices[t[1]] - vertices[t[0]]).normalized();
            return Vec3(-d.y(), d.x(), 0.0);
        }
        return (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]).normalized();
    }

    double max_facet_diameter() const
    {
        double h = 0;
        for (int f = 0; f < num_facets(); ++f) h = std::max(h, facet_diameter(f));
        return h;
    }

    double diameter() const
    {
        Vec3 lo = Vec3::Constant(1e300), hi = Vec3::Constant(-1e300);
        for (const auto& p : vertices) {
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
        return (hi - lo).norm();
    }

    double distance_to(const Vec3& x) const;
};

// Nested coarse/fine pair with the fine-to-coarse parent map.
struct MeshLevelPair {
    SurfaceMesh coarse;
    SurfaceMesh fine;
    std::vector<int> parent;  // fine facet id -> coarse facet id
    double H = 0;
    double h = 0;
};

namespace detail {

inline double point_segment_distance(const Vec3& x, const Vec3& a, const Vec3& b)
{
    const Vec3 d = b - a;
    const double t = std::clamp((x - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
    return (x - (a + t * d)).norm();
}

inline double point_triangle_distance(const Vec3& x, const Vec3& a, const Vec3& b, const Vec3& c)
{
    const Vec3 ab = b - a, ac = c - a;
    const Vec3 n = ab.cross(ac);
    const double nn = n.squaredNorm();
    // barycentric coordinates of the in-plane projection
    const Vec3 ax = x - a;
    const double u = ax.cross(ac).dot(n) / nn;
    const double v = ab.cross(ax).dot(n) / nn;
    if (u >= 0 && v >= 0 && u + v <= 1.0) {
        return std::abs(ax.dot(n)) / std::sqrt(nn);
    }
    return std::min({point_segment_distance(x, a, b), point_segment_distance(x, b, c),
                     point_segment_distance(x, a, c)});
}

}  // namespace detail

inline double SurfaceMesh::distance_to(const Vec3& x) const
{
    double d = 1e300;
    for (int f = 0; f < num_facets(); ++f) {
        const auto& t = facets[f];
        if (dim == 2)
            d = std::min(d, detail::point_segment_distance(x, vertices[t[0]], vertices[t[1]]));
        else
            d = std::min(d, detail::point_triangle_distance(x, vertices[t[0]], vertices[t[1]],
                                                            vertices[t[2]]));
    }
    return d;
}

namespace detail {

// Conformity of a facet pair: their hulls may intersect only in the hull of
// their shared vertices. Checks are tolerance-based at scale eps.
inline bool segments_conforming(const SurfaceMesh& m, int f, int g, double eps)
{
    const auto& a = m.facets[f];
    const auto& b = m.facets[g];
    std::vector<int> shared;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            if (a[i] == b[j]) shared.push_back(a[i]);

    const Vec3 p0 = m.vertices[a[0]], p1 = m.vertices[a[1]];
    const Vec3 q0 = m.vertices[b[0]], q1 = m.vertices[b[1]];

    if (shared.size() == 2) return false;  // duplicate, caught earlier but be safe
    if (shared.size() == 1) {
        // the non-shared endpoints must not fall on the other segment
        const Vec3 pf = (a[0] == shared[0]) ? p1 : p0;
        const Vec3 qf = (b[0] == shared[0]) ? q1 : q0;
        if (point_segment_distance(pf, q0, q1) < eps) return false;
        if (point_segment_distance(qf, p0, p1) < eps) return false;
        return true;
    }
    // disjoint vertex sets: segments must not touch at all
    const Vec3 d1 = p1 - p0, d2 = q1 - q0;
    const double cross = d1.x() * d2.y() - d1.y() * d2.x();
    const Vec3 r = q0 - p0;
    if (std::abs(cross) > eps * d1.norm() * d2.norm()) {
        const double t = (r.x() * d2.y() - r.y() * d2.x()) / cross;
        const double s = (r.x() * d1.y() - r.y() * d1.x()) / cross;
        const double tol = eps / std::min(d1.norm(), d2.norm());
        if (t > -tol && t < 1 + tol && s > -tol && s < 1 + tol) return false;
        return true;
    }
    // parallel: reject any touching (includes collinear overlap and T-contacts)
    if (point_segment_distance(p0, q0, q1) < eps || point_segment_distance(p1, q0, q1) < eps ||
        point_segment_distance(q0, p0, p1) < eps || point_segment_distance(q1, p0, p1) < eps)
        return false;
    return true;
}

inline bool segment_hits_triangle(const Vec3& a, const Vec3& b, const Vec3& t0, const Vec3& t1,
                                  const Vec3& t2, double eps)
{
    const Vec3 n = (t1 - t0).cross(t2 - t0);
    const double da = n.dot(a - t0), db = n.dot(b - t0);
    if ((da > eps && db > eps) || (da < -eps && db < -eps)) return false;
    if (std::abs(da - db) < 1e-300) return false;  // segment parallel to plane
    const double s = da / (da - db);
    if (s < -eps || s > 1 + eps) return false;
    const Vec3 p = a + s * (b - a);
    return point_triangle_distance(p, t0, t1, t2) < eps;
}

inline bool triangles_conforming(const SurfaceMesh& m, int f, int g, double eps)
{
    const auto& a = m.facets[f];
    const auto& b = m.facets[g];
    std::set<int> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    std::vector<int> shared;
    std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(shared));

    const Vec3 A0 = m.vertices[a[0]], A1 = m.vertices[a[1]], A2 = m.vertices[a[2]];
    const Vec3 B0 = m.vertices[b[0]], B1 = m.vertices[b[1]], B2 = m.vertices[b[2]];

    // vertices of one facet may not sit inside the other
    for (int v : a)
        if (!sb.count(v) && point_triangle_distance(m.vertices[v], B0, B1, B2) < eps) return false;
    for (int v : b)
        if (!sa.count(v) && point_triangle_distance(m.vertices[v], A0, A1, A2) < eps) return false;

    // edges not made of shared vertices may not pierce the other facet
    const std::array<std::array<int, 2>, 3> eidx = {{{0, 1}, {1, 2}, {2, 0}}};
    for (const auto& e : eidx) {
        const int u = a[e[0]], v = a[e[1]];
        if (sb.count(u) || sb.count(v)) continue;
        if (segment_hits_triangle(m.vertices[u], m.vertices[v], B0, B1, B2, eps)) return false;
    }
    for (const auto& e : eidx) {
        const int u = b[e[0]], v = b[e[1]];
        if (sa.count(u) || sa.count(v)) continue;
        if (segment_hits_triangle(m.vertices[u], m.vertices[v], A0, A1, A2, eps)) return false;
    }

    if (shared.size() >= 1) {
        // coplanar overlap beyond the shared simplex
        const Vec3 n1 = (A1 - A0).cross(A2 - A0).normalized();
        const Vec3 n2 = (B1 - B0).cross(B2 - B0).normalized();
        if (std::abs(std::abs(n1.dot(n2)) - 1.0) < 1e-12 &&
            std::abs(n1.dot(B0 - A0)) < eps) {
            const Vec3 ca = (A0 + A1 + A2) / 3.0, cb = (B0 + B1 + B2) / 3.0;
            if (point_triangle_distance(ca, B0, B1, B2) < eps ||
                point_triangle_distance(cb, A0, A1, A2) < eps)
                return false;
        }
    }
    return true;
}

}  // namespace detail

inline void validate_mesh(const SurfaceMesh& m)
{
    if (m.dim != 2 && m.dim != 3) throw ValidationError("mesh dimension must be 2 or 3");
    const int nv = m.num_vertices();
    for (const auto& p : m.vertices)
        if (!p.allFinite()) throw ValidationError("non-finite vertex coordinate");

    const double eps = 1e-12 * std::max(m.diameter(), 1e-300);
    std::set<std::array<int, 3>> seen;
    for (int f = 0; f < m.num_facets(); ++f) {
        std::array<int, 3> t = m.facets[f];
        for (int k = 0; k < m.facet_nv(); ++k)
            if (t[k] < 0 || t[k] >= nv) throw ValidationError("facet vertex id out of range");
        if (m.dim == 2 && t[2] != -1) throw ValidationError("2D facet must have 2 vertices");
        std::array<int, 3> key = t;
        std::sort(key.begin(), key.begin() + m.facet_nv());
        if (!seen.insert(key).second) throw ValidationError("duplicate facet");
        const double scale = (m.dim == 2) ? eps : eps * std::max(m.facet_diameter(f), eps);
        if (m.facet_measure(f) < scale)
            throw ValidationError("degenerate facet " + std::to_string(f));
    }

    for (int f = 0; f < m.num_facets(); ++f) {
        for (int g = f + 1; g < m.num_facets(); ++g) {
            // cheap bounding-sphere reject
            const double rr = 0.5 * (m.facet_diameter(f) + m.facet_diameter(g)) + eps;
            if ((m.facet_centroid(f) - m.facet_centroid(g)).norm() > rr) continue;
            const bool ok = (m.dim == 2) ? detail::segments_conforming(m, f, g, eps)
                                         : detail::triangles_conforming(m, f, g, eps);
            if (!ok)
                throw ValidationError("non-conforming facet pair " + std::to_string(f) + "," +
                                      std::to_string(g));
        }
    }
}

// ---------------------------------------------------------------------------
// Built-in geometries. Coordinates are chosen exactly symmetric.

// Cross of arms [-1,1] x {0} and {0} x [-1,1], n segments per arm.
inline SurfaceMesh make_plus(int per_arm = 1)
{
    if (per_arm < 1) throw ValidationError("plus: per-arm segment count must be >= 1");
    SurfaceMesh m;
    m.dim = 2;
    m.vertices.push_back(Vec3::Zero());
    const Vec3 dirs[4] = {Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(-1, 0, 0), Vec3(0, -1, 0)};
    for (int a = 0; a < 4; ++a) {
        int prev = 0;
        for (int k = 1; k <= per_arm; ++k) {
            m.vertices.push_back(dirs[a] * (static_cast<double>(k) / per_arm));
            const int cur = m.num_vertices() - 1;
            m.facets.push_back({prev, cur, -1});
            prev = cur;
        }
    }
    return m;
}

// Three segments from the centroid of an equilateral triangle to its
// vertices (arm length 1), n segments per arm.
inline SurfaceMesh make_threefold(int per_arm = 1)
{
    if (per_arm < 1) throw ValidationError("threefold: per-arm segment count must be >= 1");
    const double s = std::sqrt(3.0) / 2.0;
    SurfaceMesh m;
    m.dim = 2;
    m.vertices.push_back(Vec3::Zero());
    const Vec3 dirs[3] = {Vec3(0, 1, 0), Vec3(-s, -0.5, 0), Vec3(s, -0.5, 0)};
    for (int a = 0; a < 3; ++a) {
        int prev = 0;
        for (int k = 1; k <= per_arm; ++k) {
            m.vertices.push_back(dirs[a] * (static_cast<double>(k) / per_arm));
            const int cur = m.num_vertices() - 1;
            m.facets.push_back({prev, cur, -1});
            prev = cur;
        }
    }
    return m;
}

// Two unit-side equilateral triangles in perpendicular planes sharing the
// median from the origin; each triangle carries the median as a mesh edge
// (4 facets total before refinement).
inline SurfaceMesh make_bowtie_base()
{
    const double mlen = std::sqrt(3.0) / 2.0;
    SurfaceMesh m;
    m.dim = 3;
    m.vertices = {
        Vec3(0, 0, 0),          // 0: shared median endpoint
        Vec3(0, 0, mlen),       // 1: shared median endpoint (midpoint of both bases)
        Vec3(0.5, 0, mlen),     // 2
        Vec3(-0.5, 0, mlen),    // 3
        Vec3(0, 0.5, mlen),     // 4
        Vec3(0, -0.5, mlen),    // 5
    };
    m.facets = {{0, 2, 1}, {0, 1, 3}, {0, 4, 1}, {0, 1, 5}};
    return m;
}

// ---------------------------------------------------------------------------
// Refinement.

inline MeshLevelPair refine_uniform(const SurfaceMesh& mesh)
{
    MeshLevelPair pair;
    pair.coarse = mesh;
    SurfaceMesh& fine = pair.fine;
    fine.dim = mesh.dim;
    fine.vertices = mesh.vertices;

    if (mesh.dim == 2) {
        for (int f = 0; f < mesh.num_facets(); ++f) {
            const auto& t = mesh.facets[f];
            fine.vertices.push_back(0.5 * (mesh.vertices[t[0]] + mesh.vertices[t[1]]));
            const int mid = fine.num_vertices() - 1;
            fine.facets.push_back({t[0], mid, -1});
            fine.facets.push_back({mid, t[1], -1});
            pair.parent.push_back(f);
            pair.parent.push_back(f);
        }
    } else {
        std::map<std::array<int, 2>, int> edge_mid;
        auto midpoint = [&](int a, int b) {
            std::array<int, 2> key = {std::min(a, b), std::max(a, b)};
            auto it = edge_mid.find(key);
            if (it != edge_mid.end()) return it->second;
            fine.vertices.push_back(0.5 * (mesh.vertices[a] + mesh.vertices[b]));
            const int id = fine.num_vertices() - 1;
            edge_mid.emplace(key, id);
            return id;
        };
        for (int f = 0; f < mesh.num_facets(); ++f) {
            const auto& t = mesh.facets[f];
            const int m01 = midpoint(t[0], t[1]);
            const int m12 = midpoint(t[1], t[2]);
            const int m02 = midpoint(t[0], t[2]);
            fine.facets.push_back({t[0], m01, m02});
            fine.facets.push_back({m01, t[1], m12});
            fine.facets.push_back({m02, m12, t[2]});
            fine.facets.push_back({m01, m12, m02});
            for (int k = 0; k < 4; ++k) pair.parent.push_back(f);
        }
    }
    pair.H = pair.coarse.max_facet_diameter();
    pair.h = fine.max_facet_diameter();
    return pair;
}

inline MeshLevelPair refine_uniform_times(const SurfaceMesh& mesh, int k)
{
    MeshLevelPair pair;
    pair.coarse = mesh;
    pair.fine = mesh;
    pair.parent.resize(mesh.num_facets());
    for (int f = 0; f < mesh.num_facets(); ++f) pair.parent[f] = f;
    for (int i = 0; i < k; ++i) {
        MeshLevelPair step = refine_uniform(pair.fine);
        std::vector<int> parent(step.fine.num_facets());
        for (int f = 0; f < step.fine.num_facets(); ++f) parent[f] = pair.parent[step.parent[f]];
        pair.fine = std::move(step.fine);
        pair.parent = std::move(parent);
    }
    pair.H = pair.coarse.max_facet_diameter();
    pair.h = pair.fine.max_facet_diameter();
    return pair;
}

// Redistributes nodes of a 2D mesh along each arm ending at a given corner so
// that the k-th node sits at arc distance L*(k/n)^exponent from the corner.
inline SurfaceMesh refine_graded(const SurfaceMesh& mesh, const std::vector<Vec3>& corners,
                                 double exponent)
{
    if (mesh.dim != 2) throw ValidationError("graded refinement is 2D only");
    if (exponent < 1.0) throw ValidationError("grading exponent must be >= 1");

    const double eps = 1e-12 * std::max(mesh.diameter(), 1e-300);

    // vertex -> incident facets
    std::vector<std::vector<int>> star(mesh.num_vertices());
    for (int f = 0; f < mesh.num_facets(); ++f) {
        star[mesh.facets[f][0]].push_back(f);
        star[mesh.facets[f][1]].push_back(f);
    }

    SurfaceMesh out = mesh;
    for (const Vec3& c : corners) {
        int cv = -1;
        for (int v = 0; v < mesh.num_vertices(); ++v)
            if ((mesh.vertices[v] - c).norm() < eps) cv = v;
        if (cv < 0 || star[cv].size() != 1)
            throw ValidationError("grading corner is not a boundary vertex of the mesh");

        // walk the chain of degree-2 vertices inward from the corner
        std::vector<int> chain = {cv};
        int f = star[cv][0];
        int prev = cv;
        while (true) {
            const auto& t = mesh.facets[f];
            const int next = (t[0] == prev) ? t[1] : t[0];
            chain.push_back(next);
            if (star[next].size() != 2) break;
            f = (star[next][0] == f) ? star[next][1] : star[next][0];
            prev = next;
        }

        const int n = static_cast<int>(chain.size()) - 1;
        std::vector<double> arc(n + 1, 0.0);
        for (int k = 1; k <= n; ++k)
            arc[k] = arc[k - 1] + (mesh.vertices[chain[k]] - mesh.vertices[chain[k - 1]]).norm();
        const double L = arc[n];
        for (int k = 1; k < n; ++k) {
            const double target = L * std::pow(static_cast<double>(k) / n, exponent);
            // place at arc length `target` from the corner along the original polyline
            int seg = 0;
            while (seg + 1 < n && arc[seg + 1] < target) ++seg;
            const double t = (target - arc[seg]) / (arc[seg + 1] - arc[seg]);
            out.vertices[chain[k]] =
                (1.0 - t) * mesh.vertices[chain[seg]] + t * mesh.vertices[chain[seg + 1]];
        }
    }
    validate_mesh(out);
    return out;
}

// Sub-facets of the mesh boundary: vertices of segments in exactly one facet
// (2D, returned as {v,-1}), or edges in exactly one triangle (3D).
inline std::vector<std::array<int, 2>> boundary(const SurfaceMesh& mesh)
{
    std::map<std::array<int, 2>, int> count;
    for (int f = 0; f < mesh.num_facets(); ++f) {
        const auto& t = mesh.facets[f];
        if (mesh.dim == 2) {
            ++count[{t[0], -1}];
            ++count[{t[1], -1}];
        } else {
            for (int k = 0; k < 3; ++k) {
                const int a = t[k], b = t[(k + 1) % 3];
                ++count[{std::min(a, b), std::max(a, b)}];
            }
        }
    }
    std::vector<std::array<int, 2>> result;
    for (const auto& [key, c] : count)
        if (c == 1) result.push_back(key);
    return result;
}

// ---------------------------------------------------------------------------
// File format: ASCII header "dim n_vertices n_facets", one coordinate line
// per vertex, one 0-based index line per facet.

inline void save_mesh(const SurfaceMesh& m, const std::string& path)
{
    std::ofstream os(path);
    if (!os) throw ValidationError("cannot open mesh file for writing: " + path);
    os << m.dim << " " << m.num_vertices() << " " << m.num_facets() << "\n";
    for (const auto& p : m.vertices) {
        os << format_sci(p.x()) << " " << format_sci(p.y());
        if (m.dim == 3) os << " " << format_sci(p.z());
        os << "\n";
    }
    for (const auto& f : m.facets) {
        os << f[0] << " " << f[1];
        if (m.dim == 3) os << " " << f[2];
        os << "\n";
    }
}

enum class MeshFormat { OffLike, BuiltinSpec };

// Builtin specs: "plus[:segments_per_arm]", "threefold[:segments_per_arm]",
// "bowtie[:refinements]".
inline SurfaceMesh make_builtin(const std::string& spec)
{
    std::string name = spec;
    int param = -1;
    if (const auto pos = spec.find(':'); pos != std::string::npos) {
        name = spec.substr(0, pos);
        try {
            param = std::stoi(spec.substr(pos + 1));
        } catch (const std::exception&) {
            throw ValidationError("bad builtin parameter in '" + spec + "'");
        }
    }
    SurfaceMesh m;
    if (name == "plus")
        m = make_plus(param < 0 ? 1 : param);
    else if (name == "threefold")
        m = make_threefold(param < 0 ? 1 : param);
    else if (name == "bowtie")
        m = refine_uniform_times(make_bowtie_base(), param < 0 ? 0 : param).fine;
    else
        throw ValidationError("unknown builtin geometry '" + name + "'");
    validate_mesh(m);
    return m;
}

inline SurfaceMesh load_mesh(const std::string& path, MeshFormat format = MeshFormat::OffLike)
{
    if (format == MeshFormat::BuiltinSpec) return make_builtin(path);

    std::ifstream is(path);
    if (!is) throw ValidationError("cannot open mesh file: " + path);
    SurfaceMesh m;
    int nv = 0, nf = 0;
    if (!(is >> m.dim >> nv >> nf)) throw ValidationError("malformed mesh header in " + path);
    if (m.dim != 2 && m.dim != 3) throw ValidationError("mesh dimension must be 2 or 3");
    if (nv < 0 || nf < 0) throw ValidationError("negative count in mesh header");
    m.vertices.resize(nv, Vec3::Zero());
    for (int v = 0; v < nv; ++v) {
        if (!(is >> m.vertices[v].x() >> m.vertices[v].y()))
            throw ValidationError("malformed vertex line in " + path);
        if (m.dim == 3 && !(is >> m.vertices[v].z()))
            throw ValidationError("malformed vertex line in " + path);
    }
    m.facets.resize(nf, {-1, -1, -1});
    for (int f = 0; f < nf; ++f) {
        if (!(is >> m.facets[f][0] >> m.facets[f][1]))
            throw ValidationError("malformed facet line in " + path);
        if (m.dim == 3 && !(is >> m.facets[f][2]))
            throw ValidationError("malformed facet line in " + path);
    }
    validate_mesh(m);
    return m;
}

}  // namespace screenbem
