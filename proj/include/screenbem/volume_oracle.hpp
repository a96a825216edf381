#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "screenbem/inflate.hpp"

namespace screenbem {

// Cells of an auxiliary volume mesh around a screen: triangles over a square
// region in 2D, tetrahedra over a box in 3D. Test oracle only.
struct BoxCellMesh {
    int dim = 3;
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 4>> cells;  // [3] = -1 in 2D

    int cell_nv() const { return dim + 1; }

    Vec3 cell_centroid(int c) const
    {
        Vec3 s = Vec3::Zero();
        for (int k = 0; k < cell_nv(); ++k) s += vertices[cells[c][k]];
        return s / cell_nv();
    }
};

// A hand-built volume mesh conforming to one builtin screen, with the
// correspondence between its interior faces and the screen facets.
struct VolumeOracleCase {
    BoxCellMesh box;
    SurfaceMesh surface;
    std::map<std::vector<int>, int> facet_of_face;  // sorted box vertex ids -> surface facet
    std::vector<int> box_vertex_of;                 // surface vertex -> box vertex
};

namespace oracle_detail {

struct VertexKey {
    long long a, b, c;
    bool operator<(const VertexKey& o) const
    {
        return std::tie(a, b, c) < std::tie(o.a, o.b, o.c);
    }
};

inline VertexKey key_of(const Vec3& p, double scale)
{
    const double q = scale * 1e-9;
    return {static_cast<long long>(std::llround(p.x() / q)),
            static_cast<long long>(std::llround(p.y() / q)),
            static_cast<long long>(std::llround(p.z() / q))};
}

struct VertexPool {
    double scale = 1.0;
    std::map<VertexKey, int> ids;
    std::vector<Vec3> pts;

    int add(const Vec3& p)
    {
        const VertexKey k = key_of(p, scale);
        auto it = ids.find(k);
        if (it != ids.end()) return it->second;
        const int id = static_cast<int>(pts.size());
        ids.emplace(k, id);
        pts.push_back(p);
        return id;
    }
};

// All (d-1)-faces of a cell as sorted vertex-id lists.
inline std::vector<std::vector<int>> cell_faces(const BoxCellMesh& box, int c)
{
    std::vector<std::vector<int>> out;
    const auto& t = box.cells[c];
    if (box.dim == 2) {
        out = {{t[0], t[1]}, {t[1], t[2]}, {t[0], t[2]}};
    } else {
        out = {{t[0], t[1], t[2]}, {t[0], t[1], t[3]}, {t[0], t[2], t[3]}, {t[1], t[2], t[3]}};
    }
    for (auto& f : out) std::sort(f.begin(), f.end());
    return out;
}

// Links the box to the screen: locate every surface vertex and facet inside
// the box mesh by position.
inline void link_surface(VolumeOracleCase& oc)
{
    const double scale = std::max(oc.box.vertices.empty() ? 1.0 : 1.0, oc.surface.diameter());
    std::map<VertexKey, int> pos_of;
    for (int v = 0; v < static_cast<int>(oc.box.vertices.size()); ++v)
        pos_of[key_of(oc.box.vertices[v], scale)] = v;

    oc.box_vertex_of.assign(oc.surface.num_vertices(), -1);
    for (int v = 0; v < oc.surface.num_vertices(); ++v) {
        auto it = pos_of.find(key_of(oc.surface.vertices[v], scale));
        if (it == pos_of.end())
            throw ValidationError("oracle box does not contain a screen vertex");
        oc.box_vertex_of[v] = it->second;
    }

    std::map<std::vector<int>, int> face_count;
    for (int c = 0; c < static_cast<int>(oc.box.cells.size()); ++c)
        for (auto& f : cell_faces(oc.box, c)) ++face_count[f];

    for (int f = 0; f < oc.surface.num_facets(); ++f) {
        std::vector<int> key;
        for (int k = 0; k < oc.surface.facet_nv(); ++k)
            key.push_back(oc.box_vertex_of[oc.surface.facets[f][k]]);
        std::sort(key.begin(), key.end());
        auto it = face_count.find(key);
        if (it == face_count.end() || it->second != 2)
            throw ValidationError("screen facet is not an interior face of the oracle box");
        oc.facet_of_face[key] = f;
    }
}

}  // namespace oracle_detail

// ---------------------------------------------------------------------------
// Hand-built boxes per builtin geometry.

// Square [-2,2]^2 on a grid of spacing 1/per_arm, each cell split along the
// same diagonal; the plus arms lie on grid lines.
inline VolumeOracleCase oracle_box_plus(int per_arm)
{
    VolumeOracleCase oc;
    oc.surface = make_plus(per_arm);
    oc.box.dim = 2;
    const int n = 4 * per_arm;  // cells per direction
    const double h = 4.0 / n;
    auto vid = [&](int i, int j) { return i * (n + 1) + j; };
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j)
            oc.box.vertices.push_back(Vec3(-2.0 + i * h, -2.0 + j * h, 0));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            oc.box.cells.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), -1});
            oc.box.cells.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1), -1});
        }
    oracle_detail::link_surface(oc);
    return oc;
}

// Ladder triangulation of the fans between consecutive arms plus an outer
// ring, so the tips end up interior.
inline VolumeOracleCase oracle_box_threefold(int per_arm)
{
    VolumeOracleCase oc;
    oc.surface = make_threefold(per_arm);
    oc.box.dim = 2;
    oracle_detail::VertexPool pool;
    pool.scale = 4.0;
    const double s = std::sqrt(3.0) / 2.0;
    const Vec3 dirs[3] = {Vec3(0, 1, 0), Vec3(-s, -0.5, 0), Vec3(s, -0.5, 0)};
    const int n = per_arm;

    auto arm_node = [&](int arm, int m) { return dirs[arm] * (static_cast<double>(m) / n); };

    for (int a = 0; a < 3; ++a) {
        const int b = (a + 1) % 3;
        // fan between arm a and arm b
        oc.box.cells.push_back(
            {pool.add(Vec3::Zero()), pool.add(arm_node(a, 1)), pool.add(arm_node(b, 1)), -1});
        for (int m = 1; m < n; ++m) {
            const int pa = pool.add(arm_node(a, m)), pb = pool.add(arm_node(b, m));
            const int qa = pool.add(arm_node(a, m + 1)), qb = pool.add(arm_node(b, m + 1));
            oc.box.cells.push_back({pa, pb, qa, -1});
            oc.box.cells.push_back({pb, qb, qa, -1});
        }
        // outer ring between the chord and the doubled triangle
        const int va = pool.add(dirs[a]), vb = pool.add(dirs[b]);
        const int wa = pool.add(2.0 * dirs[a]), wb = pool.add(2.0 * dirs[b]);
        oc.box.cells.push_back({va, vb, wb, -1});
        oc.box.cells.push_back({va, wb, wa, -1});
    }
    oc.box.vertices = pool.pts;
    oracle_detail::link_surface(oc);
    return oc;
}

// Grid of boxes around the bow-tie, each coned from its centroid onto fixed
// wall triangulations; the walls in the two fin planes use the diagonal that
// runs along the fin edges.
inline VolumeOracleCase oracle_box_bowtie(int refinements)
{
    VolumeOracleCase oc;
    oc.surface = refine_uniform_times(make_bowtie_base(), refinements).fine;
    oc.box.dim = 3;
    oracle_detail::VertexPool pool;
    pool.scale = 2.0;

    const double a = 0.5;
    const double c = std::sqrt(3.0) / 2.0;
    const int L = 1 << refinements;  // cells per half-direction
    const double dx = a / L, dz = c / L;

    // z planes: one pad cell below 0 and one above c
    std::vector<double> zs;
    zs.push_back(-dz);
    for (int k = 0; k <= L; ++k) zs.push_back(k * dz);
    zs.push_back(c + dz);
    std::vector<double> xs;
    for (int k = -L; k <= L; ++k) xs.push_back(k * dx);

    // diagonal rule for a wall rectangle given its two spanned axes
    // in-plane coordinates (p0,p1) x (q0,q1); returns the two triangles as
    // corner index pairs into {00,10,11,01}
    auto wall_triangles = [&](const std::array<Vec3, 4>& corner, bool fin_style,
                              double axis_coord) {
        // corners ordered 00,10,11,01 in the wall's own (p,q) frame
        bool main_diag = true;  // connect 00 -- 11
        if (fin_style) main_diag = axis_coord >= 0;
        std::array<std::array<int, 3>, 2> tris;
        if (main_diag)
            tris = {{{0, 1, 2}, {0, 2, 3}}};
        else
            tris = {{{0, 1, 3}, {1, 2, 3}}};
        std::array<std::array<Vec3, 3>, 2> out;
        for (int t = 0; t < 2; ++t)
            for (int k = 0; k < 3; ++k) out[t][k] = corner[tris[t][k]];
        return out;
    };

    auto add_box = [&](double x0, double x1, double y0, double y1, double z0, double z1) {
        const Vec3 centroid(0.5 * (x0 + x1), 0.5 * (y0 + y1), 0.5 * (z0 + z1));
        const int apex = pool.add(centroid);
        std::vector<std::array<std::array<Vec3, 3>, 2>> walls;
        // x walls (p = y, q = z): fin style on the x = 0 plane
        for (double x : {x0, x1})
            walls.push_back(wall_triangles({Vec3(x, y0, z0), Vec3(x, y1, z0), Vec3(x, y1, z1),
                                            Vec3(x, y0, z1)},
                                           std::abs(x) < 1e-14, 0.5 * (y0 + y1)));
        // y walls (p = x, q = z): fin style on the y = 0 plane
        for (double y : {y0, y1})
            walls.push_back(wall_triangles({Vec3(x0, y, z0), Vec3(x1, y, z0), Vec3(x1, y, z1),
                                            Vec3(x0, y, z1)},
                                           std::abs(y) < 1e-14, 0.5 * (x0 + x1)));
        // z walls: plain
        for (double z : {z0, z1})
            walls.push_back(wall_triangles({Vec3(x0, y0, z), Vec3(x1, y0, z), Vec3(x1, y1, z),
                                            Vec3(x0, y1, z)},
                                           false, 0));
        for (const auto& wall : walls)
            for (int t = 0; t < 2; ++t) {
                const int v0 = pool.add(wall[t][0]);
                const int v1 = pool.add(wall[t][1]);
                const int v2 = pool.add(wall[t][2]);
                oc.box.cells.push_back({apex, v0, v1, v2});
            }
    };

    for (size_t i = 0; i + 1 < xs.size(); ++i)
        for (size_t j = 0; j + 1 < xs.size(); ++j)
            for (size_t k = 0; k + 1 < zs.size(); ++k)
                add_box(xs[i], xs[i + 1], xs[j], xs[j + 1], zs[k], zs[k + 1]);

    oc.box.vertices = pool.pts;
    oracle_detail::link_surface(oc);
    return oc;
}

// ---------------------------------------------------------------------------
// Branches of a screen vertex from the volume definition: connected
// components of the cell star under face adjacency avoiding screen faces,
// each reported as the set of oriented screen facets it touches.

inline std::vector<std::vector<int>> volume_branches(const VolumeOracleCase& oc, int surface_vertex)
{
    if (surface_vertex < 0 || surface_vertex >= oc.surface.num_vertices())
        throw ValidationError("vertex not in the oracle surface mesh");
    const int bv = oc.box_vertex_of[surface_vertex];

    std::vector<int> star;
    for (int c = 0; c < static_cast<int>(oc.box.cells.size()); ++c)
        for (int k = 0; k < oc.box.cell_nv(); ++k)
            if (oc.box.cells[c][k] == bv) {
                star.push_back(c);
                break;
            }
    if (star.empty()) throw ValidationError("vertex not in the oracle box mesh");

    std::map<int, int> local;
    for (int i = 0; i < static_cast<int>(star.size()); ++i) local[star[i]] = i;

    // face adjacency within the star, skipping screen faces
    std::map<std::vector<int>, std::vector<int>> face_cells;
    for (int i = 0; i < static_cast<int>(star.size()); ++i)
        for (auto& f : oracle_detail::cell_faces(oc.box, star[i]))
            face_cells[f].push_back(star[i]);

    detail::DisjointSet ds(static_cast<int>(star.size()));
    for (const auto& [face, cells] : face_cells) {
        if (cells.size() != 2) continue;
        if (oc.facet_of_face.count(face)) continue;
        ds.unite(local[cells[0]], local[cells[1]]);
    }

    std::map<int, std::set<int>> comp;  // root -> oriented facet ids
    for (int i = 0; i < static_cast<int>(star.size()); ++i) {
        const int c = star[i];
        auto& touched = comp[ds.find(i)];
        for (auto& f : oracle_detail::cell_faces(oc.box, c)) {
            if (std::find(f.begin(), f.end(), bv) == f.end()) continue;
            auto it = oc.facet_of_face.find(f);
            if (it == oc.facet_of_face.end()) continue;
            const int sf = it->second;
            // the oriented copy carrying this cell's trace has its normal
            // pointing away from the cell
            const Vec3 n0 = oc.surface.facet_normal(sf);
            const Vec3 to_cell = oc.box.cell_centroid(c) - oc.surface.facet_centroid(sf);
            const int side = (n0.dot(to_cell) < 0) ? 0 : 1;
            touched.insert(2 * sf + side);
        }
    }

    std::vector<std::vector<int>> out;
    for (auto& [root, set] : comp) {
        if (set.empty())
            throw NumericalError("oracle star component touches no screen facet at the vertex");
        out.emplace_back(set.begin(), set.end());
    }
    std::sort(out.begin(), out.end());
    return out;
}

// Set-of-sets comparison with the intrinsic construction.
inline bool branches_match(const VolumeOracleCase& oc, const InflatedMesh& im, int vertex)
{
    std::vector<std::vector<int>> intrinsic;
    for (int j = 0; j < im.q[vertex]; ++j) {
        std::vector<int> alpha = im.gvertices[im.gv_index(vertex, j)].alpha;
        // restrict to copies of facets incident to the vertex (they all are)
        std::sort(alpha.begin(), alpha.end());
        intrinsic.push_back(std::move(alpha));
    }
    std::sort(intrinsic.begin(), intrinsic.end());
    return intrinsic == volume_branches(oc, vertex);
}

}  // namespace screenbem
