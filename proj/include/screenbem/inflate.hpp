#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "screenbem/mesh.hpp"

namespace screenbem {

// One of the two oriented copies of a geometric facet. Its id is
// 2*facet + side. The copy carries the trace of the spatial sector its
// normal points away from (outward normal of the adjacent region).
struct OrientedFacet {
    int facet = -1;
    int side = 0;
    Vec3 normal = Vec3::Zero();
};

// Perfect matching of the oriented-facet sides around one edge (3D) or one
// vertex (2D): sides carrying the trace of the same angular wedge are paired.
struct EdgeFan {
    std::array<int, 2> edge = {-1, -1};  // vertex ids; {v,-1} in 2D
    std::vector<std::array<int, 2>> pairs;  // oriented facet ids

    int match(int ofacet) const
    {
        for (const auto& p : pairs) {
            if (p[0] == ofacet) return p[1];
            if (p[1] == ofacet) return p[0];
        }
        return -1;
    }
};

// A mesh vertex labeled by one connected sector of oriented facets around it.
struct GeneralizedVertex {
    int vertex = -1;
    int branch = -1;                 // 0-based; branch q-1 is the reference
    std::vector<int> alpha;          // oriented facet ids in this sector
};

struct InflatedMesh {
    SurfaceMesh base;
    std::vector<OrientedFacet> oriented_facets;
    std::vector<EdgeFan> fans;
    std::vector<GeneralizedVertex> gvertices;
    std::vector<int> q;                            // per vertex: branch count
    std::vector<std::array<int, 2>> jump_dofs;     // (vertex, branch j), j < q-1

    // lookups
    std::vector<int> gv_first;                     // vertex -> first gvertex id
    std::vector<int> dof_first;                    // vertex -> first jump dof id (-1 if none)
    std::vector<std::array<int, 3>> ofacet_branch;  // ofacet -> branch of each local vertex
    std::vector<std::vector<int>> vertex_fans;     // vertex -> fan ids at edges containing it

    int num_oriented() const { return static_cast<int>(oriented_facets.size()); }
    int num_gvertices() const { return static_cast<int>(gvertices.size()); }
    int num_jump_dofs() const { return static_cast<int>(jump_dofs.size()); }

    int gv_index(int vertex, int branch) const { return gv_first[vertex] + branch; }

    int dof_index(int vertex, int branch) const
    {
        if (q[vertex] < 2 || branch >= q[vertex] - 1) return -1;
        return dof_first[vertex] + branch;
    }

    // branch of the gvertex (vertex slot k of oriented facet o)
    int branch_at(int ofacet, int k) const { return ofacet_branch[ofacet][k]; }
};

namespace detail {

struct DisjointSet {
    std::vector<int> parent;
    explicit DisjointSet(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int a)
    {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

struct FanSlot {
    int local;    // index into the incident-facet list
    double angle;  // angle of the facet's in-plane direction in the edge frame
};

}  // namespace detail

inline InflatedMesh inflate(const SurfaceMesh& mesh)
{
    validate_mesh(mesh);
    InflatedMesh im;
    im.base = mesh;

    const int nf = mesh.num_facets();
    const int nv = mesh.num_vertices();

    im.oriented_facets.resize(2 * nf);
    for (int f = 0; f < nf; ++f) {
        const Vec3 n = mesh.facet_normal(f);
        im.oriented_facets[2 * f + 0] = {f, 0, n};
        im.oriented_facets[2 * f + 1] = {f, 1, -n};
    }

    // edge -> incident facets ("edge" = single vertex in 2D)
    std::map<std::array<int, 2>, std::vector<int>> edge_facets;
    for (int f = 0; f < nf; ++f) {
        const auto& t = mesh.facets[f];
        if (mesh.dim == 2) {
            edge_facets[{t[0], -1}].push_back(f);
            edge_facets[{t[1], -1}].push_back(f);
        } else {
            for (int k = 0; k < 3; ++k) {
                const int a = t[k], b = t[(k + 1) % 3];
                edge_facets[{std::min(a, b), std::max(a, b)}].push_back(f);
            }
        }
    }

    if (mesh.dim == 3) {
        // point-contact check: the facets around a vertex must be connected
        // through edges containing that vertex
        std::vector<std::vector<int>> vstar(nv);
        for (int f = 0; f < nf; ++f)
            for (int k = 0; k < 3; ++k) vstar[mesh.facets[f][k]].push_back(f);
        for (int v = 0; v < nv; ++v) {
            const auto& star = vstar[v];
            if (star.size() < 2) continue;
            std::map<int, int> local;
            for (int i = 0; i < static_cast<int>(star.size()); ++i) local[star[i]] = i;
            detail::DisjointSet ds(static_cast<int>(star.size()));
            for (const auto& [edge, fl] : edge_facets) {
                if (edge[0] != v && edge[1] != v) continue;
                for (size_t i = 1; i < fl.size(); ++i) ds.unite(local[fl[0]], local[fl[i]]);
            }
            int root = ds.find(0);
            for (int i = 1; i < static_cast<int>(star.size()); ++i)
                if (ds.find(i) != root)
                    throw ValidationError("point contact at vertex " + std::to_string(v) +
                                          " (unsupported geometry)");
        }
    }

    im.vertex_fans.resize(nv);

    for (const auto& [edge, facets] : edge_facets) {
        EdgeFan fan;
        fan.edge = edge;

        // orthonormal frame around the edge
        Vec3 e_dir, ref, up;
        Vec3 origin;
        if (mesh.dim == 3) {
            origin = mesh.vertices[edge[0]];
            e_dir = (mesh.vertices[edge[1]] - mesh.vertices[edge[0]]).normalized();
        } else {
            origin = mesh.vertices[edge[0]];
            e_dir = Vec3(0, 0, 1);  // out of plane: the frame is the plane itself
        }

        auto in_plane_dir = [&](int f) {
            // direction from the edge toward the facet, orthogonal to e_dir
            Vec3 d;
            if (mesh.dim == 2) {
                const auto& t = mesh.facets[f];
                const int other = (t[0] == edge[0]) ? t[1] : t[0];
                d = mesh.vertices[other] - origin;
            } else {
                const auto& t = mesh.facets[f];
                int opp = -1;
                for (int k = 0; k < 3; ++k)
                    if (t[k] != edge[0] && t[k] != edge[1]) opp = t[k];
                d = mesh.vertices[opp] - origin;
            }
            d -= d.dot(e_dir) * e_dir;
            return Vec3(d.normalized());
        };

        ref = in_plane_dir(facets[0]);
        up = e_dir.cross(ref);

        std::vector<detail::FanSlot> slots;
        for (int i = 0; i < static_cast<int>(facets.size()); ++i) {
            const Vec3 d = in_plane_dir(facets[i]);
            slots.push_back({i, std::atan2(d.dot(up), d.dot(ref))});
        }
        std::sort(slots.begin(), slots.end(),
                  [](const detail::FanSlot& a, const detail::FanSlot& b) { return a.angle < b.angle; });

        const int k = static_cast<int>(slots.size());
        for (int i = 0; i + 1 < k; ++i)
            if (slots[i + 1].angle - slots[i].angle < 1e-9)
                throw ValidationError("coplanar facets overlap at an edge fan (angular tie)");
        if (k > 1 && slots[0].angle + 2.0 * M_PI - slots[k - 1].angle < 1e-9)
            throw ValidationError("coplanar facets overlap at an edge fan (angular tie)");

        // the copy whose normal points counterclockwise (toward increasing angle)
        auto ccw_side = [&](int f) {
            const Vec3 d = in_plane_dir(f);
            const Vec3 tangent = e_dir.cross(d);  // direction at angle + 90 degrees
            return (im.oriented_facets[2 * f].normal.dot(tangent) > 0) ? 0 : 1;
        };

        // the wedge between consecutive facets is bounded by facet i and facet
        // i+1; the two copies carrying its trace have normals pointing away
        // from it: (facet i, clockwise side) and (facet i+1, counterclockwise side)
        for (int i = 0; i < k; ++i) {
            const int fa = facets[slots[i].local];
            const int fb = facets[slots[(i + 1) % k].local];
            const int a_cw = 2 * fa + (1 - ccw_side(fa));
            const int b_ccw = 2 * fb + ccw_side(fb);
            fan.pairs.push_back({a_cw, b_ccw});
        }

        const int fan_id = static_cast<int>(im.fans.size());
        im.fans.push_back(std::move(fan));
        im.vertex_fans[edge[0]].push_back(fan_id);
        if (edge[1] >= 0) im.vertex_fans[edge[1]].push_back(fan_id);
    }

    // branches: connected components of the incident oriented facets of each
    // vertex under fan adjacency at edges containing it
    std::vector<std::vector<int>> vstar_of(nv);  // incident oriented facets
    for (int f = 0; f < nf; ++f)
        for (int k = 0; k < mesh.facet_nv(); ++k) {
            vstar_of[mesh.facets[f][k]].push_back(2 * f);
            vstar_of[mesh.facets[f][k]].push_back(2 * f + 1);
        }

    im.q.assign(nv, 0);
    im.gv_first.assign(nv, -1);
    im.dof_first.assign(nv, -1);
    im.ofacet_branch.assign(2 * nf, {-1, -1, -1});

    for (int v = 0; v < nv; ++v) {
        const auto& star = vstar_of[v];
        if (star.empty()) throw ValidationError("isolated vertex " + std::to_string(v));
        std::map<int, int> local;
        for (int i = 0; i < static_cast<int>(star.size()); ++i) local[star[i]] = i;
        detail::DisjointSet ds(static_cast<int>(star.size()));
        for (int fan_id : im.vertex_fans[v])
            for (const auto& p : im.fans[fan_id].pairs) ds.unite(local[p[0]], local[p[1]]);

        std::map<int, std::vector<int>> comp;  // root -> oriented facets
        for (int i = 0; i < static_cast<int>(star.size()); ++i)
            comp[ds.find(i)].push_back(star[i]);

        std::vector<std::vector<int>> branches;
        for (auto& [root, members] : comp) {
            std::sort(members.begin(), members.end());
            branches.push_back(std::move(members));
        }
        std::sort(branches.begin(), branches.end(),
                  [](const auto& a, const auto& b) { return a.front() < b.front(); });

        im.gv_first[v] = im.num_gvertices();
        im.q[v] = static_cast<int>(branches.size());
        for (int j = 0; j < im.q[v]; ++j) {
            GeneralizedVertex gv;
            gv.vertex = v;
            gv.branch = j;
            gv.alpha = branches[j];
            for (int o : gv.alpha) {
                const int f = o / 2;
                for (int k = 0; k < mesh.facet_nv(); ++k)
                    if (mesh.facets[f][k] == v) im.ofacet_branch[o][k] = j;
            }
            im.gvertices.push_back(std::move(gv));
        }
    }

    for (int v = 0; v < nv; ++v) {
        if (im.q[v] < 2) continue;
        im.dof_first[v] = im.num_jump_dofs();
        for (int j = 0; j + 1 < im.q[v]; ++j) im.jump_dofs.push_back({v, j});
    }

    return im;
}

inline const std::vector<GeneralizedVertex>& generalized_vertices(const InflatedMesh& im)
{
    return im.gvertices;
}

inline int jump_dof_count(const InflatedMesh& im) { return im.num_jump_dofs(); }

// Connected components of the whole inflated mesh under fan adjacency
// (a closed manifold yields exactly two: the inner and outer sheets).
inline int inflated_component_count(const InflatedMesh& im)
{
    detail::DisjointSet ds(im.num_oriented());
    for (const auto& fan : im.fans)
        for (const auto& p : fan.pairs) ds.unite(p[0], p[1]);
    std::set<int> roots;
    for (int o = 0; o < im.num_oriented(); ++o) roots.insert(ds.find(o));
    return static_cast<int>(roots.size());
}

}  // namespace screenbem
