#pragma once

#include <Eigen/Sparse>

#include "screenbem/inflate.hpp"

namespace screenbem {

using JumpVector = Eigen::VectorXd;

// Per-generalized-vertex nodal coefficients. On each oriented facet the field
// is the linear interpolant of the coefficients of the branch containing that
// facet at each of its vertices.
struct TraceField {
    Eigen::VectorXd coeff;  // indexed by gvertex id

    double at(const InflatedMesh& im, int ofacet, int local_vertex) const
    {
        const int f = ofacet / 2;
        const int v = im.base.facets[f][local_vertex];
        return coeff[im.gv_index(v, im.branch_at(ofacet, local_vertex))];
    }

    // evaluate on an oriented facet at barycentric coordinates (u,v wrt vertex 0)
    double eval(const InflatedMesh& im, int ofacet, double u, double v = 0) const
    {
        if (im.base.dim == 2) return (1.0 - u) * at(im, ofacet, 0) + u * at(im, ofacet, 1);
        return (1.0 - u - v) * at(im, ofacet, 0) + u * at(im, ofacet, 1) + v * at(im, ofacet, 2);
    }
};

// +1 on generalized vertex (i,j), -1 on the reference branch (i, q_i-1).
inline TraceField basis_trace(const std::array<int, 2>& dof, const InflatedMesh& im)
{
    const int v = dof[0], j = dof[1];
    if (v < 0 || v >= im.base.num_vertices() || im.q[v] < 2 || j < 0 || j >= im.q[v] - 1)
        throw ValidationError("not a jump degree of freedom");
    TraceField tf;
    tf.coeff = Eigen::VectorXd::Zero(im.num_gvertices());
    tf.coeff[im.gv_index(v, j)] = 1.0;
    tf.coeff[im.gv_index(v, im.q[v] - 1)] = -1.0;
    return tf;
}

inline TraceField expand(const JumpVector& vec, const InflatedMesh& im)
{
    if (vec.size() != im.num_jump_dofs())
        throw ValidationError("jump vector length does not match the DOF count");
    TraceField tf;
    tf.coeff = Eigen::VectorXd::Zero(im.num_gvertices());
    for (int d = 0; d < im.num_jump_dofs(); ++d) {
        const auto [v, j] = im.jump_dofs[d];
        tf.coeff[im.gv_index(v, j)] += vec[d];
        tf.coeff[im.gv_index(v, im.q[v] - 1)] -= vec[d];
    }
    return tf;
}

// Jump-basis coordinates of an arbitrary per-branch coefficient field:
// subtracting the per-vertex branch mean removes the single-trace part.
inline JumpVector jump_coordinates(const TraceField& tf, const InflatedMesh& im)
{
    JumpVector v = JumpVector::Zero(im.num_jump_dofs());
    for (int i = 0; i < im.base.num_vertices(); ++i) {
        double mean = 0;
        for (int j = 0; j < im.q[i]; ++j) mean += tf.coeff[im.gv_index(i, j)];
        mean /= im.q[i];
        for (int j = 0; j + 1 < im.q[i]; ++j) {
            const int d = im.dof_index(i, j);
            if (d >= 0) v[d] = tf.coeff[im.gv_index(i, j)] - mean;
        }
    }
    return v;
}

// A field whose two oriented copies of every facet carry identical nodal
// values represents a single trace (zero jump).
inline bool is_single_trace(const TraceField& tf, const InflatedMesh& im, double tol = 1e-12)
{
    for (int f = 0; f < im.base.num_facets(); ++f)
        for (int k = 0; k < im.base.facet_nv(); ++k)
            if (std::abs(tf.at(im, 2 * f, k) - tf.at(im, 2 * f + 1, k)) > tol) return false;
    return true;
}

// Sparse coarse-to-fine map between nested jump spaces.
struct Prolongation {
    Eigen::SparseMatrix<double> R;  // rows: fine jump dofs, cols: coarse jump dofs
};

namespace detail {

// barycentric coordinates of x in facet f (2D: u along the segment)
inline void barycentric(const SurfaceMesh& m, int f, const Vec3& x, double& u, double& v)
{
    const auto& t = m.facets[f];
    if (m.dim == 2) {
        const Vec3 d = m.vertices[t[1]] - m.vertices[t[0]];
        u = (x - m.vertices[t[0]]).dot(d) / d.squaredNorm();
        v = 0;
        return;
    }
    const Vec3 e1 = m.vertices[t[1]] - m.vertices[t[0]];
    const Vec3 e2 = m.vertices[t[2]] - m.vertices[t[0]];
    const Vec3 r = x - m.vertices[t[0]];
    const double a11 = e1.squaredNorm(), a12 = e1.dot(e2), a22 = e2.squaredNorm();
    const double b1 = r.dot(e1), b2 = r.dot(e2);
    const double det = a11 * a22 - a12 * a12;
    u = (a22 * b1 - a12 * b2) / det;
    v = (a11 * b2 - a12 * b1) / det;
}

}  // namespace detail

// Evaluates each coarse jump basis at every fine generalized vertex (reading
// the parent branch through containment plus normal-sign matching) and stores
// the fine jump-basis coordinates as a column of R.
inline Prolongation build_prolongation(const MeshLevelPair& pair, const InflatedMesh& coarse,
                                       const InflatedMesh& fine)
{
    const int n_fine = fine.num_jump_dofs();
    const int n_coarse = coarse.num_jump_dofs();

    // coarse oriented parent of each fine oriented facet (containment is given
    // by the parent map; the side is fixed by the normal sign)
    std::vector<int> oparent(fine.num_oriented(), -1);
    for (int f = 0; f < pair.fine.num_facets(); ++f) {
        const int cf = pair.parent[f];
        if (cf < 0 || cf >= pair.coarse.num_facets())
            throw ValidationError("orphan fine facet " + std::to_string(f) +
                                  " (broken nesting)");
        for (int k = 0; k < pair.fine.facet_nv(); ++k) {
            double u, v;
            detail::barycentric(pair.coarse, cf, pair.fine.vertices[pair.fine.facets[f][k]], u, v);
            if (u < -1e-9 || v < -1e-9 || u + v > 1 + 1e-9)
                throw ValidationError("fine facet " + std::to_string(f) +
                                      " escapes its parent (broken nesting)");
        }
        for (int s = 0; s < 2; ++s) {
            const double dot =
                fine.oriented_facets[2 * f + s].normal.dot(coarse.oriented_facets[2 * cf].normal);
            if (std::abs(dot) < 0.5)
                throw ValidationError("fine facet " + std::to_string(f) +
                                      " normal mismatch (broken nesting)");
            oparent[2 * f + s] = 2 * cf + (dot > 0 ? 0 : 1);
        }
    }

    // coarse trace value carried by each fine generalized vertex, per column
    std::vector<Eigen::Triplet<double>> trip;
    for (int cd = 0; cd < n_coarse; ++cd) {
        const TraceField cf_field = basis_trace(coarse.jump_dofs[cd], coarse);
        TraceField restricted;
        restricted.coeff = Eigen::VectorXd::Zero(fine.num_gvertices());
        for (int g = 0; g < fine.num_gvertices(); ++g) {
            const auto& gv = fine.gvertices[g];
            const Vec3 x = fine.base.vertices[gv.vertex];
            double value = 0;
            bool first = true;
            for (int o : gv.alpha) {
                const int po = oparent[o];
                double u, v;
                detail::barycentric(pair.coarse, po / 2, x, u, v);
                const double val = cf_field.eval(coarse, po, u, v);
                if (first) {
                    value = val;
                    first = false;
                } else if (std::abs(val - value) > 1e-8 * (1.0 + std::abs(value))) {
                    throw ValidationError(
                        "inconsistent coarse branch values across a fine sector "
                        "(branch structure not refinement-invariant)");
                }
            }
            restricted.coeff[g] = value;
        }
        const JumpVector col = jump_coordinates(restricted, fine);
        for (int r = 0; r < n_fine; ++r)
            if (col[r] != 0.0) trip.emplace_back(r, cd, col[r]);
    }

    Prolongation P;
    P.R.resize(n_fine, n_coarse);
    P.R.setFromTriplets(trip.begin(), trip.end());
    return P;
}

}  // namespace screenbem
