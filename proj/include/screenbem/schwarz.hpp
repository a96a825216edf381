#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <map>

#include "screenbem/assemble.hpp"

namespace screenbem {

// Fine jump DOFs split into coarse-face interiors and the wire-basket (DOFs
// whose vertex sits on a coarse edge or coarse vertex). One face space is
// kept per coarse facet.
struct DofPartition {
    std::map<int, std::vector<int>> face_sets;
    std::vector<int> wirebasket;
};

inline DofPartition partition_dofs(const MeshLevelPair& pair, const InflatedMesh& fine)
{
    DofPartition part;

    std::vector<std::set<int>> vertex_parents(pair.fine.num_vertices());
    for (int f = 0; f < pair.fine.num_facets(); ++f) {
        if (pair.parent[f] < 0 || pair.parent[f] >= pair.coarse.num_facets())
            throw ValidationError("fine facet has no coarse parent (nesting violation)");
        for (int k = 0; k < pair.fine.facet_nv(); ++k)
            vertex_parents[pair.fine.facets[f][k]].insert(pair.parent[f]);
    }

    for (int d = 0; d < fine.num_jump_dofs(); ++d) {
        const int v = fine.jump_dofs[d][0];
        const auto& parents = vertex_parents[v];
        if (parents.empty())
            throw ValidationError("fine vertex not locatable on the coarse geometry");
        bool interior = false;
        int face = -1;
        if (parents.size() == 1) {
            face = *parents.begin();
            double u, w;
            detail::barycentric(pair.coarse, face, pair.fine.vertices[v], u, w);
            const double tol = 1e-9;
            interior = (u > tol && u + w < 1.0 - tol && (pair.coarse.dim == 2 || w > tol));
        }
        if (interior)
            part.face_sets[face].push_back(d);
        else
            part.wirebasket.push_back(d);
    }
    return part;
}

// Block and coarse-space factorizations realizing the additive two-level
// substructuring preconditioner.
struct SchwarzPreconditioner {
    struct Block {
        std::vector<int> dofs;
        Eigen::LLT<Eigen::MatrixXd> llt;
    };
    std::vector<Block> faces;
    Block wirebasket;
    Eigen::SparseMatrix<double> R;  // coarse -> fine
    Eigen::LLT<Eigen::MatrixXd> coarse_llt;
    int n = 0;

    int num_subspaces() const
    {
        int c = static_cast<int>(faces.size());
        if (!wirebasket.dofs.empty()) ++c;
        if (R.cols() > 0) ++c;
        return c;
    }
};

namespace detail {

inline Eigen::MatrixXd submatrix(const GalerkinMatrix& W, const std::vector<int>& idx)
{
    Eigen::MatrixXd S(idx.size(), idx.size());
    for (size_t i = 0; i < idx.size(); ++i)
        for (size_t j = 0; j < idx.size(); ++j) S(i, j) = W(idx[i], idx[j]);
    return S;
}

inline SchwarzPreconditioner::Block factor_block(const GalerkinMatrix& W,
                                                 std::vector<int> idx, const char* what)
{
    SchwarzPreconditioner::Block b;
    b.dofs = std::move(idx);
    if (b.dofs.empty()) return b;
    b.llt.compute(submatrix(W, b.dofs));
    if (b.llt.info() != Eigen::Success)
        throw NumericalError(std::string("block factorization failed (") + what +
                             "): partition inconsistent with the assembled matrix");
    return b;
}

}  // namespace detail

inline SchwarzPreconditioner build_preconditioner(const GalerkinMatrix& W,
                                                  const DofPartition& partition,
                                                  const Prolongation& P)
{
    SchwarzPreconditioner prec;
    prec.n = static_cast<int>(W.rows());
    for (const auto& [face, dofs] : partition.face_sets)
        prec.faces.push_back(detail::factor_block(W, dofs, "face"));
    prec.wirebasket = detail::factor_block(W, partition.wirebasket, "wire-basket");
    prec.R = P.R;
    if (prec.R.cols() > 0) {
        const Eigen::MatrixXd Rd = Eigen::MatrixXd(prec.R);
        const Eigen::MatrixXd WH = Rd.transpose() * W * Rd;
        prec.coarse_llt.compute(WH);
        if (prec.coarse_llt.info() != Eigen::Success)
            throw NumericalError("coarse matrix factorization failed");
    }
    return prec;
}

// M r = sum_F E_F W_FF^-1 E_F' r + E_W W_WW^-1 E_W' r + R (R' W R)^-1 R' r
inline Eigen::VectorXd apply_preconditioner(const SchwarzPreconditioner& prec,
                                            const Eigen::VectorXd& r)
{
    if (r.size() != prec.n) throw ValidationError("preconditioner length mismatch");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(prec.n);
    auto add_block = [&](const SchwarzPreconditioner::Block& b) {
        if (b.dofs.empty()) return;
        Eigen::VectorXd local(b.dofs.size());
        for (size_t i = 0; i < b.dofs.size(); ++i) local[i] = r[b.dofs[i]];
        const Eigen::VectorXd sol = b.llt.solve(local);
        for (size_t i = 0; i < b.dofs.size(); ++i) out[b.dofs[i]] += sol[i];
    };
    for (const auto& b : prec.faces) add_block(b);
    add_block(prec.wirebasket);
    if (prec.R.cols() > 0) {
        const Eigen::VectorXd rc = prec.R.transpose() * r;
        out += prec.R * prec.coarse_llt.solve(rc);
    }
    return out;
}

inline Eigen::MatrixXd materialize_preconditioner(const SchwarzPreconditioner& prec)
{
    Eigen::MatrixXd M(prec.n, prec.n);
    for (int j = 0; j < prec.n; ++j)
        M.col(j) = apply_preconditioner(prec, Eigen::VectorXd::Unit(prec.n, j));
    return M;
}

struct SpectrumResult {
    double lambda_min = 0;
    double lambda_max = 0;
    double kappa = 0;
};

inline SpectrumResult spectrum_of(const Eigen::MatrixXd& S)
{
    if (S.rows() == 0) throw ValidationError("spectrum of an empty matrix");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    if (es.info() != Eigen::Success) throw NumericalError("symmetric eigensolve failed");
    SpectrumResult r;
    r.lambda_min = es.eigenvalues().minCoeff();
    r.lambda_max = es.eigenvalues().maxCoeff();
    r.kappa = r.lambda_max / r.lambda_min;
    return r;
}

// kappa(W) without a preconditioner.
inline SpectrumResult condition_number(const GalerkinMatrix& W)
{
    return spectrum_of(0.5 * (W + W.transpose()));
}

// Spectral condition number of the preconditioned operator via the Cholesky
// congruence L' M L, with M the materialized preconditioner.
inline SpectrumResult condition_number(const GalerkinMatrix& W, const Eigen::MatrixXd& M)
{
    Eigen::LLT<Eigen::MatrixXd> llt(W);
    if (llt.info() != Eigen::Success)
        throw NumericalError("Cholesky factorization failed: matrix not positive definite");
    const Eigen::MatrixXd L = llt.matrixL();
    const Eigen::MatrixXd S = L.transpose() * M * L;
    return spectrum_of(0.5 * (S + S.transpose()));
}

inline SpectrumResult condition_number(const GalerkinMatrix& W,
                                       const SchwarzPreconditioner& prec)
{
    return condition_number(W, materialize_preconditioner(prec));
}

}  // namespace screenbem
