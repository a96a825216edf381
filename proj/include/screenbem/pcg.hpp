#pragma once

#include <optional>

#include "screenbem/schwarz.hpp"

namespace screenbem {

struct PcgReport {
    JumpVector solution;
    int iterations = 0;
    bool converged = false;
    std::vector<double> residual_history;      // preconditioned residual norms
    std::vector<double> energy_error_history;  // filled when an exact solution is given
    double kappa_estimate = 1.0;               // from the Lanczos tridiagonal (approximate)
};

inline JumpVector direct_solve(const GalerkinMatrix& W, const RhsVector& rhs)
{
    Eigen::LLT<Eigen::MatrixXd> llt(W);
    if (llt.info() != Eigen::Success)
        throw NumericalError("direct solve: Cholesky factorization failed");
    const JumpVector x = llt.solve(rhs);
    const double res = (W * x - rhs).norm();
    if (res > 1e-10 * std::max(rhs.norm(), 1e-300) && rhs.norm() > 0)
        throw NumericalError("direct solve: residual exceeds tolerance");
    return x;
}

// Conjugate gradient in the energy inner product with an optional additive
// Schwarz preconditioner; the CG coefficients assemble a Lanczos tridiagonal
// whose extreme eigenvalues estimate the preconditioned condition number.
inline PcgReport pcg(const GalerkinMatrix& W, const SchwarzPreconditioner* prec,
                     const RhsVector& rhs, double tol = 1e-8, int maxit = 0,
                     const JumpVector* exact = nullptr)
{
    const int n = static_cast<int>(W.rows());
    if (rhs.size() != n) throw ValidationError("pcg: right-hand side length mismatch");
    if (tol <= 0) throw ValidationError("pcg: tolerance must be positive");
    if (maxit <= 0) maxit = std::max(10 * n, 100);

    PcgReport rep;
    rep.solution = JumpVector::Zero(n);

    auto precond = [&](const Eigen::VectorXd& r) {
        return prec ? apply_preconditioner(*prec, r) : Eigen::VectorXd(r);
    };
    auto energy_error = [&](const JumpVector& x) {
        const JumpVector e = x - *exact;
        return std::sqrt(std::max(0.0, e.dot(W * e)));
    };

    Eigen::VectorXd r = rhs;
    Eigen::VectorXd z = precond(r);
    double rz = r.dot(z);
    if (rz < 0) throw NumericalError("pcg: preconditioner is not positive definite");
    const double r0 = std::sqrt(std::max(rz, 0.0));
    rep.residual_history.push_back(r0);
    if (exact) rep.energy_error_history.push_back(energy_error(rep.solution));

    std::vector<double> alphas, betas;
    Eigen::VectorXd p = z;

    if (r0 == 0.0) {
        rep.converged = true;
        return rep;
    }

    for (int it = 0; it < maxit; ++it) {
        const Eigen::VectorXd Wp = W * p;
        const double pWp = p.dot(Wp);
        if (pWp <= 0) throw NumericalError("pcg: matrix is not positive definite");
        const double alpha = rz / pWp;
        rep.solution += alpha * p;
        r -= alpha * Wp;
        z = precond(r);
        const double rz_new = r.dot(z);
        if (rz_new < 0) throw NumericalError("pcg: preconditioner is not positive definite");
        alphas.push_back(alpha);
        rep.iterations = it + 1;
        rep.residual_history.push_back(std::sqrt(std::max(rz_new, 0.0)));
        if (exact) rep.energy_error_history.push_back(energy_error(rep.solution));
        if (rep.residual_history.back() <= tol * r0) {
            rep.converged = true;
            const double beta = rz_new / rz;
            betas.push_back(beta);
            rz = rz_new;
            break;
        }
        const double beta = rz_new / rz;
        betas.push_back(beta);
        rz = rz_new;
        p = z + beta * p;
    }

    // Lanczos tridiagonal from the CG coefficients
    const int k = static_cast<int>(alphas.size());
    if (k > 0) {
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(k, k);
        for (int i = 0; i < k; ++i) {
            T(i, i) = 1.0 / alphas[i];
            if (i > 0) T(i, i) += betas[i - 1] / alphas[i - 1];
            if (i + 1 < k) {
                const double off = std::sqrt(std::max(betas[i], 0.0)) / alphas[i];
                T(i, i + 1) = off;
                T(i + 1, i) = off;
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        const double lmin = es.eigenvalues().minCoeff();
        const double lmax = es.eigenvalues().maxCoeff();
        rep.kappa_estimate = (lmin > 0) ? lmax / lmin : 1.0;
    }
    if (rep.kappa_estimate < 1.0) rep.kappa_estimate = 1.0;
    return rep;
}

}  // namespace screenbem
