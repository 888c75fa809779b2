#pragma once

#include "magnls/grid.hpp"

#include <functional>

namespace magnls {

using LinearOp = std::function<ComplexField(const ComplexField&)>;

struct KrylovResult {
    ComplexField x;
    int iterations = 0;
    double rel_residual = 0.0;  ///< ||b - A x|| / ||b||, recomputed from x
    bool converged = false;
    /// CG met a direction with non-positive curvature (operator not HPD).
    bool breakdown = false;
};

/// Restarted GMRES with right preconditioning: solves A M y = b and returns
/// x = M y. `precond` may be empty for the identity.
KrylovResult gmres(const LinearOp& op, const LinearOp& precond, const ComplexField& b,
                   const ComplexField* x0, double tol, int max_iter, int restart = 60);

/// Preconditioned conjugate gradients for Hermitian positive definite
/// operators; `precond` must be Hermitian positive definite as well.
KrylovResult pcg(const LinearOp& op, const LinearOp& precond, const ComplexField& b,
                 const ComplexField* x0, double tol, int max_iter);

}  // namespace magnls
