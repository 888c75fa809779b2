#include "magnls/krylov.hpp"

#include <cmath>
#include <vector>

namespace magnls {

namespace {

ComplexField apply_or_copy(const LinearOp& op, const ComplexField& f) { return op ? op(f) : f; }

}  // namespace

KrylovResult gmres(const LinearOp& op, const LinearOp& precond, const ComplexField& b,
                   const ComplexField* x0, double tol, int max_iter, int restart) {
    KrylovResult res;
    const double bnorm = norm_l2(b);
    res.x = x0 ? *x0 : ComplexField(b.grid());
    if (bnorm == 0.0) {
        res.x = ComplexField(b.grid());
        res.converged = true;
        return res;
    }

    ComplexField r = x0 ? b - op(res.x) : b;
    double rnorm = norm_l2(r);
    res.rel_residual = rnorm / bnorm;
    if (res.rel_residual <= tol) {
        res.converged = true;
        return res;
    }

    const int m = restart;
    std::vector<ComplexField> V;
    std::vector<std::vector<cplx>> Hm(m + 1, std::vector<cplx>(m, 0.0));
    std::vector<cplx> cs(m), sn(m), g(m + 1);
    int stagnant_cycles = 0;

    while (res.iterations < max_iter) {
        V.clear();
        V.push_back((1.0 / rnorm) * r);
        std::fill(g.begin(), g.end(), cplx(0.0));
        g[0] = rnorm;
        int k = 0;
        double est = rnorm;
        for (; k < m && res.iterations < max_iter; ++k) {
            ComplexField w = op(apply_or_copy(precond, V[k]));
            for (int i = 0; i <= k; ++i) {
                const cplx h = inner_l2(V[i], w);
                Hm[i][k] = h;
                w.axpy(-h, V[i]);
            }
            // One reorthogonalization pass keeps the basis orthonormal when
            // the preconditioned operator is badly conditioned.
            for (int i = 0; i <= k; ++i) {
                const cplx h = inner_l2(V[i], w);
                Hm[i][k] += h;
                w.axpy(-h, V[i]);
            }
            const double hnext = norm_l2(w);
            Hm[k + 1][k] = hnext;

            for (int i = 0; i < k; ++i) {
                const cplx a = Hm[i][k];
                const cplx bb = Hm[i + 1][k];
                Hm[i][k] = std::conj(cs[i]) * a + std::conj(sn[i]) * bb;
                Hm[i + 1][k] = -sn[i] * a + cs[i] * bb;
            }
            const cplx a = Hm[k][k];
            const double denom = std::sqrt(std::norm(a) + hnext * hnext);
            if (denom == 0.0) {
                cs[k] = 1.0;
                sn[k] = 0.0;
            } else {
                cs[k] = a / denom;
                sn[k] = hnext / denom;
            }
            Hm[k][k] = denom;
            Hm[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] = std::conj(cs[k]) * g[k];
            ++res.iterations;
            est = std::abs(g[k + 1]);
            if (hnext == 0.0 || est <= 0.5 * tol * bnorm) {
                ++k;
                break;
            }
            V.push_back((1.0 / hnext) * w);
        }

        // Back substitution for the k x k upper-triangular system.
        std::vector<cplx> y(k, 0.0);
        for (int i = k - 1; i >= 0; --i) {
            cplx s = g[i];
            for (int j = i + 1; j < k; ++j) s -= Hm[i][j] * y[j];
            y[i] = s / Hm[i][i];
        }
        ComplexField update(b.grid());
        for (int i = 0; i < k; ++i) update.axpy(y[i], V[i]);
        res.x += apply_or_copy(precond, update);

        r = b - op(res.x);
        const double new_rnorm = norm_l2(r);
        res.rel_residual = new_rnorm / bnorm;
        if (res.rel_residual <= tol) {
            res.converged = true;
            return res;
        }
        // Stop once restarts no longer reduce the true residual: the
        // round-off floor has been reached.
        stagnant_cycles = new_rnorm > 0.9 * rnorm ? stagnant_cycles + 1 : 0;
        rnorm = new_rnorm;
        if (stagnant_cycles >= 3) break;
    }
    return res;
}

KrylovResult pcg(const LinearOp& op, const LinearOp& precond, const ComplexField& b,
                 const ComplexField* x0, double tol, int max_iter) {
    KrylovResult res;
    const double bnorm = norm_l2(b);
    res.x = x0 ? *x0 : ComplexField(b.grid());
    if (bnorm == 0.0) {
        res.x = ComplexField(b.grid());
        res.converged = true;
        return res;
    }
    ComplexField r = x0 ? b - op(res.x) : b;
    double best_true = norm_l2(r);
    int refreshes = 0;

    while (true) {
        ComplexField zv = apply_or_copy(precond, r);
        ComplexField p = zv;
        double rz = inner_real(r, zv);  // real for Hermitian preconditioners
        bool hit = false;
        while (res.iterations < max_iter) {
            const ComplexField Ap = op(p);
            const double pAp = inner_real(p, Ap);
            if (!(pAp > 0.0)) {
                res.breakdown = true;
                break;
            }
            const double alpha = rz / pAp;
            res.x.axpy(alpha, p);
            r.axpy(-alpha, Ap);
            ++res.iterations;
            if (norm_l2(r) <= 0.5 * tol * bnorm) {
                hit = true;
                break;
            }
            zv = apply_or_copy(precond, r);
            const double rz_new = inner_real(r, zv);
            const double beta = rz_new / rz;
            rz = rz_new;
            p *= beta;
            p += zv;
        }
        r = b - op(res.x);
        const double true_norm = norm_l2(r);
        res.rel_residual = true_norm / bnorm;
        if (res.rel_residual <= tol) {
            res.converged = true;
            return res;
        }
        // The recursive residual drifted from the true one: restart from the
        // true residual a few times while that still helps.
        if (!hit || res.iterations >= max_iter || refreshes >= 4 || true_norm > 0.5 * best_true)
            return res;
        best_true = true_norm;
        ++refreshes;
    }
}

}  // namespace magnls
