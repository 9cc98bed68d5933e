#pragma once

// Convex quadratic programs over a slab constraint. Both the power budget
// and the mainlobe floor share one linear functional of the free pilot
// block, so every inner ADMM subproblem is
//     min  x^H P x + 2 Re(c^H x) + const
//     s.t. lo <= Re(q^H x) <= hi
// with P Hermitian positive definite. Two independent solvers: a direct
// KKT solve (primary) and projected gradient with exact line search
// (cross-check); both must reach the same optimum.

#include <stdexcept>

#include "dfrc/types.hpp"

namespace dfrc {

struct QuadObjective {
    Matrix quad;      // P (Hermitian PD)
    Vector lin;       // c
    double constant = 0.0;
};

inline double qp_value(const QuadObjective& obj, const Vector& x) {
    return std::real(x.dot(obj.quad * x)) + 2.0 * std::real(obj.lin.dot(x)) + obj.constant;
}

inline Vector qp_gradient(const QuadObjective& obj, const Vector& x) {
    // Re(g^H d) is the directional derivative along d.
    return 2.0 * (obj.quad * x + obj.lin);
}

struct SlabConstraint {
    Vector normal;  // q
    double lo = 0.0;
    double hi = 0.0;

    double evaluate(const Vector& x) const { return std::real(normal.dot(x)); }
    bool feasible(const Vector& x, double tol = 1e-9) const {
        const double t = evaluate(x);
        return t >= lo - tol && t <= hi + tol;
    }
    // Euclidean projection in the real inner product Re(a^H b).
    Vector project(const Vector& x) const {
        const double nn = normal.squaredNorm();
        if (nn == 0.0) return x;
        const double t = evaluate(x);
        const double tt = std::min(std::max(t, lo), hi);
        return x + ((tt - t) / nn) * normal;
    }
};

// Direct solution: unconstrained minimizer, then at most one active bound.
inline Vector solve_qp_kkt(const QuadObjective& obj, const SlabConstraint& slab) {
    if (slab.lo > slab.hi) throw std::invalid_argument("qp: empty slab (lo > hi)");
    Eigen::LLT<Matrix> llt(obj.quad);
    if (llt.info() != Eigen::Success) {
        // semidefinite up to roundoff: retry once with a scale-aware ridge
        const Eigen::Index n = obj.quad.rows();
        const double ridge = 1e-12 * std::max(1.0, obj.quad.real().trace() / n);
        llt.compute(obj.quad + ridge * Matrix::Identity(n, n));
    }
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("qp: quadratic form is not positive definite");
    Vector x = llt.solve(-obj.lin);
    if (slab.normal.size() == 0 || slab.normal.squaredNorm() == 0.0) return x;
    const double t = slab.evaluate(x);
    if (t >= slab.lo && t <= slab.hi) return x;
    const double target = std::min(std::max(t, slab.lo), slab.hi);
    const Vector z = llt.solve(slab.normal);
    const double qz = std::real(slab.normal.dot(z));  // q^H P^{-1} q > 0
    x -= ((t - target) / qz) * z;
    return x;
}

// Gradient projection with exact line search on the quadratic: when an
// active bound would be violated by the raw gradient, the search direction
// is its projection onto the constraint face. Slow but independent.
inline Vector solve_qp_pg(const QuadObjective& obj, const SlabConstraint& slab,
                          int max_iters = 200000, double tol = 1e-12) {
    Vector x = slab.project(Vector::Zero(obj.lin.size()));
    const double qq = slab.normal.squaredNorm();
    const double span = std::max(1.0, std::abs(slab.lo) + std::abs(slab.hi));
    double prev = qp_value(obj, x);
    for (int it = 0; it < max_iters; ++it) {
        const Vector g = qp_gradient(obj, x);
        Vector d = -g;
        if (qq > 0.0) {
            const double t = slab.evaluate(x);
            const double dn = std::real(slab.normal.dot(d)) / qq;
            const bool at_lo = t <= slab.lo + 1e-12 * span;
            const bool at_hi = t >= slab.hi - 1e-12 * span;
            if ((at_lo && dn < 0.0) || (at_hi && dn > 0.0)) d -= dn * slab.normal;
        }
        const double slope = std::real(g.dot(d));  // directional derivative
        if (slope >= -tol) break;
        const double curv = std::real(d.dot(obj.quad * d));
        const double alpha = curv > 0.0 ? -slope / (2.0 * curv) : 1.0;
        x = slab.project(x + alpha * d);
        const double value = qp_value(obj, x);
        if (prev - value < tol * std::max(1.0, std::abs(value)) && it > 2) break;
        prev = value;
    }
    return x;
}

}  // namespace dfrc
