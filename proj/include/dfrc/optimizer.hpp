#pragma once

// Alternating optimization for the weighted sensing/communication design:
// a 1-D concave data-power subproblem solved by golden-section search, and a
// pilot-vector subproblem solved by consensus ADMM whose blocks are slab-
// constrained convex QPs. The estimation-error trace is handled through the
// auxiliary scalar s1 and a slack matrix tracking the inverse of
// Xi = I + gamma * Omega^H Omega; the concave SINR term enters each block
// through its tangent, with the slack matrix standing in for the inverse in
// the composite derivative.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "dfrc/channel.hpp"
#include "dfrc/kernels.hpp"
#include "dfrc/metrics.hpp"
#include "dfrc/qp.hpp"
#include "dfrc/types.hpp"

namespace dfrc {

/**
 * Everything derived from (grid, placement, channel model, sensing bins)
 * that the solver and the metric evaluations share. Built once; immutable.
 */
struct DesignContext {
    GridConfig grid;
    Placement placement;
    ChannelModel model;
    KernelSet kernels;
    TapBasis basis;
    PilotDictionary dict;
    PowerForm power;
};

inline DesignContext build_context(const GridConfig& grid, const Placement& placement,
                                   const ChannelModel& model, int sense_delay,
                                   int sense_doppler, bool include_mainlobe = false) {
    DesignContext ctx;
    ctx.grid = grid;
    ctx.placement = placement;
    ctx.model = model;
    ctx.kernels = build_kernels(grid, placement, sense_delay, sense_doppler, include_mainlobe);
    ctx.basis = build_tap_basis(grid, placement, model);
    ctx.dict = build_pilot_dictionary(placement, model, ctx.basis);
    ctx.power = build_power_form(grid, placement);
    return ctx;
}

struct ProblemSpec {
    const DesignContext* ctx = nullptr;
    double eta = 0.5;        // trade-off weight: 1 = communication, 0 = sensing
    double p_max = 1.0;      // transmit power budget (linear)
    double xi_min = 0.0;     // mainlobe floor
    double sinr_scale = 1.0; // normalizer for the SINR term
    double isl_scale = 1.0;  // normalizer for the ISL term

    double budget() const { return p_max * ctx->power.frame_len; }  // cap on f00_bar

    void validate() const {
        if (!ctx) throw std::invalid_argument("problem: missing design context");
        if (eta < 0.0 || eta > 1.0) throw std::invalid_argument("problem: eta outside [0,1]");
        if (p_max <= 0.0) throw std::invalid_argument("problem: p_max must be positive");
        if (xi_min < 0.0) throw std::invalid_argument("problem: xi_min must be >= 0");
        if (xi_min > budget() * (1.0 + 1e-12))
            throw std::invalid_argument(
                "problem: infeasible, xi_min exceeds the reachable mainlobe (MN+N_CP)*P_max");
        if (sinr_scale <= 0.0 || isl_scale <= 0.0)
            throw std::invalid_argument("problem: metric scales must be positive");
    }
};

enum class InitPattern { spike, flat, cluster, custom };

struct SolverOptions {
    double rho = 1.0;      // consensus penalty
    double zeta = 1.0;     // slack-fit penalty
    double damping = 1.0;  // proximal weight on each block, in curvature units
    int ao_max_iters = 30;
    int admm_max_iters = 500;
    int sca_max_iters = 5;
    double eps_obj = 1e-7;
    double eps_consensus = 1e-6;
    double eps_power = 1e-10;
    bool adapt_rho = true;       // residual balancing (x2 / /2 at ratio 10)
    int push_period = 15;        // consensus push cadence once the objective stalls
    InitPattern init_pattern = InitPattern::flat;

    void validate() const {
        if (rho <= 0.0 || zeta < 0.0) throw std::invalid_argument("solver: rho > 0, zeta >= 0");
        if (damping < 0.0) throw std::invalid_argument("solver: damping must be >= 0");
        if (ao_max_iters < 1 || admm_max_iters < 1 || sca_max_iters < 1)
            throw std::invalid_argument("solver: iteration budgets must be positive");
        if (eps_obj <= 0.0 || eps_consensus <= 0.0 || eps_power <= 0.0)
            throw std::invalid_argument("solver: tolerances must be positive");
    }
};

struct DesignState {
    double p_c = 0.0;
    Vector x_p;    // reported design (the feasible copy x2)
    Vector x1, x2; // ADMM splits
    Vector dual;   // scaled dual d
    Matrix slack;  // A, tracking Xi^{-1}
    double s1 = 0.0;
    int ao_iters = 0;
    int admm_iters_total = 0;
};

struct TraceRow {
    int ao_iter = 0;
    int admm_iter = -1;  // -1 marks the AO summary row
    double objective = 0.0;
    double sinr = 0.0;
    double isl = 0.0;
    double primal_res = 0.0;
    double dual_res = 0.0;
    double p_c = 0.0;
    double slack_gap = 0.0;  // Re tr(prior * A) - s1 after the A update
};

struct SolveResult {
    DesignState state;
    std::vector<TraceRow> trace;
    bool converged = false;
    int stalled_pilot_steps = 0;  // ADMM candidates rejected by the monotone guard
    bool slack_regularized = false;
};

// eta-weighted objective on the true metrics.
inline double weighted_objective(const ProblemSpec& spec, double p_c, const Vector& x_p) {
    const DesignContext& ctx = *spec.ctx;
    const double s = sinr(p_c, x_p, ctx.model, ctx.dict);
    const double i = isl_expected(p_c, x_p, ctx.kernels);
    return spec.eta * s / spec.sinr_scale - (1.0 - spec.eta) * i / spec.isl_scale;
}

namespace detail {

// ISL as a polynomial in p_c for fixed pilots: isl = a2 p^2 + a1 p + a0.
struct IslPoly {
    double a2 = 0.0, a1 = 0.0, a0 = 0.0;
    double operator()(double p) const { return (a2 * p + a1) * p + a0; }
};

inline IslPoly isl_power_poly(const Vector& x_p, const KernelSet& kernels) {
    IslPoly poly;
    kernels.for_each_sidelobe([&](const AFKernel& k) {
        const Complex fpp = x_p.dot(k.pilot_quad * x_p);
        poly.a0 += std::norm(fpp);
        poly.a2 += k.data_energy + std::norm(k.data_trace);
        poly.a1 += std::real(x_p.dot(k.pilot_sq * x_p));
        poly.a1 += 2.0 * std::real(k.data_trace * std::conj(fpp));
    });
    return poly;
}

// Golden-section maximization of a concave function on [lo, hi]; endpoints
// and the final bracket midpoint are all candidates, so boundary maxima are
// hit exactly.
template <class F>
double golden_max(F&& fn, double lo, double hi, double tol) {
    constexpr double inv_phi = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = fn(x1), f2 = fn(x2);
    while (b - a > tol * std::max(1.0, std::abs(a) + std::abs(b))) {
        if (f1 < f2) {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = fn(x2);
        } else {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = fn(x1);
        }
    }
    double best = 0.5 * (a + b);
    double best_val = fn(best);
    for (double cand : {lo, hi}) {
        const double v = fn(cand);
        if (v > best_val) { best_val = v; best = cand; }
    }
    return best;
}

// Feasible interval of p_c given pilots: budget and mainlobe floor.
struct PowerInterval {
    double lo = 0.0, hi = 0.0;
};

inline PowerInterval power_interval(const ProblemSpec& spec, const Vector& x_p) {
    const PowerForm& pf = spec.ctx->power;
    const double q_p = std::real(x_p.dot(pf.pilot_gram * x_p));
    if (pf.data_gain <= 0.0) {
        // no data symbols: p_c is inert, constraints are on pilots alone
        if (q_p < spec.xi_min - 1e-9 * std::max(1.0, spec.xi_min))
            throw std::runtime_error("power subproblem infeasible: mainlobe floor unreachable "
                                     "with no data symbols");
        if (q_p > spec.budget() * (1.0 + 1e-9))
            throw std::runtime_error("power subproblem infeasible: pilot power alone exceeds "
                                     "the budget");
        return {0.0, 0.0};
    }
    PowerInterval iv;
    iv.lo = std::max(0.0, (spec.xi_min - q_p) / pf.data_gain);
    iv.hi = (spec.budget() - q_p) / pf.data_gain;
    if (iv.hi < iv.lo) {
        throw std::runtime_error(
            iv.hi < 0.0 ? "power subproblem infeasible: pilot power alone exceeds the budget"
                        : "power subproblem infeasible: mainlobe floor exceeds the power budget");
    }
    return iv;
}

}  // namespace detail

// Data-power subproblem: maximize the weighted objective over the feasible
// interval of p_c with pilots and the error trace held fixed. The objective
// is concave, so golden-section search returns the global maximizer.
inline double solve_power(const ProblemSpec& spec, double s1, const Vector& x_p,
                          double eps_power = 1e-10) {
    spec.validate();
    const DesignContext& ctx = *spec.ctx;
    const auto iv = detail::power_interval(spec, x_p);
    if (iv.hi <= iv.lo) return iv.lo;
    const auto poly = detail::isl_power_poly(x_p, ctx.kernels);
    const double eta_n = spec.eta / spec.sinr_scale;
    const double etab_n = (1.0 - spec.eta) / spec.isl_scale;
    auto objective = [&](double p) {
        return eta_n * sinr_aux(p, s1, ctx.model.noise_var) - etab_n * poly(p);
    };
    return detail::golden_max(objective, iv.lo, iv.hi, eps_power);
}

namespace detail {

// Assembles the quadratic model of one ADMM block. `side` selects whether
// the free variable plays the first (x1) or second (x2) slot of the split
// bilinear forms. Every model is validated against the direct objective in
// the tests.
struct BlockModel {
    QuadObjective obj;
    SlabConstraint slab;
};

inline void add_isl_terms(QuadObjective& obj, bool free_is_x1, double weight, double p_c,
                          const KernelSet& kernels, const Vector& other) {
    if (weight == 0.0) return;
    kernels.for_each_sidelobe([&](const AFKernel& k) {
        obj.constant += weight * p_c * p_c * (k.data_energy + std::norm(k.data_trace));
        if (free_is_x1) {
            const Vector u = k.pilot_quad * other;           // |x1^H u|^2
            obj.quad.noalias() += weight * (u * u.adjoint());
            obj.lin += weight * (0.5 * p_c) * (k.pilot_sq.adjoint() * other);
            obj.lin += weight * p_c * std::conj(k.data_trace) * u;
        } else {
            const Vector v = k.pilot_quad.adjoint() * other;  // |v^H x2|^2
            obj.quad.noalias() += weight * (v * v.adjoint());
            obj.lin += weight * (0.5 * p_c) * (k.pilot_sq * other);
            obj.lin += weight * p_c * k.data_trace * v;
        }
    });
}

/**
 * Cached contraction of the dictionary Gram with the fixed split partner.
 * For the x1 block (partner x2) this is (I (x) x2)^H G; for the x2 block
 * (partner x1) it is G (I (x) x1). Everything the block QP needs (the Xi
 * of a candidate, the slack-fit quadratic, the trace sensitivity) falls out
 * of level-3 operations on it.
 */
struct BlockWork {
    bool free_is_x1 = true;
    Matrix contraction;  // p2: kh x (kh*kp), or p1: (kh*kp) x kh
};

inline BlockWork make_block_work(const PilotDictionary& dict, bool free_is_x1,
                                 const Vector& other) {
    BlockWork work;
    work.free_is_x1 = free_is_x1;
    work.contraction = free_is_x1 ? dict.contract_left(other) : dict.contract_right(other);
    return work;
}

// Xi evaluated at the candidate value of the free block.
inline Matrix xi_with(const BlockWork& work, const PilotDictionary& dict, double gamma,
                      const Vector& cand) {
    const int kh = dict.tap_count;
    const int kp = dict.pilot_count;
    Matrix xi = Matrix::Identity(kh, kh);
    if (work.free_is_x1) {
        // Xi_bc = delta + gamma * p2[b, c-block] * cand
        for (int c = 0; c < kh; ++c)
            xi.col(c) += gamma *
                         (work.contraction.middleCols(static_cast<Eigen::Index>(c) * kp, kp) *
                          cand);
    } else {
        // Xi_bc = delta + gamma * cand^H * (p1 block row b of column c)
        for (int c = 0; c < kh; ++c)
            xi.col(c) += gamma * (work.contraction.col(c).reshaped(kp, kh).transpose() *
                                  cand.conjugate());
    }
    return xi;
}

// (zeta/2) || A Xi - I ||_F^2 as a quadratic in the free pilot block.
inline void add_slack_fit(QuadObjective& obj, const BlockWork& work, double zeta,
                          const Matrix& slack, const PilotDictionary& dict, double gamma) {
    if (zeta == 0.0) return;
    const int kh = dict.tap_count;
    const int kp = dict.pilot_count;
    const double w = 0.5 * zeta;
    const Matrix residual_const = slack - Matrix::Identity(kh, kh);  // E
    obj.constant += w * residual_const.squaredNorm();
    if (work.free_is_x1) {
        // (A Xi)_rc = A_rc + gamma * (A p2)[r, c-block] x1
        const Matrix psi = slack * work.contraction;  // kh x (kh*kp)
        for (int c = 0; c < kh; ++c) {
            const auto block = psi.middleCols(static_cast<Eigen::Index>(c) * kp, kp);
            obj.quad.noalias() += (w * gamma * gamma) * (block.adjoint() * block);
            obj.lin += (w * gamma) * (block.adjoint() * residual_const.col(c));
        }
    } else {
        // (A Xi)_rc = A_rc + gamma * x2^H w_rc with W_c = reshape(p1.col(c)) A^T
        for (int c = 0; c < kh; ++c) {
            const Matrix wc = work.contraction.col(c).reshaped(kp, kh) * slack.transpose();
            obj.quad.noalias() += (w * gamma * gamma) * (wc * wc.adjoint());
            obj.lin += (w * gamma) * (wc * residual_const.col(c).conjugate());
        }
    }
}

// Derivative of s1(x) = Re tr(prior * Xi(x)^{-1}) through the slack
// approximation of the inverse: returns g with ds1 = Re(g^H dx).
inline Vector trace_sensitivity(const BlockWork& work, const Matrix& slack,
                                const PilotDictionary& dict, double gamma,
                                double prior_var) {
    const int kh = dict.tap_count;
    const int kp = dict.pilot_count;
    const Matrix w = prior_var * (slack * slack);
    Vector g = Vector::Zero(kp);
    if (work.free_is_x1) {
        // kappa^T = -gamma sum_bc W(b,c) p2[c, b-block]; g = conj(kappa)
        const Matrix prod = w * work.contraction;  // row b: sum_c W(b,c) p2[c, :]
        for (int b = 0; b < kh; ++b)
            g += -gamma * prod.row(b)
                              .segment(static_cast<Eigen::Index>(b) * kp, kp)
                              .conjugate()
                              .transpose();
    } else {
        // g = -gamma sum_b reshape(p1.col(b)) W(b, :)^T
        for (int b = 0; b < kh; ++b)
            g += -gamma * (work.contraction.col(b).reshaped(kp, kh) *
                           w.row(b).transpose());
    }
    return g;
}

// Compatibility forms used by tests and callers without a cached contraction.
inline void add_slack_fit(QuadObjective& obj, bool free_is_x1, double zeta,
                          const Matrix& slack, const PilotDictionary& dict, double gamma,
                          const Vector& other) {
    add_slack_fit(obj, make_block_work(dict, free_is_x1, other), zeta, slack, dict, gamma);
}

inline Vector trace_sensitivity(bool free_is_x1, const Matrix& slack,
                                const PilotDictionary& dict, double gamma, double prior_var,
                                const Vector& other) {
    return trace_sensitivity(make_block_work(dict, free_is_x1, other), slack, dict, gamma,
                             prior_var);
}

inline Matrix build_xi(const PilotDictionary& dict, double gamma, const Vector& x1,
                       const Vector& x2) {
    const int kh = dict.tap_count;
    return Matrix::Identity(kh, kh) + gamma * dict.gram_form(x1, x2);
}

// Least squares fit A = argmin ||A Xi - I||: A = Xi^H (Xi Xi^H)^{-1}.
inline Matrix fit_slack(const Matrix& xi, bool* regularized) {
    const Eigen::Index kh = xi.rows();
    Matrix gram = xi * xi.adjoint();
    Eigen::LLT<Matrix> llt(gram);
    if (llt.info() != Eigen::Success) {
        gram += (1e-10 * xi.squaredNorm()) * Matrix::Identity(kh, kh);
        llt.compute(gram);
        if (regularized) *regularized = true;
    }
    return llt.solve(xi).adjoint();
}

}  // namespace detail

// Pilot subproblem: consensus ADMM over the split (x1, x2) with the slack
// matrix and auxiliary scalar updates. Returns the state with x_p <- x2.
inline DesignState solve_pilots(const ProblemSpec& spec, const SolverOptions& options,
                                double p_c, DesignState state,
                                std::vector<TraceRow>* trace = nullptr, int ao_iter = 0,
                                bool* slack_regularized = nullptr,
                                int* iters_used = nullptr) {
    spec.validate();
    options.validate();
    const DesignContext& ctx = *spec.ctx;
    const PilotDictionary& dict = ctx.dict;
    const int kp = dict.pilot_count;
    const double gamma = ctx.model.prior_var() / ctx.model.noise_var;
    const double eta_n = spec.eta / spec.sinr_scale;
    const double etab_n = (1.0 - spec.eta) / spec.isl_scale;
    const double snr = p_c / ctx.model.noise_var;

    const double zeta = options.zeta;
    Vector x1 = state.x1.size() == kp ? state.x1 : state.x_p;
    Vector x2 = state.x2.size() == kp ? state.x2 : state.x_p;
    Vector dual = state.dual.size() == kp ? state.dual : Vector::Zero(kp).eval();
    Matrix slack = state.slack;
    if (slack.rows() != dict.tap_count)
        slack = detail::fit_slack(detail::build_xi(dict, gamma, x2, x2), slack_regularized);

    // The consensus penalty and the proximal damping must be commensurate
    // with the curvature of the split objective, which scales with the
    // normalized ISL weight and the slack fit; measure it once at entry.
    double curvature = 1.0;
    {
        QuadObjective probe;
        probe.quad = Matrix::Zero(kp, kp);
        probe.lin = Vector::Zero(kp);
        detail::add_isl_terms(probe, true, etab_n, p_c, ctx.kernels, x2);
        detail::add_slack_fit(probe, true, zeta, slack, dict, gamma, x2);
        curvature = std::max(1.0, probe.quad.real().trace() / kp);
    }
    const double rho_base = options.rho * curvature;
    double prox = options.damping * curvature;
    double rho = rho_base;

    const double lo = spec.xi_min - p_c * ctx.power.data_gain;
    const double hi = spec.budget() - p_c * ctx.power.data_gain;

    // Error trace through the true inverse of Xi; the guard below compares
    // candidate blocks on this composite objective, not on the surrogate.
    auto trace_of = [&](const Matrix& xi) {
        Eigen::PartialPivLU<Matrix> lu(xi);
        return std::max(0.0, ctx.model.prior_var() *
                                 lu.solve(Matrix::Identity(dict.tap_count, dict.tap_count))
                                     .real()
                                     .trace());
    };
    auto block_objective = [&](const Vector& a, const Vector& b, const Matrix& xi) {
        return -eta_n * sinr_aux(p_c, trace_of(xi), ctx.model.noise_var) +
               etab_n * isl_split(p_c, a, b, ctx.kernels) +
               0.5 * rho * (a - b + dual).squaredNorm() +
               0.5 * zeta * (slack * xi - Matrix::Identity(dict.tap_count, dict.tap_count))
                                .squaredNorm();
    };

    auto solve_block = [&](const detail::BlockWork& work, const Vector& other,
                           const Vector& anchor, const Vector& prev, double slope, int m) {
        QuadObjective obj;
        obj.quad = Matrix::Zero(kp, kp);
        obj.lin = Vector::Zero(kp);
        detail::add_isl_terms(obj, work.free_is_x1, etab_n, p_c, ctx.kernels, other);
        detail::add_slack_fit(obj, work, zeta, slack, dict, gamma);
        obj.quad += 0.5 * (rho + prox) * Matrix::Identity(kp, kp);
        obj.lin += -0.5 * (rho * anchor + prox * prev);
        if (slope > 0.0)
            obj.lin += 0.5 * slope *
                       detail::trace_sensitivity(work, slack, dict, gamma,
                                                 ctx.model.prior_var());
        SlabConstraint slab{ctx.power.pilot_gram * other, lo, hi};
        if (slab.normal.squaredNorm() < 1e-30) {
            if (lo > 0.0)
                throw std::runtime_error("pilot subproblem infeasible at AO iter " +
                                         std::to_string(ao_iter) + ", ADMM iter " +
                                         std::to_string(m) +
                                         ": mainlobe floor unreachable from a vanishing "
                                         "consensus partner");
            slab.lo = -1.0;  // constraint vacuous
            slab.hi = 1.0;
            slab.normal = Vector::Zero(kp);
        }
        try {
            return solve_qp_kkt(obj, slab);
        } catch (const std::exception& err) {
            throw std::runtime_error("pilot subproblem QP failed at AO iter " +
                                     std::to_string(ao_iter) + ", ADMM iter " +
                                     std::to_string(m) + ": " + err.what());
        }
    };

    double prev_aug = std::numeric_limits<double>::infinity();
    double best_prim = std::numeric_limits<double>::infinity();
    double s1 = state.s1;
    int m = 0;
    for (; m < options.admm_max_iters; ++m) {
        s1 = std::max(0.0, slack.real().trace() * ctx.model.prior_var());
        // tangent slope of -eta * sinr_aux at s1 (nonnegative)
        const double denom = snr * s1 + 1.0;
        const double slope = eta_n * snr * snr / (denom * denom);

        // (s1, x1) block: SCA on the tangent surrogate with a non-increase
        // guard on the composite block objective.
        {
            const auto work = detail::make_block_work(dict, true, x2);
            double cur = block_objective(x1, x2, detail::xi_with(work, dict, gamma, x1));
            for (int t = 0; t < options.sca_max_iters; ++t) {
                const Vector cand = solve_block(work, x2, x2 - dual, x1, slope, m);
                const Matrix xi_cand = detail::xi_with(work, dict, gamma, cand);
                const double cand_val = block_objective(cand, x2, xi_cand);
                if (cand_val > cur + 1e-12 * std::max(1.0, std::abs(cur))) break;
                const bool settled = (cand - x1).norm() <= 1e-12 * std::max(1.0, x1.norm());
                x1 = cand;
                cur = cand_val;
                if (settled) break;
            }
        }

        // x2 block
        const Vector x2_prev = x2;
        Matrix xi;  // Xi(x1, x2) after the update, reused by the slack fit
        {
            const auto work = detail::make_block_work(dict, false, x1);
            const Matrix xi_cur = detail::xi_with(work, dict, gamma, x2);
            double cur = block_objective(x1, x2, xi_cur);
            const Vector cand = solve_block(work, x1, x1 + dual, x2, slope, m);
            const Matrix xi_cand = detail::xi_with(work, dict, gamma, cand);
            if (block_objective(x1, cand, xi_cand) <=
                cur + 1e-12 * std::max(1.0, std::abs(cur))) {
                x2 = cand;
                xi = xi_cand;
            } else {
                xi = xi_cur;
            }
        }
        const double dual_res = rho * (x2 - x2_prev).norm();

        // slack block and dual ascent
        slack = detail::fit_slack(xi, slack_regularized);
        dual += x1 - x2;
        const double primal_res = (x1 - x2).norm();
        const double slack_gap = slack.real().trace() * ctx.model.prior_var() - s1;

        const double aug = block_objective(x1, x2, xi);
        if (trace) {
            TraceRow row;
            row.ao_iter = ao_iter;
            row.admm_iter = m;
            row.objective = aug;
            row.sinr = sinr_aux(p_c, s1, ctx.model.noise_var);
            row.isl = isl_split(p_c, x1, x2, ctx.kernels);
            row.primal_res = primal_res;
            row.dual_res = dual_res;
            row.p_c = p_c;
            row.slack_gap = slack_gap;
            trace->push_back(row);
        }

        const bool obj_settled = std::abs(prev_aug - aug) <=
                                 options.eps_obj * std::max(1.0, std::abs(aug));
        if (m >= 1 && obj_settled && primal_res <= options.eps_consensus) {
            ++m;
            break;
        }
        // penalty adaptation: residual balancing while the objective still
        // moves, then a steady push to close the consensus gap; a runaway
        // primal residual restarts the dual with a stiffer penalty
        if (options.adapt_rho) {
            if (primal_res > 100.0 * best_prim + 1e3 * options.eps_consensus) {
                // runaway split: re-synchronize on the feasible copy
                x1 = x2;
                dual.setZero();
                rho *= 4.0;
                best_prim = std::numeric_limits<double>::infinity();
            } else if ((obj_settled || 3 * m > options.admm_max_iters) &&
                       primal_res > options.eps_consensus && options.push_period > 0 &&
                       (m + 1) % options.push_period == 0) {
                rho *= 2.0;
                dual *= 0.5;
                prox *= 0.5;  // the damping has done its job by now
            } else if (primal_res > 10.0 * dual_res && dual_res > 0.0) {
                rho *= 2.0;
                dual *= 0.5;
            } else if (dual_res > 10.0 * primal_res && rho > 1e-6 * rho_base) {
                rho *= 0.5;
                dual *= 2.0;
            }
            rho = std::min(rho, 1e12 * rho_base);
        }
        best_prim = std::min(best_prim, primal_res);
        prev_aug = aug;
    }

    state.x1 = x1;
    state.x2 = x2;
    state.dual = dual;
    state.slack = slack;
    state.s1 = s1;
    state.x_p = x2;
    state.p_c = p_c;
    state.admm_iters_total += m;
    if (iters_used) *iters_used = m;
    return state;
}

// Minimal rescale of the pilot vector so the returned design meets both the
// mainlobe floor and the power budget exactly at the current p_c.
inline void restore_feasibility(const ProblemSpec& spec, double p_c, Vector& x_p) {
    const PowerForm& pf = spec.ctx->power;
    const double q_p = std::real(x_p.dot(pf.pilot_gram * x_p));
    const double data_part = p_c * pf.data_gain;
    const double floor_needed = spec.xi_min - data_part;
    const double cap = spec.budget() - data_part;
    if (cap < 0.0)
        throw std::runtime_error("feasibility restoration failed: data power alone exceeds "
                                 "the budget");
    if (q_p > cap) {
        x_p *= std::sqrt(cap / q_p);
    } else if (q_p < floor_needed) {
        if (floor_needed > cap + 1e-12 * std::max(1.0, cap))
            throw std::runtime_error("feasibility restoration failed: mainlobe floor exceeds "
                                     "the power budget");
        if (q_p <= 0.0)
            throw std::runtime_error("feasibility restoration failed: zero pilot vector "
                                     "cannot reach the mainlobe floor");
        x_p *= std::sqrt(floor_needed / q_p);
    }
}

// Initial state from a pilot shape: pilots get a fixed share of the power
// budget (subject to the mainlobe floor), p_c starts from its own subproblem.
inline DesignState make_initial_state(const ProblemSpec& spec, const Vector& shape,
                                      double pilot_share = 0.5) {
    spec.validate();
    const DesignContext& ctx = *spec.ctx;
    if (shape.size() != ctx.placement.pilot_count())
        throw std::invalid_argument("initial shape length != pilot count");
    const double qf = std::real(shape.dot(ctx.power.pilot_gram * shape));
    if (qf <= 0.0) throw std::invalid_argument("initial shape has no pilot energy");
    DesignState st;
    st.x_p = shape * std::sqrt(std::max(pilot_share * spec.budget(), spec.xi_min) / qf);
    restore_feasibility(spec, 0.0, st.x_p);
    st.p_c = solve_power(spec, trace_term(ctx.dict, ctx.model, st.x_p), st.x_p);
    st.x1 = st.x_p;
    st.x2 = st.x_p;
    st.dual = Vector::Zero(ctx.placement.pilot_count());
    st.s1 = trace_term(ctx.dict, ctx.model, st.x_p);
    return st;
}

/**
 * Full alternating optimization. Each outer iteration re-solves the data
 * power exactly and runs the ADMM pilot subproblem; a pilot candidate is
 * accepted only if the true weighted objective does not decrease, so the
 * reported AO trace is monotone. Returns the best feasible iterate and the
 * complete trace (ADMM rows carry admm_iter >= 0, AO summary rows -1).
 */
inline SolveResult solve(const ProblemSpec& spec, const SolverOptions& options,
                         DesignState init) {
    spec.validate();
    options.validate();
    const DesignContext& ctx = *spec.ctx;

    SolveResult result;
    DesignState state = std::move(init);
    restore_feasibility(spec, 0.0, state.x_p);
    if (state.x1.size() != state.x_p.size()) state.x1 = state.x_p;
    if (state.x2.size() != state.x_p.size()) state.x2 = state.x_p;
    if (state.dual.size() != state.x_p.size()) state.dual = Vector::Zero(state.x_p.size());

    double prev_obj = -std::numeric_limits<double>::infinity();
    for (int n = 0; n < options.ao_max_iters; ++n) {
        const double s1_true = trace_term(ctx.dict, ctx.model, state.x_p);
        state.p_c = solve_power(spec, s1_true, state.x_p, options.eps_power);

        const double obj_before = weighted_objective(spec, state.p_c, state.x_p);
        DesignState cand = solve_pilots(spec, options, state.p_c, state, &result.trace, n,
                                        &result.slack_regularized, nullptr);
        restore_feasibility(spec, state.p_c, cand.x_p);
        cand.x2 = cand.x_p;
        const double obj_after = weighted_objective(spec, cand.p_c, cand.x_p);
        if (obj_after >= obj_before - 1e-12 * std::max(1.0, std::abs(obj_before))) {
            state = std::move(cand);
        } else {
            // keep the previous pilots (and the freshly optimized power)
            ++result.stalled_pilot_steps;
            state.p_c = cand.p_c;
            state.admm_iters_total = cand.admm_iters_total;
        }

        const double obj = weighted_objective(spec, state.p_c, state.x_p);
        TraceRow row;
        row.ao_iter = n;
        row.admm_iter = -1;
        row.objective = obj;
        row.sinr = sinr(state.p_c, state.x_p, ctx.model, ctx.dict);
        row.isl = isl_expected(state.p_c, state.x_p, ctx.kernels);
        row.primal_res = (state.x1 - state.x2).norm();
        row.p_c = state.p_c;
        result.trace.push_back(row);
        state.ao_iters = n + 1;

        if (n > 0 && std::abs(obj - prev_obj) <= options.eps_obj * std::max(1.0, std::abs(obj))) {
            result.converged = true;
            ++state.ao_iters;
            break;
        }
        prev_obj = obj;
    }
    result.state = std::move(state);
    return result;
}

}  // namespace dfrc
