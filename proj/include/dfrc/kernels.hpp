#pragma once

// Ambiguity-function kernels. For each candidate (delay l, Doppler k) bin the
// cross-correlation of the transmit frame with its shifted copy is the
// quadratic form f_lk = x^H A_lk x on the DD grid. Kernels carry the reduced
// blocks and scalars that the expected-ISL expansion and the optimizer
// consume; they are constants of a (grid, placement, bin box) triple and are
// built once.

#include <numbers>
#include <stdexcept>
#include <vector>

#include "dfrc/grid.hpp"
#include "dfrc/types.hpp"

namespace dfrc {

struct AFKernel {
    int delay = 0;    // l
    int doppler = 0;  // k

    Matrix dd;          // A_lk, MN x MN
    Matrix pilot_quad;  // Phi_p^H A Phi_p               (Kp x Kp)
    Matrix cross_pc;    // Phi_p^H A^H Phi_c             (Kp x Kc)
    Matrix cross_cp;    // Phi_c^H A^H Phi_p             (Kc x Kp)
    Matrix pilot_sq;    // Hermitian data-coupling form  (Kp x Kp)
    double data_energy = 0.0;  // a_lk = ||Phi_c^H A Phi_c||_F^2
    Complex data_trace = 0.0;  // b_lk = Tr(Phi_c^H A Phi_c)
};

/**
 * All kernels with |l| <= max_delay, |k| <= max_doppler for one placement.
 * Sidelobe iteration skips the (0,0) mainlobe bin unless include_mainlobe
 * is set (the mainlobe is protected by its own constraint, not penalized).
 */
struct KernelSet {
    GridConfig grid;
    Placement placement;
    int max_delay = 0;
    int max_doppler = 0;
    bool include_mainlobe = false;

    std::vector<AFKernel> bins;  // row-major over (l, k), l slowest
    Matrix time_proj;            // B = Gamma (F^H (x) I), frame_len x MN

    const AFKernel& at(int delay, int doppler) const {
        if (std::abs(delay) > max_delay || std::abs(doppler) > max_doppler)
            throw std::out_of_range("kernel bin outside the built box");
        return bins[(delay + max_delay) * (2 * max_doppler + 1) + (doppler + max_doppler)];
    }

    template <class F>
    void for_each_sidelobe(F&& fn) const {
        for (const AFKernel& k : bins) {
            if (!include_mainlobe && k.delay == 0 && k.doppler == 0) continue;
            fn(k);
        }
    }
};

namespace detail {

// Gamma^H J_l D_k Gamma for l >= 0; negative k yields D_{-k} = conj(D_k).
inline Matrix correlation_core(const GridConfig& cfg, int delay, int doppler) {
    const int t = cfg.frame_len();
    const RealMatrix gamma = cp_matrix(cfg);
    Matrix core = Matrix::Zero(t, t);
    for (int m = delay; m < t; ++m) {
        // (J_l D_k)_{m, m-l} = exp(-j 2 pi k (m-l) / T)
        core(m, m - delay) = std::polar(1.0, -2.0 * std::numbers::pi * doppler * (m - delay) / t);
    }
    return gamma.transpose() * core * gamma;
}

}  // namespace detail

// A_lk for one bin. Negative-delay kernels are the adjoints of their
// mirrored bins, A_{-l,-k} = A_{l,k}^H, which is the convention under which
// f_{-l,-k} = conj(f_{l,k}) holds exactly.
inline Matrix af_kernel_matrix(const GridConfig& cfg, int delay, int doppler) {
    cfg.validate();
    if (std::abs(delay) >= cfg.frame_len())
        throw std::invalid_argument("kernel delay exceeds frame length");
    if (delay < 0) return af_kernel_matrix(cfg, -delay, -doppler).adjoint().eval();
    const Matrix u = doppler_dft(cfg);
    return u * detail::correlation_core(cfg, delay, doppler) * u.adjoint();
}

inline KernelSet build_kernels(const GridConfig& cfg, const Placement& placement,
                               int max_delay, int max_doppler,
                               bool include_mainlobe = false) {
    cfg.validate();
    placement.validate(cfg);
    if (max_delay >= cfg.frame_len())
        throw std::invalid_argument("kernel box exceeds frame length");

    KernelSet set;
    set.grid = cfg;
    set.placement = placement;
    set.max_delay = max_delay;
    set.max_doppler = max_doppler;
    set.include_mainlobe = include_mainlobe;
    set.time_proj = time_projector(cfg);
    set.bins.reserve((2 * max_delay + 1) * (2 * max_doppler + 1));

    const auto& pil = placement.pilot_cells;
    const auto& dat = placement.data_cells;
    for (int l = -max_delay; l <= max_delay; ++l) {
        for (int k = -max_doppler; k <= max_doppler; ++k) {
            AFKernel kern;
            kern.delay = l;
            kern.doppler = k;
            kern.dd = af_kernel_matrix(cfg, l, k);
            kern.pilot_quad = select_block(kern.dd, pil, pil);
            const Matrix adj = kern.dd.adjoint();
            kern.cross_pc = select_block(adj, pil, dat);
            kern.cross_cp = select_block(adj, dat, pil);
            const Matrix data_block = select_block(kern.dd, dat, dat);
            kern.data_energy = data_block.squaredNorm();
            kern.data_trace = data_block.trace();
            // Second moment of the pilot-data cross terms under a CSCG
            // codebook: only the two positive-semidefinite products survive
            // the expectation.
            kern.pilot_sq = kern.cross_pc * kern.cross_pc.adjoint() +
                            kern.cross_cp.adjoint() * kern.cross_cp;
            set.bins.push_back(std::move(kern));
        }
    }
    return set;
}

// f_lk = x^H A_lk x on the DD grid.
inline Complex af_value(const AFKernel& kern, const Vector& x_dd) {
    return x_dd.dot(kern.dd * x_dd);
}

// Same correlation evaluated in the time domain:
//   f_lk = sum_n conj(s_n) s_{n-l} e^{-j 2 pi k (n-l) / T},
// with f_{-l,-k} = conj(f_{l,k}). Independent route used as the oracle for
// the kernel construction and as the fast path in Monte Carlo loops.
inline Complex dd_correlation(const Vector& time_sig, int delay, int doppler) {
    const auto t = time_sig.size();
    if (delay < 0) return std::conj(dd_correlation(time_sig, -delay, -doppler));
    Complex acc = 0.0;
    const double w = -2.0 * std::numbers::pi * doppler / static_cast<double>(t);
    for (Eigen::Index n = delay; n < t; ++n)
        acc += std::conj(time_sig(n)) * time_sig(n - delay) * std::polar(1.0, w * (n - delay));
    return acc;
}

}  // namespace dfrc
