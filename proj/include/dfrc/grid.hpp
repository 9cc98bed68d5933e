#pragma once

// Deterministic OTFS operators on the delay-Doppler grid: the Doppler DFT
// factor, cyclic delay / Doppler-ramp shift operators, the reduced-CP
// arrangement matrix, single-tap DD shift operators, and guard validation.
// Everything here is a pure function of the grid geometry and safe to share.

#include <numbers>
#include <vector>

#include "dfrc/types.hpp"

namespace dfrc {

// N-point unitary DFT matrix.
inline Matrix dft_matrix(int n) {
    Matrix f(n, n);
    const double w = -2.0 * std::numbers::pi / n;
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            f(r, c) = std::polar(scale, w * ((static_cast<long long>(r) * c) % n));
    return f;
}

// F_N (x) I_M: the unitary factor carrying the DD grid to the time domain
// (and back via its adjoint).
inline Matrix doppler_dft(const GridConfig& cfg) {
    cfg.validate();
    const int m = cfg.subcarriers;
    const Matrix f = dft_matrix(cfg.time_slots);
    Matrix out = Matrix::Zero(cfg.grid_size(), cfg.grid_size());
    for (int r = 0; r < cfg.time_slots; ++r)
        for (int c = 0; c < cfg.time_slots; ++c)
            out.block(r * m, c * m, m, m) = f(r, c) * Matrix::Identity(m, m);
    return out;
}

// Cyclic down-shift permutation over the MN time samples.
inline Matrix cyclic_delay(const GridConfig& cfg) {
    cfg.validate();
    const int n = cfg.grid_size();
    Matrix pi = Matrix::Zero(n, n);
    for (int r = 0; r < n; ++r) pi(r, (r - 1 + n) % n) = 1.0;
    return pi;
}

// Doppler phase ramp diag(1, e^{j2pi/MN}, ...). Returned as the diagonal.
inline Vector doppler_ramp(const GridConfig& cfg) {
    cfg.validate();
    const int n = cfg.grid_size();
    Vector d(n);
    for (int r = 0; r < n; ++r) d(r) = std::polar(1.0, 2.0 * std::numbers::pi * r / n);
    return d;
}

// Reduced-CP arrangement: Gamma x prepends the last cp_len samples of x.
// Gamma^H Gamma = I + E with E counting the repeated tail samples.
inline RealMatrix cp_matrix(const GridConfig& cfg) {
    cfg.validate();
    const int mn = cfg.grid_size();
    RealMatrix g = RealMatrix::Zero(cfg.frame_len(), mn);
    for (int r = 0; r < cfg.cp_len; ++r) g(r, mn - cfg.cp_len + r) = 1.0;
    g.bottomRows(mn).setIdentity();
    return g;
}

// B = Gamma (F_N^H (x) I_M): DD grid -> transmitted time-domain frame.
inline Matrix time_projector(const GridConfig& cfg) {
    return cp_matrix(cfg) * doppler_dft(cfg).adjoint();
}

// Single-tap DD channel operator for integer delay i and Doppler j:
// T_ij = (F (x) I) Pi^i Delta^j (F^H (x) I). A unit-phase permutation that
// moves cell (m, n) to ((m+i) mod M, (n+j) mod N).
inline Matrix dd_shift(const GridConfig& cfg, int delay, int doppler) {
    cfg.validate();
    const int n = cfg.grid_size();
    const Matrix u = doppler_dft(cfg);
    const Vector ramp = doppler_ramp(cfg);
    // Pi^i Delta^j has entry exp(j*2pi*doppler*c/MN) at (c+delay mod MN, c),
    // so column c of U * Pi^i Delta^j is that phase times U's column c+delay.
    Matrix shifted(n, n);
    for (int c = 0; c < n; ++c) {
        Complex phase = std::polar(1.0, 2.0 * std::numbers::pi * doppler * c / n);
        shifted.col(c) = u.col((c + delay) % n) * phase;
    }
    return shifted * u.adjoint();
}

struct GuardViolation {
    int delay = 0;
    int doppler = 0;
    Eigen::Index row = 0;  // receive cell
    Eigen::Index col = 0;  // transmit cell
};

/**
 * Checks that no channel shift within [0,L]x[0,Q] carries pilot energy into
 * the data observation window or data energy into the pilot window. Returns
 * every violating (shift, rx cell, tx cell) tuple; empty means the guard
 * interval is valid.
 */
inline std::vector<GuardViolation> guard_violations(const GridConfig& cfg,
                                                    const Placement& placement,
                                                    int max_delay, int max_doppler,
                                                    double tol = 1e-9) {
    cfg.validate();
    placement.validate(cfg);
    std::vector<GuardViolation> out;
    for (int i = 0; i <= max_delay; ++i) {
        for (int j = 0; j <= max_doppler; ++j) {
            const Matrix t = dd_shift(cfg, i, j);
            auto scan = [&](const CellList& rx, const CellList& tx) {
                for (CellIndex r : rx)
                    for (CellIndex c : tx)
                        if (std::abs(t(r, c)) > tol)
                            out.push_back({i, j, r, c});
            };
            scan(placement.rx_data_cells, placement.pilot_cells);
            scan(placement.rx_pilot_cells, placement.data_cells);
        }
    }
    return out;
}

inline bool validate_guard(const GridConfig& cfg, const Placement& placement,
                           int max_delay, int max_doppler) {
    return guard_violations(cfg, placement, max_delay, max_doppler).empty();
}

}  // namespace dfrc
