#pragma once

// Bernoulli-Gaussian delay-Doppler channel: sampling, exact/effective channel
// matrices, the pilot observation dictionary, and LMMSE estimation. Taps are
// indexed delay-first: tap b corresponds to (delay, doppler) =
// (b mod (L+1), b div (L+1)), matching the dictionary column order.

#include <stdexcept>
#include <vector>

#include "dfrc/grid.hpp"
#include "dfrc/rng.hpp"
#include "dfrc/types.hpp"

namespace dfrc {

struct ChannelModel {
    int max_delay = 0;       // L
    int max_doppler = 0;     // Q
    double tap_prob = 1.0;   // p: per-tap activity probability
    double tap_var = 1.0;    // sigma_h^2 for active taps
    double noise_var = 1.0;  // sigma_n^2

    int tap_count() const { return (max_delay + 1) * (max_doppler + 1); }
    // Marginal per-tap variance, the prior the linear estimator sees.
    double prior_var() const { return tap_prob * tap_var; }

    void validate() const {
        if (max_delay < 0 || max_doppler < 0)
            throw std::invalid_argument("channel: negative delay/Doppler span");
        if (tap_prob < 0.0 || tap_prob > 1.0)
            throw std::invalid_argument("channel: tap_prob outside [0,1]");
        if (tap_var <= 0.0 || noise_var <= 0.0)
            throw std::invalid_argument("channel: variances must be positive");
    }

    int tap_delay(int b) const { return b % (max_delay + 1); }
    int tap_doppler(int b) const { return b / (max_delay + 1); }
};

struct ChannelRealization {
    Vector gains;                 // length K_h, delay-first order
    std::vector<bool> active;
};

inline ChannelRealization sample_channel(const ChannelModel& model, Rng& rng) {
    model.validate();
    ChannelRealization out;
    out.gains = Vector::Zero(model.tap_count());
    out.active.resize(model.tap_count(), false);
    for (int b = 0; b < model.tap_count(); ++b) {
        if (rng.bernoulli(model.tap_prob)) {
            out.active[b] = true;
            out.gains(b) = rng.cgaussian(model.tap_var);
        }
    }
    return out;
}

// Time-domain channel sum over active taps of alpha * Pi^l Delta^k.
inline Matrix time_channel(const GridConfig& cfg, const ChannelModel& model,
                           const ChannelRealization& ch) {
    cfg.validate();
    if (model.max_delay >= cfg.grid_size())
        throw std::invalid_argument("channel delay span exceeds grid");
    const int n = cfg.grid_size();
    Matrix h = Matrix::Zero(n, n);
    for (int b = 0; b < model.tap_count(); ++b) {
        if (ch.gains(b) == Complex(0.0)) continue;
        const int l = model.tap_delay(b);
        const int k = model.tap_doppler(b);
        for (int c = 0; c < n; ++c)
            h((c + l) % n, c) += ch.gains(b) * std::polar(1.0, 2.0 * std::numbers::pi * k * c / n);
    }
    return h;
}

// H_DD = (F (x) I) H (F^H (x) I).
inline Matrix effective_channel(const GridConfig& cfg, const ChannelModel& model,
                                const ChannelRealization& ch) {
    const Matrix u = doppler_dft(cfg);
    return u * time_channel(cfg, model, ch) * u.adjoint();
}

/**
 * Per-tap DD shift operators and their pilot/data projections, cached once
 * per (grid, placement, model). Channel matrices are then linear in the tap
 * vector: H_DD = sum_b h_b dd[b], H_c = sum_b h_b data_block[b], etc.
 */
struct TapBasis {
    std::vector<Matrix> dd;           // T_b, MN x MN
    std::vector<Matrix> data_block;   // Psi_c^H T_b Phi_c  (Rc x Kc)
    std::vector<Matrix> pilot_block;  // Psi_p^H T_b Phi_p  (Rp x Kp)
};

inline TapBasis build_tap_basis(const GridConfig& cfg, const Placement& placement,
                                const ChannelModel& model) {
    cfg.validate();
    placement.validate(cfg);
    model.validate();
    TapBasis basis;
    basis.dd.reserve(model.tap_count());
    for (int b = 0; b < model.tap_count(); ++b) {
        Matrix t = dd_shift(cfg, model.tap_delay(b), model.tap_doppler(b));
        basis.data_block.push_back(select_block(t, placement.rx_data_cells, placement.data_cells));
        basis.pilot_block.push_back(
            select_block(t, placement.rx_pilot_cells, placement.pilot_cells));
        basis.dd.push_back(std::move(t));
    }
    return basis;
}

template <class BlockList>
inline Matrix assemble_channel(const BlockList& blocks, const Vector& taps) {
    Matrix out = Matrix::Zero(blocks[0].rows(), blocks[0].cols());
    for (Eigen::Index b = 0; b < taps.size(); ++b)
        if (taps(b) != Complex(0.0)) out += taps(b) * blocks[b];
    return out;
}

/**
 * Pilot observation dictionary. The extended dictionary stacks the per-tap
 * pilot blocks side by side; contracting block b with the pilot vector
 * gives column b of the observation matrix, so the received pilots are
 * y_p = observe(x_p) * h + noise.
 */
struct PilotDictionary {
    Matrix extended;  // R_p x (K_h * K_p)
    Matrix gram;      // extended^H extended, cached for the optimizer
    int tap_count = 0;
    int pilot_count = 0;

    Eigen::Index rx_count() const { return extended.rows(); }

    // Omega(x_p): R_p x K_h, linear in x_p.
    Matrix observe(const Vector& x_p) const {
        Matrix omega(extended.rows(), tap_count);
        for (int b = 0; b < tap_count; ++b)
            omega.col(b) = extended.middleCols(static_cast<Eigen::Index>(b) * pilot_count,
                                               pilot_count) * x_p;
        return omega;
    }

    // gram * (I (x) x1): (K_h K_p) x K_h; row block b of column c is G_bc x1.
    Matrix contract_right(const Vector& x1) const {
        Matrix out(gram.rows(), tap_count);
        for (int c = 0; c < tap_count; ++c)
            out.col(c) = gram.middleCols(static_cast<Eigen::Index>(c) * pilot_count,
                                         pilot_count) * x1;
        return out;
    }

    // (I (x) x2)^H gram: K_h x (K_h K_p); row b is x2^H G[b-th block row].
    Matrix contract_left(const Vector& x2) const {
        Matrix out(tap_count, gram.cols());
        for (int b = 0; b < tap_count; ++b)
            out.row(b) = x2.adjoint() *
                         gram.middleRows(static_cast<Eigen::Index>(b) * pilot_count, pilot_count);
        return out;
    }

    // K_h x K_h cross form (I (x) x2)^H gram (I (x) x1); equals
    // observe(x)^H observe(x) when x1 = x2 = x.
    Matrix gram_form(const Vector& x1, const Vector& x2) const {
        const Matrix p1 = contract_right(x1);
        Matrix out(tap_count, tap_count);
        for (int b = 0; b < tap_count; ++b)
            for (int c = 0; c < tap_count; ++c)
                out(b, c) = x2.dot(p1.col(c).segment(
                    static_cast<Eigen::Index>(b) * pilot_count, pilot_count));
        return out;
    }
};

inline PilotDictionary build_pilot_dictionary(const Placement& placement,
                                              const ChannelModel& model,
                                              const TapBasis& basis) {
    PilotDictionary dict;
    dict.tap_count = model.tap_count();
    dict.pilot_count = placement.pilot_count();
    dict.extended.resize(placement.rx_pilot_count(),
                         static_cast<Eigen::Index>(dict.tap_count) * dict.pilot_count);
    for (int b = 0; b < dict.tap_count; ++b)
        dict.extended.middleCols(static_cast<Eigen::Index>(b) * dict.pilot_count,
                                 dict.pilot_count) = basis.pilot_block[b];
    dict.gram = dict.extended.adjoint() * dict.extended;
    return dict;
}

inline PilotDictionary build_pilot_dictionary(const GridConfig& cfg,
                                              const Placement& placement,
                                              const ChannelModel& model) {
    return build_pilot_dictionary(placement, model, build_tap_basis(cfg, placement, model));
}

// LMMSE gain: h_hat = gain * y_p. Regularized by the prior, so the normal
// matrix is always invertible for prior_var > 0.
inline Matrix lmmse_gain(const Matrix& omega, const ChannelModel& model) {
    model.validate();
    if (model.prior_var() <= 0.0)
        throw std::invalid_argument("lmmse: prior variance must be positive (p*sigma_h^2 > 0)");
    const Eigen::Index kh = omega.cols();
    Matrix normal = omega.adjoint() * omega / model.noise_var;
    normal += Matrix::Identity(kh, kh) / model.prior_var();
    return normal.llt().solve(omega.adjoint() / model.noise_var);
}

inline Vector lmmse_estimate(const Matrix& omega, const Vector& y_p,
                             const ChannelModel& model) {
    return lmmse_gain(omega, model) * y_p;
}

struct EstimatedChannels {
    Matrix dd;     // MN x MN
    Matrix data;   // Psi_c^H dd Phi_c
    Matrix pilot;  // Psi_p^H dd Phi_p
};

inline EstimatedChannels estimated_effective_channels(const TapBasis& basis,
                                                      const Vector& h_hat) {
    EstimatedChannels out;
    out.dd = assemble_channel(basis.dd, h_hat);
    out.data = assemble_channel(basis.data_block, h_hat);
    out.pilot = assemble_channel(basis.pilot_block, h_hat);
    return out;
}

}  // namespace dfrc
