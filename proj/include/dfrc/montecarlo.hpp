#pragma once

// Brute-force validation oracles for the analytic metrics and the end-to-end
// coded-free BER link simulation (QPSK / 16-QAM, LMMSE estimation and
// equalization under the guard-protected pilot observation). Every loop is
// driven by per-trial substreams, so results are a deterministic function of
// (inputs, seed) under any parallel schedule.

#include <array>
#include <bit>
#include <cstdint>
#include <optional>
#include <thread>
#include <vector>

#include "dfrc/channel.hpp"
#include "dfrc/kernels.hpp"
#include "dfrc/metrics.hpp"
#include "dfrc/rng.hpp"
#include "dfrc/types.hpp"

namespace dfrc {

struct OracleEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    int draws = 0;
};

// Monte Carlo mean of the sidelobe energy sum_{bins} |f_lk|^2 over CSCG data
// draws, evaluated through the time-domain correlation (a route independent
// of the kernel reductions the analytic expansion uses).
inline OracleEstimate oracle_isl(double p_c, const Vector& x_p, const KernelSet& kernels,
                                 int n_draws, std::uint64_t seed) {
    if (n_draws < 1) throw std::invalid_argument("oracle_isl: n_draws >= 1 required");
    const GridConfig& cfg = kernels.grid;
    const Placement& pl = kernels.placement;
    const Vector pilot_frame =
        kernels.time_proj * scatter(x_p, pl.pilot_cells, cfg.grid_size());
    const Matrix data_proj = select_cols(kernels.time_proj, pl.data_cells);
    const int ld = kernels.max_delay, qd = kernels.max_doppler;

    const bool deterministic = (p_c == 0.0) || pl.data_cells.empty();
    const int draws = deterministic ? 1 : n_draws;
    Rng root(seed);

    auto draw_value = [&](int d) {
        Vector s = pilot_frame;
        if (!deterministic) {
            Rng rng = root.substream(d);
            Vector xc(pl.data_count());
            for (int i = 0; i < pl.data_count(); ++i) xc(i) = rng.cgaussian(p_c);
            s += data_proj * xc;
        }
        double total = 0.0;
        for (int l = 0; l <= ld; ++l) {
            for (int k = -qd; k <= qd; ++k) {
                if (l == 0 && k == 0 && !kernels.include_mainlobe) continue;
                if (l == 0 && k < 0) continue;  // covered by the mirror below
                const double e = std::norm(dd_correlation(s, l, k));
                total += e;
                if (l > 0 || k > 0) total += e;  // |f_{-l,-k}| = |f_{l,k}|
            }
        }
        return total;
    };

    // Kahan-compensated accumulation in draw order.
    double sum = 0.0, comp = 0.0, sum_sq = 0.0, comp_sq = 0.0;
    for (int d = 0; d < draws; ++d) {
        const double v = draw_value(d);
        double y = v - comp;
        double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        const double v2 = v * v;
        y = v2 - comp_sq;
        t = sum_sq + y;
        comp_sq = (t - sum_sq) - y;
        sum_sq = t;
    }
    OracleEstimate est;
    est.draws = draws;
    est.mean = sum / draws;
    if (draws > 1 && !deterministic) {
        const double var = std::max(0.0, sum_sq / draws - est.mean * est.mean);
        est.std_error = std::sqrt(var / draws);
    }
    return est;
}

// Empirical SINR p_c * R_c / E||(H_c - H_c_hat) x_c + n_c||^2 under sampled
// channels, pilot noise, LMMSE estimates, and CSCG data.
inline OracleEstimate oracle_sinr(double p_c, const Vector& x_p, const ChannelModel& model,
                                  const PilotDictionary& dict, const TapBasis& basis,
                                  int n_trials, std::uint64_t seed,
                                  bool perfect_csi = false) {
    if (n_trials < 1) throw std::invalid_argument("oracle_sinr: n_trials >= 1 required");
    const Matrix omega = dict.observe(x_p);
    const Matrix gain = lmmse_gain(omega, model);
    const Eigen::Index rc = basis.data_block[0].rows();
    const Eigen::Index kc = basis.data_block[0].cols();

    Rng root(seed);
    double sum = 0.0, sum_sq = 0.0;
    for (int t = 0; t < n_trials; ++t) {
        Rng rng = root.substream(t);
        const ChannelRealization ch = sample_channel(model, rng);
        Vector pilot_noise(omega.rows());
        for (Eigen::Index i = 0; i < pilot_noise.size(); ++i)
            pilot_noise(i) = rng.cgaussian(model.noise_var);
        const Vector h_hat =
            perfect_csi ? ch.gains : (gain * (omega * ch.gains + pilot_noise)).eval();
        const Matrix hc = assemble_channel(basis.data_block, ch.gains);
        const Matrix hc_hat = assemble_channel(basis.data_block, h_hat);
        Vector xc(kc);
        for (Eigen::Index i = 0; i < kc; ++i) xc(i) = rng.cgaussian(p_c);
        Vector v = (hc - hc_hat) * xc;
        for (Eigen::Index i = 0; i < rc; ++i) v(i) += rng.cgaussian(model.noise_var);
        const double e = v.squaredNorm();
        sum += e;
        sum_sq += e * e;
    }
    const double mean_noise = sum / n_trials;
    const double var = std::max(0.0, sum_sq / n_trials - mean_noise * mean_noise);
    const double se_noise = std::sqrt(var / n_trials);
    OracleEstimate est;
    est.draws = n_trials;
    est.mean = p_c * rc / mean_noise;
    est.std_error = est.mean * se_noise / mean_noise;  // first-order propagation
    return est;
}

// ---------------------------------------------------------------------------
// BER link simulation
// ---------------------------------------------------------------------------

enum class Modulation { qpsk, qam16 };

inline int bits_per_symbol(Modulation mod) { return mod == Modulation::qpsk ? 2 : 4; }

namespace detail {

// Gray-mapped constellations, unit average energy.
inline Complex map_symbol(Modulation mod, unsigned bits) {
    constexpr double inv_sqrt2 = 0.7071067811865476;
    constexpr double inv_sqrt10 = 0.31622776601683794;
    if (mod == Modulation::qpsk) {
        const double i = (bits & 0b01) ? -1.0 : 1.0;
        const double q = (bits & 0b10) ? -1.0 : 1.0;
        return {i * inv_sqrt2, q * inv_sqrt2};
    }
    // 16-QAM, Gray per axis over bit pairs (b3 b2 | b1 b0) -> (I | Q)
    auto level = [](unsigned two_bits) {
        switch (two_bits) {
            case 0b00: return 3.0;
            case 0b01: return 1.0;
            case 0b11: return -1.0;
            default: return -3.0;  // 0b10
        }
    };
    return {level((bits >> 2) & 0b11) * inv_sqrt10, level(bits & 0b11) * inv_sqrt10};
}

inline unsigned demap_symbol(Modulation mod, Complex y) {
    if (mod == Modulation::qpsk)
        return (y.real() < 0.0 ? 0b01u : 0u) | (y.imag() < 0.0 ? 0b10u : 0u);
    constexpr double step = 2.0 * 0.31622776601683794;
    auto axis = [](double v, double s) -> unsigned {
        if (v > s) return 0b00;
        if (v > 0.0) return 0b01;
        if (v > -s) return 0b11;
        return 0b10;
    };
    return (axis(y.real(), step) << 2) | axis(y.imag(), step);
}

}  // namespace detail

struct BerConfig {
    Modulation modulation = Modulation::qpsk;
    std::vector<double> snr_grid_db;  // SNR = p_c / sigma_n^2
    int n_trials = 10000;             // frames per SNR point
    std::uint64_t seed = 1;
    bool perfect_csi = false;
    std::optional<ChannelRealization> fixed_channel;  // overrides sampling when set
    int threads = 0;                                  // 0 = hardware concurrency
};

struct BerPoint {
    double snr_db = 0.0;
    double ber = 0.0;
    double ci_low = 0.0;   // 95% Wilson interval
    double ci_high = 0.0;
    std::uint64_t bit_errors = 0;
    std::uint64_t n_bits = 0;
};

struct BerResult {
    std::vector<BerPoint> points;
};

namespace detail {

inline void wilson_interval(std::uint64_t errors, std::uint64_t total, double& lo, double& hi) {
    if (total == 0) { lo = hi = 0.0; return; }
    const double z = 1.959963984540054;
    const double n = static_cast<double>(total);
    const double phat = static_cast<double>(errors) / n;
    const double denom = 1.0 + z * z / n;
    const double center = phat + z * z / (2.0 * n);
    const double margin = z * std::sqrt(phat * (1.0 - phat) / n + z * z / (4.0 * n * n));
    lo = std::max(0.0, (center - margin) / denom);
    hi = std::min(1.0, (center + margin) / denom);
}

}  // namespace detail

/**
 * Frame-level link simulation at a fixed design (p_c, x_p). Per frame:
 * sample the channel, map random bits onto the data cells at power p_c,
 * observe pilots and data through the guard-separated projections,
 * LMMSE-estimate the taps, LMMSE-equalize with the effective noise floor
 * sigma_n^2 + p_c * trace_term, hard-demap, and count bit errors.
 * Requires a guard-valid placement (the projected model is exact only then).
 */
inline BerResult run_ber(double p_c, const Vector& x_p, const GridConfig& cfg,
                         const Placement& placement, const ChannelModel& model,
                         const BerConfig& ber) {
    if (ber.n_trials < 1) throw std::invalid_argument("run_ber: n_trials >= 1 required");
    placement.validate(cfg);
    const TapBasis basis = build_tap_basis(cfg, placement, model);
    const PilotDictionary dict = build_pilot_dictionary(placement, model, basis);
    const int kc = placement.data_count();
    const int bps = bits_per_symbol(ber.modulation);

    if (kc == 0) throw std::invalid_argument("run_ber: placement has no data cells");

    BerResult result;
    for (std::size_t pt = 0; pt < ber.snr_grid_db.size(); ++pt) {
        const double snr_db = ber.snr_grid_db[pt];
        ChannelModel point_model = model;
        point_model.noise_var = p_c / std::pow(10.0, snr_db / 10.0);

        const Matrix omega = dict.observe(x_p);
        const Matrix gain = lmmse_gain(omega, point_model);
        const double err_trace = trace_term(omega, point_model);
        const double eff_noise = point_model.noise_var + p_c * err_trace;

        Rng root = Rng(ber.seed).substream(pt);

        const int n_threads = ber.threads > 0
                                  ? ber.threads
                                  : std::max(1u, std::thread::hardware_concurrency());
        std::vector<std::uint64_t> errors(n_threads, 0);
        auto worker = [&](int tid) {
            std::uint64_t local = 0;
            std::vector<unsigned> tx_bits(kc);
            for (int f = tid; f < ber.n_trials; f += n_threads) {
                Rng rng = root.substream(f);
                const ChannelRealization ch =
                    ber.fixed_channel ? *ber.fixed_channel : sample_channel(point_model, rng);

                Vector xc(kc);
                for (int i = 0; i < kc; ++i) {
                    unsigned bits = static_cast<unsigned>(rng.next_u64() & ((1u << bps) - 1));
                    tx_bits[i] = bits;
                    xc(i) = std::sqrt(p_c) * detail::map_symbol(ber.modulation, bits);
                }

                // pilot observation -> tap estimate
                Vector y_p = omega * ch.gains;
                for (Eigen::Index i = 0; i < y_p.size(); ++i)
                    y_p(i) += rng.cgaussian(point_model.noise_var);
                const Vector h_hat = ber.perfect_csi ? ch.gains : (gain * y_p).eval();

                // data observation
                const Matrix hc = assemble_channel(basis.data_block, ch.gains);
                Vector y_c = hc * xc;
                for (Eigen::Index i = 0; i < y_c.size(); ++i)
                    y_c(i) += rng.cgaussian(point_model.noise_var);

                // LMMSE equalizer with per-symbol bias correction
                const Matrix hc_hat = assemble_channel(basis.data_block, h_hat);
                Matrix normal = hc_hat.adjoint() * hc_hat;
                normal += (eff_noise / p_c) * Matrix::Identity(kc, kc);
                Eigen::LLT<Matrix> llt(normal);
                const Vector xhat = llt.solve(hc_hat.adjoint() * y_c);
                const Matrix filt = llt.solve(hc_hat.adjoint() * hc_hat);

                for (int i = 0; i < kc; ++i) {
                    const double g = std::real(filt(i, i));
                    const Complex sym = g > 1e-12 ? xhat(i) / (g * std::sqrt(p_c))
                                                  : xhat(i) / std::sqrt(p_c);
                    const unsigned rx = detail::demap_symbol(ber.modulation, sym);
                    local += static_cast<std::uint64_t>(
                        std::popcount(rx ^ tx_bits[i]));
                }
            }
            errors[tid] = local;
        };
        if (n_threads == 1) {
            worker(0);
        } else {
            std::vector<std::thread> pool;
            for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker, t);
            for (auto& th : pool) th.join();
        }

        BerPoint point;
        point.snr_db = snr_db;
        for (std::uint64_t e : errors) point.bit_errors += e;
        point.n_bits = static_cast<std::uint64_t>(ber.n_trials) *
                       static_cast<std::uint64_t>(kc) * bps;
        point.ber = static_cast<double>(point.bit_errors) / point.n_bits;
        detail::wilson_interval(point.bit_errors, point.n_bits, point.ci_low, point.ci_high);
        result.points.push_back(point);
    }
    return result;
}

}  // namespace dfrc
