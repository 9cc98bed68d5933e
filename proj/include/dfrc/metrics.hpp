#pragma once

// Communication and sensing metrics for a design (p_c, x_p): the SINR scalar
// of the capacity lower bound under LMMSE estimation error, the expected
// integrated sidelobe level over the random data codebook, the expected
// mainlobe / transmit power, and their ADMM-split counterparts. All
// evaluations are pure; Monte Carlo estimators take explicit seeds.

#include <optional>
#include <vector>

#include "dfrc/channel.hpp"
#include "dfrc/kernels.hpp"
#include "dfrc/rng.hpp"
#include "dfrc/types.hpp"

namespace dfrc {

// ---------------------------------------------------------------------------
// Mainlobe and transmit power
// ---------------------------------------------------------------------------

/**
 * Quadratic data of the expected AF mainlobe:
 *   f00_bar = p_c * data_gain + x_p^H pilot_gram x_p,
 * with pilot_gram = Phi_p^H B^H B Phi_p and data_gain = Tr(Phi_c^H B^H B Phi_c)
 * for the time projector B. P_T = f00_bar / frame_len.
 */
struct PowerForm {
    Matrix pilot_gram;
    double data_gain = 0.0;
    int frame_len = 1;
};

inline PowerForm build_power_form(const GridConfig& cfg, const Placement& placement) {
    cfg.validate();
    placement.validate(cfg);
    const Matrix b = time_projector(cfg);
    const Matrix gram = b.adjoint() * b;
    PowerForm pf;
    pf.pilot_gram = select_block(gram, placement.pilot_cells, placement.pilot_cells);
    pf.data_gain = select_block(gram, placement.data_cells, placement.data_cells).real().trace();
    pf.frame_len = cfg.frame_len();
    return pf;
}

inline double mainlobe(const PowerForm& pf, double p_c, const Vector& x_p) {
    return p_c * pf.data_gain + std::real(x_p.dot(pf.pilot_gram * x_p));
}

// Split form used off the consensus manifold; coincides with mainlobe() at
// x1 = x2 where the bilinear form is real.
inline double mainlobe_split(const PowerForm& pf, double p_c, const Vector& x1,
                             const Vector& x2) {
    return p_c * pf.data_gain + std::real(x2.dot(pf.pilot_gram * x1));
}

inline double tx_power(const PowerForm& pf, double p_c, const Vector& x_p) {
    return mainlobe(pf, p_c, x_p) / pf.frame_len;
}

inline double tx_power_split(const PowerForm& pf, double p_c, const Vector& x1,
                             const Vector& x2) {
    return mainlobe_split(pf, p_c, x1, x2) / pf.frame_len;
}

// ---------------------------------------------------------------------------
// SINR / capacity
// ---------------------------------------------------------------------------

// Tr(p sigma_h^2 (I + (p sigma_h^2 / sigma_n^2) Omega^H Omega)^{-1}): the
// LMMSE error trace that acts as the estimation-error interference power.
inline double trace_term(const Matrix& omega, const ChannelModel& model) {
    const Eigen::Index kh = omega.cols();
    Matrix m = Matrix::Identity(kh, kh) +
               (model.prior_var() / model.noise_var) * (omega.adjoint() * omega);
    return model.prior_var() * m.llt().solve(Matrix::Identity(kh, kh)).real().trace();
}

inline double trace_term(const PilotDictionary& dict, const ChannelModel& model,
                         const Vector& x_p) {
    return trace_term(dict.observe(x_p), model);
}

// SINR with the error trace replaced by the auxiliary scalar s1.
inline double sinr_aux(double p_c, double s1, double noise_var) {
    const double snr = p_c / noise_var;
    return snr / (snr * s1 + 1.0);
}

inline double sinr(double p_c, const Vector& x_p, const ChannelModel& model,
                   const PilotDictionary& dict) {
    return sinr_aux(p_c, trace_term(dict, model, x_p), model.noise_var);
}

struct CapacityEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    int trials = 0;
};

// Monte Carlo capacity lower bound in bits per channel use:
// (f_CP / MN) * E[ log2 det(I + SINR * Hc_hat Hc_hat^H) ] over channels,
// pilot noise, and the resulting LMMSE estimates.
inline CapacityEstimate capacity_lower_bound(const GridConfig& cfg, double p_c,
                                             const Vector& x_p, const ChannelModel& model,
                                             const PilotDictionary& dict,
                                             const TapBasis& basis, int n_trials,
                                             std::uint64_t seed) {
    if (n_trials < 1) throw std::invalid_argument("capacity: n_trials >= 1 required");
    const double s = sinr(p_c, x_p, model, dict);
    const Matrix omega = dict.observe(x_p);
    const Matrix gain = lmmse_gain(omega, model);
    const double scale = cfg.cp_fraction() / cfg.grid_size();
    const Eigen::Index rc = basis.data_block[0].rows();

    Rng root(seed);
    double sum = 0.0, sum_sq = 0.0;
    for (int t = 0; t < n_trials; ++t) {
        Rng rng = root.substream(t);
        ChannelRealization ch = sample_channel(model, rng);
        Vector noise(omega.rows());
        for (Eigen::Index i = 0; i < noise.size(); ++i)
            noise(i) = rng.cgaussian(model.noise_var);
        const Vector h_hat = gain * (omega * ch.gains + noise);
        const Matrix hc = assemble_channel(basis.data_block, h_hat);
        Matrix m = Matrix::Identity(rc, rc) + s * (hc * hc.adjoint());
        // log2 det of a Hermitian positive definite matrix via Cholesky
        double logdet = 0.0;
        Eigen::LLT<Matrix> llt(m);
        for (Eigen::Index i = 0; i < rc; ++i)
            logdet += 2.0 * std::log2(std::real(llt.matrixL()(i, i)));
        const double value = scale * logdet;
        sum += value;
        sum_sq += value * value;
    }
    CapacityEstimate est;
    est.trials = n_trials;
    est.mean = sum / n_trials;
    const double var = std::max(0.0, sum_sq / n_trials - est.mean * est.mean);
    est.std_error = std::sqrt(var / n_trials);
    return est;
}

// One determinant term of the bound; exposed for direct checks.
inline double capacity_term(const GridConfig& cfg, const Matrix& hc_hat, double sinr_value) {
    const Eigen::Index rc = hc_hat.rows();
    Matrix m = Matrix::Identity(rc, rc) + sinr_value * (hc_hat * hc_hat.adjoint());
    Eigen::LLT<Matrix> llt(m);
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < rc; ++i)
        logdet += 2.0 * std::log2(std::real(llt.matrixL()(i, i)));
    return cfg.cp_fraction() / cfg.grid_size() * logdet;
}

// ---------------------------------------------------------------------------
// Expected ISL
// ---------------------------------------------------------------------------

// Expected ISL over the CSCG data codebook:
//   sum_bins |x_p^H A_p x_p|^2 + p_c^2 (a + |b|^2)
//            + p_c x_p^H B x_p + 2 p_c Re(b x_p^H A_p^H x_p).
inline double isl_expected(double p_c, const Vector& x_p, const KernelSet& kernels) {
    double total = 0.0;
    kernels.for_each_sidelobe([&](const AFKernel& k) {
        const Complex fpp = x_p.dot(k.pilot_quad * x_p);
        total += std::norm(fpp);
        total += p_c * p_c * (k.data_energy + std::norm(k.data_trace));
        total += p_c * std::real(x_p.dot(k.pilot_sq * x_p));
        total += 2.0 * p_c * std::real(k.data_trace * std::conj(fpp));
    });
    return total;
}

// Split form: separately convex in x1 and in x2. Bilinear terms are taken
// through Re{.}, the quartic term is |x1^H A_p x2|^2. Coincides with
// isl_expected at x1 = x2.
inline double isl_split(double p_c, const Vector& x1, const Vector& x2,
                        const KernelSet& kernels) {
    double total = 0.0;
    kernels.for_each_sidelobe([&](const AFKernel& k) {
        const Complex q = x1.dot(k.pilot_quad * x2);  // x1^H A_p x2
        total += std::norm(q);
        total += p_c * p_c * (k.data_energy + std::norm(k.data_trace));
        total += p_c * std::real(x2.dot(k.pilot_sq * x1));
        total += 2.0 * p_c * std::real(k.data_trace * x2.dot(k.pilot_quad.adjoint() * x1));
    });
    return total;
}

// Gradient of isl_split with respect to x1 under the real parametrization:
// the directional derivative along a complex step d is Re(g^H d).
inline Vector isl_split_grad_x1(double p_c, const Vector& x1, const Vector& x2,
                                const KernelSet& kernels) {
    Vector g = Vector::Zero(x1.size());
    kernels.for_each_sidelobe([&](const AFKernel& k) {
        const Vector u = k.pilot_quad * x2;  // quartic: |x1^H u|^2
        g += 2.0 * (u.dot(x1)) * u;
        g += p_c * (k.pilot_sq.adjoint() * x2);
        g += 2.0 * p_c * std::conj(k.data_trace) * (k.pilot_quad * x2);
    });
    return g;
}

// ---------------------------------------------------------------------------
// Empirical ambiguity function
// ---------------------------------------------------------------------------

struct AFTable {
    int max_delay = 0;
    int max_doppler = 0;
    RealMatrix mean_abs_sq;  // (2L+1) x (2Q+1), bin (l,k) at (l+L, k+Q)
    Matrix mean_value;

    double at(int delay, int doppler) const {
        return mean_abs_sq(delay + max_delay, doppler + max_doppler);
    }
    // Sum of mean |f|^2 over every bin except (0,0).
    double sidelobe_sum() const {
        return mean_abs_sq.sum() - at(0, 0);
    }
    std::vector<double> zero_doppler_slice() const {
        std::vector<double> out;
        for (int l = -max_delay; l <= max_delay; ++l) out.push_back(at(l, 0));
        return out;
    }
    std::vector<double> zero_delay_slice() const {
        std::vector<double> out;
        for (int k = -max_doppler; k <= max_doppler; ++k) out.push_back(at(0, k));
        return out;
    }
};

// Mean |f_lk|^2 and mean f_lk per bin over CSCG data draws, evaluated through
// the time-domain correlation. With p_c = 0 the table is deterministic and a
// single draw is used.
inline AFTable empirical_af(const Vector& x_p, double p_c, const KernelSet& kernels,
                            int n_draws, std::uint64_t seed) {
    if (n_draws < 1) throw std::invalid_argument("empirical_af: n_draws >= 1 required");
    const GridConfig& cfg = kernels.grid;
    const Placement& pl = kernels.placement;
    const int ld = kernels.max_delay, qd = kernels.max_doppler;
    const int rows = 2 * ld + 1, cols = 2 * qd + 1;

    AFTable table;
    table.max_delay = ld;
    table.max_doppler = qd;
    table.mean_abs_sq = RealMatrix::Zero(rows, cols);
    table.mean_value = Matrix::Zero(rows, cols);

    const Vector pilot_frame =
        kernels.time_proj * scatter(x_p, pl.pilot_cells, cfg.grid_size());
    const Matrix data_proj = select_cols(kernels.time_proj, pl.data_cells);

    const bool deterministic = (p_c == 0.0) || pl.data_cells.empty();
    const int draws = deterministic ? 1 : n_draws;
    Rng root(seed);

    // Per-draw tables accumulated with pairwise summation over chunks.
    RealMatrix acc_sq = RealMatrix::Zero(rows, cols);
    Matrix acc_val = Matrix::Zero(rows, cols);
    RealMatrix chunk_sq = RealMatrix::Zero(rows, cols);
    Matrix chunk_val = Matrix::Zero(rows, cols);
    constexpr int kChunk = 1024;
    int in_chunk = 0;
    for (int d = 0; d < draws; ++d) {
        Vector s = pilot_frame;
        if (!deterministic) {
            Rng rng = root.substream(d);
            Vector xc(pl.data_count());
            for (int i = 0; i < pl.data_count(); ++i) xc(i) = rng.cgaussian(p_c);
            s += data_proj * xc;
        }
        // per-delay lag products, then Doppler phases
        for (int l = 0; l <= ld; ++l) {
            for (int k = -qd; k <= qd; ++k) {
                const Complex f = dd_correlation(s, l, k);
                chunk_sq(l + ld, k + qd) += std::norm(f);
                chunk_val(l + ld, k + qd) += f;
                if (l > 0) {  // mirror bin by Hermitian symmetry
                    chunk_sq(ld - l, qd - k) += std::norm(f);
                    chunk_val(ld - l, qd - k) += std::conj(f);
                }
            }
        }
        if (++in_chunk == kChunk) {
            acc_sq += chunk_sq;
            acc_val += chunk_val;
            chunk_sq.setZero();
            chunk_val.setZero();
            in_chunk = 0;
        }
    }
    acc_sq += chunk_sq;
    acc_val += chunk_val;
    table.mean_abs_sq = acc_sq / draws;
    table.mean_value = acc_val / draws;
    return table;
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

struct MetricReport {
    double sinr = 0.0;
    double isl = 0.0;
    double mainlobe = 0.0;
    double tx_power = 0.0;
    double eta = 0.0;
    std::optional<double> capacity_lb;
};

inline MetricReport evaluate_design(double p_c, const Vector& x_p,
                                    const ChannelModel& model, const PilotDictionary& dict,
                                    const KernelSet& kernels, const PowerForm& pf,
                                    double eta) {
    MetricReport r;
    r.sinr = sinr(p_c, x_p, model, dict);
    r.isl = isl_expected(p_c, x_p, kernels);
    r.mainlobe = mainlobe(pf, p_c, x_p);
    r.tx_power = r.mainlobe / pf.frame_len;
    r.eta = eta;
    return r;
}

}  // namespace dfrc
