#pragma once

// Named experiments behind the CLI: single-design optimization, the
// sensing/communication region sweep with flat/cluster baselines, empirical
// ambiguity-function slices, and the BER link study. Every run writes CSV
// artifacts plus a manifest able to reproduce it.

#include <filesystem>
#include <string>
#include <vector>

#include "dfrc/config.hpp"
#include "dfrc/io.hpp"
#include "dfrc/montecarlo.hpp"
#include "dfrc/optimizer.hpp"
#include "dfrc/patterns.hpp"

namespace dfrc {

namespace detail {

inline std::string eta_tag(double eta) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%.2f", eta);
    std::string tag(buf);
    for (char& c : tag)
        if (c == '.') c = 'p';
    return tag;
}

inline Vector custom_or_archetype(InitPattern pattern, int pilot_count) {
    switch (pattern) {
        case InitPattern::spike: return initial_pilot_values(PatternKind::spike, pilot_count);
        case InitPattern::cluster:
        case InitPattern::flat:
        case InitPattern::custom: return initial_pilot_values(PatternKind::flat, pilot_count);
    }
    return initial_pilot_values(PatternKind::flat, pilot_count);
}

}  // namespace detail

// Solve from the configured start, optionally also from the other archetype
// shapes, and keep the best weighted objective.
inline SolveResult solve_multistart(const ProblemSpec& spec, const SolverOptions& options,
                                    bool multi_start) {
    const int kp = spec.ctx->placement.pilot_count();
    std::vector<Vector> shapes;
    shapes.push_back(detail::custom_or_archetype(options.init_pattern, kp));
    if (multi_start) {
        shapes.push_back(initial_pilot_values(PatternKind::spike, kp));
        shapes.push_back(initial_pilot_values(PatternKind::flat, kp));
    }
    SolveResult best;
    bool first = true;
    for (const Vector& shape : shapes) {
        SolveResult result = solve(spec, options, make_initial_state(spec, shape));
        const double obj = weighted_objective(spec, result.state.p_c, result.state.x_p);
        if (first || obj > weighted_objective(spec, best.state.p_c, best.state.x_p)) {
            best = std::move(result);
            first = false;
        }
    }
    return best;
}

struct Normalizers {
    double sinr_scale = 1.0;
    double isl_scale = 1.0;
    SolveResult comm_corner;   // eta = 1 solve at raw scales
    SolveResult sense_corner;  // eta = 0 solve at raw scales
};

// Single-objective corner solves fix the normalization of each metric.
inline Normalizers compute_normalizers(const DesignContext& ctx, double p_max,
                                       double xi_min, const SolverOptions& options,
                                       bool multi_start) {
    ProblemSpec spec;
    spec.ctx = &ctx;
    spec.p_max = p_max;
    spec.xi_min = xi_min;

    Normalizers norm;
    spec.eta = 1.0;
    norm.comm_corner = solve_multistart(spec, options, multi_start);
    spec.eta = 0.0;
    norm.sense_corner = solve_multistart(spec, options, multi_start);
    norm.sinr_scale = std::max(
        1e-12, sinr(norm.comm_corner.state.p_c, norm.comm_corner.state.x_p, ctx.model,
                    ctx.dict));
    // the sensing corner can reach near-zero ISL; cap the weight amplification
    // relative to the communication corner's sidelobe level
    const double isl_comm = isl_expected(norm.comm_corner.state.p_c,
                                         norm.comm_corner.state.x_p, ctx.kernels);
    norm.isl_scale = std::max({1e-12, 1e-6 * isl_comm,
                               isl_expected(norm.sense_corner.state.p_c,
                                            norm.sense_corner.state.x_p, ctx.kernels)});
    return norm;
}

inline void write_trace_csv(const std::filesystem::path& path,
                            const std::vector<TraceRow>& trace) {
    CsvWriter csv(path, {"n", "m", "objective", "sinr", "isl", "primal_residual",
                         "dual_residual", "p_c", "slack_gap"});
    for (const TraceRow& row : trace)
        csv.row({static_cast<double>(row.ao_iter), static_cast<double>(row.admm_iter),
                 row.objective, row.sinr, row.isl, row.primal_res, row.dual_res, row.p_c,
                 row.slack_gap});
}

inline void write_metrics_csv(const std::filesystem::path& path, const MetricReport& report) {
    CsvWriter csv(path, {"eta", "sinr", "isl", "mainlobe", "tx_power", "capacity_lb"});
    csv.row({report.eta, report.sinr, report.isl, report.mainlobe, report.tx_power,
             report.capacity_lb.value_or(std::nan(""))});
}

inline void write_af_slices(const std::filesystem::path& dir, const std::string& tag,
                            const AFTable& table, std::vector<std::string>& outputs) {
    {
        CsvWriter csv(dir / ("af_eta" + tag + "_zero_doppler.csv"),
                      {"l", "k", "mean_abs_f_sq"});
        for (int l = -table.max_delay; l <= table.max_delay; ++l)
            csv.row({static_cast<double>(l), 0.0, table.at(l, 0)});
        outputs.push_back("af_eta" + tag + "_zero_doppler.csv");
    }
    {
        CsvWriter csv(dir / ("af_eta" + tag + "_zero_delay.csv"),
                      {"l", "k", "mean_abs_f_sq"});
        for (int k = -table.max_doppler; k <= table.max_doppler; ++k)
            csv.row({0.0, static_cast<double>(k), table.at(0, k)});
        outputs.push_back("af_eta" + tag + "_zero_delay.csv");
    }
}

// ---------------------------------------------------------------------------

inline std::vector<std::string> run_optimize(const ExperimentConfig& cfg,
                                             const std::filesystem::path& out_dir) {
    const Placement placement = cfg.make_placement();
    const DesignContext ctx = build_context(cfg.grid, placement, cfg.channel,
                                            cfg.sense_delay, cfg.sense_doppler,
                                            cfg.include_mainlobe);
    ProblemSpec spec;
    spec.ctx = &ctx;
    spec.eta = cfg.problem.eta;
    spec.p_max = cfg.problem.p_max_linear();
    spec.xi_min = cfg.xi_min();
    if (spec.eta > 0.0 && spec.eta < 1.0) {
        const Normalizers norm =
            compute_normalizers(ctx, spec.p_max, spec.xi_min, cfg.solver, cfg.multi_start);
        spec.sinr_scale = norm.sinr_scale;
        spec.isl_scale = norm.isl_scale;
    }
    const SolveResult result = solve_multistart(spec, cfg.solver, cfg.multi_start);

    std::vector<std::string> outputs;
    {
        Json design = design_to_json(cfg.grid, placement, result.state.p_c, result.state.x_p);
        design["converged"] = result.converged;
        std::ofstream out(out_dir / "design.json");
        out << design.dump(2) << "\n";
        outputs.push_back("design.json");
    }
    write_trace_csv(out_dir / "trace.csv", result.trace);
    outputs.push_back("trace.csv");
    MetricReport report = evaluate_design(result.state.p_c, result.state.x_p, cfg.channel,
                                          ctx.dict, ctx.kernels, ctx.power, spec.eta);
    report.capacity_lb = capacity_lower_bound(cfg.grid, result.state.p_c, result.state.x_p,
                                              cfg.channel, ctx.dict, ctx.basis, 200,
                                              cfg.seed)
                             .mean;
    write_metrics_csv(out_dir / "metrics.csv", report);
    outputs.push_back("metrics.csv");
    return outputs;
}

// Baseline frontier: a fixed archetype shape swept over the pilot/data power
// split from data-only (t = 0) to pilot-only (t = 1) at full budget.
struct BaselinePoint {
    double split = 0.0;
    double p_c = 0.0;
    double sinr = 0.0;
    double isl = 0.0;
};

inline std::vector<BaselinePoint> sweep_baseline(const DesignContext& ctx,
                                                 const Vector& shape, double p_max,
                                                 int splits) {
    const double budget = p_max * ctx.power.frame_len;
    const double shape_qf = std::real(shape.dot(ctx.power.pilot_gram * shape));
    std::vector<BaselinePoint> points;
    for (int i = 0; i < splits; ++i) {
        const double t = static_cast<double>(i) / (splits - 1);
        BaselinePoint pt;
        pt.split = t;
        pt.p_c = ctx.power.data_gain > 0.0 ? (1.0 - t) * budget / ctx.power.data_gain : 0.0;
        const Vector x_p = (shape * std::sqrt(t * budget / shape_qf)).eval();
        pt.sinr = sinr(pt.p_c, x_p, ctx.model, ctx.dict);
        pt.isl = isl_expected(pt.p_c, x_p, ctx.kernels);
        points.push_back(pt);
    }
    return points;
}

inline std::vector<std::string> run_region(const ExperimentConfig& cfg,
                                           const std::filesystem::path& out_dir) {
    const Placement placement = cfg.make_placement();
    const DesignContext ctx = build_context(cfg.grid, placement, cfg.channel,
                                            cfg.sense_delay, cfg.sense_doppler,
                                            cfg.include_mainlobe);
    const double p_max = cfg.problem.p_max_linear();
    const double xi_min = cfg.xi_min();
    const Normalizers norm =
        compute_normalizers(ctx, p_max, xi_min, cfg.solver, cfg.region.multi_start);

    std::vector<std::string> outputs;
    {
        CsvWriter csv(out_dir / "region_optimized.csv",
                      {"eta", "sinr", "isl", "sinr_db", "isl_db", "sinr_norm", "isl_norm",
                       "p_c"});
        for (double eta : cfg.problem.eta_grid) {
            ProblemSpec spec;
            spec.ctx = &ctx;
            spec.eta = eta;
            spec.p_max = p_max;
            spec.xi_min = xi_min;
            spec.sinr_scale = norm.sinr_scale;
            spec.isl_scale = norm.isl_scale;
            SolveResult result;
            if (eta == 0.0) result = norm.sense_corner;
            else if (eta == 1.0) result = norm.comm_corner;
            else result = solve_multistart(spec, cfg.solver, cfg.region.multi_start);
            const double s = sinr(result.state.p_c, result.state.x_p, ctx.model, ctx.dict);
            const double i = isl_expected(result.state.p_c, result.state.x_p, ctx.kernels);
            csv.row({eta, s, i, 10.0 * std::log10(std::max(s, 1e-300)),
                     10.0 * std::log10(std::max(i, 1e-300)), s / norm.sinr_scale,
                     i / norm.isl_scale, result.state.p_c});

            Json design =
                design_to_json(cfg.grid, placement, result.state.p_c, result.state.x_p);
            const std::string name = "design_eta" + detail::eta_tag(eta) + ".json";
            std::ofstream out(out_dir / name);
            out << design.dump(2) << "\n";
            outputs.push_back(name);
        }
        outputs.push_back("region_optimized.csv");
    }

    for (PatternKind kind : {PatternKind::flat, PatternKind::cluster}) {
        const Placement base_placement =
            generate_pattern(kind, cfg.grid, placement.pilot_count(), placement.data_count(),
                             cfg.channel.max_delay, cfg.channel.max_doppler);
        const DesignContext base_ctx =
            build_context(cfg.grid, base_placement, cfg.channel, cfg.sense_delay,
                          cfg.sense_doppler, cfg.include_mainlobe);
        const Vector shape = initial_pilot_values(kind, base_placement.pilot_count());
        const auto points =
            sweep_baseline(base_ctx, shape, p_max, cfg.region.baseline_splits);
        const std::string name = "region_" + to_string(kind) + ".csv";
        CsvWriter csv(out_dir / name,
                      {"split", "sinr", "isl", "sinr_db", "isl_db", "sinr_norm", "isl_norm",
                       "p_c"});
        for (const BaselinePoint& pt : points)
            csv.row({pt.split, pt.sinr, pt.isl, 10.0 * std::log10(std::max(pt.sinr, 1e-300)),
                     10.0 * std::log10(std::max(pt.isl, 1e-300)), pt.sinr / norm.sinr_scale,
                     pt.isl / norm.isl_scale, pt.p_c});
        outputs.push_back(name);
    }
    return outputs;
}

inline std::vector<std::string> run_af(const ExperimentConfig& cfg,
                                       const std::filesystem::path& out_dir) {
    const Placement placement = cfg.make_placement();
    const DesignContext ctx = build_context(cfg.grid, placement, cfg.channel,
                                            cfg.sense_delay, cfg.sense_doppler,
                                            cfg.include_mainlobe);
    const double p_max = cfg.problem.p_max_linear();
    const double xi_min = cfg.xi_min();
    const Normalizers norm =
        compute_normalizers(ctx, p_max, xi_min, cfg.solver, cfg.multi_start);

    std::vector<std::string> outputs;
    CsvWriter summary(out_dir / "af_summary.csv",
                      {"eta", "sidelobe_energy", "zero_doppler_sidelobes",
                       "zero_delay_sidelobes"});
    for (double eta : cfg.problem.eta_grid) {
        ProblemSpec spec;
        spec.ctx = &ctx;
        spec.eta = eta;
        spec.p_max = p_max;
        spec.xi_min = xi_min;
        spec.sinr_scale = norm.sinr_scale;
        spec.isl_scale = norm.isl_scale;
        SolveResult result;
        if (eta == 0.0) result = norm.sense_corner;
        else if (eta == 1.0) result = norm.comm_corner;
        else result = solve_multistart(spec, cfg.solver, cfg.multi_start);

        const AFTable table = empirical_af(result.state.x_p, result.state.p_c, ctx.kernels,
                                           cfg.af.n_draws, cfg.seed);
        const std::string tag = detail::eta_tag(eta);
        write_af_slices(out_dir, tag, table, outputs);
        double zd = 0.0, zl = 0.0;
        for (int l = -table.max_delay; l <= table.max_delay; ++l)
            if (l != 0) zd += table.at(l, 0);
        for (int k = -table.max_doppler; k <= table.max_doppler; ++k)
            if (k != 0) zl += table.at(0, k);
        summary.row({eta, table.sidelobe_sum(), zd, zl});
    }
    outputs.push_back("af_summary.csv");
    return outputs;
}

inline std::vector<std::string> run_ber_experiment(const ExperimentConfig& cfg,
                                                   const std::filesystem::path& out_dir) {
    const Placement placement = cfg.make_placement();
    const DesignContext ctx = build_context(cfg.grid, placement, cfg.channel,
                                            cfg.sense_delay, cfg.sense_doppler,
                                            cfg.include_mainlobe);
    ProblemSpec spec;
    spec.ctx = &ctx;
    spec.eta = cfg.ber.eta;
    spec.p_max = cfg.problem.p_max_linear();
    spec.xi_min = cfg.xi_min();
    if (spec.eta > 0.0 && spec.eta < 1.0) {
        const Normalizers norm =
            compute_normalizers(ctx, spec.p_max, spec.xi_min, cfg.solver, cfg.multi_start);
        spec.sinr_scale = norm.sinr_scale;
        spec.isl_scale = norm.isl_scale;
    }
    const SolveResult optimized = solve_multistart(spec, cfg.solver, cfg.multi_start);
    const double total_power =
        mainlobe(ctx.power, optimized.state.p_c, optimized.state.x_p);

    std::vector<std::string> outputs;
    Json designs;

    auto run_one = [&](const std::string& label, const Placement& pl, double p_c,
                       const Vector& x_p) {
        BerConfig ber;
        ber.modulation = cfg.ber.modulation;
        ber.snr_grid_db = cfg.ber.snr_grid_db;
        ber.n_trials = cfg.ber.n_trials;
        ber.seed = cfg.seed;
        const BerResult result = run_ber(p_c, x_p, cfg.grid, pl, cfg.channel, ber);
        const std::string name = "ber_" + label + ".csv";
        CsvWriter csv(out_dir / name, {"snr_db", "ber", "ci_low", "ci_high", "n_bits"});
        for (const BerPoint& pt : result.points)
            csv.row({pt.snr_db, pt.ber, pt.ci_low, pt.ci_high,
                     static_cast<double>(pt.n_bits)});
        outputs.push_back(name);
        designs[label] = design_to_json(cfg.grid, pl, p_c, x_p);
    };

    run_one("optimized", placement, optimized.state.p_c, optimized.state.x_p);

    for (PatternKind kind : {PatternKind::cluster, PatternKind::flat}) {
        const Placement base_placement =
            generate_pattern(kind, cfg.grid, placement.pilot_count(), placement.data_count(),
                             cfg.channel.max_delay, cfg.channel.max_doppler);
        const PowerForm base_power = build_power_form(cfg.grid, base_placement);
        Vector shape = initial_pilot_values(kind, base_placement.pilot_count());
        // match the optimized design's total transmit power at the same p_c
        const double pilot_target =
            total_power - optimized.state.p_c * base_power.data_gain;
        if (pilot_target <= 0.0)
            throw std::runtime_error("ber baseline cannot match the total power");
        const double shape_qf = std::real(shape.dot(base_power.pilot_gram * shape));
        shape *= std::sqrt(pilot_target / shape_qf);
        run_one(to_string(kind), base_placement, optimized.state.p_c, shape);
    }

    std::ofstream out(out_dir / "ber_designs.json");
    out << designs.dump(2) << "\n";
    outputs.push_back("ber_designs.json");
    return outputs;
}

inline std::vector<std::string> run_experiment(const std::string& name,
                                               const ExperimentConfig& cfg,
                                               const Json& raw_config,
                                               const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::vector<std::string> outputs;
    try {
        if (name == "optimize") outputs = run_optimize(cfg, out_dir);
        else if (name == "region") outputs = run_region(cfg, out_dir);
        else if (name == "af") outputs = run_af(cfg, out_dir);
        else if (name == "ber") outputs = run_ber_experiment(cfg, out_dir);
        else throw std::invalid_argument("unknown experiment '" + name + "'");
    } catch (const std::exception& err) {
        throw std::runtime_error("experiment '" + name + "' failed: " + err.what());
    }
    write_manifest(out_dir, name, raw_config, cfg.seed, outputs);
    return outputs;
}

}  // namespace dfrc
