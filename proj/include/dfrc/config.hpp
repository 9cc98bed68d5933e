#pragma once

// Experiment configuration document: a JSON file with nested sections for
// the grid, symbol placement, channel model, sensing bins, design problem,
// solver options, and per-experiment settings. Parsing is strict: unknown
// keys anywhere are rejected, and every referenced module invariant is
// validated on load.

#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dfrc/io.hpp"
#include "dfrc/montecarlo.hpp"
#include "dfrc/optimizer.hpp"
#include "dfrc/patterns.hpp"

namespace dfrc {

struct ProblemConfig {
    double eta = 0.5;
    std::vector<double> eta_grid = {0.0, 0.25, 0.5, 0.75, 1.0};
    double p_max_dbm = 30.0;
    // mainlobe floor as a fraction of the reachable mainlobe (MN+N_CP)*P_max,
    // or absolute when xi_min is given explicitly
    double xi_min_fraction = 0.9;
    std::optional<double> xi_min_abs;

    double p_max_linear() const { return std::pow(10.0, (p_max_dbm - 30.0) / 10.0); }
};

struct RegionConfig {
    int baseline_splits = 41;
    bool multi_start = true;
};

struct AfConfig {
    int n_draws = 10000;
};

struct BerExperimentConfig {
    Modulation modulation = Modulation::qpsk;
    std::vector<double> snr_grid_db = {0.0, 4.0, 8.0, 12.0};
    int n_trials = 10000;
    double eta = 1.0;
};

struct ExperimentConfig {
    GridConfig grid;
    // generated placement...
    std::optional<PatternKind> pattern;
    int pilot_count = 0;
    int data_count = 0;
    // ...or explicit cells
    std::optional<Placement> explicit_placement;

    ChannelModel channel;
    int sense_delay = 0;
    int sense_doppler = 0;
    bool include_mainlobe = false;

    ProblemConfig problem;
    SolverOptions solver;
    bool multi_start = true;
    RegionConfig region;
    AfConfig af;
    BerExperimentConfig ber;
    std::uint64_t seed = 1;

    Placement make_placement() const {
        if (explicit_placement) return *explicit_placement;
        return generate_pattern(*pattern, grid, pilot_count, data_count, channel.max_delay,
                                channel.max_doppler);
    }

    double xi_min() const {
        if (problem.xi_min_abs) return *problem.xi_min_abs;
        return problem.xi_min_fraction * problem.p_max_linear() * grid.frame_len();
    }
};

namespace detail {

inline void require_keys(const Json& j, const std::string& section,
                         const std::set<std::string>& known) {
    if (!j.is_object()) throw std::invalid_argument("config: " + section + " must be an object");
    for (const auto& item : j.items())
        if (!known.count(item.key()))
            throw std::invalid_argument("config: unknown key '" + item.key() + "' in " +
                                        section);
}

template <class T>
T get_or(const Json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    return j.at(key).get<T>();
}

}  // namespace detail

inline ExperimentConfig parse_config(const Json& root) {
    detail::require_keys(root, "top level",
                         {"grid", "placement", "channel", "sensing", "problem", "solver",
                          "region", "af", "ber", "seed"});
    ExperimentConfig cfg;

    const Json& grid = root.at("grid");
    detail::require_keys(grid, "grid", {"subcarriers", "time_slots", "cp_len"});
    cfg.grid = grid_from_json(grid);

    const Json& placement = root.at("placement");
    detail::require_keys(placement, "placement",
                         {"pattern", "pilot_count", "data_count", "pilot_ratio",
                          "guard_ratio", "pilot_cells", "data_cells", "rx_pilot_cells",
                          "rx_data_cells"});
    if (placement.contains("pilot_cells")) {
        Placement p;
        p.pilot_cells = placement.at("pilot_cells").get<CellList>();
        p.data_cells = placement.at("data_cells").get<CellList>();
        p.rx_pilot_cells = placement.at("rx_pilot_cells").get<CellList>();
        p.rx_data_cells = placement.at("rx_data_cells").get<CellList>();
        p.validate(cfg.grid);
        cfg.explicit_placement = p;
    } else {
        cfg.pattern = pattern_kind_from_string(
            detail::get_or<std::string>(placement, "pattern", "cluster"));
        if (placement.contains("pilot_ratio") || placement.contains("guard_ratio")) {
            if (placement.contains("pilot_count") || placement.contains("data_count"))
                throw std::invalid_argument(
                    "config: give either symbol counts or ratios, not both");
            const double r_gi = placement.at("guard_ratio").get<double>();
            const double r_pilot = placement.at("pilot_ratio").get<double>();
            const int used = cfg.grid.grid_size() -
                             static_cast<int>(std::lround(r_gi * cfg.grid.grid_size()));
            cfg.pilot_count = static_cast<int>(std::lround(r_pilot * used));
            cfg.data_count = used - cfg.pilot_count;
        } else {
            cfg.pilot_count = placement.at("pilot_count").get<int>();
            cfg.data_count = placement.at("data_count").get<int>();
        }
    }

    const Json& channel = root.at("channel");
    detail::require_keys(channel, "channel",
                         {"max_delay", "max_doppler", "tap_prob", "tap_var", "noise_var"});
    cfg.channel.max_delay = channel.at("max_delay").get<int>();
    cfg.channel.max_doppler = channel.at("max_doppler").get<int>();
    cfg.channel.tap_prob = channel.at("tap_prob").get<double>();
    cfg.channel.tap_var = detail::get_or(channel, "tap_var", 1.0);
    cfg.channel.noise_var = channel.at("noise_var").get<double>();
    cfg.channel.validate();

    cfg.sense_delay = cfg.channel.max_delay;
    cfg.sense_doppler = cfg.channel.max_doppler;
    if (root.contains("sensing")) {
        const Json& sensing = root.at("sensing");
        detail::require_keys(sensing, "sensing",
                             {"max_delay", "max_doppler", "include_mainlobe"});
        cfg.sense_delay = detail::get_or(sensing, "max_delay", cfg.sense_delay);
        cfg.sense_doppler = detail::get_or(sensing, "max_doppler", cfg.sense_doppler);
        cfg.include_mainlobe = detail::get_or(sensing, "include_mainlobe", false);
    }

    const Json& problem = root.at("problem");
    detail::require_keys(problem, "problem",
                         {"eta", "eta_grid", "p_max_dbm", "xi_min", "xi_min_fraction"});
    cfg.problem.eta = detail::get_or(problem, "eta", 0.5);
    cfg.problem.eta_grid =
        detail::get_or(problem, "eta_grid", std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
    cfg.problem.p_max_dbm = detail::get_or(problem, "p_max_dbm", 30.0);
    if (problem.contains("xi_min") && problem.contains("xi_min_fraction"))
        throw std::invalid_argument("config: give xi_min or xi_min_fraction, not both");
    if (problem.contains("xi_min")) cfg.problem.xi_min_abs = problem.at("xi_min").get<double>();
    cfg.problem.xi_min_fraction = detail::get_or(problem, "xi_min_fraction", 0.9);

    if (root.contains("solver")) {
        const Json& solver = root.at("solver");
        detail::require_keys(solver, "solver",
                             {"rho", "zeta", "ao_max_iters", "admm_max_iters",
                              "sca_max_iters", "eps_obj", "eps_consensus", "eps_power",
                              "adapt_rho", "push_period", "init_pattern", "multi_start"});
        cfg.solver.rho = detail::get_or(solver, "rho", 1.0);
        cfg.solver.zeta = detail::get_or(solver, "zeta", 1.0);
        cfg.solver.ao_max_iters = detail::get_or(solver, "ao_max_iters", 30);
        cfg.solver.admm_max_iters = detail::get_or(solver, "admm_max_iters", 500);
        cfg.solver.sca_max_iters = detail::get_or(solver, "sca_max_iters", 5);
        cfg.solver.eps_obj = detail::get_or(solver, "eps_obj", 1e-7);
        cfg.solver.eps_consensus = detail::get_or(solver, "eps_consensus", 1e-6);
        cfg.solver.eps_power = detail::get_or(solver, "eps_power", 1e-10);
        cfg.solver.adapt_rho = detail::get_or(solver, "adapt_rho", true);
        cfg.solver.push_period = detail::get_or(solver, "push_period", 25);
        cfg.solver.init_pattern = [&] {
            const std::string name =
                detail::get_or<std::string>(solver, "init_pattern", "flat");
            if (name == "custom") return InitPattern::custom;
            switch (pattern_kind_from_string(name)) {
                case PatternKind::spike: return InitPattern::spike;
                case PatternKind::cluster: return InitPattern::cluster;
                default: return InitPattern::flat;
            }
        }();
        cfg.multi_start = detail::get_or(solver, "multi_start", true);
        cfg.solver.validate();
    }

    if (root.contains("region")) {
        const Json& region = root.at("region");
        detail::require_keys(region, "region", {"baseline_splits", "multi_start"});
        cfg.region.baseline_splits = detail::get_or(region, "baseline_splits", 41);
        cfg.region.multi_start = detail::get_or(region, "multi_start", true);
        if (cfg.region.baseline_splits < 2)
            throw std::invalid_argument("config: region.baseline_splits must be >= 2");
    }

    if (root.contains("af")) {
        const Json& af = root.at("af");
        detail::require_keys(af, "af", {"n_draws"});
        cfg.af.n_draws = detail::get_or(af, "n_draws", 10000);
        if (cfg.af.n_draws < 1) throw std::invalid_argument("config: af.n_draws >= 1");
    }

    if (root.contains("ber")) {
        const Json& ber = root.at("ber");
        detail::require_keys(ber, "ber", {"modulation", "snr_grid_db", "n_trials", "eta"});
        const std::string mod = detail::get_or<std::string>(ber, "modulation", "qpsk");
        if (mod == "qpsk") cfg.ber.modulation = Modulation::qpsk;
        else if (mod == "16qam" || mod == "qam16") cfg.ber.modulation = Modulation::qam16;
        else throw std::invalid_argument("config: unknown modulation '" + mod + "'");
        cfg.ber.snr_grid_db = detail::get_or(ber, "snr_grid_db",
                                             std::vector<double>{0.0, 4.0, 8.0, 12.0});
        cfg.ber.n_trials = detail::get_or(ber, "n_trials", 10000);
        cfg.ber.eta = detail::get_or(ber, "eta", 1.0);
        if (cfg.ber.n_trials < 1) throw std::invalid_argument("config: ber.n_trials >= 1");
        if (cfg.ber.snr_grid_db.empty())
            throw std::invalid_argument("config: ber.snr_grid_db must not be empty");
    }

    cfg.seed = detail::get_or<std::uint64_t>(root, "seed", 1);

    // cross-checks spanning sections
    if (!cfg.explicit_placement && cfg.pilot_count < 1)
        throw std::invalid_argument("config: placement needs at least one pilot");
    if (cfg.channel.max_delay >= cfg.grid.grid_size())
        throw std::invalid_argument("config: channel delay span exceeds the grid");
    if (cfg.grid.cp_len < cfg.channel.max_delay)
        throw std::invalid_argument("config: cp_len must cover the maximum channel delay");
    if (cfg.sense_delay >= cfg.grid.frame_len())
        throw std::invalid_argument("config: sensing delay span exceeds the frame");
    return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path.string());
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::parse_error& err) {
        throw std::runtime_error("config parse error in " + path.string() + ": " +
                                 err.what());
    }
    return parse_config(j);
}

}  // namespace dfrc
