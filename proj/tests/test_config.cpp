#include <catch2/catch_amalgamated.hpp>

#include "dfrc/config.hpp"
#include "dfrc/io.hpp"
#include "test_helpers.hpp"

using namespace dfrc;
using Catch::Matchers::WithinRel;

namespace {
Json minimal_config() {
    return Json{{"grid", {{"subcarriers", 4}, {"time_slots", 8}, {"cp_len", 4}}},
                {"placement",
                 {{"pattern", "cluster"}, {"pilot_count", 6}, {"data_count", 8}}},
                {"channel",
                 {{"max_delay", 1},
                  {"max_doppler", 1},
                  {"tap_prob", 0.6},
                  {"tap_var", 1.0},
                  {"noise_var", 0.05}}},
                {"problem", {{"eta", 0.5}, {"p_max_dbm", 30.0}}},
                {"seed", 7}};
}
}  // namespace

TEST_CASE("minimal config parses with defaults", "[config]") {
    const ExperimentConfig cfg = parse_config(minimal_config());
    CHECK(cfg.grid.subcarriers == 4);
    CHECK(cfg.pilot_count == 6);
    CHECK(cfg.sense_delay == 1);           // defaults to the channel span
    CHECK(cfg.solver.admm_max_iters == 500);
    CHECK(cfg.seed == 7);
    CHECK_THAT(cfg.problem.p_max_linear(), WithinRel(1.0, 1e-12));  // 30 dBm = 1 W
    CHECK_THAT(cfg.xi_min(), WithinRel(0.5 * 36.0, 1e-12));
    const Placement p = cfg.make_placement();
    CHECK(p.pilot_count() == 6);
    CHECK(validate_guard(cfg.grid, p, 1, 1));
}

TEST_CASE("unknown keys are rejected at any level", "[config]") {
    Json bad = minimal_config();
    bad["typo_section"] = 1;
    CHECK_THROWS_AS(parse_config(bad), std::invalid_argument);

    Json bad2 = minimal_config();
    bad2["grid"]["subcarrier"] = 4;
    CHECK_THROWS_AS(parse_config(bad2), std::invalid_argument);

    Json bad3 = minimal_config();
    bad3["solver"] = {{"rho", 1.0}, {"momentum", 0.9}};
    CHECK_THROWS_AS(parse_config(bad3), std::invalid_argument);
}

TEST_CASE("ratio form of the placement matches the paper accounting", "[config]") {
    Json j = minimal_config();
    j["grid"] = {{"subcarriers", 8}, {"time_slots", 16}, {"cp_len", 16}};
    j["channel"]["max_delay"] = 7;
    j["channel"]["max_doppler"] = 3;
    j["placement"] = {{"pattern", "cluster"}, {"pilot_ratio", 0.375}, {"guard_ratio", 0.5}};
    const ExperimentConfig cfg = parse_config(j);
    CHECK(cfg.pilot_count == 24);
    CHECK(cfg.data_count == 40);
}

TEST_CASE("explicit placement round trip", "[config]") {
    const GridConfig grid = test::bench_grid();
    const Placement p = test::bench_placement();
    Json j = minimal_config();
    j["placement"] = {{"pilot_cells", p.pilot_cells},
                      {"data_cells", p.data_cells},
                      {"rx_pilot_cells", p.rx_pilot_cells},
                      {"rx_data_cells", p.rx_data_cells}};
    const ExperimentConfig cfg = parse_config(j);
    REQUIRE(cfg.explicit_placement.has_value());
    CHECK(cfg.explicit_placement->pilot_cells == p.pilot_cells);

    const Json serialized = placement_to_json(grid, p);
    const auto [g2, p2] = placement_from_json(serialized);
    CHECK(g2.subcarriers == grid.subcarriers);
    CHECK(p2.data_cells == p.data_cells);
}

TEST_CASE("cross-section validation", "[config]") {
    SECTION("cp must cover the channel delay") {
        Json j = minimal_config();
        j["channel"]["max_delay"] = 5;  // cp_len = 4
        CHECK_THROWS_AS(parse_config(j), std::invalid_argument);
    }
    SECTION("conflicting mainlobe specifications") {
        Json j = minimal_config();
        j["problem"]["xi_min"] = 3.0;
        j["problem"]["xi_min_fraction"] = 0.4;
        CHECK_THROWS_AS(parse_config(j), std::invalid_argument);
    }
    SECTION("bad modulation name") {
        Json j = minimal_config();
        j["ber"] = {{"modulation", "256qam"}};
        CHECK_THROWS_AS(parse_config(j), std::invalid_argument);
    }
}

TEST_CASE("design document round trip", "[config]") {
    Rng rng(3);
    const GridConfig grid = test::bench_grid();
    const Placement p = test::bench_placement();
    const Vector x_p = test::random_cvector(p.pilot_count(), rng);
    const Json j = design_to_json(grid, p, 0.7, x_p);
    const Vector back = vector_from_json(j.at("pilot_symbols"));
    CHECK((back - x_p).norm() == 0.0);
    CHECK(j.at("data_power").get<double>() == 0.7);
}
