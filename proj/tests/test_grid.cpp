#include <catch2/catch_amalgamated.hpp>

#include "dfrc/grid.hpp"
#include "test_helpers.hpp"

using namespace dfrc;
using Catch::Matchers::WithinAbs;

TEST_CASE("doppler DFT factor degenerate and small grids", "[grid]") {
    CHECK(doppler_dft({1, 1, 0}).isApprox(Matrix::Identity(1, 1), 1e-14));

    const Matrix f2 = doppler_dft({1, 2, 0});
    const double r = 1.0 / std::sqrt(2.0);
    CHECK_THAT(std::real(f2(0, 0)), WithinAbs(r, 1e-14));
    CHECK_THAT(std::real(f2(0, 1)), WithinAbs(r, 1e-14));
    CHECK_THAT(std::real(f2(1, 0)), WithinAbs(r, 1e-14));
    CHECK_THAT(std::real(f2(1, 1)), WithinAbs(-r, 1e-14));

    const Matrix f22 = doppler_dft({2, 2, 0});
    CHECK((f22 * f22.adjoint()).isApprox(Matrix::Identity(4, 4), 1e-13));
}

TEST_CASE("doppler DFT factor is unitary up to MN = 256", "[grid]") {
    for (const GridConfig cfg : {GridConfig{4, 8, 0}, GridConfig{8, 16, 16},
                                 GridConfig{16, 16, 0}}) {
        const Matrix u = doppler_dft(cfg);
        const Matrix err =
            u * u.adjoint() - Matrix::Identity(cfg.grid_size(), cfg.grid_size());
        CHECK(err.cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("shift operators on the smallest cycles", "[grid]") {
    const GridConfig two{1, 2, 0};
    const Matrix pi2 = cyclic_delay(two);
    CHECK_THAT(std::real(pi2(0, 1)), WithinAbs(1.0, 1e-15));
    CHECK_THAT(std::real(pi2(1, 0)), WithinAbs(1.0, 1e-15));
    CHECK_THAT(std::abs(pi2(0, 0)) + std::abs(pi2(1, 1)), WithinAbs(0.0, 1e-15));
    const Vector d2 = doppler_ramp(two);
    CHECK_THAT(std::abs(d2(0) - Complex(1, 0)), WithinAbs(0.0, 1e-15));
    CHECK_THAT(std::abs(d2(1) - Complex(-1, 0)), WithinAbs(0.0, 1e-15));

    const GridConfig four{2, 2, 0};
    Matrix pi4 = cyclic_delay(four);
    CHECK((pi4 * pi4 * pi4 * pi4).isApprox(Matrix::Identity(4, 4), 1e-14));
    const Vector d4 = doppler_ramp(four);
    CHECK_THAT(std::abs(d4(0) - Complex(1, 0)), WithinAbs(0.0, 1e-15));
    CHECK_THAT(std::abs(d4(1) - Complex(0, 1)), WithinAbs(0.0, 1e-15));
    CHECK_THAT(std::abs(d4(2) - Complex(-1, 0)), WithinAbs(0.0, 1e-15));
    CHECK_THAT(std::abs(d4(3) - Complex(0, -1)), WithinAbs(0.0, 1e-15));
}

TEST_CASE("cp matrix prepends the frame tail", "[grid]") {
    CHECK(cp_matrix({2, 2, 0}).isApprox(RealMatrix::Identity(4, 4), 1e-15));

    const GridConfig cfg{2, 2, 1};  // MN=4, one prefix sample
    const RealMatrix g = cp_matrix(cfg);
    REQUIRE(g.rows() == 5);
    Rng rng(3);
    Vector x = test::random_cvector(4, rng);
    const Vector gx = g * x;
    CHECK_THAT(std::abs(gx(0) - x(3)), WithinAbs(0.0, 1e-15));
    for (int i = 0; i < 4; ++i) CHECK_THAT(std::abs(gx(i + 1) - x(i)), WithinAbs(0.0, 1e-15));

    const RealMatrix gtg = g.transpose() * g;
    RealVector expected(4);
    expected << 1, 1, 1, 2;
    CHECK(gtg.diagonal().isApprox(expected, 1e-15));
    CHECK((gtg - RealMatrix(gtg.diagonal().asDiagonal())).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("dd shift is a unit-phase permutation of the grid", "[grid]") {
    const GridConfig cfg{3, 4, 0};
    for (int i : {0, 1, 2}) {
        for (int j : {0, 1, 3}) {
            const Matrix t = dd_shift(cfg, i, j);
            for (CellIndex c = 0; c < cfg.grid_size(); ++c) {
                const CellIndex dest = cfg.cell((cfg.delay_of(c) + i) % 3,
                                                (cfg.doppler_of(c) + j) % 4);
                int nonzero = 0;
                for (CellIndex r = 0; r < cfg.grid_size(); ++r) {
                    if (std::abs(t(r, c)) > 1e-9) {
                        ++nonzero;
                        CHECK(r == dest);
                        CHECK_THAT(std::abs(t(r, c)), WithinAbs(1.0, 1e-12));
                    }
                }
                CHECK(nonzero == 1);
            }
        }
    }
}

TEST_CASE("guard validation flags zero-shift overlap", "[grid]") {
    const GridConfig cfg{2, 2, 0};
    Placement p;
    p.pilot_cells = {0};
    p.data_cells = {1};
    p.rx_pilot_cells = {0};
    p.rx_data_cells = {0};  // data receiver listens on the pilot cell
    const auto violations = guard_violations(cfg, p, 0, 0);
    REQUIRE_FALSE(violations.empty());
    CHECK(violations[0].delay == 0);
    CHECK(violations[0].doppler == 0);
}

TEST_CASE("guard validation accepts a spike with a full ring", "[grid]") {
    const GridConfig cfg{4, 8, 0};
    Placement p;
    p.pilot_cells = {cfg.cell(1, 1)};
    // data outside the (2L+1)x(2Q+1) = 3x3 ring around (1,1)
    for (int n = 4; n < 7; ++n)
        for (int m = 0; m < 4; ++m) p.data_cells.push_back(cfg.cell(m, n));
    for (int i = 0; i <= 1; ++i)
        for (int j = 0; j <= 1; ++j) {
            p.rx_pilot_cells.push_back(cfg.cell((1 + i) % 4, (1 + j) % 8));
        }
    std::vector<bool> seen(cfg.grid_size(), false);
    for (CellIndex c : p.data_cells)
        for (int i = 0; i <= 1; ++i)
            for (int j = 0; j <= 1; ++j) {
                const CellIndex r =
                    cfg.cell((cfg.delay_of(c) + i) % 4, (cfg.doppler_of(c) + j) % 8);
                if (!seen[r]) {
                    seen[r] = true;
                    p.rx_data_cells.push_back(r);
                }
            }
    CHECK(validate_guard(cfg, p, 1, 1));
}

TEST_CASE("guard validation is vacuous without pilots", "[grid]") {
    const GridConfig cfg{2, 4, 0};
    Placement p;
    p.data_cells = {0, 1, 2};
    p.rx_data_cells = {0, 1, 2, 3};
    CHECK(validate_guard(cfg, p, 1, 1));
}

TEST_CASE("bench placement is guard valid", "[grid]") {
    CHECK(validate_guard(test::bench_grid(), test::bench_placement(), 1, 1));
}
