#include <catch2/catch_amalgamated.hpp>

#include "dfrc/channel.hpp"
#include "test_helpers.hpp"

using namespace dfrc;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("channel sampling statistics", "[channel]") {
    ChannelModel model = test::bench_model();

    SECTION("inactive when tap_prob is zero") {
        model.tap_prob = 0.0;
        Rng rng(5);
        for (int t = 0; t < 20; ++t) {
            const auto ch = sample_channel(model, rng);
            CHECK(ch.gains.norm() == 0.0);
        }
    }

    SECTION("per-tap variance at tap_prob one") {
        model.tap_prob = 1.0;
        model.tap_var = 2.0;
        Rng root(17);
        double acc = 0.0;
        const int trials = 100000;
        for (int t = 0; t < trials; ++t) {
            Rng rng = root.substream(t);
            acc += sample_channel(model, rng).gains.squaredNorm();
        }
        const double per_tap = acc / trials / model.tap_count();
        CHECK_THAT(per_tap, WithinRel(model.tap_var, 0.03));
    }

    SECTION("activity rate") {
        model.tap_prob = 0.5;
        Rng root(23);
        long long active = 0, total = 0;
        for (int t = 0; t < 100000; ++t) {
            Rng rng = root.substream(t);
            const auto ch = sample_channel(model, rng);
            for (bool a : ch.active) active += a ? 1 : 0;
            total += model.tap_count();
        }
        CHECK_THAT(static_cast<double>(active) / total, WithinAbs(0.5, 0.005));
    }

    SECTION("reproducible under a fixed seed") {
        Rng a(99), b(99);
        const auto ca = sample_channel(model, a);
        const auto cb = sample_channel(model, b);
        CHECK(ca.gains == cb.gains);
    }
}

TEST_CASE("single-tap identity channel", "[channel]") {
    const GridConfig cfg{3, 4, 0};
    ChannelModel model;
    model.max_delay = 0;
    model.max_doppler = 0;
    ChannelRealization ch;
    ch.gains = Vector::Ones(1);
    ch.active = {true};
    CHECK(effective_channel(cfg, model, ch).isApprox(Matrix::Identity(12, 12), 1e-12));
}

TEST_CASE("effective channel preserves tap energy", "[channel]") {
    const GridConfig cfg = test::bench_grid();
    const ChannelModel model = test::bench_model();
    Rng root(31);
    for (int t = 0; t < 10; ++t) {
        Rng rng = root.substream(t);
        const auto ch = sample_channel(model, rng);
        const Matrix h = time_channel(cfg, model, ch);
        const Matrix hdd = effective_channel(cfg, model, ch);
        CHECK_THAT(hdd.norm(), WithinAbs(h.norm(), 1e-10));
        // distinct integer taps are orthogonal: ||H||_F^2 = MN sum |alpha|^2
        CHECK_THAT(h.squaredNorm(), WithinRel(cfg.grid_size() * ch.gains.squaredNorm(),
                                              1e-10));
    }
}

TEST_CASE("pilot dictionary matches the projected channel", "[channel]") {
    const GridConfig cfg = test::bench_grid();
    const Placement placement = test::bench_placement();
    const ChannelModel model = test::bench_model();
    const TapBasis basis = build_tap_basis(cfg, placement, model);
    const PilotDictionary dict = build_pilot_dictionary(placement, model, basis);

    Rng root(41);
    for (int t = 0; t < 10; ++t) {
        Rng rng = root.substream(t);
        const auto ch = sample_channel(model, rng);
        const Vector x_p = test::random_cvector(placement.pilot_count(), rng);
        const Matrix hdd = effective_channel(cfg, model, ch);
        const Vector lhs = select_rows(hdd, placement.rx_pilot_cells) *
                           scatter(x_p, placement.pilot_cells, cfg.grid_size());
        const Vector rhs = dict.observe(x_p) * ch.gains;
        REQUIRE((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("dictionary factorization is linear in the pilots", "[channel]") {
    const GridConfig cfg = test::bench_grid();
    const Placement placement = test::bench_placement();
    const ChannelModel model = test::bench_model();
    const PilotDictionary dict = build_pilot_dictionary(cfg, placement, model);
    Rng rng(43);
    for (int t = 0; t < 50; ++t) {
        const Vector x = test::random_cvector(placement.pilot_count(), rng);
        const Vector y = test::random_cvector(placement.pilot_count(), rng);
        const Matrix sum = dict.observe(x + y);
        CHECK((sum - dict.observe(x) - dict.observe(y)).cwiseAbs().maxCoeff() < 1e-11);
        // block-i contraction identity
        for (int b = 0; b < dict.tap_count; ++b) {
            const Vector col =
                dict.extended.middleCols(static_cast<Eigen::Index>(b) * dict.pilot_count,
                                         dict.pilot_count) * x;
            CHECK((dict.observe(x).col(b) - col).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
}

TEST_CASE("lmmse estimate basics", "[channel]") {
    const GridConfig cfg = test::bench_grid();
    const Placement placement = test::bench_placement();
    const ChannelModel model = test::bench_model();
    const PilotDictionary dict = build_pilot_dictionary(cfg, placement, model);
    Rng rng(47);
    const Vector x_p = test::random_cvector(placement.pilot_count(), rng) * 2.0;
    const Matrix omega = dict.observe(x_p);

    SECTION("zero observation gives zero estimate") {
        const Vector h = lmmse_estimate(omega, Vector::Zero(omega.rows()), model);
        CHECK(h.norm() == 0.0);
    }

    SECTION("noiseless limit recovers the channel") {
        ChannelModel clean = model;
        clean.noise_var = 1e-12;
        Rng crng(53);
        const auto ch = sample_channel(model, crng);
        const Vector h = lmmse_estimate(omega, omega * ch.gains, clean);
        REQUIRE(ch.gains.norm() > 0.0);
        CHECK((h - ch.gains).norm() / ch.gains.norm() < 1e-4);
    }

    SECTION("rejects a zero prior") {
        ChannelModel bad = model;
        bad.tap_prob = 0.0;
        CHECK_THROWS_AS(lmmse_estimate(omega, Vector::Zero(omega.rows()), bad),
                        std::invalid_argument);
    }
}

TEST_CASE("lmmse error statistics match the analytic trace", "[channel]") {
    const GridConfig cfg = test::bench_grid();
    const Placement placement = test::bench_placement();
    const ChannelModel model = test::bench_model();
    const PilotDictionary dict = build_pilot_dictionary(cfg, placement, model);
    Rng seedr(59);
    const Vector x_p = test::random_cvector(placement.pilot_count(), seedr);
    const Matrix omega = dict.observe(x_p);
    const Matrix gain = lmmse_gain(omega, model);

    const Eigen::Index kh = model.tap_count();
    Matrix normal = Matrix::Identity(kh, kh) +
                    (model.prior_var() / model.noise_var) * (omega.adjoint() * omega);
    const double analytic_mse =
        model.prior_var() * normal.llt().solve(Matrix::Identity(kh, kh)).real().trace();

    Rng root(61);
    double mse = 0.0;
    Matrix cross = Matrix::Zero(kh, kh);  // E[(h - h_hat) h_hat^H]
    const int trials = 10000;
    for (int t = 0; t < trials; ++t) {
        Rng rng = root.substream(t);
        const auto ch = sample_channel(model, rng);
        Vector y = omega * ch.gains;
        for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += rng.cgaussian(model.noise_var);
        const Vector h_hat = gain * y;
        mse += (ch.gains - h_hat).squaredNorm();
        cross += (ch.gains - h_hat) * h_hat.adjoint();
    }
    mse /= trials;
    cross /= trials;
    CHECK_THAT(mse, WithinRel(analytic_mse, 0.05));
    // residual orthogonality: entries vanish within Monte Carlo error
    CHECK(cross.cwiseAbs().maxCoeff() < 3.0 * model.prior_var() / std::sqrt(trials) * 10);
}

TEST_CASE("estimated effective channels reconstruct linearly", "[channel]") {
    const GridConfig cfg = test::bench_grid();
    const Placement placement = test::bench_placement();
    const ChannelModel model = test::bench_model();
    const TapBasis basis = build_tap_basis(cfg, placement, model);

    SECTION("first tap gives the identity") {
        Vector e1 = Vector::Zero(model.tap_count());
        e1(0) = 1.0;
        const auto est = estimated_effective_channels(basis, e1);
        CHECK(est.dd.isApprox(Matrix::Identity(cfg.grid_size(), cfg.grid_size()), 1e-12));
    }

    SECTION("linearity") {
        Rng rng(67);
        const Vector a = test::random_cvector(model.tap_count(), rng);
        const Vector b = test::random_cvector(model.tap_count(), rng);
        const auto ea = estimated_effective_channels(basis, a);
        const auto eb = estimated_effective_channels(basis, b);
        const auto eab = estimated_effective_channels(basis, a + b);
        CHECK((eab.dd - ea.dd - eb.dd).cwiseAbs().maxCoeff() < 1e-11);
        CHECK((eab.data - ea.data - eb.data).cwiseAbs().maxCoeff() < 1e-11);
    }

    SECTION("true taps reproduce the projected true channel") {
        Rng rng(71);
        const auto ch = sample_channel(model, rng);
        const auto est = estimated_effective_channels(basis, ch.gains);
        const Matrix hdd = effective_channel(cfg, model, ch);
        const Matrix hc = select_block(hdd, placement.rx_data_cells, placement.data_cells);
        CHECK((est.data - hc).cwiseAbs().maxCoeff() < 1e-10);
    }
}
