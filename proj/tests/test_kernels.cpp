#include <catch2/catch_amalgamated.hpp>

#include "dfrc/kernels.hpp"
#include "test_helpers.hpp"

using namespace dfrc;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
Vector frame_of(const KernelSet& set, const Vector& x_dd) { return set.time_proj * x_dd; }
}  // namespace

TEST_CASE("identity kernel without prefix", "[kernels]") {
    const GridConfig cfg{2, 2, 0};
    const Matrix a00 = af_kernel_matrix(cfg, 0, 0);
    CHECK(a00.isApprox(Matrix::Identity(4, 4), 1e-13));

    Rng rng(1);
    const Vector x = test::random_cvector(4, rng);
    const Complex f00 = x.dot(a00 * x);
    CHECK_THAT(std::real(f00), WithinRel(x.squaredNorm(), 1e-12));
    CHECK_THAT(std::imag(f00), WithinAbs(0.0, 1e-12));
}

TEST_CASE("zero-bin kernel equals the prefix gram", "[kernels]") {
    const GridConfig cfg = test::bench_grid();
    const Matrix u = doppler_dft(cfg);
    const RealMatrix g = cp_matrix(cfg);
    const Matrix expected = u * (g.transpose() * g).cast<Complex>() * u.adjoint();
    CHECK(af_kernel_matrix(cfg, 0, 0).isApprox(expected, 1e-12));
}

TEST_CASE("lag-one kernel is the linear autocorrelation", "[kernels]") {
    const GridConfig cfg{2, 2, 0};
    Rng rng(7);
    const Vector x = test::random_cvector(4, rng);
    const Vector s = doppler_dft(cfg).adjoint() * x;  // no prefix: B = F^H (x) I
    const Complex via_kernel = x.dot(af_kernel_matrix(cfg, 1, 0) * x);
    Complex direct = 0.0;
    for (int n = 1; n < 4; ++n) direct += std::conj(s(n)) * s(n - 1);
    CHECK_THAT(std::abs(via_kernel - direct), WithinAbs(0.0, 1e-12));
}

TEST_CASE("kernel quadratic form matches the time-domain correlation", "[kernels]") {
    const GridConfig cfg = test::bench_grid();
    const Placement placement = test::bench_placement();
    const KernelSet set = build_kernels(cfg, placement, 2, 2);
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const Vector x = test::random_cvector(cfg.grid_size(), rng);
        const Vector s = frame_of(set, x);
        for (const AFKernel& k : set.bins) {
            const Complex via_matrix = af_value(k, x);
            const Complex via_time = dd_correlation(s, k.delay, k.doppler);
            REQUIRE_THAT(std::abs(via_matrix - via_time), WithinAbs(0.0, 1e-10));
        }
    }
}

TEST_CASE("mirror bins conjugate the correlation", "[kernels]") {
    const GridConfig cfg = test::bench_grid();
    Rng rng(13);
    const Vector x = test::random_cvector(cfg.grid_size(), rng);
    for (int l = 0; l <= 2; ++l) {
        for (int k = -2; k <= 2; ++k) {
            const Complex f = x.dot(af_kernel_matrix(cfg, l, k) * x);
            const Complex fm = x.dot(af_kernel_matrix(cfg, -l, -k) * x);
            REQUIRE_THAT(std::abs(fm - std::conj(f)), WithinAbs(0.0, 1e-11));
        }
    }
}

TEST_CASE("kernel reductions have the stated structure", "[kernels]") {
    const GridConfig cfg = test::bench_grid();
    const Placement placement = test::bench_placement();
    const KernelSet set = build_kernels(cfg, placement, 2, 1);
    for (const AFKernel& k : set.bins) {
        CHECK(k.data_energy >= 0.0);
        CHECK((k.pilot_sq - k.pilot_sq.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
        // a_lk is the squared Frobenius norm of the data block
        const Matrix data_block =
            select_block(k.dd, placement.data_cells, placement.data_cells);
        CHECK_THAT(k.data_energy, WithinAbs(data_block.squaredNorm(), 1e-10));
        CHECK_THAT(std::abs(k.data_trace - data_block.trace()), WithinAbs(0.0, 1e-12));
    }
}

TEST_CASE("kernel set indexing and sidelobe iteration", "[kernels]") {
    const KernelSet set = build_kernels(test::bench_grid(), test::bench_placement(), 2, 1);
    CHECK(set.at(0, 0).delay == 0);
    CHECK(set.at(-2, 1).delay == -2);
    CHECK(set.at(-2, 1).doppler == 1);
    int count = 0;
    set.for_each_sidelobe([&](const AFKernel& k) {
        ++count;
        CHECK((k.delay != 0 || k.doppler != 0));
    });
    CHECK(count == 5 * 3 - 1);
    CHECK_THROWS_AS(set.at(3, 0), std::out_of_range);
}
