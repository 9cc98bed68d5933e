#include <catch2/catch_amalgamated.hpp>

#include "dfrc/qp.hpp"
#include "test_helpers.hpp"

using namespace dfrc;
using Catch::Matchers::WithinAbs;

namespace {
QuadObjective random_objective(Eigen::Index n, Rng& rng, double ridge = 0.5) {
    QuadObjective obj;
    Matrix a(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) a(i, j) = rng.cgaussian(1.0);
    obj.quad = a.adjoint() * a + ridge * Matrix::Identity(n, n);
    obj.lin = test::random_cvector(n, rng);
    obj.constant = rng.uniform();
    return obj;
}
}  // namespace

TEST_CASE("kkt solver handles inactive and active slabs", "[qp]") {
    Rng rng(3);
    const auto obj = random_objective(5, rng);
    const Vector q = test::random_cvector(5, rng);

    SECTION("interior optimum is the unconstrained minimizer") {
        const Vector free = obj.quad.llt().solve(-obj.lin);
        const double t = std::real(q.dot(free));
        const SlabConstraint slab{q, t - 1.0, t + 1.0};
        const Vector x = solve_qp_kkt(obj, slab);
        CHECK((x - free).norm() < 1e-10);
    }

    SECTION("active bound is met exactly and is optimal") {
        const Vector free = obj.quad.llt().solve(-obj.lin);
        const double t = std::real(q.dot(free));
        const SlabConstraint slab{q, t + 0.5, t + 1.5};
        const Vector x = solve_qp_kkt(obj, slab);
        CHECK_THAT(slab.evaluate(x), WithinAbs(slab.lo, 1e-9));
        // perturbations inside the slab cannot do better
        Rng prng(7);
        for (int i = 0; i < 200; ++i) {
            Vector d = test::random_cvector(5, prng) * 0.05;
            const Vector y = slab.project(x + d);
            CHECK(qp_value(obj, y) >= qp_value(obj, x) - 1e-9);
        }
    }
}

TEST_CASE("projected gradient matches the kkt solution", "[qp]") {
    Rng rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        const auto obj = random_objective(4, rng);
        const Vector q = test::random_cvector(4, rng);
        const double center = std::real(q.dot(obj.quad.llt().solve(-obj.lin)));
        // alternate between interior, lower-active, and upper-active cases
        double lo = center - 1.0, hi = center + 1.0;
        if (trial % 3 == 1) { lo = center + 0.3; hi = center + 2.0; }
        if (trial % 3 == 2) { lo = center - 2.0; hi = center - 0.3; }
        const SlabConstraint slab{q, lo, hi};
        const Vector xk = solve_qp_kkt(obj, slab);
        const Vector xp = solve_qp_pg(obj, slab, 400000, 1e-15);
        const double base = std::max(1.0, std::abs(qp_value(obj, xk)));
        REQUIRE(std::abs(qp_value(obj, xp) - qp_value(obj, xk)) / base < 1e-8);
    }
}

TEST_CASE("qp rejects malformed inputs", "[qp]") {
    Rng rng(13);
    auto obj = random_objective(3, rng);
    const Vector q = test::random_cvector(3, rng);
    CHECK_THROWS_AS(solve_qp_kkt(obj, SlabConstraint{q, 1.0, 0.0}), std::invalid_argument);
    obj.quad = -Matrix::Identity(3, 3);
    CHECK_THROWS_AS(solve_qp_kkt(obj, SlabConstraint{q, 0.0, 1.0}), std::runtime_error);
}

TEST_CASE("slab projection is idempotent and feasible", "[qp]") {
    Rng rng(17);
    const Vector q = test::random_cvector(6, rng);
    const SlabConstraint slab{q, -0.5, 0.25};
    for (int i = 0; i < 50; ++i) {
        const Vector x = test::random_cvector(6, rng) * 3.0;
        const Vector p = slab.project(x);
        CHECK(slab.feasible(p, 1e-10));
        CHECK((slab.project(p) - p).norm() < 1e-12);
    }
}
