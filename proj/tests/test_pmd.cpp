#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "fiberlink/pmd.hpp"

using namespace fiberlink;

TEST_CASE("single segment eigenstates") {
    PmdParams p;
    p.mean_dgd_ps = 5.0;
    p.n_waveplate_segments = 1;
    p.diurnal_modulation_depth = 0.0;
    PmdModel model(p, 11);

    const auto tau = model.pmd_vector(0.0);
    const double dgd = model.dgd_s(0.0);
    CHECK(dgd == Catch::Approx(5e-12).epsilon(1e-9));

    StokesVector fast{tau[0] / dgd, tau[1] / dgd, tau[2] / dgd};
    StokesVector slow{-fast.s1, -fast.s2, -fast.s3};
    CHECK(model.delay_seconds(fast, 0.0) == Catch::Approx(-dgd / 2.0).epsilon(1e-9));
    CHECK(model.delay_seconds(slow, 0.0) == Catch::Approx(dgd / 2.0).epsilon(1e-9));
}

TEST_CASE("zero DGD gives zero delay for all states") {
    PmdParams p;
    p.mean_dgd_ps = 0.0;
    PmdModel model(p, 11);
    std::mt19937_64 gen(5);
    std::normal_distribution<double> nd;
    for (int i = 0; i < 32; ++i) {
        double a = nd(gen), b = nd(gen), c = nd(gen);
        const double r = std::sqrt(a * a + b * b + c * c);
        CHECK(model.delay_seconds({a / r, b / r, c / r}, i * 1000.0) == 0.0);
    }
}

TEST_CASE("input state must be a unit Stokes vector") {
    PmdModel model(PmdParams{}, 11);
    CHECK_THROWS_AS(model.delay_seconds({0.5, 0.0, 0.0}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(model.delay_seconds({1.0, 1.0, 0.0}, 0.0), std::invalid_argument);
}

TEST_CASE("scrambling averages the DGD away") {
    PmdParams p;  // defaults
    PmdModel model(p, 42);

    SECTION("scrambled path returns the polarization-averaged delay") {
        CHECK(model.scrambled_delay_seconds(12345.0) == 0.0);
    }
    SECTION("ensemble mean over random input states matches within MC error") {
        std::mt19937_64 gen(99);
        std::normal_distribution<double> nd;
        const std::size_t k = 2000;
        double mean = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            double a = nd(gen), b = nd(gen), c = nd(gen);
            const double r = std::sqrt(a * a + b * b + c * c);
            mean += model.delay_seconds({a / r, b / r, c / r}, 777.0);
        }
        mean /= static_cast<double>(k);
        // MC error ~ (DGD/2)/sqrt(3k)
        const double mc = 0.5 * model.dgd_s(777.0) / std::sqrt(3.0 * k);
        CHECK(std::abs(mean - model.scrambled_delay_seconds(777.0)) < 4.0 * mc);
    }
    SECTION("scrambler-off wander is near the 4 ps calibration point") {
        StokesVector s{0.0, 1.0, 0.0};
        PmdModel bwd(p, 42, 0x90dbull);
        double mn = 1e9, mx = -1e9;
        for (double t = 0.0; t < 259200.0; t += 60.0) {
            const double d = bwd.delay_seconds(s, t);
            mn = std::min(mn, d);
            mx = std::max(mx, d);
        }
        CHECK((mx - mn) * 1e12 == Catch::Approx(4.0).epsilon(0.5));
        // the scrambled path shows none of it
        CHECK(bwd.scrambled_delay_seconds(0.0) == 0.0);
    }
}

TEST_CASE("model is a pure function of params, seed and time") {
    PmdParams p;
    PmdModel a(p, 17, 3), b(p, 17, 3), c(p, 18, 3);
    StokesVector s{1.0, 0.0, 0.0};
    for (double t : {0.0, 500.0, 86400.0}) {
        CHECK(a.delay_seconds(s, t) == b.delay_seconds(s, t));
    }
    CHECK(a.delay_seconds(s, 100.0) != c.delay_seconds(s, 100.0));
}

TEST_CASE("parameter validation") {
    PmdParams p;
    p.mean_dgd_ps = -1.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = PmdParams{};
    p.n_waveplate_segments = 0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = PmdParams{};
    p.drift_time_constant_s = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
