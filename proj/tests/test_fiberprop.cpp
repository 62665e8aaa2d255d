#include <doctest.h>

#include <cmath>
#include <limits>

#include "pairlink/errors.hpp"
#include "pairlink/fiberprop.hpp"
#include "pairlink/units.hpp"

using namespace pairlink;

TEST_CASE("v-number of the default fiber")
{
    // 810 nm: multimode regime
    const double v810 = v_number(4.1, 0.14, 810.0);
    CHECK(v810 == doctest::Approx(4.45).epsilon(0.01));
    CHECK(std::abs(v810 - 4.3) / 4.3 < 0.05);

    // 1550 nm: single-mode regime
    const double v1550 = v_number(4.1, 0.14, 1550.0);
    CHECK(v1550 == doctest::Approx(2.33).epsilon(0.01));
    CHECK(v1550 < kLp11CutoffV);

    CHECK(v_number(4.1, 0.0, 810.0) == 0.0);
    CHECK_THROWS_AS(v_number(4.1, 0.14, 0.0), std::domain_error);
}

TEST_CASE("v-number is decreasing in wavelength and linear in radius and NA")
{
    double previous = std::numeric_limits<double>::infinity();
    for (double wl = 400.0; wl <= 1700.0; wl += 50.0) {
        const double v = v_number(4.1, 0.14, wl);
        CHECK(v < previous);
        previous = v;
    }
    const double base = v_number(4.1, 0.14, 810.0);
    CHECK(v_number(8.2, 0.14, 810.0) == doctest::Approx(2.0 * base));
    CHECK(v_number(4.1, 0.28, 810.0) == doctest::Approx(2.0 * base));
}

TEST_CASE("guided modes against the step-index cutoffs")
{
    using M = ModeId;
    CHECK(guided_lp_modes(2.0, ModeSetPolicy::CutoffDerived)
          == std::vector<M> { M::LP01 });
    CHECK(guided_lp_modes(2.0, ModeSetPolicy::PaperTwoMode)
          == std::vector<M> { M::LP01 });
    CHECK(guided_lp_modes(3.0, ModeSetPolicy::CutoffDerived)
          == std::vector<M> { M::LP01, M::LP11 });
    CHECK(guided_lp_modes(4.45, ModeSetPolicy::CutoffDerived)
          == std::vector<M> { M::LP01, M::LP11, M::LP21, M::LP02 });
    CHECK(guided_lp_modes(4.3, ModeSetPolicy::PaperTwoMode)
          == std::vector<M> { M::LP01, M::LP11 });
}

TEST_CASE("transmission arithmetic")
{
    FiberSpec fiber;
    CHECK(transmission_db(fiber, 810.0, 12.0).db == 36.0);
    CHECK(transmission_db(fiber, 1550.0, 6.0).db == doctest::Approx(1.32));
    CHECK(transmission_db(fiber, 810.0, 0.0).db == 0.0);
}

TEST_CASE("default attenuation table anchor values")
{
    FiberSpec fiber;
    CHECK(attenuation_db_per_km(fiber, 810.0).db == 3.0);
    CHECK(attenuation_db_per_km(fiber, 1550.0).db == doctest::Approx(0.22));
    CHECK_FALSE(attenuation_db_per_km(fiber, 810.0).extrapolated);
}

TEST_CASE("attenuation interpolation and extrapolation flag")
{
    FiberSpec fiber;
    fiber.attenuation_table = { { 800.0, 3.0 }, { 1000.0, 1.0 } };
    CHECK(attenuation_db_per_km(fiber, 900.0).db == doctest::Approx(2.0));
    CHECK_FALSE(attenuation_db_per_km(fiber, 900.0).extrapolated);

    const LossResult below = attenuation_db_per_km(fiber, 700.0);
    CHECK(below.extrapolated);
    CHECK(below.db == doctest::Approx(4.0)); // edge slope continued

    const LossResult above = attenuation_db_per_km(fiber, 1200.0);
    CHECK(above.extrapolated);
    CHECK(above.db >= 0.0); // clamped at zero
}

TEST_CASE("base and modal delays")
{
    FiberSpec fiber;
    fiber.length_km = 6.0;
    fiber.group_index = 1.47;
    // L * n_g / c = 29.4 us
    CHECK(base_group_delay_ps(fiber) == doctest::Approx(2.942e7).epsilon(1e-3));
    fiber.dgd_ns_per_km = 2.0;
    CHECK(lp11_extra_delay_ps(fiber) == doctest::Approx(12000.0));
}

TEST_CASE("propagate samples modes and survival as configured")
{
    FiberSpec fiber;
    fiber.length_km = 0.0; // lossless
    fiber.lp11_excitation = 0.0;
    Rng rng(31);
    for (int i = 0; i < 1000; ++i) {
        const auto transit = propagate(0.0, 810.0, fiber, rng);
        REQUIRE(transit.has_value());
        CHECK(transit->mode == ModeId::LP01);
    }

    fiber.lp11_excitation = 1.0;
    fiber.length_km = 6.0;
    fiber.dgd_ns_per_km = 2.0;
    Rng rng2(32);
    int survivors = 0;
    for (int i = 0; i < 20000; ++i) {
        const auto transit = propagate(0.0, 810.0, fiber, rng2);
        if (!transit)
            continue;
        ++survivors;
        CHECK(transit->mode == ModeId::LP11);
        CHECK(transit->arrival_time_ps
              == doctest::Approx(base_group_delay_ps(fiber) + 12000.0));
    }
    CHECK(survivors > 0);
}

TEST_CASE("survival frequency matches the dB budget")
{
    FiberSpec fiber;
    fiber.length_km = 12.0; // 36 dB at 810 nm
    Rng rng(33);
    const int n = 1000000;
    int survived = 0;
    for (int i = 0; i < n; ++i)
        if (propagate(0.0, 810.0, fiber, rng))
            ++survived;
    const double p = db_loss_to_transmittance(36.0); // 2.51e-4
    CHECK(std::abs(double(survived) / n - p)
          < 3.0 * std::sqrt(p * (1.0 - p) / n));
}

TEST_CASE("propagation is seed-stable")
{
    FiberSpec fiber;
    fiber.length_km = 2.0;
    fiber.lp11_excitation = 0.2;
    Rng rng_a(55), rng_b(55);
    for (int i = 0; i < 5000; ++i) {
        const auto a = propagate(double(i), 810.0, fiber, rng_a);
        const auto b = propagate(double(i), 810.0, fiber, rng_b);
        CHECK(a.has_value() == b.has_value());
        if (a && b) {
            CHECK(a->arrival_time_ps == b->arrival_time_ps);
            CHECK(a->mode == b->mode);
        }
    }
}

TEST_CASE("pair-event propagation fills the arrival record")
{
    const PolarizationModel pol;
    PairEvent pair;
    pair.emission_time_ps = 12345.0;
    pair.signal_wavelength_nm = 774.0;
    pair.idler_wavelength_nm = 849.5;
    pair.polarization = &pol;

    FiberSpec fiber;
    fiber.length_km = 1.0;
    Rng rng(66);
    int seen = 0;
    for (int i = 0; i < 2000 && seen < 50; ++i) {
        const auto arrival = propagate(pair, false, Arm::B, 7, fiber, rng);
        if (!arrival)
            continue;
        ++seen;
        CHECK(arrival->wavelength_nm == 849.5);
        CHECK(arrival->arm == Arm::B);
        CHECK(arrival->pair_id == 7);
        CHECK(arrival->polarization == &pol);
        CHECK(arrival->arrival_time_ps >= pair.emission_time_ps);
    }
    CHECK(seen == 50);
}

TEST_CASE("fiber transport survival cap bounds the exact survival")
{
    FiberSpec fiber;
    fiber.length_km = 6.0;
    const FiberTransport transport(fiber);
    const double cap = transport.survival_cap_over(780.0, 840.0);
    for (double wl = 780.0; wl <= 840.0; wl += 1.0)
        CHECK(transport.survival(wl) <= cap + 1e-15);
}

TEST_CASE("fiber spec validation")
{
    FiberSpec fiber;
    CHECK_NOTHROW(fiber.validate());
    fiber.lp11_excitation = 1.5;
    CHECK_THROWS_AS(fiber.validate(), ConfigError);
    fiber = FiberSpec {};
    fiber.length_km = -1.0;
    CHECK_THROWS_AS(fiber.validate(), ConfigError);
    fiber = FiberSpec {};
    fiber.attenuation_table = { { 810.0, 3.0 }, { 800.0, 3.0 } };
    CHECK_THROWS_AS(fiber.validate(), ConfigError);
}
