#include <doctest.h>

#include <cmath>

#include "pairlink/errors.hpp"
#include "pairlink/pairgen.hpp"
#include "pairlink/units.hpp"

using namespace pairlink;

TEST_CASE("phase matching at the two calibration anchors")
{
    const SourceConfig source = degenerate_source();

    auto [s_low, i_low] = phase_matched_wavelengths(26.5, source);
    CHECK(s_low == doctest::Approx(810.0));
    CHECK(i_low == doctest::Approx(810.0));

    auto [s_high, i_high] = phase_matched_wavelengths(34.0, source);
    CHECK(s_high == doctest::Approx(774.0));
    CHECK(std::abs(i_high - 850.0) < 1.0); // energy conservation with 405 pump
}

TEST_CASE("degeneracy happens at twice the pump wavelength")
{
    const SourceConfig source = degenerate_source();
    auto [signal, idler] = phase_matched_wavelengths(26.5, source);
    CHECK(signal == doctest::Approx(2.0 * source.pump_wavelength_nm));
    CHECK(idler == doctest::Approx(2.0 * source.pump_wavelength_nm));
}

TEST_CASE("tuning curve is monotone decreasing in temperature")
{
    const SourceConfig source = degenerate_source();
    double previous = 1e9;
    for (double t = 20.0; t <= 40.0; t += 0.5) {
        auto [signal, idler] = phase_matched_wavelengths(t, source);
        CHECK(signal < previous);
        previous = signal;
        CHECK(1.0 / signal + 1.0 / idler
              == doctest::Approx(1.0 / source.pump_wavelength_nm));
    }
}

TEST_CASE("temperatures outside calibration throw")
{
    const SourceConfig source = degenerate_source();
    CHECK_THROWS_AS(phase_matched_wavelengths(19.9, source),
                    OutOfCalibrationError);
    CHECK_THROWS_AS(phase_matched_wavelengths(40.1, source),
                    OutOfCalibrationError);
}

TEST_CASE("source config validation")
{
    SourceConfig source = nondegenerate_source();
    CHECK_NOTHROW(source.validate());

    source.idler_center_nm = 870.0; // breaks energy conservation
    CHECK_THROWS_AS(source.validate(), ConfigError);

    source = degenerate_source();
    source.brightness_pairs_per_s = -1.0;
    CHECK_THROWS_AS(source.validate(), ConfigError);

    source = degenerate_source();
    source.signal_fwhm_nm = 0.0;
    CHECK_THROWS_AS(source.validate(), ConfigError);
}

TEST_CASE("emission count follows the Poisson mean")
{
    SourceConfig source = degenerate_source();
    source.brightness_pairs_per_s = 1e5;
    const auto events = sample_pair_emissions(source, 1.0, 11);
    const double expected = 1e5;
    CHECK(std::abs(double(events.size()) - expected)
          < 5.0 * std::sqrt(expected));
}

TEST_CASE("zero duration yields an empty stream")
{
    const auto events = sample_pair_emissions(degenerate_source(), 0.0, 1);
    CHECK(events.empty());
}

TEST_CASE("degenerate line width matches the configured FWHM")
{
    SourceConfig source = degenerate_source();
    source.brightness_pairs_per_s = 1e5;
    const auto events = sample_pair_emissions(source, 1.0, 5);
    REQUIRE(events.size() > 50000);
    double sum = 0.0, sq = 0.0;
    for (const auto& ev : events) {
        sum += ev.signal_wavelength_nm;
        sq += ev.signal_wavelength_nm * ev.signal_wavelength_nm;
    }
    const double mean = sum / double(events.size());
    const double stddev = std::sqrt(sq / double(events.size()) - mean * mean);
    const double expected = 7.0 / 2.355;
    CHECK(std::abs(stddev - expected) < 0.05 * expected);
}

TEST_CASE("energy conservation holds for every sampled pair")
{
    SourceConfig source = nondegenerate_source();
    source.brightness_pairs_per_s = 2e4;
    const auto events = sample_pair_emissions(source, 1.0, 9);
    REQUIRE(!events.empty());
    const double inv_pump = 1.0 / source.pump_wavelength_nm;
    for (const auto& ev : events) {
        const double inv_sum = 1.0 / ev.signal_wavelength_nm
            + 1.0 / ev.idler_wavelength_nm;
        CHECK(std::abs(inv_sum - inv_pump) < 1e-12);
    }
}

TEST_CASE("emission times are strictly ordered and seed-stable")
{
    SourceConfig source = degenerate_source();
    source.brightness_pairs_per_s = 5e4;
    const auto a = sample_pair_emissions(source, 0.5, 123);
    const auto b = sample_pair_emissions(source, 0.5, 123);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].emission_time_ps == b[i].emission_time_ps);
        CHECK(a[i].signal_wavelength_nm == b[i].signal_wavelength_nm);
        if (i > 0)
            CHECK(a[i].emission_time_ps >= a[i - 1].emission_time_ps);
    }
}

TEST_CASE("wdm matched-channel routing probability")
{
    WdmSpec wdm; // 774 / 850, 15 dB isolation
    Rng rng(21);
    const int n = 100000;
    int to_a = 0;
    for (int i = 0; i < n; ++i)
        if (wdm_route_photon(774.0, wdm, rng) == Arm::A)
            ++to_a;
    const double p = 1.0 - std::pow(10.0, -1.5); // 0.9684
    CHECK(std::abs(double(to_a) / n - p)
          < 5.0 * std::sqrt(p * (1.0 - p) / n));
}

TEST_CASE("degenerate wdm splits pairs into opposite arms half the time")
{
    WdmSpec wdm;
    wdm.degenerate_mode = true;
    Rng rng(22);
    PairEvent ev;
    ev.signal_wavelength_nm = 810.0;
    ev.idler_wavelength_nm = 810.0;
    const int n = 100000;
    int split = 0;
    for (int i = 0; i < n; ++i) {
        const PairRouting routing = wdm_route(ev, wdm, rng);
        if (routing.signal_arm != routing.idler_arm)
            ++split;
    }
    CHECK(std::abs(double(split) / n - 0.5) < 5.0 * 0.5 / std::sqrt(double(n)));
}

TEST_CASE("infinite isolation routes deterministically")
{
    WdmSpec wdm;
    wdm.isolation_db = std::numeric_limits<double>::infinity();
    Rng rng(23);
    for (int i = 0; i < 1000; ++i) {
        CHECK(wdm_route_photon(774.0, wdm, rng) == Arm::A);
        CHECK(wdm_route_photon(850.0, wdm, rng) == Arm::B);
    }
}
