#include <doctest.h>

#include <cmath>
#include <vector>

#include "pairlink/detection.hpp"
#include "pairlink/errors.hpp"
#include "pairlink/units.hpp"

using namespace pairlink;

TEST_CASE("coincidence probability of the ideal state")
{
    const PolarizationModel ideal;
    CHECK(coincidence_probability(ideal, 0.0, 0.0) == doctest::Approx(0.5));
    CHECK(coincidence_probability(ideal, 0.0, 45.0) == doctest::Approx(0.25));
    CHECK(coincidence_probability(ideal, 0.0, 90.0)
          == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("coincidence probability stays within [0, 1/2]")
{
    for (const double v_hv : { 0.0, 0.5, 1.0 })
        for (const double v_da : { 0.0, 0.7, 1.0 })
            for (const int sign : { +1, -1 }) {
                const PolarizationModel pol { v_hv, v_da, sign };
                for (double a = 0.0; a < 180.0; a += 7.5)
                    for (double b = 0.0; b < 180.0; b += 7.5) {
                        const double p = coincidence_probability(pol, a, b);
                        CHECK(p >= -1e-12);
                        CHECK(p <= 0.5 + 1e-12);
                    }
            }
}

TEST_CASE("analytic curve visibility equals the model parameters exactly")
{
    const PolarizationModel pol { 0.971, 0.940, +1 };

    // H/V basis: alpha = 0, beta scanned
    double max_hv = 0.0, min_hv = 1.0;
    // D/A basis: alpha = 45
    double max_da = 0.0, min_da = 1.0;
    for (double beta = 0.0; beta < 360.0; beta += 0.25) {
        const double hv = coincidence_probability(pol, 0.0, beta);
        const double da = coincidence_probability(pol, 45.0, beta);
        max_hv = std::max(max_hv, hv);
        min_hv = std::min(min_hv, hv);
        max_da = std::max(max_da, da);
        min_da = std::min(min_da, da);
    }
    CHECK((max_hv - min_hv) / (max_hv + min_hv) == doctest::Approx(0.971));
    CHECK((max_da - min_da) / (max_da + min_da) == doctest::Approx(0.940));
}

TEST_CASE("measure_pair outcome probabilities sum to one")
{
    const PolarizationModel pol { 0.9, 0.8, -1 };
    for (double a = 0.0; a < 90.0; a += 11.0)
        for (double b = 0.0; b < 90.0; b += 13.0) {
            const double sum = coincidence_probability(pol, a, b)
                + coincidence_probability(pol, a, b + 90.0)
                + coincidence_probability(pol, a + 90.0, b)
                + coincidence_probability(pol, a + 90.0, b + 90.0);
            CHECK(sum == doctest::Approx(1.0));
        }
}

TEST_CASE("crossed ideal analyzers never pass both photons")
{
    const PolarizationModel ideal;
    const AnalyzerSettings crossed { 0.0, 45.0 }; // projections 0 and 90 deg
    Rng rng(41);
    for (int i = 0; i < 10000; ++i) {
        const JointOutcome outcome = measure_pair(ideal, crossed, rng);
        const bool both_pass
            = outcome.port_a == Port::Pass && outcome.port_b == Port::Pass;
        CHECK_FALSE(both_pass);
    }
}

TEST_CASE("measure_pair samples the closed-form probability")
{
    const PolarizationModel pol { 0.97, 0.92, +1 };
    const AnalyzerSettings settings { 11.25, 30.0 };
    const double expected = coincidence_probability(
        pol, projection_angle_deg(11.25), projection_angle_deg(30.0));
    Rng rng(42);
    const int n = 1000000;
    int both = 0;
    for (int i = 0; i < n; ++i) {
        const JointOutcome outcome = measure_pair(pol, settings, rng);
        if (outcome.port_a == Port::Pass && outcome.port_b == Port::Pass)
            ++both;
    }
    CHECK(std::abs(double(both) / n - expected)
          < 5.0 * std::sqrt(expected * (1.0 - expected) / n));
}

TEST_CASE("dead time vetoes the second of two close arrivals")
{
    DetectorSpec det;
    det.efficiency = 1.0;
    det.dark_rate_per_s = 0.0;
    det.jitter_sigma_ps = 0.0;
    det.dead_time_ns = 1000.0;
    const std::vector<double> arrivals { 1000.0, 101000.0 }; // 100 ns apart
    Rng response(51), dark(52);
    const auto tags = detect_channel(arrivals, det, 1.0, 0, response, dark);
    REQUIRE(tags.size() == 1);
    CHECK(tags[0].time_ps == 1000);
}

TEST_CASE("dark counts alone are Poisson")
{
    DetectorSpec det;
    det.efficiency = 0.0;
    det.dark_rate_per_s = 1000.0;
    det.dead_time_ns = 0.0;
    Rng response(53), dark(54);
    const auto tags = detect_channel({}, det, 1.0, 3, response, dark);
    CHECK(std::abs(double(tags.size()) - 1000.0) < 5.0 * std::sqrt(1000.0));
    for (const auto& tag : tags)
        CHECK(tag.channel == 3);
}

TEST_CASE("jitter statistics are recovered from the output")
{
    DetectorSpec det;
    det.efficiency = 1.0;
    det.dark_rate_per_s = 0.0;
    det.dead_time_ns = 0.0;
    det.jitter_sigma_ps = 350.0;
    std::vector<double> arrivals;
    arrivals.reserve(100000);
    for (int i = 0; i < 100000; ++i)
        arrivals.push_back(1e6 + 1e5 * double(i)); // well separated
    Rng response(55), dark(56);
    const auto tags = detect_channel(arrivals, det, 100.0, 0, response, dark);
    REQUIRE(tags.size() == arrivals.size());
    double sq = 0.0;
    for (size_t i = 0; i < tags.size(); ++i) {
        const double residual = double(tags[i].time_ps) - arrivals[i];
        sq += residual * residual;
    }
    const double stddev = std::sqrt(sq / double(tags.size()));
    CHECK(std::abs(stddev - 350.0) < 0.05 * 350.0);
}

TEST_CASE("no two output tags violate the dead time")
{
    DetectorSpec det;
    det.efficiency = 0.8;
    det.dark_rate_per_s = 20000.0;
    det.jitter_sigma_ps = 200.0;
    det.dead_time_ns = 500.0;
    std::vector<double> arrivals;
    Rng gen(57);
    double t = 0.0;
    while (t < 1e12) { // one second at ~50 kHz
        t += gen.exponential(5e-8);
        arrivals.push_back(t);
    }
    Rng response(58), dark(59);
    const auto tags = detect_channel(arrivals, det, 1.0, 0, response, dark);
    REQUIRE(tags.size() > 1000);
    for (size_t i = 1; i < tags.size(); ++i)
        CHECK(tags[i].time_ps - tags[i - 1].time_ps >= 500000);
}

TEST_CASE("detection output is bit-identical for a fixed seed")
{
    DetectorSpec det;
    det.efficiency = 0.5;
    det.dark_rate_per_s = 1000.0;
    std::vector<double> arrivals;
    for (int i = 0; i < 20000; ++i)
        arrivals.push_back(5e4 * double(i) + 17.0);

    auto run = [&]() {
        Rng response(61), dark(62);
        return detect_channel(arrivals, det, 1.0, 1, response, dark);
    };
    const auto a = run();
    const auto b = run();
    CHECK(a == b);
}

TEST_CASE("detect_stream merges channels in time order")
{
    std::vector<std::vector<double>> arrivals(2);
    for (int i = 0; i < 1000; ++i) {
        arrivals[0].push_back(1e6 * double(i) + 11.0);
        arrivals[1].push_back(1e6 * double(i) + 503.0);
    }
    std::vector<DetectorSpec> detectors(2);
    detectors[0].efficiency = 1.0;
    detectors[0].dark_rate_per_s = 0.0;
    detectors[0].jitter_sigma_ps = 0.0;
    detectors[1] = detectors[0];

    const TimeTagStream stream = detect_stream(arrivals, detectors, 1.0, 77);
    REQUIRE(stream.records.size() == 2000);
    for (size_t i = 1; i < stream.records.size(); ++i)
        CHECK(stream.records[i].time_ps >= stream.records[i - 1].time_ps);

    const TimeTagStream only_b = select_channel(stream, 1);
    CHECK(only_b.records.size() == 1000);
    for (const auto& tag : only_b.records)
        CHECK(tag.channel == 1);
}

TEST_CASE("enforce_dead_time sweeps a sorted stream")
{
    std::vector<TimeTag> tags { { 0, 0 }, { 100, 0 }, { 2100, 0 },
                                { 2200, 0 }, { 5000, 0 } };
    enforce_dead_time(tags, 2.0); // 2 ns = 2000 ps
    const std::vector<TimeTag> expected { { 0, 0 }, { 2100, 0 }, { 5000, 0 } };
    CHECK(tags == expected);
}
