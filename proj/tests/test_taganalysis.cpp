#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "pairlink/errors.hpp"
#include "pairlink/rng.hpp"
#include <numbers>

#include "pairlink/taganalysis.hpp"

using namespace pairlink;

namespace {

constexpr double kPi = std::numbers::pi;

TimeTagStream poisson_stream(uint64_t seed, double rate_hz, double duration_s,
                             uint16_t channel)
{
    Rng rng(seed);
    TimeTagStream stream;
    stream.duration_s = duration_s;
    const double rate_per_ps = rate_hz / 1e12;
    double t = rng.exponential(rate_per_ps);
    while (t <= duration_s * 1e12) {
        stream.records.push_back({ int64_t(std::llround(t)), channel });
        t += rng.exponential(rate_per_ps);
    }
    return stream;
}

// Brute-force histogram straight from the definition: every tag pair whose
// centered bin index fits the range.
std::vector<uint64_t> histogram_oracle(const TimeTagStream& a,
                                       const TimeTagStream& b, int64_t width,
                                       int64_t range, bool same_object)
{
    const int64_t half = std::llround(double(range) / double(width));
    std::vector<uint64_t> counts(size_t(2 * half + 1), 0);
    for (size_t i = 0; i < a.records.size(); ++i)
        for (size_t j = 0; j < b.records.size(); ++j) {
            if (same_object && i == j)
                continue;
            const int64_t d = b.records[j].time_ps - a.records[i].time_ps;
            const int64_t c = std::llround(double(d) / double(width));
            if (c < -half || c > half)
                continue;
            ++counts[size_t(c + half)];
        }
    return counts;
}

// Brute-force greedy one-to-one matching straight from the definition.
uint64_t coincidence_oracle(const TimeTagStream& a, const TimeTagStream& b,
                            int64_t window, int64_t center)
{
    std::vector<bool> used(b.records.size(), false);
    uint64_t matches = 0;
    for (const auto& tag : a.records) {
        for (size_t j = 0; j < b.records.size(); ++j) {
            if (used[j])
                continue;
            const int64_t twice = 2 * (b.records[j].time_ps - tag.time_ps - center);
            if (twice < -window || twice > window)
                continue;
            used[j] = true;
            ++matches;
            break;
        }
    }
    return matches;
}

} // namespace

TEST_CASE("self-correlation excludes zero-lag self pairs")
{
    TimeTagStream stream;
    stream.duration_s = 1.0;
    for (int i = 0; i < 100; ++i)
        stream.records.push_back({ int64_t(i) * 1000000, 0 }); // 1 us apart

    const DelayHistogram hist = cross_correlation(stream, stream, 128, 50000);
    for (const uint64_t c : hist.counts)
        CHECK(c == 0);
}

TEST_CASE("a distinct identical copy piles up at zero delay")
{
    TimeTagStream a;
    a.duration_s = 1.0;
    for (int i = 0; i < 100; ++i)
        a.records.push_back({ int64_t(i) * 1000000, 0 });
    const TimeTagStream b = a;

    const DelayHistogram hist = cross_correlation(a, b, 128, 50000);
    CHECK(hist.counts[size_t(hist.half_bins)] == 100);
    CHECK(hist.total_pairs_considered == 100);
}

TEST_CASE("a shifted copy occupies the single matching bin")
{
    TimeTagStream a;
    a.duration_s = 1.0;
    for (int i = 0; i < 200; ++i)
        a.records.push_back({ int64_t(i) * 1000000, 0 });
    TimeTagStream b = a;
    for (auto& tag : b.records)
        tag.time_ps += 5000; // +5 ns

    const DelayHistogram hist = cross_correlation(a, b, 128, 50000);
    uint64_t occupied = 0;
    size_t occupied_index = 0;
    for (size_t i = 0; i < hist.counts.size(); ++i)
        if (hist.counts[i] > 0) {
            ++occupied;
            occupied_index = i;
        }
    CHECK(occupied == 1);
    CHECK(std::abs(hist.bin_center_ps(occupied_index) - 5000) <= 64);
    CHECK(hist.counts[occupied_index] == 200);
}

TEST_CASE("independent Poisson streams give the flat accidental floor")
{
    const double rate = 200000.0, duration = 1.0;
    const TimeTagStream a = poisson_stream(71, rate, duration, 0);
    const TimeTagStream b = poisson_stream(72, rate, duration, 1);
    REQUIRE(a.records.size() > 100000);

    const int64_t width = 128;
    const DelayHistogram hist = cross_correlation(a, b, width, 50000);
    double total = 0.0;
    for (const uint64_t c : hist.counts)
        total += double(c);
    const double mean = total / double(hist.counts.size());
    const double expected = rate * rate * (double(width) / 1e12) * duration;
    CHECK(std::abs(mean / expected - 1.0) < 0.05);
}

TEST_CASE("histogram mirror symmetry under stream swap")
{
    const TimeTagStream a = poisson_stream(73, 50000.0, 0.2, 0);
    const TimeTagStream b = poisson_stream(74, 60000.0, 0.2, 1);
    const DelayHistogram ab = cross_correlation(a, b, 256, 30000);
    const DelayHistogram ba = cross_correlation(b, a, 256, 30000);
    REQUIRE(ab.counts.size() == ba.counts.size());
    for (size_t i = 0; i < ab.counts.size(); ++i)
        CHECK(ab.counts[i] == ba.counts[ba.counts.size() - 1 - i]);
    CHECK(ab.total_pairs_considered == ba.total_pairs_considered);
}

TEST_CASE("cross-correlation equals the brute-force definition")
{
    Rng rng(75);
    for (int trial = 0; trial < 20; ++trial) {
        const TimeTagStream a
            = poisson_stream(100 + uint64_t(trial), 30000.0 + 1000.0 * trial,
                             0.05, 0);
        const TimeTagStream b
            = poisson_stream(200 + uint64_t(trial), 40000.0, 0.05, 1);
        const int64_t width = 64 + int64_t(rng.next_u64() % 512);
        const int64_t range = 5000 + int64_t(rng.next_u64() % 100000);
        const DelayHistogram hist = cross_correlation(a, b, width, range);
        const auto oracle = histogram_oracle(a, b, width, range, false);
        CHECK(hist.counts == oracle);
        uint64_t sum = 0;
        for (const uint64_t c : hist.counts)
            sum += c;
        CHECK(hist.total_pairs_considered == sum);
    }
}

TEST_CASE("coincidence counting equals the greedy oracle")
{
    for (int trial = 0; trial < 30; ++trial) {
        // coarse 10 ps quantization provokes exact window-boundary ties
        TimeTagStream a = poisson_stream(300 + uint64_t(trial), 50000.0, 0.02, 0);
        TimeTagStream b = poisson_stream(400 + uint64_t(trial), 50000.0, 0.02, 1);
        for (auto& tag : a.records)
            tag.time_ps = (tag.time_ps / 10) * 10;
        for (auto& tag : b.records)
            tag.time_ps = (tag.time_ps / 10) * 10;
        const int64_t window = 10 + 10 * (trial % 7);
        const int64_t center = (trial % 3 - 1) * 500;
        CHECK(count_coincidences(a, b, window, center)
              == coincidence_oracle(a, b, window, center));
    }
}

TEST_CASE("coincidences are monotone in the window width")
{
    const TimeTagStream a = poisson_stream(501, 80000.0, 0.05, 0);
    const TimeTagStream b = poisson_stream(502, 80000.0, 0.05, 1);
    uint64_t previous = 0;
    for (int64_t window = 100; window <= 100000; window *= 2) {
        const uint64_t n = count_coincidences(a, b, window, 0);
        CHECK(n >= previous);
        previous = n;
    }
}

TEST_CASE("empty streams yield zero coincidences and empty histograms")
{
    TimeTagStream empty;
    const TimeTagStream b = poisson_stream(503, 1000.0, 0.01, 1);
    CHECK(count_coincidences(empty, b, 1000, 0) == 0);
    const DelayHistogram hist = cross_correlation(empty, b, 128, 50000);
    for (const uint64_t c : hist.counts)
        CHECK(c == 0);
}

TEST_CASE("accidental rate formula")
{
    CHECK(accidentals_rate(1e5, 1e5, 1000.0) == doctest::Approx(10.0));
    CHECK(accidentals_rate(0.0, 5e6, 2000.0) == 0.0);
}

TEST_CASE("find_peaks on a flat histogram finds nothing")
{
    DelayHistogram hist;
    hist.bin_width_ps = 128;
    hist.half_bins = 100;
    hist.counts.assign(201, 7);
    CHECK(find_peaks(hist, 5.0).peaks.empty());

    hist.counts.assign(201, 0);
    CHECK(find_peaks(hist, 5.0).peaks.empty());
}

TEST_CASE("find_peaks classifies a fundamental and two side peaks")
{
    DelayHistogram hist;
    hist.bin_width_ps = 128;
    hist.half_bins = 400;
    hist.counts.assign(801, 0);
    Rng rng(81);
    for (auto& c : hist.counts) // small Poisson-ish floor
        c = rng.next_u64() % 3;

    auto bump = [&](int64_t delay_ps, uint64_t height) {
        const size_t center = size_t(delay_ps / 128 + hist.half_bins);
        hist.counts[center - 1] += height / 4;
        hist.counts[center] += height;
        hist.counts[center + 1] += height / 4;
    };
    bump(0, 400);
    bump(-12032, 90); // near -12 ns, aligned to the 128 ps grid
    bump(12032, 90);

    const PeakSet peaks = find_peaks(hist, 5.0);
    REQUIRE(peaks.peaks.size() == 3);
    CHECK(peaks.peaks[0].classification == PeakClass::Fundamental);
    CHECK(std::abs(peaks.peaks[0].delay_ps) <= 128.0);
    bool left = false, right = false;
    for (size_t i = 1; i < 3; ++i) {
        if (peaks.peaks[i].classification == PeakClass::SideLeft) {
            left = true;
            CHECK(peaks.peaks[i].delay_ps == doctest::Approx(-12032).epsilon(0.01));
        }
        if (peaks.peaks[i].classification == PeakClass::SideRight) {
            right = true;
            CHECK(peaks.peaks[i].delay_ps == doctest::Approx(12032).epsilon(0.01));
        }
    }
    CHECK(left);
    CHECK(right);
}

TEST_CASE("find_peaks with a single spike reports one fundamental")
{
    DelayHistogram hist;
    hist.bin_width_ps = 128;
    hist.half_bins = 50;
    hist.counts.assign(101, 0);
    hist.counts[50] = 25;
    const PeakSet peaks = find_peaks(hist, 5.0);
    REQUIRE(peaks.peaks.size() == 1);
    CHECK(peaks.peaks[0].classification == PeakClass::Fundamental);
    CHECK(peaks.peaks[0].height == 25);
}

TEST_CASE("minmax visibility of alternating and constant curves")
{
    std::vector<CurvePoint> alternating;
    std::vector<CurvePoint> constant;
    for (int i = 0; i < 9; ++i) {
        const double h = 22.5 * i;
        alternating.push_back({ h, i % 2 == 0 ? 100.0 : 0.0 });
        constant.push_back({ h, 55.0 });
    }
    CHECK(visibility(alternating, VisibilityMethod::MinMax).v
          == doctest::Approx(1.0));
    CHECK(visibility(constant, VisibilityMethod::MinMax).v
          == doctest::Approx(0.0));
}

TEST_CASE("sinusoid fit recovers an exact curve")
{
    std::vector<CurvePoint> curve;
    const double v_true = 0.87, c0 = 1234.0, h0 = 10.0;
    for (int i = 0; i < 16; ++i) {
        const double h = 12.0 * i; // spans 180 degrees
        const double counts = c0
            * (1.0 + v_true * std::cos(4.0 * (h - h0) * kPi / 180.0));
        curve.push_back({ h, counts });
    }
    const VisibilityResult fit
        = visibility(curve, VisibilityMethod::SinusoidFit);
    CHECK(fit.v == doctest::Approx(v_true).epsilon(1e-9));
    CHECK_FALSE(fit.clamped);
}

TEST_CASE("visibility is invariant under uniform count scaling")
{
    std::vector<CurvePoint> curve;
    for (int i = 0; i < 9; ++i)
        curve.push_back({ 22.5 * i,
                          300.0 + 250.0 * std::cos(4.0 * 22.5 * i * kPi / 180.0) });
    std::vector<CurvePoint> scaled = curve;
    for (auto& p : scaled)
        p.counts *= 7.0;
    for (const auto method :
         { VisibilityMethod::MinMax, VisibilityMethod::SinusoidFit }) {
        const double v1 = visibility(curve, method).v;
        const double v2 = visibility(scaled, method).v;
        CHECK(v1 == doctest::Approx(v2).epsilon(1e-12));
    }
}

TEST_CASE("visibility preconditions and degenerate input")
{
    std::vector<CurvePoint> simple_curve;
    for (int i = 0; i < 9; ++i)
        simple_curve.push_back({ 22.5 * i, 0.0 });
    CHECK_THROWS_AS(visibility(simple_curve, VisibilityMethod::MinMax),
                    UndefinedVisibilityError);

    std::vector<CurvePoint> too_few(simple_curve.begin(),
                                    simple_curve.begin() + 5);
    CHECK_THROWS_AS(visibility(too_few, VisibilityMethod::MinMax),
                    AnalysisError);

    std::vector<CurvePoint> narrow;
    for (int i = 0; i < 10; ++i)
        narrow.push_back({ 5.0 * i, 100.0 });
    CHECK_THROWS_AS(visibility(narrow, VisibilityMethod::MinMax),
                    AnalysisError);
}
