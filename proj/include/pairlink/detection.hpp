#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pairlink/pairgen.hpp"
#include "pairlink/rng.hpp"

namespace pairlink {

// Half-wave plate angles of the two analyzers. The polarization projection
// angle is twice the plate angle; angles are taken modulo 180 degrees.
struct AnalyzerSettings {
    double hwp_angle_a_deg = 0.0;
    double hwp_angle_b_deg = 0.0;
};

inline double projection_angle_deg(double hwp_angle_deg)
{
    return 2.0 * hwp_angle_deg;
}

// Geiger-mode APD behind a time tagger. Only the two preset efficiencies are
// device-data; the remaining numbers are typical-device placeholders and are
// fully configurable.
struct DetectorSpec {
    double efficiency = 0.5;
    double dark_rate_per_s = 500.0;
    double dead_time_ns = 1000.0; // non-paralyzable
    double jitter_sigma_ps = 350.0;
    double time_resolution_ps = 1.0;

    void validate() const;
};

DetectorSpec si_gm_apd();
DetectorSpec ingaas_gm_apd();

// Probability that both photons exit the transmitted PBS ports when the arms
// project at alpha and beta:
//   1/4 * [1 + v_hv cos(2a) cos(2b) + sign * v_da sin(2a) sin(2b)].
// Lies in [0, 1/2] for v_hv, v_da in [0, 1].
double coincidence_probability(const PolarizationModel& pol, double alpha_deg,
                               double beta_deg);

enum class Port : uint8_t { Pass, Reflect };

struct JointOutcome {
    Port port_a;
    Port port_b;
};

// Samples the four PBS port combinations; their probabilities are
// coincidence_probability evaluated at (a,b), (a,b+90), (a+90,b),
// (a+90,b+90) and sum to one.
JointOutcome measure_pair(const PolarizationModel& pol,
                          const AnalyzerSettings& settings, Rng& rng);

// A lone photon of the pair is unpolarized, so it passes with probability
// one half at any analyzer angle.
Port measure_single(Rng& rng);

struct TimeTag {
    int64_t time_ps;
    uint16_t channel;

    friend bool operator==(const TimeTag&, const TimeTag&) = default;
};

struct TimeTagStream {
    std::vector<TimeTag> records; // nondecreasing in time
    double duration_s = 0.0;
};

// Detector response for one channel: efficiency thinning, Gaussian jitter,
// dark counts as a Poisson process over [0, duration], quantization to the
// time resolution, then the non-paralyzable dead-time veto on the sorted
// tags. Tags quantized to negative times are dropped.
std::vector<TimeTag> detect_channel(std::span<const double> arrival_times_ps,
                                    const DetectorSpec& det, double duration_s,
                                    uint16_t channel, Rng& response_rng,
                                    Rng& dark_rng);

// Multi-channel convenience wrapper; channel k uses detectors[k] and the
// substreams "detect.ch<k>" / "dark.ch<k>" of the seed.
TimeTagStream detect_stream(
    const std::vector<std::vector<double>>& arrivals_per_channel,
    const std::vector<DetectorSpec>& detectors, double duration_s,
    uint64_t seed);

// Non-paralyzable dead-time sweep over an already sorted single-channel tag
// vector: drops every tag closer than dead_time to the last accepted one.
void enforce_dead_time(std::vector<TimeTag>& tags, double dead_time_ns);

// Ordered merge of per-channel tag vectors (ties ordered by channel).
TimeTagStream merge_channels(std::vector<std::vector<TimeTag>> channels,
                             double duration_s);

TimeTagStream select_channel(const TimeTagStream& stream, uint16_t channel);

} // namespace pairlink
