#include "pairlink/detection.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pairlink/errors.hpp"
#include "pairlink/units.hpp"

namespace pairlink {

void DetectorSpec::validate() const
{
    if (efficiency < 0.0 || efficiency > 1.0)
        throw ConfigError("detector efficiency must be in [0, 1]");
    if (dark_rate_per_s < 0.0)
        throw ConfigError("detector dark rate must be >= 0");
    if (dead_time_ns < 0.0)
        throw ConfigError("detector dead time must be >= 0");
    if (jitter_sigma_ps < 0.0)
        throw ConfigError("detector jitter must be >= 0");
    if (time_resolution_ps <= 0.0)
        throw ConfigError("detector time resolution must be > 0");
}

DetectorSpec si_gm_apd()
{
    DetectorSpec d;
    d.efficiency = 0.50;
    d.dark_rate_per_s = 500.0;
    d.dead_time_ns = 1000.0;
    d.jitter_sigma_ps = 350.0;
    d.time_resolution_ps = 1.0;
    return d;
}

DetectorSpec ingaas_gm_apd()
{
    DetectorSpec d;
    d.efficiency = 0.25;
    d.dark_rate_per_s = 2000.0;
    d.dead_time_ns = 10000.0;
    d.jitter_sigma_ps = 350.0;
    d.time_resolution_ps = 1.0;
    return d;
}

double coincidence_probability(const PolarizationModel& pol, double alpha_deg,
                               double beta_deg)
{
    const double two_a = 2.0 * deg_to_rad(alpha_deg);
    const double two_b = 2.0 * deg_to_rad(beta_deg);
    return 0.25
        * (1.0 + pol.v_hv * std::cos(two_a) * std::cos(two_b)
           + pol.phase_sign * pol.v_da * std::sin(two_a) * std::sin(two_b));
}

JointOutcome measure_pair(const PolarizationModel& pol,
                          const AnalyzerSettings& settings, Rng& rng)
{
    const double a = projection_angle_deg(settings.hwp_angle_a_deg);
    const double b = projection_angle_deg(settings.hwp_angle_b_deg);
    const double p_pp = coincidence_probability(pol, a, b);
    const double p_pr = coincidence_probability(pol, a, b + 90.0);
    const double p_rp = coincidence_probability(pol, a + 90.0, b);

    const double u = rng.uniform();
    if (u < p_pp)
        return { Port::Pass, Port::Pass };
    if (u < p_pp + p_pr)
        return { Port::Pass, Port::Reflect };
    if (u < p_pp + p_pr + p_rp)
        return { Port::Reflect, Port::Pass };
    return { Port::Reflect, Port::Reflect };
}

Port measure_single(Rng& rng)
{
    return rng.bernoulli(0.5) ? Port::Pass : Port::Reflect;
}

std::vector<TimeTag> detect_channel(std::span<const double> arrival_times_ps,
                                    const DetectorSpec& det, double duration_s,
                                    uint16_t channel, Rng& response_rng,
                                    Rng& dark_rng)
{
    std::vector<double> clicks;
    clicks.reserve(arrival_times_ps.size() / 2 + 64);

    for (const double t : arrival_times_ps) {
        if (!response_rng.bernoulli(det.efficiency))
            continue;
        const double jitter = det.jitter_sigma_ps > 0.0
            ? response_rng.normal(0.0, det.jitter_sigma_ps)
            : 0.0;
        clicks.push_back(t + jitter);
    }

    if (det.dark_rate_per_s > 0.0 && duration_s > 0.0) {
        const double rate_per_ps = det.dark_rate_per_s / kPsPerS;
        double t = dark_rng.exponential(rate_per_ps);
        const double end_ps = duration_s * kPsPerS;
        while (t <= end_ps) {
            clicks.push_back(t);
            t += dark_rng.exponential(rate_per_ps);
        }
    }

    std::sort(clicks.begin(), clicks.end());

    const double res = det.time_resolution_ps;
    const int64_t dead_ps = static_cast<int64_t>(
        std::llround(det.dead_time_ns * kPsPerNs));

    std::vector<TimeTag> tags;
    tags.reserve(clicks.size());
    int64_t last_accepted = 0;
    bool have_last = false;
    for (const double t : clicks) {
        const int64_t quantized = static_cast<int64_t>(
            std::llround(std::llround(t / res) * res));
        if (quantized < 0)
            continue;
        if (have_last && quantized - last_accepted < dead_ps)
            continue; // inside the dead window of the previous tag
        tags.push_back({ quantized, channel });
        last_accepted = quantized;
        have_last = true;
    }
    return tags;
}

void enforce_dead_time(std::vector<TimeTag>& tags, double dead_time_ns)
{
    if (dead_time_ns <= 0.0 || tags.empty())
        return;
    const int64_t dead_ps = static_cast<int64_t>(
        std::llround(dead_time_ns * kPsPerNs));
    size_t kept = 1;
    int64_t last = tags.front().time_ps;
    for (size_t i = 1; i < tags.size(); ++i) {
        if (tags[i].time_ps - last < dead_ps)
            continue;
        last = tags[i].time_ps;
        tags[kept++] = tags[i];
    }
    tags.resize(kept);
}

TimeTagStream detect_stream(
    const std::vector<std::vector<double>>& arrivals_per_channel,
    const std::vector<DetectorSpec>& detectors, double duration_s,
    uint64_t seed)
{
    if (detectors.size() < arrivals_per_channel.size())
        throw ConfigError("detect_stream: one DetectorSpec per channel required");

    std::vector<std::vector<TimeTag>> per_channel;
    per_channel.reserve(arrivals_per_channel.size());
    for (size_t ch = 0; ch < arrivals_per_channel.size(); ++ch) {
        detectors[ch].validate();
        std::vector<double> sorted = arrivals_per_channel[ch];
        std::sort(sorted.begin(), sorted.end());
        Rng response = substream(seed, "detect.ch" + std::to_string(ch));
        Rng dark = substream(seed, "dark.ch" + std::to_string(ch));
        per_channel.push_back(detect_channel(sorted, detectors[ch], duration_s,
                                             static_cast<uint16_t>(ch),
                                             response, dark));
    }
    return merge_channels(std::move(per_channel), duration_s);
}

TimeTagStream merge_channels(std::vector<std::vector<TimeTag>> channels,
                             double duration_s)
{
    TimeTagStream out;
    out.duration_s = duration_s;
    size_t total = 0;
    for (const auto& ch : channels)
        total += ch.size();
    out.records.reserve(total);
    for (auto& ch : channels)
        out.records.insert(out.records.end(), ch.begin(), ch.end());
    std::sort(out.records.begin(), out.records.end(),
              [](const TimeTag& a, const TimeTag& b) {
                  if (a.time_ps != b.time_ps)
                      return a.time_ps < b.time_ps;
                  return a.channel < b.channel;
              });
    return out;
}

TimeTagStream select_channel(const TimeTagStream& stream, uint16_t channel)
{
    TimeTagStream out;
    out.duration_s = stream.duration_s;
    for (const auto& tag : stream.records)
        if (tag.channel == channel)
            out.records.push_back(tag);
    return out;
}

} // namespace pairlink
