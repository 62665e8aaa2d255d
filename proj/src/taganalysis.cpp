#include "pairlink/taganalysis.hpp"

#include <algorithm>
#include <cmath>

#include "pairlink/errors.hpp"
#include "pairlink/units.hpp"

namespace pairlink {

namespace {

int64_t delay_bin(int64_t delay_ps, int64_t bin_width_ps)
{
    return std::llround(static_cast<double>(delay_ps) / bin_width_ps);
}

struct FloorStats {
    double mean = 0.0;
    double stddev = 0.0;
};

// Threshold above a counting floor at the significance of a k-sigma
// Gaussian cut. Dense floors use mean + k*stddev; sparse floors use the
// exact Poisson tail, whose k-sigma quantile sits well above
// mean + k*sqrt(mean).
double floor_cut(double floor_mean, double floor_std, double k)
{
    if (floor_mean > 100.0)
        return floor_mean
            + k * std::max(floor_std, std::sqrt(floor_mean));
    const double alpha = 0.5 * std::erfc(k / std::sqrt(2.0));
    double pmf = std::exp(-floor_mean);
    double cdf = pmf;
    double c = 1.0;
    while (1.0 - cdf > alpha) {
        pmf *= floor_mean / c;
        cdf += pmf;
        c += 1.0;
    }
    return c - 0.5; // counts >= c qualify as above the floor
}

FloorStats stats_of(const std::vector<uint64_t>& counts,
                    const std::vector<bool>* mask)
{
    double sum = 0.0, sq = 0.0;
    size_t n = 0;
    for (size_t i = 0; i < counts.size(); ++i) {
        if (mask && !(*mask)[i])
            continue;
        const double c = static_cast<double>(counts[i]);
        sum += c;
        sq += c * c;
        ++n;
    }
    FloorStats s;
    if (n == 0)
        return s;
    s.mean = sum / n;
    const double var = std::max(0.0, sq / n - s.mean * s.mean);
    s.stddev = std::sqrt(var);
    return s;
}

} // namespace

DelayHistogram cross_correlation(const TimeTagStream& a, const TimeTagStream& b,
                                 int64_t bin_width_ps, int64_t range_ps)
{
    if (bin_width_ps <= 0)
        throw ConfigError("histogram bin width must be > 0");
    if (range_ps < 0)
        throw ConfigError("histogram range must be >= 0");

    DelayHistogram hist;
    hist.bin_width_ps = bin_width_ps;
    hist.half_bins = delay_bin(range_ps, bin_width_ps);
    hist.counts.assign(static_cast<size_t>(2 * hist.half_bins + 1), 0);

    const auto& ta = a.records;
    const auto& tb = b.records;
    const bool same_stream = &a == &b;
    // A pair lands in the histogram iff its bin center index is within
    // [-half_bins, half_bins]; that covers delays up to (half_bins+1/2)*W.
    const double reach = (static_cast<double>(hist.half_bins) + 0.5)
        * static_cast<double>(bin_width_ps);
    const int64_t max_delay = static_cast<int64_t>(std::ceil(reach)) + 1;

    size_t lo = 0;
    for (size_t i = 0; i < ta.size(); ++i) {
        const int64_t t = ta[i].time_ps;
        while (lo < tb.size() && tb[lo].time_ps < t - max_delay)
            ++lo;
        for (size_t j = lo; j < tb.size() && tb[j].time_ps <= t + max_delay; ++j) {
            if (same_stream && i == j)
                continue; // zero-lag self pairing excluded
            const int64_t bin = delay_bin(tb[j].time_ps - t, bin_width_ps);
            if (bin < -hist.half_bins || bin > hist.half_bins)
                continue;
            ++hist.counts[static_cast<size_t>(bin + hist.half_bins)];
            ++hist.total_pairs_considered;
        }
    }
    return hist;
}

const char* to_string(PeakClass cls)
{
    switch (cls) {
    case PeakClass::Fundamental: return "fundamental";
    case PeakClass::SideLeft: return "side_left";
    case PeakClass::SideRight: return "side_right";
    case PeakClass::Unknown: return "unknown";
    }
    return "?";
}

PeakSet find_peaks(const DelayHistogram& histogram, double threshold_sigma)
{
    PeakFindParams params;
    params.threshold_sigma = threshold_sigma;
    return find_peaks(histogram, params);
}

PeakSet find_peaks(const DelayHistogram& histogram, const PeakFindParams& params)
{
    PeakSet result;
    if (histogram.counts.empty())
        return result;

    // Floor estimate by iterated outlier exclusion: tall peaks inflate the
    // first-pass level, so keep dropping bins above the running cut until
    // the floor set is stable. Exclusion only shrinks the set, so the loop
    // terminates.
    std::vector<bool> is_floor(histogram.counts.size(), true);
    FloorStats floor;
    double threshold = 0.0;
    for (;;) {
        floor = stats_of(histogram.counts, &is_floor);
        threshold = floor_cut(floor.mean, floor.stddev, params.threshold_sigma);
        bool changed = false;
        for (size_t i = 0; i < histogram.counts.size(); ++i)
            if (is_floor[i]
                && static_cast<double>(histogram.counts[i]) > threshold) {
                is_floor[i] = false;
                changed = true;
            }
        if (!changed)
            break;
    }

    // Cluster qualifying bins, merging clusters separated by small gaps.
    struct Cluster {
        size_t first, last;
    };
    std::vector<Cluster> clusters;
    for (size_t i = 0; i < histogram.counts.size(); ++i) {
        const double c = static_cast<double>(histogram.counts[i]);
        if (c <= threshold || histogram.counts[i] == 0)
            continue;
        if (!clusters.empty()
            && i - clusters.back().last
                <= static_cast<size_t>(params.merge_gap_bins) + 1)
            clusters.back().last = i;
        else
            clusters.push_back({ i, i });
    }

    for (const auto& cluster : clusters) {
        Peak peak;
        double weighted = 0.0;
        double weight = 0.0;
        for (size_t i = cluster.first; i <= cluster.last; ++i) {
            const double c = static_cast<double>(histogram.counts[i]);
            weighted += c * static_cast<double>(histogram.bin_center_ps(i));
            weight += c;
            if (histogram.counts[i] > peak.height)
                peak.height = histogram.counts[i];
        }
        peak.delay_ps = weight > 0.0 ? weighted / weight : 0.0;
        result.peaks.push_back(peak);
    }

    if (result.peaks.empty())
        return result;

    std::sort(result.peaks.begin(), result.peaks.end(),
              [](const Peak& x, const Peak& y) {
                  if (x.height != y.height)
                      return x.height > y.height;
                  return std::abs(x.delay_ps) < std::abs(y.delay_ps);
              });
    result.peaks.front().classification = PeakClass::Fundamental;
    const double fundamental_delay = result.peaks.front().delay_ps;
    for (size_t i = 1; i < result.peaks.size(); ++i)
        result.peaks[i].classification
            = result.peaks[i].delay_ps < fundamental_delay
            ? PeakClass::SideLeft
            : PeakClass::SideRight;
    return result;
}

uint64_t count_coincidences(const TimeTagStream& a, const TimeTagStream& b,
                            int64_t window_ps, int64_t center_delay_ps)
{
    if (window_ps <= 0)
        throw ConfigError("coincidence window must be > 0");

    const auto& ta = a.records;
    const auto& tb = b.records;
    uint64_t matches = 0;
    size_t j = 0;
    for (const auto& tag : ta) {
        // Window endpoints are inclusive; comparisons use doubled values so
        // odd windows need no fractional arithmetic.
        const int64_t centered = 2 * (tag.time_ps + center_delay_ps);
        while (j < tb.size() && 2 * tb[j].time_ps < centered - window_ps)
            ++j;
        if (j < tb.size() && 2 * tb[j].time_ps <= centered + window_ps) {
            ++matches;
            ++j; // b-tag consumed: one-to-one matching
        }
    }
    return matches;
}

double accidentals_rate(double rate_a_hz, double rate_b_hz, double window_ps)
{
    if (rate_a_hz < 0.0 || rate_b_hz < 0.0 || window_ps < 0.0)
        throw ConfigError("accidentals_rate arguments must be >= 0");
    return rate_a_hz * rate_b_hz * (window_ps / kPsPerS);
}

const char* to_string(Basis basis)
{
    switch (basis) {
    case Basis::HV: return "HV";
    case Basis::DA: return "DA";
    case Basis::Other: return "other";
    }
    return "?";
}

const char* to_string(VisibilityMethod method)
{
    return method == VisibilityMethod::MinMax ? "minmax" : "sinusoid_fit";
}

VisibilityResult visibility(std::span<const CurvePoint> curve,
                            VisibilityMethod method, Basis basis)
{
    if (curve.size() < 8)
        throw AnalysisError("visibility needs at least 8 angle samples");
    double lo = curve.front().hwp_deg, hi = curve.front().hwp_deg;
    double max_counts = 0.0, min_counts = 0.0;
    bool first = true;
    for (const auto& p : curve) {
        lo = std::min(lo, p.hwp_deg);
        hi = std::max(hi, p.hwp_deg);
        if (p.counts < 0.0)
            throw AnalysisError("visibility curve counts must be >= 0");
        if (first) {
            max_counts = min_counts = p.counts;
            first = false;
        } else {
            max_counts = std::max(max_counts, p.counts);
            min_counts = std::min(min_counts, p.counts);
        }
    }
    if (hi - lo < 180.0 - 1e-9)
        throw AnalysisError("visibility curve must span at least 180 degrees "
                            "of HWP rotation");
    if (max_counts <= 0.0)
        throw UndefinedVisibilityError("visibility undefined: all counts zero");

    VisibilityResult result;
    result.basis = basis;
    result.method = method;
    result.max_counts = static_cast<uint64_t>(std::llround(max_counts));
    result.min_counts = static_cast<uint64_t>(std::llround(min_counts));

    if (method == VisibilityMethod::MinMax) {
        result.v = (max_counts - min_counts) / (max_counts + min_counts);
        return result;
    }

    // Linear least squares of counts = A + B cos(4h) + C sin(4h); then
    // v = sqrt(B^2 + C^2) / A and the phase follows from atan2(C, B).
    double s_c = 0, s_s = 0, s_cc = 0, s_ss = 0, s_cs = 0;
    double s_y = 0, s_yc = 0, s_ys = 0;
    const double n = static_cast<double>(curve.size());
    for (const auto& p : curve) {
        const double phase = 4.0 * deg_to_rad(p.hwp_deg);
        const double c = std::cos(phase);
        const double s = std::sin(phase);
        s_c += c;
        s_s += s;
        s_cc += c * c;
        s_ss += s * s;
        s_cs += c * s;
        s_y += p.counts;
        s_yc += p.counts * c;
        s_ys += p.counts * s;
    }
    // Solve the 3x3 normal equations by Cramer's rule.
    const double m[3][3] = { { n, s_c, s_s },
                             { s_c, s_cc, s_cs },
                             { s_s, s_cs, s_ss } };
    const double rhs[3] = { s_y, s_yc, s_ys };
    auto det3 = [](const double a[3][3]) {
        return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
            - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    };
    const double det = det3(m);
    if (std::abs(det) < 1e-12)
        throw AnalysisError("visibility fit is singular for this angle grid");
    double solution[3];
    for (int col = 0; col < 3; ++col) {
        double mc[3][3];
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                mc[r][c] = c == col ? rhs[r] : m[r][c];
        solution[col] = det3(mc) / det;
    }
    const double offset = solution[0];
    const double amplitude = std::hypot(solution[1], solution[2]);
    if (offset <= 0.0)
        throw UndefinedVisibilityError("visibility fit found no positive mean level");
    double v = amplitude / offset;
    if (v > 1.0) {
        v = 1.0;
        result.clamped = true;
    }
    result.v = v;
    return result;
}

} // namespace pairlink
