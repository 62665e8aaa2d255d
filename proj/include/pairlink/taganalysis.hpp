#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pairlink/detection.hpp"

namespace pairlink {

// Binned cross-correlation of two tag streams. Bins are centered on integer
// multiples of the bin width: a delay d falls into the bin whose center is
// llround(d / bin_width) * bin_width (half-ties round away from zero), which
// keeps the histogram exactly mirror-symmetric under swapping the streams.
// Bin centers run from -half_bins*W to +half_bins*W.
struct DelayHistogram {
    int64_t bin_width_ps = 128;
    int64_t half_bins = 0;
    std::vector<uint64_t> counts; // size 2*half_bins + 1
    uint64_t total_pairs_considered = 0;

    size_t size() const { return counts.size(); }
    int64_t bin_center_ps(size_t index) const
    {
        return (static_cast<int64_t>(index) - half_bins) * bin_width_ps;
    }
    double min_delay_ps() const
    {
        return -(static_cast<double>(half_bins) + 0.5) * bin_width_ps;
    }
    double max_delay_ps() const
    {
        return (static_cast<double>(half_bins) + 0.5) * bin_width_ps;
    }
};

// Histogram of delays (t_b - t_a) covering roughly +/- range_ps, computed
// with a two-pointer sliding window (O(N*k)). When a and b are the same
// stream object, zero-lag self pairs (i == j) are excluded.
DelayHistogram cross_correlation(const TimeTagStream& a, const TimeTagStream& b,
                                 int64_t bin_width_ps, int64_t range_ps);

enum class PeakClass { Fundamental, SideLeft, SideRight, Unknown };

const char* to_string(PeakClass cls);

struct Peak {
    double delay_ps = 0.0;  // count-weighted centroid of the cluster
    uint64_t height = 0;    // tallest bin of the cluster
    PeakClass classification = PeakClass::Unknown;
};

struct PeakSet {
    std::vector<Peak> peaks; // tallest first
};

struct PeakFindParams {
    double threshold_sigma = 5.0;
    int merge_gap_bins = 4; // clusters closer than this merge into one peak
};

// Bins above the histogram floor at threshold_sigma significance are
// clustered into peaks; the tallest becomes the fundamental and the rest are
// classified left/right of it. The floor level comes from iterated outlier
// exclusion; the cut is mean + threshold_sigma * std for dense floors and
// the matching Poisson tail quantile for sparse ones.
PeakSet find_peaks(const DelayHistogram& histogram, double threshold_sigma);
PeakSet find_peaks(const DelayHistogram& histogram, const PeakFindParams& params);

// Greedy one-to-one coincidence matching in time order: an a-tag matches the
// earliest unused b-tag with t_b - t_a - center_delay in [-window/2, +window/2]
// (inclusive); matched tags are consumed, so each tag is used at most once.
uint64_t count_coincidences(const TimeTagStream& a, const TimeTagStream& b,
                            int64_t window_ps, int64_t center_delay_ps);

// Expected accidental-coincidence rate r_a * r_b * window.
double accidentals_rate(double rate_a_hz, double rate_b_hz, double window_ps);

enum class Basis { HV, DA, Other };

const char* to_string(Basis basis);

enum class VisibilityMethod { MinMax, SinusoidFit };

const char* to_string(VisibilityMethod method);

struct CurvePoint {
    double hwp_deg = 0.0;
    double counts = 0.0;
};

struct VisibilityResult {
    Basis basis = Basis::Other;
    double v = 0.0;
    uint64_t max_counts = 0;
    uint64_t min_counts = 0;
    VisibilityMethod method = VisibilityMethod::MinMax;
    bool clamped = false; // fit pushed outside [0, 1] and was clamped
};

// Visibility of a coincidence-versus-HWP-angle curve. Requires at least 8
// samples spanning at least 180 degrees of HWP rotation; all-zero counts
// raise UndefinedVisibilityError. The sinusoid fit is a linear least-squares
// fit of c0 * [1 + v cos(4(h - h0))] over HWP angle h (period 90 degrees).
VisibilityResult visibility(std::span<const CurvePoint> curve,
                            VisibilityMethod method, Basis basis = Basis::Other);

} // namespace pairlink
