#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pairlink/config.hpp"
#include "pairlink/taganalysis.hpp"
#include "pairlink/tagio.hpp"

namespace pairlink {

// Channel numbering of simulated streams.
inline constexpr uint16_t kChannelAPass = 0;
inline constexpr uint16_t kChannelBPass = 1;
inline constexpr uint16_t kChannelAReflect = 2;
inline constexpr uint16_t kChannelBReflect = 3;

struct ScanPointResult {
    size_t index = 0;
    AnalyzerSettings settings;
    std::vector<TimeTagStream> channels; // local time, one per channel id
    uint64_t pairs_generated = 0;
};

// Simulate one analyzer scan point. All randomness comes from named
// substreams of config.seed suffixed with the point index, so points are
// mutually independent and the result does not depend on evaluation order.
ScanPointResult simulate_point(const ExperimentConfig& config,
                               size_t point_index);

// Simulate every scan point, dispatching batches over a small worker pool,
// and hand the results to the consumer in point order.
void simulate_scan(const ExperimentConfig& config,
                   const std::function<void(ScanPointResult&&)>& consumer);

std::vector<ScanPointResult> simulate_experiment(const ExperimentConfig& config);

struct PointRateReport {
    size_t index = 0;
    AnalyzerSettings settings;
    uint64_t coincidences = 0;
    double duration_s = 0.0;
    double singles_a_hz = 0.0;
    double singles_b_hz = 0.0;
    double coincidence_rate_hz = 0.0;
    double accidental_rate_hz = 0.0;
};

struct CurveReport {
    double hwp_a_deg = 0.0;
    Basis basis = Basis::Other;
    std::vector<CurvePoint> points; // idler HWP angle vs coincidences
    std::optional<VisibilityResult> minmax;
    std::optional<VisibilityResult> fit;
};

struct AnalysisResult {
    DelayHistogram histogram; // summed over scan points, channel A vs B
    PeakSet peaks;
    int64_t center_delay_ps = 0;
    bool auto_center_failed = false;
    uint64_t total_tags = 0;
    std::vector<PointRateReport> rates;
    std::vector<CurveReport> curves;
    std::optional<double> visibility_hv_minmax;
    std::optional<double> visibility_da_minmax;
    std::optional<double> average_visibility_minmax;
    std::optional<double> average_visibility_fit;
    bool degenerate = false; // undefined visibility or empty input
};

// Accumulates scan points one at a time so arbitrarily long scans never
// need all tags in memory. With the auto center policy the coincidence
// window is centered on the fundamental peak of the first point's histogram.
class StreamingAnalyzer {
public:
    explicit StreamingAnalyzer(const AnalysisParams& params);

    void add_point(const ScanPointResult& point);
    AnalysisResult finish();

private:
    AnalysisParams params_;
    std::optional<int64_t> center_;
    AnalysisResult result_;
    bool histogram_started_ = false;
};

Basis basis_of_hwp_angle(double hwp_a_deg);

// --- file-based front ends -------------------------------------------------

// Tag files are one continuous acquisition per channel: scan point k
// occupies the global window [k*span, (k+1)*span). A final dead-time sweep
// runs across point boundaries of each channel.
struct Manifest {
    ExperimentConfig config;
    TagFormat format = TagFormat::Binary;
    int64_t point_span_ps = 0;
    size_t points = 0;
    std::vector<std::string> channel_files; // indexed by channel id
};

struct SimulateOutput {
    std::filesystem::path manifest_path;
    std::vector<std::filesystem::path> tag_files;
};

SimulateOutput run_simulate(const ExperimentConfig& config,
                            const std::filesystem::path& out_dir,
                            TagFormat format);

Manifest load_manifest(const std::filesystem::path& path);

struct AnalyzeOutput {
    AnalysisResult result;
    std::vector<std::filesystem::path> files;
};

AnalyzeOutput run_analyze(const std::filesystem::path& manifest_path,
                          const std::optional<AnalysisParams>& params_override,
                          const std::filesystem::path& out_dir);

// Analyze a bare pair of tag files (no manifest): histogram, peaks and the
// windowed coincidence rate; no visibility curves. duration_s <= 0 means
// estimate the duration from the tag span.
AnalyzeOutput run_analyze_pair(const std::filesystem::path& tags_a,
                               const std::filesystem::path& tags_b,
                               TagFormat format, const AnalysisParams& params,
                               double duration_s,
                               const std::filesystem::path& out_dir);

struct BudgetOutput {
    BudgetCurve curve;
    // pair index -> calibrated fixed_loss_db on the pair's second system
    std::vector<double> calibrated_fixed_loss_db;
    std::vector<std::filesystem::path> files;
};

BudgetOutput run_budget(const BudgetConfig& config,
                        const std::filesystem::path& out_dir, bool calibrate);

} // namespace pairlink
