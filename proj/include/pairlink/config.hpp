#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "pairlink/detection.hpp"
#include "pairlink/fiberprop.hpp"
#include "pairlink/linkbudget.hpp"
#include "pairlink/pairgen.hpp"

namespace pairlink {

enum class CenterDelayPolicy { Auto, Fixed };

// Parameters of the tag analysis stage. Units are fixed by the interface:
// picoseconds throughout.
struct AnalysisParams {
    int64_t bin_width_ps = 128;
    int64_t range_ps = 50000; // histogram covers +/- range
    int64_t window_ps = 1000;
    CenterDelayPolicy center_policy = CenterDelayPolicy::Auto;
    int64_t center_delay_ps = 0;
    double peak_threshold_sigma = 5.0;

    void validate() const;
};

// One reproducible experiment: source, WDM, the two fiber arms, detectors,
// the analyzer scan and the analysis parameters. All randomness derives from
// the single seed through named substreams, so every stage is independent of
// how many draws the others consume.
struct ExperimentConfig {
    std::string preset_name; // informational
    uint64_t seed = 1;
    double duration_s = 1.0; // per scan point
    std::string output_dir;
    bool symmetric = false; // enforces equal fiber lengths in the two arms
    bool detect_reflected = false; // add detectors on the reflected PBS ports
    bool analyzers_enabled = true;

    SourceConfig source;
    PolarizationModel polarization;
    WdmSpec wdm;
    FiberSpec fiber_a;
    FiberSpec fiber_b;
    DetectorSpec detector_a;
    DetectorSpec detector_b;
    DetectorSpec detector_a_reflect;
    DetectorSpec detector_b_reflect;
    std::vector<AnalyzerSettings> analyzer_scan { AnalyzerSettings {} };
    AnalysisParams analysis;

    size_t channel_count() const { return detect_reflected ? 4 : 2; }
    void validate() const;
};

// Four HWP settings of the signal arm (H, V, D, A) with the idler HWP swept
// through 180 degrees in 22.5-degree steps.
std::vector<AnalyzerSettings> standard_visibility_scan();

std::vector<std::string> experiment_preset_names();
ExperimentConfig experiment_preset(const std::string& name);

// Flat key = value config text. "preset = NAME" loads the preset first; the
// remaining keys override it in file order. Keys under "output." (written
// into manifests) are ignored here. Errors carry origin:line.
ExperimentConfig parse_experiment_config(const std::string& text,
                                         const std::string& origin);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
std::string serialize_experiment_config(const ExperimentConfig& config);

// Link-budget comparison config: a set of analytic systems, the length grid
// and the designated crossover pairs (with optional calibration targets).
struct BudgetConfig {
    std::string preset_name;
    double length_start_km = 0.0;
    double length_stop_km = 12.0;
    double length_step_km = 0.1;
    std::vector<SystemModel> systems;
    std::vector<std::pair<std::string, std::string>> crossover_pairs;
    std::vector<double> calibration_targets_km; // parallel to crossover_pairs

    std::vector<double> length_grid() const;
    size_t system_index(const std::string& label) const; // throws ConfigError
    void validate() const;
};

std::vector<std::string> budget_preset_names();
BudgetConfig budget_preset(const std::string& name);
BudgetConfig parse_budget_config(const std::string& text,
                                 const std::string& origin);
BudgetConfig load_budget_config(const std::filesystem::path& path);
std::string serialize_budget_config(const BudgetConfig& config);

// Shortest round-trip decimal form of a double (std::to_chars).
std::string format_double(double value);

} // namespace pairlink
