#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace pairlink {

// Analytic detected-pair-rate model of one source + fiber + detector system.
// The signal photon is detected at the source; the idler crosses length_km
// of fiber. fixed_loss_db bundles every non-fiber loss (WDM insertion,
// coupling, gating duty cycle); fundamental_mode_fraction is the pair-level
// fraction that survives temporal filtering to the fundamental mode.
struct SystemModel {
    std::string label;
    double brightness_pairs_per_s = 1e6;
    double detector_efficiency_source_arm = 0.5;
    double detector_efficiency_fiber_arm = 0.5;
    double attenuation_db_per_km = 3.0;
    double fixed_loss_db = 0.0;
    double wdm_split_factor = 1.0; // 0.5 when the WDM acts as a beam splitter
    double fundamental_mode_fraction = 1.0;

    void validate() const;

    // Rate at zero length: brightness * efficiencies * wdm * mode fraction
    // * 10^(-fixed_loss_db/10).
    double length_independent_rate() const;
};

// brightness * eta_s * eta_f * wdm * mode * 10^(-(att*L + fixed)/10).
double pair_rate(const SystemModel& sys, double length_km);

struct LengthInterval {
    double lo_km = 0.0;
    double hi_km = 100.0;
};

// Length at which the two rate curves intersect. The model is log-linear in
// length, so the solution is closed form:
//   L = 10 * log10(K_a / K_b) / (att_a - att_b)
// with K the length-independent factor of each system. Throws
// NoCrossoverError when the curves never intersect inside the bracket.
double crossover_km(const SystemModel& a, const SystemModel& b,
                    LengthInterval bracket = {});

// fixed_loss_db on sys_b that places crossover_km(a, b) exactly at the
// target. Throws NoCrossoverError when the attenuations are equal.
double calibrate_fixed_loss_db(const SystemModel& a, const SystemModel& b,
                               double target_crossover_km);

struct CrossoverMarker {
    std::string system_a;
    std::string system_b;
    std::optional<double> length_km; // empty when the curves never cross
};

struct BudgetCurve {
    std::vector<double> lengths_km;
    std::vector<std::string> labels;
    std::vector<std::vector<double>> rates; // rates[s][i] for system s
    std::vector<CrossoverMarker> markers;
};

// Tabulates pair_rate for each system over the grid and solves the
// designated crossover pairs (indices into systems). A pair that never
// crosses yields a marker without a length, not an error.
BudgetCurve budget_curve(std::span<const SystemModel> systems,
                         std::span<const double> lengths_km,
                         std::span<const std::pair<size_t, size_t>> marker_pairs = {});

} // namespace pairlink
