#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "pairlink/rng.hpp"

namespace pairlink {

enum class SourcePreset { Degenerate, Nondegenerate, Custom };

// Temperature-tuned SPDC source. Presets carry the two calibrated operating
// points of the tuning curve; custom sources supply their own spectra.
struct SourceConfig {
    double crystal_temperature_c = 26.5;
    double pump_wavelength_nm = 405.0;
    double brightness_pairs_per_s = 1e6; // scales linearly with pump power
    SourcePreset preset = SourcePreset::Degenerate;
    double signal_center_nm = 810.0;
    double idler_center_nm = 810.0;
    double signal_fwhm_nm = 7.0;
    double idler_fwhm_nm = 7.0;

    // Throws ConfigError; checks energy conservation of the line centers
    // against the pump to 0.2%.
    void validate() const;
};

SourceConfig degenerate_source();
SourceConfig nondegenerate_source();

// Two-photon polarization state with reduced coherences. v_hv and v_da are
// the correlation visibilities in the H/V and D/A analyzer bases;
// v_hv = v_da = 1 with phase_sign = +1 is the ideal correlated state.
struct PolarizationModel {
    double v_hv = 1.0;
    double v_da = 1.0;
    int phase_sign = +1; // +1 or -1

    void validate() const;
};

struct PairEvent {
    double emission_time_ps = 0.0;
    double signal_wavelength_nm = 0.0;
    double idler_wavelength_nm = 0.0;
    const PolarizationModel* polarization = nullptr; // shared, non-owning
};

// Wavelength-division multiplexer splitting the two photons into arms A/B.
// In degenerate mode the spectra overlap one channel and the device acts as
// a 50/50 splitter for every photon.
struct WdmSpec {
    double channel_a_center_nm = 774.0;
    double channel_b_center_nm = 850.0;
    double isolation_db = 15.0;
    bool degenerate_mode = false;

    void validate() const;
};

// Calibrated temperature range of the tuning curve, degrees C.
inline constexpr double kTuningRangeMinC = 20.0;
inline constexpr double kTuningRangeMaxC = 40.0;

// Idler wavelength from energy conservation: 1/idler = 1/pump - 1/signal.
double idler_from_energy_conservation(double pump_nm, double signal_nm);

// Signal/idler centers for a crystal temperature, from the linear tuning
// curve through the two calibrated anchor points (26.5 C -> 810 nm,
// 34 C -> 774 nm) plus energy conservation for the idler.
// Throws OutOfCalibrationError outside [20, 40] C.
std::pair<double, double> phase_matched_wavelengths(double temperature_c,
                                                    const SourceConfig& source);

// The Gaussian lines are truncated at +/- 8 sigma (redraw beyond), purely so
// the sampled wavelengths have hard bounds; at 8 sigma the truncation is
// statistically invisible.
inline constexpr double kLineTruncationSigmas = 8.0;

// Spectral line of the source: signal wavelength from a truncated Gaussian,
// idler pinned by energy conservation, so the two are anti-correlated pair
// by pair.
class SourceLine {
public:
    explicit SourceLine(const SourceConfig& source);

    double sample_signal_nm(Rng& rng) const;
    double idler_nm(double signal_nm) const;

    // Hard bounds of the sampled wavelengths.
    double signal_min_nm() const { return signal_min_nm_; }
    double signal_max_nm() const { return signal_max_nm_; }
    double idler_min_nm() const { return idler_nm(signal_max_nm_); }
    double idler_max_nm() const { return idler_nm(signal_min_nm_); }

private:
    double pump_nm_;
    double center_nm_;
    double sigma_nm_;
    double signal_min_nm_;
    double signal_max_nm_;
};

// Streaming emission sampler: homogeneous Poisson arrival times at the
// configured brightness plus the SourceLine spectra.
class PairEmissionSampler {
public:
    PairEmissionSampler(const SourceConfig& source, Rng rng,
                        const PolarizationModel* polarization = nullptr);

    // Next emission before duration_s, or nullopt once the process leaves
    // the window. Emission times are strictly nondecreasing.
    std::optional<PairEvent> next(double duration_s);

    const SourceLine& line() const { return line_; }

private:
    SourceConfig source_;
    Rng rng_;
    const PolarizationModel* polarization_;
    SourceLine line_;
    double clock_ps_ = 0.0;
    bool exhausted_ = false;
};

std::vector<PairEvent> sample_pair_emissions(const SourceConfig& source,
                                             double duration_s, uint64_t seed);

enum class Arm : uint8_t { A = 0, B = 1 };

inline const char* to_string(Arm arm)
{
    return arm == Arm::A ? "A" : "B";
}

struct PairRouting {
    Arm signal_arm;
    Arm idler_arm;
};

// Matched-channel probability for one photon: 1 - 10^(-isolation_db/10).
double wdm_match_probability(const WdmSpec& wdm);

// Arm whose channel center is nearest the wavelength (ties go to A).
Arm wdm_matched_arm(const WdmSpec& wdm, double wavelength_nm);

// Route one photon: matched arm with the match probability, the opposite arm
// otherwise. Degenerate mode routes 50/50 regardless of wavelength.
Arm wdm_route_photon(double wavelength_nm, const WdmSpec& wdm, Rng& rng);

PairRouting wdm_route(const PairEvent& event, const WdmSpec& wdm, Rng& rng);

} // namespace pairlink
