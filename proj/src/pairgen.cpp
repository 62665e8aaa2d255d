#include "pairlink/pairgen.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pairlink/errors.hpp"
#include "pairlink/units.hpp"

namespace pairlink {

namespace {

// Anchor points of the temperature tuning curve (degrees C -> signal nm).
constexpr double kAnchorLowC = 26.5;
constexpr double kAnchorLowSignalNm = 810.0;
constexpr double kAnchorHighC = 34.0;
constexpr double kAnchorHighSignalNm = 774.0;

} // namespace

void SourceConfig::validate() const
{
    if (brightness_pairs_per_s < 0.0)
        throw ConfigError("source brightness must be >= 0");
    if (pump_wavelength_nm <= 0.0)
        throw ConfigError("pump wavelength must be > 0");
    if (signal_center_nm <= 0.0 || idler_center_nm <= 0.0)
        throw ConfigError("signal/idler centers must be > 0");
    if (signal_fwhm_nm <= 0.0 || idler_fwhm_nm <= 0.0)
        throw ConfigError("signal/idler FWHM must be > 0");

    const double inv_pump = 1.0 / pump_wavelength_nm;
    const double inv_sum = 1.0 / signal_center_nm + 1.0 / idler_center_nm;
    if (std::abs(inv_sum - inv_pump) > 0.002 * inv_pump)
        throw ConfigError("signal/idler centers violate energy conservation "
                          "against the pump by more than 0.2%");
}

SourceConfig degenerate_source()
{
    SourceConfig s;
    s.crystal_temperature_c = 26.5;
    s.pump_wavelength_nm = 405.0;
    s.preset = SourcePreset::Degenerate;
    s.signal_center_nm = 810.0;
    s.idler_center_nm = 810.0;
    s.signal_fwhm_nm = 7.0;
    s.idler_fwhm_nm = 7.0;
    return s;
}

SourceConfig nondegenerate_source()
{
    SourceConfig s;
    s.crystal_temperature_c = 34.0;
    s.pump_wavelength_nm = 405.0;
    s.preset = SourcePreset::Nondegenerate;
    s.signal_center_nm = 774.0;
    s.idler_center_nm = idler_from_energy_conservation(405.0, 774.0);
    s.signal_fwhm_nm = 2.0;
    s.idler_fwhm_nm = 2.0;
    return s;
}

void PolarizationModel::validate() const
{
    if (v_hv < 0.0 || v_hv > 1.0)
        throw ConfigError("polarization v_hv must be in [0, 1]");
    if (v_da < 0.0 || v_da > 1.0)
        throw ConfigError("polarization v_da must be in [0, 1]");
    if (phase_sign != 1 && phase_sign != -1)
        throw ConfigError("polarization phase_sign must be +1 or -1");
}

void WdmSpec::validate() const
{
    if (channel_a_center_nm <= 0.0 || channel_b_center_nm <= 0.0)
        throw ConfigError("WDM channel centers must be > 0");
    if (isolation_db < 0.0)
        throw ConfigError("WDM isolation must be >= 0 dB");
}

double idler_from_energy_conservation(double pump_nm, double signal_nm)
{
    if (pump_nm <= 0.0 || signal_nm <= pump_nm)
        throw ConfigError("energy conservation requires signal > pump > 0");
    return pump_nm * signal_nm / (signal_nm - pump_nm);
}

std::pair<double, double> phase_matched_wavelengths(double temperature_c,
                                                    const SourceConfig& source)
{
    if (temperature_c < kTuningRangeMinC || temperature_c > kTuningRangeMaxC)
        throw OutOfCalibrationError(
            "crystal temperature " + std::to_string(temperature_c)
            + " C outside calibrated range [20, 40] C");

    const double slope = (kAnchorHighSignalNm - kAnchorLowSignalNm)
        / (kAnchorHighC - kAnchorLowC);
    const double signal = kAnchorLowSignalNm + slope * (temperature_c - kAnchorLowC);
    const double idler = idler_from_energy_conservation(source.pump_wavelength_nm, signal);
    return { signal, idler };
}

SourceLine::SourceLine(const SourceConfig& source)
    : pump_nm_(source.pump_wavelength_nm)
    , center_nm_(source.signal_center_nm)
    , sigma_nm_(fwhm_to_sigma(source.signal_fwhm_nm))
{
    const double spread = kLineTruncationSigmas * sigma_nm_;
    signal_min_nm_ = std::max(center_nm_ - spread, pump_nm_ + 0.01 * pump_nm_);
    signal_max_nm_ = center_nm_ + spread;
    if (signal_min_nm_ >= signal_max_nm_)
        throw ConfigError("signal line lies at or below the pump wavelength");
}

double SourceLine::sample_signal_nm(Rng& rng) const
{
    double wavelength;
    do {
        wavelength = center_nm_ + sigma_nm_ * rng.normal01();
    } while (wavelength < signal_min_nm_ || wavelength > signal_max_nm_);
    return wavelength;
}

double SourceLine::idler_nm(double signal_nm) const
{
    return idler_from_energy_conservation(pump_nm_, signal_nm);
}

PairEmissionSampler::PairEmissionSampler(const SourceConfig& source, Rng rng,
                                         const PolarizationModel* polarization)
    : source_(source)
    , rng_(rng)
    , polarization_(polarization)
    , line_(source)
{
}

std::optional<PairEvent> PairEmissionSampler::next(double duration_s)
{
    if (exhausted_ || duration_s <= 0.0 || source_.brightness_pairs_per_s <= 0.0) {
        exhausted_ = true;
        return std::nullopt;
    }

    const double rate_per_ps = source_.brightness_pairs_per_s / kPsPerS;
    clock_ps_ += rng_.exponential(rate_per_ps);
    if (clock_ps_ > duration_s * kPsPerS) {
        exhausted_ = true;
        return std::nullopt;
    }

    PairEvent ev;
    ev.emission_time_ps = clock_ps_;
    ev.signal_wavelength_nm = line_.sample_signal_nm(rng_);
    ev.idler_wavelength_nm = line_.idler_nm(ev.signal_wavelength_nm);
    ev.polarization = polarization_;
    return ev;
}

std::vector<PairEvent> sample_pair_emissions(const SourceConfig& source,
                                             double duration_s, uint64_t seed)
{
    if (duration_s < 0.0)
        throw ConfigError("emission duration must be >= 0");
    source.validate();

    PairEmissionSampler sampler(source, substream(seed, "pairgen"));
    std::vector<PairEvent> events;
    if (source.brightness_pairs_per_s > 0.0 && duration_s > 0.0)
        events.reserve(static_cast<size_t>(
            source.brightness_pairs_per_s * duration_s * 1.1) + 16);
    while (auto ev = sampler.next(duration_s))
        events.push_back(*ev);
    return events;
}

double wdm_match_probability(const WdmSpec& wdm)
{
    return 1.0 - db_loss_to_transmittance(wdm.isolation_db);
}

Arm wdm_matched_arm(const WdmSpec& wdm, double wavelength_nm)
{
    const double da = std::abs(wavelength_nm - wdm.channel_a_center_nm);
    const double db = std::abs(wavelength_nm - wdm.channel_b_center_nm);
    return da <= db ? Arm::A : Arm::B;
}

Arm wdm_route_photon(double wavelength_nm, const WdmSpec& wdm, Rng& rng)
{
    if (wdm.degenerate_mode)
        return rng.bernoulli(0.5) ? Arm::A : Arm::B;

    const Arm matched = wdm_matched_arm(wdm, wavelength_nm);
    if (rng.bernoulli(wdm_match_probability(wdm)))
        return matched;
    return matched == Arm::A ? Arm::B : Arm::A;
}

PairRouting wdm_route(const PairEvent& event, const WdmSpec& wdm, Rng& rng)
{
    // Signal routed first, then idler; fixed order keeps seeded runs stable.
    PairRouting routing;
    routing.signal_arm = wdm_route_photon(event.signal_wavelength_nm, wdm, rng);
    routing.idler_arm = wdm_route_photon(event.idler_wavelength_nm, wdm, rng);
    return routing;
}

} // namespace pairlink
