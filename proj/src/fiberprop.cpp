#include "pairlink/fiberprop.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pairlink/errors.hpp"
#include "pairlink/units.hpp"

namespace pairlink {

const char* to_string(ModeId mode)
{
    switch (mode) {
    case ModeId::LP01: return "LP01";
    case ModeId::LP11: return "LP11";
    case ModeId::LP21: return "LP21";
    case ModeId::LP02: return "LP02";
    }
    return "?";
}

std::vector<AttenuationPoint> default_attenuation_table()
{
    return {
        { 760.0, 3.0 },
        { 810.0, 3.0 },
        { 860.0, 3.0 },
        { 1310.0, 0.35 },
        { 1550.0, 0.22 },
    };
}

void FiberSpec::validate() const
{
    if (length_km < 0.0)
        throw ConfigError("fiber length must be >= 0");
    if (core_radius_um <= 0.0)
        throw ConfigError("fiber core radius must be > 0");
    if (numerical_aperture < 0.0)
        throw ConfigError("fiber numerical aperture must be >= 0");
    if (group_index <= 0.0)
        throw ConfigError("fiber group index must be > 0");
    if (lp11_excitation < 0.0 || lp11_excitation > 1.0)
        throw ConfigError("lp11_excitation must be in [0, 1]");
    if (attenuation_table.empty())
        throw ConfigError("attenuation table must not be empty");
    for (size_t i = 0; i < attenuation_table.size(); ++i) {
        if (attenuation_table[i].db_per_km < 0.0)
            throw ConfigError("attenuation values must be >= 0 dB/km");
        if (i > 0 && attenuation_table[i].wavelength_nm
                <= attenuation_table[i - 1].wavelength_nm)
            throw ConfigError("attenuation table wavelengths must be "
                              "strictly increasing");
    }
}

double v_number(double core_radius_um, double numerical_aperture,
                double wavelength_nm)
{
    if (wavelength_nm <= 0.0)
        throw std::domain_error("v_number: wavelength must be > 0");
    if (core_radius_um <= 0.0)
        throw std::domain_error("v_number: core radius must be > 0");
    if (numerical_aperture < 0.0)
        throw std::domain_error("v_number: NA must be >= 0");
    const double radius_nm = core_radius_um * 1000.0;
    return 2.0 * std::numbers::pi * radius_nm * numerical_aperture / wavelength_nm;
}

std::vector<ModeId> guided_lp_modes(double v, ModeSetPolicy policy)
{
    std::vector<ModeId> modes { ModeId::LP01 }; // always guided
    if (v > kLp11CutoffV)
        modes.push_back(ModeId::LP11);
    if (policy == ModeSetPolicy::CutoffDerived && v > kLp21Lp02CutoffV) {
        modes.push_back(ModeId::LP21);
        modes.push_back(ModeId::LP02);
    }
    return modes;
}

LossResult attenuation_db_per_km(const FiberSpec& fiber, double wavelength_nm)
{
    const auto& table = fiber.attenuation_table;
    if (table.empty())
        throw ConfigError("attenuation table must not be empty");

    LossResult result;
    if (table.size() == 1) {
        result.db = table.front().db_per_km;
        result.extrapolated = wavelength_nm != table.front().wavelength_nm;
        return result;
    }

    size_t hi = 1;
    if (wavelength_nm <= table.front().wavelength_nm) {
        hi = 1;
        result.extrapolated = wavelength_nm < table.front().wavelength_nm;
    } else if (wavelength_nm >= table.back().wavelength_nm) {
        hi = table.size() - 1;
        result.extrapolated = wavelength_nm > table.back().wavelength_nm;
    } else {
        while (table[hi].wavelength_nm < wavelength_nm)
            ++hi;
    }
    const auto& p0 = table[hi - 1];
    const auto& p1 = table[hi];
    const double t = (wavelength_nm - p0.wavelength_nm)
        / (p1.wavelength_nm - p0.wavelength_nm);
    // Edge-segment slope continues outside the table; attenuation stays >= 0.
    result.db = std::max(0.0, p0.db_per_km + t * (p1.db_per_km - p0.db_per_km));
    return result;
}

LossResult transmission_db(const FiberSpec& fiber, double wavelength_nm,
                           double length_km)
{
    if (length_km < 0.0)
        throw ConfigError("fiber length must be >= 0");
    LossResult att = attenuation_db_per_km(fiber, wavelength_nm);
    att.db *= length_km;
    return att;
}

double base_group_delay_ps(const FiberSpec& fiber)
{
    return fiber.length_km * 1000.0 * fiber.group_index / kSpeedOfLightMPerS
        * kPsPerS;
}

double lp11_extra_delay_ps(const FiberSpec& fiber)
{
    return fiber.dgd_ns_per_km * fiber.length_km * kPsPerNs;
}

FiberTransport::FiberTransport(const FiberSpec& fiber)
    : fiber_(fiber)
    , loss_scale_(-std::numbers::ln10 / 10.0 * fiber.length_km)
    , base_delay_ps_(base_group_delay_ps(fiber))
    , lp11_delay_ps_(lp11_extra_delay_ps(fiber))
{
}

double FiberTransport::survival(double wavelength_nm) const
{
    const LossResult att = attenuation_db_per_km(fiber_, wavelength_nm);
    return std::exp(loss_scale_ * att.db);
}

double FiberTransport::survival_cap_over(double lo_nm, double hi_nm) const
{
    // Attenuation is piecewise linear (clamped at 0), so its minimum over an
    // interval sits at the interval ends or at a table point inside it.
    double min_att = std::min(attenuation_db_per_km(fiber_, lo_nm).db,
                              attenuation_db_per_km(fiber_, hi_nm).db);
    for (const auto& point : fiber_.attenuation_table)
        if (point.wavelength_nm > lo_nm && point.wavelength_nm < hi_nm)
            min_att = std::min(min_att, point.db_per_km);
    return std::min(1.0, std::exp(loss_scale_ * min_att));
}

std::optional<FiberTransit> propagate(double emission_time_ps,
                                      double wavelength_nm,
                                      const FiberSpec& fiber, Rng& rng)
{
    // Mode drawn first, survival second; seeded reruns replay both draws.
    const bool lp11 = rng.bernoulli(fiber.lp11_excitation);
    const FiberTransport transport(fiber);
    if (!rng.bernoulli(transport.survival(wavelength_nm)))
        return std::nullopt;

    FiberTransit transit;
    transit.mode = lp11 ? ModeId::LP11 : ModeId::LP01;
    transit.arrival_time_ps = emission_time_ps + transport.base_delay_ps()
        + (lp11 ? transport.lp11_delay_ps() : 0.0);
    return transit;
}

std::optional<ArrivalEvent> propagate(const PairEvent& pair, bool is_signal,
                                      Arm arm, int64_t pair_id,
                                      const FiberSpec& fiber, Rng& rng)
{
    const double wavelength = is_signal ? pair.signal_wavelength_nm
                                        : pair.idler_wavelength_nm;
    const auto transit = propagate(pair.emission_time_ps, wavelength, fiber, rng);
    if (!transit)
        return std::nullopt;

    ArrivalEvent arrival;
    arrival.arrival_time_ps = transit->arrival_time_ps;
    arrival.wavelength_nm = wavelength;
    arrival.mode = transit->mode;
    arrival.arm = arm;
    arrival.pair_id = pair_id;
    arrival.polarization = pair.polarization;
    return arrival;
}

} // namespace pairlink
