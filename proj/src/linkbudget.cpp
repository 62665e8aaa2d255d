#include "pairlink/linkbudget.hpp"

#include <cmath>

#include "pairlink/errors.hpp"
#include "pairlink/units.hpp"

namespace pairlink {

void SystemModel::validate() const
{
    auto check_probability = [&](double value, const char* name) {
        if (value < 0.0 || value > 1.0)
            throw ConfigError("system '" + label + "': " + name
                              + " must be in [0, 1]");
    };
    if (brightness_pairs_per_s < 0.0)
        throw ConfigError("system '" + label + "': brightness must be >= 0");
    if (attenuation_db_per_km < 0.0)
        throw ConfigError("system '" + label + "': attenuation must be >= 0");
    check_probability(detector_efficiency_source_arm,
                      "detector_efficiency_source_arm");
    check_probability(detector_efficiency_fiber_arm,
                      "detector_efficiency_fiber_arm");
    check_probability(wdm_split_factor, "wdm_split_factor");
    check_probability(fundamental_mode_fraction, "fundamental_mode_fraction");
}

double SystemModel::length_independent_rate() const
{
    return brightness_pairs_per_s * detector_efficiency_source_arm
        * detector_efficiency_fiber_arm * wdm_split_factor
        * fundamental_mode_fraction * db_loss_to_transmittance(fixed_loss_db);
}

double pair_rate(const SystemModel& sys, double length_km)
{
    if (length_km < 0.0)
        throw ConfigError("pair_rate: length must be >= 0");
    return sys.length_independent_rate()
        * db_loss_to_transmittance(sys.attenuation_db_per_km * length_km);
}

double crossover_km(const SystemModel& a, const SystemModel& b,
                    LengthInterval bracket)
{
    const double ka = a.length_independent_rate();
    const double kb = b.length_independent_rate();
    if (ka <= 0.0 || kb <= 0.0)
        throw NoCrossoverError("crossover undefined for a zero-rate system");
    const double att_diff = a.attenuation_db_per_km - b.attenuation_db_per_km;
    if (att_diff == 0.0)
        throw NoCrossoverError("systems with equal attenuation never cross");

    // The model is exactly log-linear in length, so the rate equality has
    // the closed-form solution below; no iteration is needed.
    const double length = 10.0 * std::log10(ka / kb) / att_diff;
    if (!std::isfinite(length) || length < bracket.lo_km
        || length > bracket.hi_km)
        throw NoCrossoverError("no crossover inside the bracket ["
                               + std::to_string(bracket.lo_km) + ", "
                               + std::to_string(bracket.hi_km) + "] km");
    return length;
}

double calibrate_fixed_loss_db(const SystemModel& a, const SystemModel& b,
                               double target_crossover_km)
{
    const double att_diff = a.attenuation_db_per_km - b.attenuation_db_per_km;
    if (att_diff == 0.0)
        throw NoCrossoverError("calibration requires distinct attenuations");

    // Solve pair_rate equality at the target length for b's fixed loss:
    //   10 log10(K_a) - 10 log10(F_b) + fixed_b = target * (att_a - att_b)
    // where F_b is b's factor with zero fixed loss.
    SystemModel b_no_fixed = b;
    b_no_fixed.fixed_loss_db = 0.0;
    const double ka = a.length_independent_rate();
    const double fb = b_no_fixed.length_independent_rate();
    if (ka <= 0.0 || fb <= 0.0)
        throw NoCrossoverError("calibration undefined for a zero-rate system");
    return target_crossover_km * att_diff - linear_to_db(ka / fb);
}

BudgetCurve budget_curve(std::span<const SystemModel> systems,
                         std::span<const double> lengths_km,
                         std::span<const std::pair<size_t, size_t>> marker_pairs)
{
    if (lengths_km.empty())
        throw ConfigError("budget_curve: length grid must not be empty");
    if (systems.empty())
        throw ConfigError("budget_curve: at least one system required");

    BudgetCurve curve;
    curve.lengths_km.assign(lengths_km.begin(), lengths_km.end());
    for (const auto& sys : systems) {
        sys.validate();
        curve.labels.push_back(sys.label);
        std::vector<double> rates;
        rates.reserve(lengths_km.size());
        for (const double length : lengths_km)
            rates.push_back(pair_rate(sys, length));
        curve.rates.push_back(std::move(rates));
    }

    const LengthInterval bracket { lengths_km.front(), lengths_km.back() };
    for (const auto& [ia, ib] : marker_pairs) {
        if (ia >= systems.size() || ib >= systems.size())
            throw ConfigError("budget_curve: marker pair index out of range");
        CrossoverMarker marker;
        marker.system_a = systems[ia].label;
        marker.system_b = systems[ib].label;
        try {
            marker.length_km = crossover_km(systems[ia], systems[ib], bracket);
        } catch (const NoCrossoverError&) {
            marker.length_km.reset(); // absent marker, not a failure
        }
        curve.markers.push_back(std::move(marker));
    }
    return curve;
}

} // namespace pairlink
