#pragma once

#include <cmath>
#include <numbers>

// Unit conventions used across the library: time in picoseconds, wavelength
// in nanometres, fiber length in kilometres, loss in dB, rates in 1/s.

namespace pairlink {

inline constexpr double kSpeedOfLightMPerS = 299792458.0;
inline constexpr double kPsPerS = 1e12;
inline constexpr double kPsPerNs = 1e3;

inline double deg_to_rad(double deg)
{
    return deg * std::numbers::pi / 180.0;
}

// Gaussian FWHM -> standard deviation.
inline double fwhm_to_sigma(double fwhm)
{
    return fwhm / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
}

// Power ratio for a loss expressed in dB (loss_db >= 0 gives a value <= 1).
inline double db_loss_to_transmittance(double loss_db)
{
    return std::pow(10.0, -loss_db / 10.0);
}

inline double linear_to_db(double ratio)
{
    return 10.0 * std::log10(ratio);
}

} // namespace pairlink
