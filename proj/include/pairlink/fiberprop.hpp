#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pairlink/pairgen.hpp"
#include "pairlink/rng.hpp"

namespace pairlink {

enum class ModeId : uint8_t { LP01, LP11, LP21, LP02 };

const char* to_string(ModeId mode);

// Which LP modes count as guided: the step-index Bessel cutoffs, or the
// two-mode truncation used when only LP01/LP11 are treated as relevant.
enum class ModeSetPolicy { PaperTwoMode, CutoffDerived };

struct AttenuationPoint {
    double wavelength_nm;
    double db_per_km;
};

// Piecewise-linear attenuation of standard G.652D fiber. The table pins
// 3 dB/km at 810 nm and 0.22 dB/km at 1550 nm; the remaining points are
// plumbing to keep lookups inside the band flat and the long-wavelength
// slope plausible.
std::vector<AttenuationPoint> default_attenuation_table();

struct FiberSpec {
    double length_km = 6.0;
    double core_radius_um = 4.1;        // standard G.652D datasheet value
    double numerical_aperture = 0.14;   // standard G.652D datasheet value
    double mode_field_diameter_um = 9.2; // informational
    double group_index = 1.47;
    std::vector<AttenuationPoint> attenuation_table = default_attenuation_table();
    double dgd_ns_per_km = 2.0; // LP11 minus LP01 group delay, configurable
    double lp11_excitation = 0.0; // per-photon probability of entering LP11
    ModeSetPolicy mode_set_policy = ModeSetPolicy::PaperTwoMode;

    void validate() const;
};

// Normalized frequency V = 2*pi*a*NA/lambda. Throws on wavelength <= 0.
double v_number(double core_radius_um, double numerical_aperture,
                double wavelength_nm);

// LP mode cutoffs for a step-index fiber.
inline constexpr double kLp11CutoffV = 2.405;  // first zero of J0
inline constexpr double kLp21Lp02CutoffV = 3.832; // first zero of J1

std::vector<ModeId> guided_lp_modes(double v, ModeSetPolicy policy);

// Loss lookups flag results that needed extrapolation beyond the table.
struct LossResult {
    double db = 0.0;
    bool extrapolated = false;
};

LossResult attenuation_db_per_km(const FiberSpec& fiber, double wavelength_nm);
LossResult transmission_db(const FiberSpec& fiber, double wavelength_nm,
                           double length_km);

// Deterministic delays of the two transported modes.
double base_group_delay_ps(const FiberSpec& fiber);
double lp11_extra_delay_ps(const FiberSpec& fiber);

struct FiberTransit {
    double arrival_time_ps;
    ModeId mode;
};

// One-photon Monte-Carlo transport: the mode is drawn first (LP11 with
// probability lp11_excitation, LP01 otherwise), then survival against the
// fiber transmission. Losing the photon is a normal outcome (nullopt).
std::optional<FiberTransit> propagate(double emission_time_ps,
                                      double wavelength_nm,
                                      const FiberSpec& fiber, Rng& rng);

struct ArrivalEvent {
    double arrival_time_ps = 0.0;
    double wavelength_nm = 0.0;
    ModeId mode = ModeId::LP01;
    Arm arm = Arm::A;
    int64_t pair_id = 0;
    const PolarizationModel* polarization = nullptr;
};

// Full-record transport of one photon of an emitted pair through the fiber
// of its arm; arrival_time is never before the emission time.
std::optional<ArrivalEvent> propagate(const PairEvent& pair, bool is_signal,
                                      Arm arm, int64_t pair_id,
                                      const FiberSpec& fiber, Rng& rng);

// Precomputed survival model for one fiber; propagate() and the simulation
// pipeline share it so both run the same arithmetic.
class FiberTransport {
public:
    explicit FiberTransport(const FiberSpec& fiber);

    // Survival probability at a wavelength (10^(-transmission_db/10)).
    double survival(double wavelength_nm) const;

    // Upper bound of survival over a wavelength interval. The pipeline uses
    // it to discard dead photons before sampling their exact wavelength,
    // which is valid because the emission sampler guarantees bounded lines.
    double survival_cap_over(double lo_nm, double hi_nm) const;

    double base_delay_ps() const { return base_delay_ps_; }
    double lp11_delay_ps() const { return lp11_delay_ps_; }
    const FiberSpec& spec() const { return fiber_; }

private:
    FiberSpec fiber_;
    double loss_scale_ = 0.0; // -ln(10)/10 * length_km
    double base_delay_ps_ = 0.0;
    double lp11_delay_ps_ = 0.0;
};

} // namespace pairlink
