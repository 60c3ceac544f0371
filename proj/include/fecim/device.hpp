#pragma once

#include <cstdint>
#include <limits>

#include "fecim/rng.hpp"

namespace fecim {

// Behavioral FeFET: a two-state nonvolatile resistive switch. The gate-side
// polarization dynamics are reduced to a threshold rule on |V_GS|.

struct FeFetParams {
    double v_write = 1.5;          // polarization switching threshold [V]
    double v_dd = 0.45;            // read/compute rail [V], must stay below v_write
    double r_on_nominal = 10e3;    // [ohm]
    double r_off_nominal = 1e6;    // [ohm]
    double disturb_margin = 0.75;  // largest |V_GS| guaranteed non-disturbing [V]

    void validate() const;  // throws ConfigError on violated invariants
};

struct FeFetInstance {
    int stored_bit = 0;  // 1 = positive polarization (low V_TH, on), 0 = off
    double r_on = 10e3;
    double r_off = 1e6;  // may be +infinity (ideal off state)
};

struct CapacitorInstance {
    double c_nominal = 1.2e-15;
    double c_sampled = 1.2e-15;
};

struct VariationSpec {
    double sigma_c = 0.0;  // normalized std of the cell capacitor
    double sigma_r = 0.0;  // normalized std of the log-normal resistance spread
    double on_off_ratio = std::numeric_limits<double>::infinity();
    std::uint64_t seed = 0;

    bool infinite_ratio() const { return std::isinf(on_off_ratio); }
    void validate() const;  // throws ConfigError
};

// Gaussian capacitor around c_nominal with std sigma_c * c_nominal, resampled
// until positive. sigma_c >= 0.5 is rejected: the truncation would no longer
// be a tail correction.
CapacitorInstance sample_capacitor(double c_nominal, const VariationSpec& spec, RngStream& stream);

// Log-normal resistances: r = r_nominal * exp(g * s) with
// s = sqrt(ln(1 + sigma_r^2)), so the coefficient of variation of the
// multiplicative factor equals sigma_r. A finite on_off_ratio overrides
// r_off_nominal = ratio * r_on_nominal; an infinite ratio yields r_off = inf.
FeFetInstance sample_fefet(const FeFetParams& params, const VariationSpec& spec,
                           RngStream& stream, int initial_bit);

// Threshold switching rule:
//   v_gs >= +v_write       -> stored_bit = 1
//   v_gs <= -v_write       -> stored_bit = 0
//   |v_gs| <= disturb_margin -> unchanged
//   otherwise              -> DisturbRisk (undefined partial-switching band)
FeFetInstance apply_gate_pulse(const FeFetInstance& fefet, double v_gs, const FeFetParams& params);

} // namespace fecim
