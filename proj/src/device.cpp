#include "fecim/device.hpp"

#include <cmath>
#include <string>

#include "fecim/errors.hpp"

namespace fecim {

DisturbRisk::DisturbRisk(double v_gs_, int row_, int col_, int phase_)
    : std::runtime_error("disturb risk: |V_GS| = " + std::to_string(v_gs_) +
                         " V lies in the partial-switching band" +
                         (row_ >= 0 ? " at cell (" + std::to_string(row_) + ", " +
                                          std::to_string(col_) + "), phase " +
                                          std::to_string(phase_)
                                    : std::string())),
      v_gs(v_gs_), row(row_), col(col_), phase(phase_) {}

void FeFetParams::validate() const {
    if (!(v_dd > 0.0) || !(v_dd < v_write))
        throw ConfigError("device: require 0 < v_dd < v_write");
    if (!(r_on_nominal > 0.0) || !(r_on_nominal < r_off_nominal))
        throw ConfigError("device: require 0 < r_on_nominal < r_off_nominal");
    if (!(disturb_margin > 0.0) || !(disturb_margin < v_write))
        throw ConfigError("device: require 0 < disturb_margin < v_write");
}

void VariationSpec::validate() const {
    if (!(sigma_c >= 0.0))
        throw ConfigError("variation: sigma_c must be >= 0");
    if (sigma_c >= 0.5)
        throw ConfigError("variation: sigma_c >= 0.5 rejected (truncation bias over 1%)");
    if (!(sigma_r >= 0.0))
        throw ConfigError("variation: sigma_r must be >= 0");
    if (!infinite_ratio() && !(on_off_ratio > 1.0))
        throw ConfigError("variation: on_off_ratio must be > 1 or infinite");
}

CapacitorInstance sample_capacitor(double c_nominal, const VariationSpec& spec, RngStream& stream) {
    if (!(c_nominal > 0.0))
        throw ConfigError("sample_capacitor: c_nominal must be positive");
    spec.validate();
    double c = c_nominal;
    if (spec.sigma_c > 0.0) {
        do {
            c = c_nominal * (1.0 + spec.sigma_c * stream.next_gaussian());
        } while (!(c > 0.0));
    }
    return CapacitorInstance{c_nominal, c};
}

FeFetInstance sample_fefet(const FeFetParams& params, const VariationSpec& spec,
                           RngStream& stream, int initial_bit) {
    params.validate();
    spec.validate();
    const double r_off_nom =
        spec.infinite_ratio() ? std::numeric_limits<double>::infinity()
                              : spec.on_off_ratio * params.r_on_nominal;
    FeFetInstance f;
    f.stored_bit = initial_bit ? 1 : 0;
    if (spec.sigma_r > 0.0) {
        const double s = std::sqrt(std::log1p(spec.sigma_r * spec.sigma_r));
        f.r_on = params.r_on_nominal * std::exp(s * stream.next_gaussian());
        f.r_off = std::isinf(r_off_nom) ? r_off_nom
                                        : r_off_nom * std::exp(s * stream.next_gaussian());
    } else {
        f.r_on = params.r_on_nominal;
        f.r_off = spec.infinite_ratio() ? r_off_nom
                                        : spec.on_off_ratio * params.r_on_nominal;
    }
    return f;
}

FeFetInstance apply_gate_pulse(const FeFetInstance& fefet, double v_gs, const FeFetParams& params) {
    FeFetInstance out = fefet;
    if (v_gs >= params.v_write) {
        out.stored_bit = 1;
    } else if (v_gs <= -params.v_write) {
        out.stored_bit = 0;
    } else if (std::abs(v_gs) <= params.disturb_margin) {
        // non-disturbing bias, state retained
    } else {
        throw DisturbRisk(v_gs);
    }
    return out;
}

} // namespace fecim
