#include "fecim/cell.hpp"

#include <cassert>
#include <cmath>

#include "fecim/errors.hpp"

namespace fecim {

InputBitPair make_input(int bit, const FeFetParams& params) {
    if (bit)
        return InputBitPair{1, params.v_dd, 0.0};
    return InputBitPair{0, 0.0, params.v_dd};
}

InputBitPair inactive_input() { return InputBitPair{0, 0.0, 0.0}; }

WriteSchedule plan_write(int target_weight, const FeFetParams& params) {
    const double vw = params.v_write;
    WritePhaseVoltages phase1;
    phase1.v_bl = target_weight ? vw : 0.0;
    phase1.v_blb = target_weight ? 0.0 : vw;
    WritePhaseVoltages phase2 = phase1;
    phase2.v_wl = vw;
    phase2.v_wlb = vw;
    return WriteSchedule{phase1, phase2};
}

WritePhaseVoltages half_select(const WritePhaseVoltages& phase, const FeFetParams& params) {
    WritePhaseVoltages out = phase;
    out.v_wl = params.v_write / 2.0;
    out.v_wlb = params.v_write / 2.0;
    return out;
}

double phase_vgs_m1(const WritePhaseVoltages& phase) { return phase.v_wl - phase.v_blb; }
double phase_vgs_m2(const WritePhaseVoltages& phase) { return phase.v_wlb - phase.v_bl; }

Cell2T1C apply_phase(const Cell2T1C& cell, const WritePhaseVoltages& phase,
                     const FeFetParams& params) {
    Cell2T1C out = cell;
    out.m1 = apply_gate_pulse(out.m1, phase_vgs_m1(phase), params);
    out.m2 = apply_gate_pulse(out.m2, phase_vgs_m2(phase), params);
    return out;
}

Cell2T1C execute_write(const Cell2T1C& cell, const WriteSchedule& schedule,
                       const FeFetParams& params) {
    Cell2T1C out = cell;
    for (const WritePhaseVoltages& phase : schedule)
        out = apply_phase(out, phase, params);
    if (!out.complementary())
        throw ComplementarityViolation("write left both FeFETs storing the same bit");
    return out;
}

double cell_xnor(const Cell2T1C& cell, const InputBitPair& input,
                 const FeFetParams& params, XnorModel model) {
    if (!cell.complementary())
        throw InvalidCell("cell violates the complementary storage invariant");
    // Compute-phase rails are clamped to {GND, VDD}; with v_dd < v_write no
    // disturb check can fire during XNOR.
    assert((input.v_true == 0.0 || input.v_true == params.v_dd) &&
           (input.v_comp == 0.0 || input.v_comp == params.v_dd));
    if (model == XnorModel::ideal) {
        // One FeFET is on; node X follows its input rail.
        return cell.m1.stored_bit ? input.v_true : input.v_comp;
    }
    const double r1 = cell.m1.stored_bit ? cell.m1.r_on : cell.m1.r_off;
    const double r2 = cell.m2.stored_bit ? cell.m2.r_on : cell.m2.r_off;
    const double g1 = std::isinf(r1) ? 0.0 : 1.0 / r1;
    const double g2 = std::isinf(r2) ? 0.0 : 1.0 / r2;
    return (g1 * input.v_true + g2 * input.v_comp) / (g1 + g2);
}

} // namespace fecim
