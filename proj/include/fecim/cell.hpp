#pragma once

#include <array>

#include "fecim/device.hpp"

namespace fecim {

// The 2T1C unit cell: two complementary FeFETs (M1, M2) and one capacitor.
// M1 gates off WL and couples node X to the true input rail; M2 gates off
// WLB and couples node X to the complement rail. During writes M1's source
// sits on BLB and M2's source on BL, which is what makes the two-phase
// schedule land the '0' in phase 1 and the '1' in phase 2.

struct Cell2T1C {
    FeFetInstance m1;
    FeFetInstance m2;
    CapacitorInstance cap;

    bool complementary() const { return (m1.stored_bit ^ m2.stored_bit) == 1; }
    int weight() const { return m1.stored_bit; }
};

struct WritePhaseVoltages {
    double v_scl = 0.0;
    double v_bl = 0.0;
    double v_blb = 0.0;
    double v_wl = 0.0;
    double v_wlb = 0.0;
};

using WriteSchedule = std::array<WritePhaseVoltages, 2>;

struct InputBitPair {
    int value = 0;
    double v_true = 0.0;  // rail driven on the 'true' input line
    double v_comp = 0.0;  // complement line
};

// value=1 -> (VDD, GND); value=0 -> (GND, VDD).
InputBitPair make_input(int bit, const FeFetParams& params);

// Both rails grounded: the masked-row stimulus. The cell still loads ScL
// capacitively but contributes V_X = GND.
InputBitPair inactive_input();

// Two-phase rail schedule from Table-style write setup. Phase 1 writes the
// '0' through the bitlines with grounded wordlines; phase 2 raises both
// wordlines to v_write and writes the '1'.
WriteSchedule plan_write(int target_weight, const FeFetParams& params);

// The same phase with both wordlines replaced by v_write/2 (unselected row).
WritePhaseVoltages half_select(const WritePhaseVoltages& phase, const FeFetParams& params);

// Effective per-device gate-source voltages implied by one phase's rails.
double phase_vgs_m1(const WritePhaseVoltages& phase);
double phase_vgs_m2(const WritePhaseVoltages& phase);

// Applies one phase's pulses to both FeFETs. Propagates DisturbRisk.
Cell2T1C apply_phase(const Cell2T1C& cell, const WritePhaseVoltages& phase,
                     const FeFetParams& params);

// Runs a full two-phase schedule and checks the complementary invariant.
Cell2T1C execute_write(const Cell2T1C& cell, const WriteSchedule& schedule,
                       const FeFetParams& params);

enum class XnorModel { ideal, divider };

// Internal node voltage V_X for one XNOR evaluation. Ideal model: the rail
// behind the on-state FeFET. Divider model: resistive division between the
// two input rails through the stored on/off resistances; an infinite off
// resistance collapses to the ideal model.
double cell_xnor(const Cell2T1C& cell, const InputBitPair& input,
                 const FeFetParams& params, XnorModel model);

} // namespace fecim
