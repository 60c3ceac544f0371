#include <doctest.h>

#include <cmath>
#include <limits>

#include "fecim/cell.hpp"
#include "fecim/errors.hpp"

using namespace fecim;

namespace {

const FeFetParams kParams{};

Cell2T1C make_cell(int weight) {
    Cell2T1C cell;
    cell.m1.stored_bit = weight;
    cell.m2.stored_bit = 1 - weight;
    return cell;
}

} // namespace

TEST_CASE("two-phase write schedule lands the target weight from any state") {
    for (int start : {0, 1}) {
        for (int target : {0, 1}) {
            const Cell2T1C cell = make_cell(start);
            const Cell2T1C out = execute_write(cell, plan_write(target, kParams), kParams);
            CHECK(out.weight() == target);
            CHECK(out.complementary());
        }
    }
}

TEST_CASE("phase rails: the '0' lands in phase 1, the '1' in phase 2") {
    const WriteSchedule sched = plan_write(1, kParams);
    // Phase 1: grounded wordlines, only the device whose source sees v_write
    // switches (to 0).
    CHECK(sched[0].v_wl == 0.0);
    CHECK(sched[0].v_wlb == 0.0);
    CHECK(phase_vgs_m2(sched[0]) == -kParams.v_write);
    CHECK(phase_vgs_m1(sched[0]) == 0.0);
    // Phase 2: both wordlines at v_write, the grounded-source device gets +v_write.
    CHECK(phase_vgs_m1(sched[1]) == kParams.v_write);
    CHECK(phase_vgs_m2(sched[1]) == 0.0);

    Cell2T1C cell = make_cell(0);
    cell = apply_phase(cell, sched[0], kParams);
    CHECK(cell.m2.stored_bit == 0);  // the '0' is already in place
    cell = apply_phase(cell, sched[1], kParams);
    CHECK(cell.m1.stored_bit == 1);
}

TEST_CASE("half-select keeps |V_GS| at v_write/2 and preserves state") {
    for (int target : {0, 1}) {
        const WriteSchedule sched = plan_write(target, kParams);
        for (const WritePhaseVoltages& phase : sched) {
            const WritePhaseVoltages hs = half_select(phase, kParams);
            CHECK(std::abs(phase_vgs_m1(hs)) == kParams.v_write / 2.0);
            CHECK(std::abs(phase_vgs_m2(hs)) == kParams.v_write / 2.0);
            for (int held : {0, 1}) {
                Cell2T1C cell = make_cell(held);
                cell = apply_phase(cell, hs, kParams);
                CHECK(cell.weight() == held);
            }
        }
    }
}

TEST_CASE("xnor truth table (ideal model)") {
    for (int w : {0, 1}) {
        for (int x : {0, 1}) {
            const Cell2T1C cell = make_cell(w);
            const double v = cell_xnor(cell, make_input(x, kParams), kParams, XnorModel::ideal);
            const double expected = (w == x) ? kParams.v_dd : 0.0;
            CHECK(v == expected);
        }
    }
}

TEST_CASE("masked input gives V_X = 0 regardless of weight") {
    for (int w : {0, 1}) {
        const Cell2T1C cell = make_cell(w);
        CHECK(cell_xnor(cell, inactive_input(), kParams, XnorModel::ideal) == 0.0);
        CHECK(cell_xnor(cell, inactive_input(), kParams, XnorModel::divider) == 0.0);
    }
}

TEST_CASE("divider model: finite off resistance leaks the complement rail") {
    // r_on = 10k, r_off = 1M: V_X = v_dd * 100/101 on a match.
    const Cell2T1C cell = make_cell(1);
    const double v = cell_xnor(cell, make_input(1, kParams), kParams, XnorModel::divider);
    CHECK(v == doctest::Approx(kParams.v_dd * 100.0 / 101.0).epsilon(1e-12));
    CHECK(v < kParams.v_dd);

    // Mismatch leaks upward from ground symmetrically.
    const double v0 = cell_xnor(cell, make_input(0, kParams), kParams, XnorModel::divider);
    CHECK(v0 == doctest::Approx(kParams.v_dd * 1.0 / 101.0).epsilon(1e-12));
}

TEST_CASE("divider converges to ideal as the ratio grows") {
    Cell2T1C cell = make_cell(1);
    cell.m1.r_off = 1e9 * cell.m1.r_on;
    cell.m2.r_off = 1e9 * cell.m2.r_on;
    for (int x : {0, 1}) {
        const InputBitPair in = make_input(x, kParams);
        const double ideal = cell_xnor(cell, in, kParams, XnorModel::ideal);
        const double div = cell_xnor(cell, in, kParams, XnorModel::divider);
        CHECK(std::abs(div - ideal) < kParams.v_dd * 1e-8);
    }
    // Infinite off resistance collapses exactly.
    cell.m1.r_off = std::numeric_limits<double>::infinity();
    cell.m2.r_off = std::numeric_limits<double>::infinity();
    for (int x : {0, 1}) {
        const InputBitPair in = make_input(x, kParams);
        CHECK(cell_xnor(cell, in, kParams, XnorModel::divider) ==
              cell_xnor(cell, in, kParams, XnorModel::ideal));
    }
}

TEST_CASE("non-complementary cells are rejected") {
    Cell2T1C cell = make_cell(1);
    cell.m2.stored_bit = 1;
    CHECK_THROWS_AS(cell_xnor(cell, make_input(1, kParams), kParams, XnorModel::ideal),
                    InvalidCell);
}
