#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fecim/cell.hpp"

namespace fecim {

// Row-major bit matrix used for weight patterns and read-backs.
struct BitMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<std::uint8_t> bits;  // rows * cols entries, values {0, 1}

    std::uint8_t at(int r, int c) const { return bits[static_cast<std::size_t>(r) * cols + c]; }
    void set(int r, int c, std::uint8_t v) { bits[static_cast<std::size_t>(r) * cols + c] = v; }
    bool operator==(const BitMatrix&) const = default;
};

struct MacroArray {
    int rows = 128;
    int cols = 128;
    FeFetParams params;
    std::vector<Cell2T1C> cells;  // row-major

    Cell2T1C& at(int r, int c) { return cells[static_cast<std::size_t>(r) * cols + c]; }
    const Cell2T1C& at(int r, int c) const {
        return cells[static_cast<std::size_t>(r) * cols + c];
    }
};

// Builds an array with per-cell device/capacitor samples. Each element's
// stream is derived from (spec.seed, salt, row, col, element id), so samples
// are independent of construction order. Cells start in the weight-0 state.
MacroArray make_array(int rows, int cols, const FeFetParams& params,
                      const VariationSpec& spec, std::uint64_t salt = 0);

// |V_GS| audit collected during programming. Magnitudes are bucketed at 1 uV
// resolution; a correct schedule only ever produces {0, v_write/2, v_write}.
struct WriteAudit {
    std::map<std::int64_t, std::uint64_t> magnitude_counts;
    std::uint64_t pulses = 0;

    void record(double v_gs);
    bool only_safe_levels(const FeFetParams& params) const;
    static std::int64_t bucket(double v) { return static_cast<std::int64_t>(std::llround(v * 1e6)); }
};

// Row-by-row two-phase programming with half-select protection: for each
// selected row the full-rail schedule is applied while every unselected row
// holds both wordlines at v_write/2. Pulses are applied (and disturb-checked)
// on every cell of the array. weights.cols must equal the array width;
// weights.rows may be smaller, leaving trailing rows untouched.
void program_array(MacroArray& array, const BitMatrix& weights, WriteAudit* audit = nullptr);

BitMatrix read_back(const MacroArray& array);

struct MacStimulus {
    std::vector<InputBitPair> inputs;  // one entry per array row
};

MacStimulus make_stimulus(std::span<const std::uint8_t> bits, const FeFetParams& params);

struct ArrayMask {
    std::vector<std::uint8_t> row_active;
    std::vector<std::uint8_t> col_active;

    static ArrayMask all(int rows, int cols);
    int active_rows() const;
};

struct MacResult {
    std::vector<double> v_scl;     // per column [V]; 0 for masked columns
    std::vector<int> match_counts; // matches among active rows; 0 for masked columns
    std::vector<double> p_one;     // match_counts / active rows
};

// Two-phase MAC: precharge is modeled as an exact reset, then per column
//   V_ScL = sum_i(V_Xi * C_i) / (sum_i C_i + c_parasitic)
// with V_Xi from cell_xnor under the chosen model. Masked rows contribute
// V_X = GND but keep their capacitors on ScL; masked columns are skipped.
// caps, when non-empty, overrides the cells' own capacitors (row-major,
// rows*cols entries).
MacResult mac_evaluate(const MacroArray& array, const MacStimulus& stimulus, XnorModel model,
                       std::span<const CapacitorInstance> caps = {}, double c_parasitic = 0.0,
                       const ArrayMask* mask = nullptr);

// Shared column solver. plate voltages are the clamped V_X values.
double column_voltage(std::span<const double> v_x, std::span<const double> caps,
                      double c_parasitic);

// C_EQ = M * (N - M) * c_m / N: the charge drawn from the supply during one
// MAC evaluation, expressed as an equivalent capacitance.
double equivalent_capacitance(int m, int n, double c_m);

// Sign activation against a reference voltage; exact ties resolve to +1.
int quantize(double v_scl, double v_ref);

// Maps a bipolar-sum threshold alpha to the ScL reference voltage:
// with s = 2M - N, s > alpha  <=>  V_ScL > v_dd * (N + alpha) / (2N).
double threshold_to_vref(double alpha, int n, double v_dd);

// JSON array dump {rows, cols, weights, params}; bit-exact round-trip.
std::string array_to_json(const MacroArray& array);
MacroArray array_from_json(const std::string& text);
BitMatrix weights_from_json(const std::string& text);

} // namespace fecim
