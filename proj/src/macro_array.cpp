#include "fecim/macro_array.hpp"

#include <cmath>
#include <stdexcept>

#include "fecim/errors.hpp"

#include <json.hpp>

namespace fecim {

MacroArray make_array(int rows, int cols, const FeFetParams& params,
                      const VariationSpec& spec, std::uint64_t salt) {
    if (rows < 1 || cols < 1)
        throw ConfigError("array geometry must be at least 1x1");
    params.validate();
    spec.validate();
    MacroArray array;
    array.rows = rows;
    array.cols = cols;
    array.params = params;
    array.cells.resize(static_cast<std::size_t>(rows) * cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const auto ur = static_cast<std::uint64_t>(r);
            const auto uc = static_cast<std::uint64_t>(c);
            RngStream s_m1 = substream(spec.seed, {salt, ur, uc, 0});
            RngStream s_m2 = substream(spec.seed, {salt, ur, uc, 1});
            RngStream s_cap = substream(spec.seed, {salt, ur, uc, 2});
            Cell2T1C& cell = array.at(r, c);
            cell.m1 = sample_fefet(params, spec, s_m1, 0);
            cell.m2 = sample_fefet(params, spec, s_m2, 1);
            cell.cap = sample_capacitor(1.2e-15, spec, s_cap);
        }
    }
    return array;
}

void WriteAudit::record(double v_gs) {
    ++magnitude_counts[bucket(std::abs(v_gs))];
    ++pulses;
}

bool WriteAudit::only_safe_levels(const FeFetParams& params) const {
    for (const auto& [mag, count] : magnitude_counts) {
        if (mag != 0 && mag != bucket(params.v_write / 2.0) && mag != bucket(params.v_write))
            return false;
    }
    return true;
}

void program_array(MacroArray& array, const BitMatrix& weights, WriteAudit* audit) {
    if (weights.cols != array.cols || weights.rows > array.rows || weights.rows < 1)
        throw ConfigError("weight matrix does not fit the array geometry");
    for (int target = 0; target < weights.rows; ++target) {
        // Column bitlines carry the selected row's target weights in both phases.
        std::vector<WriteSchedule> schedules(array.cols);
        for (int c = 0; c < array.cols; ++c)
            schedules[c] = plan_write(weights.at(target, c), array.params);
        for (int phase = 0; phase < 2; ++phase) {
            for (int r = 0; r < array.rows; ++r) {
                for (int c = 0; c < array.cols; ++c) {
                    WritePhaseVoltages rails = schedules[c][phase];
                    if (r != target)
                        rails = half_select(rails, array.params);
                    if (audit) {
                        audit->record(phase_vgs_m1(rails));
                        audit->record(phase_vgs_m2(rails));
                    }
                    try {
                        array.at(r, c) = apply_phase(array.at(r, c), rails, array.params);
                    } catch (const DisturbRisk& e) {
                        throw DisturbRisk(e.v_gs, r, c, phase + 1);
                    }
                }
            }
        }
        for (int c = 0; c < array.cols; ++c) {
            if (!array.at(target, c).complementary())
                throw ComplementarityViolation("programming row " + std::to_string(target) +
                                               " left a non-complementary cell");
        }
    }
}

BitMatrix read_back(const MacroArray& array) {
    BitMatrix out;
    out.rows = array.rows;
    out.cols = array.cols;
    out.bits.resize(static_cast<std::size_t>(array.rows) * array.cols);
    for (int r = 0; r < array.rows; ++r)
        for (int c = 0; c < array.cols; ++c)
            out.set(r, c, static_cast<std::uint8_t>(array.at(r, c).weight()));
    return out;
}

MacStimulus make_stimulus(std::span<const std::uint8_t> bits, const FeFetParams& params) {
    MacStimulus stim;
    stim.inputs.reserve(bits.size());
    for (std::uint8_t b : bits)
        stim.inputs.push_back(make_input(b, params));
    return stim;
}

ArrayMask ArrayMask::all(int rows, int cols) {
    ArrayMask m;
    m.row_active.assign(static_cast<std::size_t>(rows), 1);
    m.col_active.assign(static_cast<std::size_t>(cols), 1);
    return m;
}

int ArrayMask::active_rows() const {
    int n = 0;
    for (std::uint8_t a : row_active) n += a;
    return n;
}

double column_voltage(std::span<const double> v_x, std::span<const double> caps,
                      double c_parasitic) {
    // With every plate on the same rail and no parasitic load the node
    // settles exactly at that rail; skip the division so no ulp noise leaks.
    if (c_parasitic == 0.0 && !v_x.empty()) {
        bool same = true;
        for (double v : v_x)
            if (v != v_x[0]) { same = false; break; }
        if (same)
            return v_x[0];
    }
    double num = 0.0;
    double den = c_parasitic;
    for (std::size_t i = 0; i < v_x.size(); ++i) {
        num += v_x[i] * caps[i];
        den += caps[i];
    }
    return num / den;
}

MacResult mac_evaluate(const MacroArray& array, const MacStimulus& stimulus, XnorModel model,
                       std::span<const CapacitorInstance> caps, double c_parasitic,
                       const ArrayMask* mask) {
    if (static_cast<int>(stimulus.inputs.size()) != array.rows)
        throw ConfigError("stimulus length does not match the array row count");
    if (!caps.empty() && caps.size() != array.cells.size())
        throw ConfigError("capacitor override does not match the array size");
    if (mask && (static_cast<int>(mask->row_active.size()) != array.rows ||
                 static_cast<int>(mask->col_active.size()) != array.cols))
        throw ConfigError("mask does not match the array geometry");

    const int rows = array.rows;
    const int cols = array.cols;
    const double v_dd = array.params.v_dd;
    const int n_active = mask ? mask->active_rows() : rows;

    MacResult result;
    result.v_scl.assign(cols, 0.0);
    result.match_counts.assign(cols, 0);
    result.p_one.assign(cols, 0.0);

    const InputBitPair masked = inactive_input();
    std::vector<double> vx(rows), cv(rows);
    for (int c = 0; c < cols; ++c) {
        if (mask && !mask->col_active[c])
            continue;
        int matches = 0;
        bool uniform_caps = true;
        bool rail_exact = true;
        int hi = 0;
        double c0 = 0.0;
        for (int r = 0; r < rows; ++r) {
            const bool active = !mask || mask->row_active[r];
            const Cell2T1C& cell = array.at(r, c);
            const InputBitPair& in = active ? stimulus.inputs[r] : masked;
            const double v = cell_xnor(cell, in, array.params, model);
            const double cap = caps.empty()
                                   ? cell.cap.c_sampled
                                   : caps[static_cast<std::size_t>(r) * cols + c].c_sampled;
            vx[r] = v;
            cv[r] = cap;
            if (active && in.value == cell.weight())
                ++matches;
            if (r == 0)
                c0 = cap;
            else if (cap != c0)
                uniform_caps = false;
            if (v == v_dd)
                ++hi;
            else if (v != 0.0)
                rail_exact = false;
        }
        // Equal capacitors with rail-clamped node voltages reduce exactly to
        // v_dd * hi / rows; the explicit form keeps criterion-level exactness.
        if (uniform_caps && rail_exact && c_parasitic == 0.0)
            result.v_scl[c] = v_dd * hi / rows;
        else
            result.v_scl[c] = column_voltage(vx, cv, c_parasitic);
        result.match_counts[c] = matches;
        result.p_one[c] = n_active > 0 ? static_cast<double>(matches) / n_active : 0.0;
    }
    return result;
}

double equivalent_capacitance(int m, int n, double c_m) {
    if (n < 1 || m < 0 || m > n)
        throw ConfigError("equivalent_capacitance: require 0 <= M <= N, N > 0");
    return static_cast<double>(static_cast<std::int64_t>(m) * (n - m)) * c_m / n;
}

int quantize(double v_scl, double v_ref) { return v_scl >= v_ref ? +1 : -1; }

double threshold_to_vref(double alpha, int n, double v_dd) {
    if (n < 1 || std::abs(alpha) > n)
        throw ConfigError("threshold_to_vref: require -N <= alpha <= N, N > 0");
    return v_dd * (n + alpha) / (2.0 * n);
}

std::string array_to_json(const MacroArray& array) {
    nlohmann::json j;
    j["rows"] = array.rows;
    j["cols"] = array.cols;
    BitMatrix w = read_back(array);
    j["weights"] = w.bits;
    j["params"] = {{"v_write", array.params.v_write},
                   {"v_dd", array.params.v_dd},
                   {"r_on_nominal", array.params.r_on_nominal},
                   {"r_off_nominal", array.params.r_off_nominal},
                   {"disturb_margin", array.params.disturb_margin}};
    return j.dump(2);
}

static BitMatrix bits_from_parsed(const nlohmann::json& j) {
    BitMatrix w;
    w.rows = j.at("rows").get<int>();
    w.cols = j.at("cols").get<int>();
    w.bits = j.at("weights").get<std::vector<std::uint8_t>>();
    if (static_cast<std::size_t>(w.rows) * w.cols != w.bits.size())
        throw FormatError("array dump: weights length does not match rows*cols");
    for (std::uint8_t b : w.bits)
        if (b > 1)
            throw FormatError("array dump: weight entries must be 0 or 1");
    return w;
}

BitMatrix weights_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, true, true);
    return bits_from_parsed(j);
}

MacroArray array_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("array dump: ") + e.what());
    }
    FeFetParams params;
    if (j.contains("params")) {
        const auto& p = j["params"];
        params.v_write = p.value("v_write", params.v_write);
        params.v_dd = p.value("v_dd", params.v_dd);
        params.r_on_nominal = p.value("r_on_nominal", params.r_on_nominal);
        params.r_off_nominal = p.value("r_off_nominal", params.r_off_nominal);
        params.disturb_margin = p.value("disturb_margin", params.disturb_margin);
    }
    BitMatrix w = bits_from_parsed(j);
    MacroArray array = make_array(w.rows, w.cols, params, VariationSpec{});
    for (int r = 0; r < w.rows; ++r) {
        for (int c = 0; c < w.cols; ++c) {
            Cell2T1C& cell = array.at(r, c);
            cell.m1.stored_bit = w.at(r, c);
            cell.m2.stored_bit = 1 - w.at(r, c);
        }
    }
    return array;
}

} // namespace fecim
