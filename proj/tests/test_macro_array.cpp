#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "fecim/errors.hpp"
#include "fecim/macro_array.hpp"
#include "fecim/rng.hpp"
#include "support/charge_oracle.hpp"

using namespace fecim;

namespace {

const FeFetParams kParams{};

BitMatrix random_bits(int rows, int cols, std::uint64_t seed) {
    BitMatrix w;
    w.rows = rows;
    w.cols = cols;
    w.bits.resize(static_cast<std::size_t>(rows) * cols);
    RngStream s = substream(seed, {0x5EED});
    for (auto& b : w.bits)
        b = s.next_u64() & 1;
    return w;
}

MacroArray programmed(const BitMatrix& w, std::uint64_t seed = 0) {
    VariationSpec spec;
    spec.seed = seed;
    MacroArray array = make_array(w.rows, w.cols, kParams, spec);
    program_array(array, w);
    return array;
}

} // namespace

TEST_CASE("program / read-back round trip and idempotence") {
    const BitMatrix w = random_bits(32, 16, 7);
    MacroArray array = programmed(w);
    CHECK(read_back(array) == w);
    // Reprogramming the same pattern is a no-op.
    program_array(array, w);
    CHECK(read_back(array) == w);
    // Reprogramming a different pattern fully overwrites.
    const BitMatrix w2 = random_bits(32, 16, 8);
    program_array(array, w2);
    CHECK(read_back(array) == w2);
}

TEST_CASE("write audit records only safe |V_GS| levels") {
    const BitMatrix w = random_bits(16, 16, 3);
    VariationSpec spec;
    MacroArray array = make_array(16, 16, kParams, spec);
    WriteAudit audit;
    program_array(array, w, &audit);
    CHECK(audit.only_safe_levels(kParams));
    // 16 rows x 16 cols x 2 phases x 2 devices per selected row.
    CHECK(audit.pulses == 16ull * 16 * 16 * 2 * 2);
}

TEST_CASE("partial-height weights leave trailing rows untouched") {
    VariationSpec spec;
    MacroArray array = make_array(8, 4, kParams, spec);
    const BitMatrix w = random_bits(5, 4, 11);
    program_array(array, w);
    const BitMatrix rb = read_back(array);
    for (int r = 0; r < 5; ++r)
        for (int c = 0; c < 4; ++c)
            CHECK(rb.at(r, c) == w.at(r, c));
    for (int r = 5; r < 8; ++r)
        for (int c = 0; c < 4; ++c)
            CHECK(rb.at(r, c) == 0);  // construction default
}

TEST_CASE("ideal MAC is exactly linear in the match count") {
    const int n = 128;
    BitMatrix w;
    w.rows = n;
    w.cols = 1;
    w.bits.assign(static_cast<std::size_t>(n), 1);
    const MacroArray column = programmed(w);
    for (int m = 0; m <= n; ++m) {
        std::vector<std::uint8_t> bits(static_cast<std::size_t>(n), 0);
        for (int i = 0; i < m; ++i)
            bits[static_cast<std::size_t>(i)] = 1;
        const MacResult r = mac_evaluate(column, make_stimulus(bits, kParams), XnorModel::ideal);
        CHECK(r.v_scl[0] == kParams.v_dd * m / n);  // exact, no tolerance
        CHECK(r.match_counts[0] == m);
    }
}

TEST_CASE("M=64 of 128 gives exactly VDD/2 = 0.225 V") {
    BitMatrix w;
    w.rows = 128;
    w.cols = 1;
    w.bits.assign(128, 1);
    const MacroArray column = programmed(w);
    std::vector<std::uint8_t> bits(128, 0);
    for (int i = 0; i < 64; ++i)
        bits[static_cast<std::size_t>(i)] = 1;
    const MacResult r = mac_evaluate(column, make_stimulus(bits, kParams), XnorModel::ideal);
    CHECK(r.v_scl[0] == doctest::Approx(0.225).epsilon(1e-15));
}

TEST_CASE("MAC result is permutation-invariant") {
    const int n = 64;
    BitMatrix w;
    w.rows = n;
    w.cols = 1;
    w.bits.assign(static_cast<std::size_t>(n), 1);
    const MacroArray column = programmed(w);
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < 23; ++i)
        bits[static_cast<std::size_t>(i)] = 1;
    const double base =
        mac_evaluate(column, make_stimulus(bits, kParams), XnorModel::ideal).v_scl[0];
    RngStream s = substream(99, {0});
    for (int shuffle = 0; shuffle < 100; ++shuffle) {
        for (std::size_t i = bits.size() - 1; i > 0; --i)
            std::swap(bits[i], bits[s.next_u64() % (i + 1)]);
        const double v =
            mac_evaluate(column, make_stimulus(bits, kParams), XnorModel::ideal).v_scl[0];
        CHECK(v == base);
    }
}

TEST_CASE("column voltage matches the bisection charge oracle") {
    // Mismatched capacitors and arbitrary rail mixes.
    RngStream s = substream(1234, {0});
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 3 + static_cast<int>(s.next_u64() % 60);
        std::vector<double> vx(static_cast<std::size_t>(n)), caps(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            vx[static_cast<std::size_t>(i)] = (s.next_u64() & 1) ? kParams.v_dd : 0.0;
            caps[static_cast<std::size_t>(i)] = 1.2e-15 * (0.7 + 0.6 * s.next_unit());
        }
        const double c_par = (trial % 3 == 0) ? 0.0 : 5e-16 * s.next_unit();
        const double fast = column_voltage(vx, caps, c_par);
        const double slow = oracle::settle_voltage(vx, caps, c_par);
        CHECK(fast == doctest::Approx(slow).epsilon(1e-12));
    }
}

TEST_CASE("equivalent capacitance closed form and oracle") {
    for (int m = 0; m <= 128; ++m) {
        const double ceq = equivalent_capacitance(m, 128, 1.2e-15);
        CHECK(ceq == static_cast<double>(m) * (128 - m) * 1.2e-15 / 128);
        CHECK(ceq == doctest::Approx(oracle::supply_ceq(m, 128, 1.2e-15, kParams.v_dd))
                         .epsilon(1e-12));
    }
    CHECK(equivalent_capacitance(64, 128, 1.2e-15) == doctest::Approx(38.4e-15).epsilon(1e-15));
    CHECK(equivalent_capacitance(0, 128, 1.2e-15) == 0.0);
    CHECK(equivalent_capacitance(128, 128, 1.2e-15) == 0.0);
    CHECK_THROWS_AS(equivalent_capacitance(129, 128, 1.2e-15), ConfigError);
}

TEST_CASE("quantize and threshold_to_vref agree with the bipolar rule") {
    const int n = 128;
    // s = 2M - N >= alpha  <=>  V >= vref.
    for (double alpha : {-5.0, 0.0, 0.5, 3.0}) {
        const double vref = threshold_to_vref(alpha, n, kParams.v_dd);
        for (int m = 0; m <= n; ++m) {
            const double v = kParams.v_dd * m / n;
            const int s_sign = (2.0 * m - n) >= alpha ? +1 : -1;
            CHECK(quantize(v, vref) == s_sign);
        }
    }
    CHECK_THROWS_AS(threshold_to_vref(129.0, 128, kParams.v_dd), ConfigError);
}

TEST_CASE("masked rows keep their capacitors on the line") {
    const int n = 8;
    BitMatrix w;
    w.rows = n;
    w.cols = 1;
    w.bits.assign(static_cast<std::size_t>(n), 1);
    const MacroArray column = programmed(w);
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(n), 1);
    ArrayMask mask = ArrayMask::all(n, 1);
    mask.row_active[6] = 0;
    mask.row_active[7] = 0;
    const MacResult r =
        mac_evaluate(column, make_stimulus(bits, kParams), XnorModel::ideal, {}, 0.0, &mask);
    // 6 matches among 6 active rows, but 8 capacitors divide the charge.
    CHECK(r.v_scl[0] == kParams.v_dd * 6 / n);
    CHECK(r.match_counts[0] == 6);
    CHECK(r.p_one[0] == 1.0);

    mask.col_active[0] = 0;
    const MacResult r2 =
        mac_evaluate(column, make_stimulus(bits, kParams), XnorModel::ideal, {}, 0.0, &mask);
    CHECK(r2.v_scl[0] == 0.0);
    CHECK(r2.match_counts[0] == 0);
}

TEST_CASE("parasitic capacitance attenuates the output") {
    const int n = 16;
    BitMatrix w;
    w.rows = n;
    w.cols = 1;
    w.bits.assign(static_cast<std::size_t>(n), 1);
    const MacroArray column = programmed(w);
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(n), 1);
    const double c_par = 4 * 1.2e-15;
    const MacResult r =
        mac_evaluate(column, make_stimulus(bits, kParams), XnorModel::ideal, {}, c_par);
    CHECK(r.v_scl[0] == doctest::Approx(kParams.v_dd * n / (n + 4.0)).epsilon(1e-12));
}

TEST_CASE("JSON round trip is bit exact") {
    const BitMatrix w = random_bits(12, 9, 21);
    const MacroArray array = programmed(w);
    const std::string dump = array_to_json(array);
    const MacroArray back = array_from_json(dump);
    CHECK(read_back(back) == w);
    CHECK(back.params.v_dd == array.params.v_dd);
    CHECK(weights_from_json(dump) == w);
    CHECK_THROWS_AS(array_from_json("{not json"), FormatError);
    CHECK_THROWS_AS(weights_from_json(R"({"rows":2,"cols":2,"weights":[0,1,2,1]})"), FormatError);
}

TEST_CASE("geometry errors") {
    VariationSpec spec;
    MacroArray array = make_array(4, 4, kParams, spec);
    BitMatrix w = random_bits(4, 3, 1);  // wrong width
    CHECK_THROWS_AS(program_array(array, w), ConfigError);
    std::vector<std::uint8_t> bits(3, 0);  // wrong stimulus length
    CHECK_THROWS_AS(mac_evaluate(array, make_stimulus(bits, kParams), XnorModel::ideal),
                    ConfigError);
}
