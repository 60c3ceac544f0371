#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "fecim/device.hpp"
#include "fecim/errors.hpp"

using namespace fecim;

namespace {
const FeFetParams kParams{};
}

TEST_CASE("parameter validation") {
    FeFetParams p = kParams;
    p.v_dd = 2.0;  // above v_write
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = kParams;
    p.r_off_nominal = p.r_on_nominal;  // ratio must exceed 1
    CHECK_THROWS_AS(p.validate(), ConfigError);
    CHECK_NOTHROW(kParams.validate());

    VariationSpec v;
    v.sigma_c = 0.5;
    CHECK_THROWS_AS(v.validate(), ConfigError);
    v = VariationSpec{};
    v.on_off_ratio = 0.5;
    CHECK_THROWS_AS(v.validate(), ConfigError);
    CHECK_NOTHROW(VariationSpec{}.validate());
}

TEST_CASE("gate pulse threshold rule") {
    FeFetInstance f;
    f.stored_bit = 0;

    // Full write voltage sets the bit.
    f = apply_gate_pulse(f, kParams.v_write, kParams);
    CHECK(f.stored_bit == 1);
    f = apply_gate_pulse(f, -kParams.v_write, kParams);
    CHECK(f.stored_bit == 0);

    // Half-select bias never changes state (both polarities, both states).
    for (int bit : {0, 1}) {
        f.stored_bit = bit;
        for (double v : {kParams.v_write / 2.0, -kParams.v_write / 2.0, 0.0}) {
            const FeFetInstance g = apply_gate_pulse(f, v, kParams);
            CHECK(g.stored_bit == bit);
        }
    }

    // The undefined partial-switching band is a hard error.
    CHECK_THROWS_AS(apply_gate_pulse(f, 0.8 * kParams.v_write, kParams), DisturbRisk);
    CHECK_THROWS_AS(apply_gate_pulse(f, -0.9 * kParams.v_write, kParams), DisturbRisk);
}

TEST_CASE("writes are idempotent (nonvolatile state)") {
    FeFetInstance f;
    f.stored_bit = 1;
    for (int i = 0; i < 5; ++i) {
        f = apply_gate_pulse(f, kParams.v_write, kParams);
        CHECK(f.stored_bit == 1);
    }
    for (int i = 0; i < 5; ++i) {
        f = apply_gate_pulse(f, -kParams.v_write, kParams);
        CHECK(f.stored_bit == 0);
    }
}

TEST_CASE("capacitor sampling") {
    VariationSpec spec;
    spec.sigma_c = 0.0;
    RngStream s = substream(1, {0});
    CHECK(sample_capacitor(1.2e-15, spec, s).c_sampled == 1.2e-15);

    spec.sigma_c = 0.05;
    double mean = 0.0, var = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        RngStream si = substream(1, {static_cast<std::uint64_t>(i)});
        const double c = sample_capacitor(1.2e-15, spec, si).c_sampled / 1.2e-15;
        CHECK(c > 0.0);
        mean += c;
    }
    mean /= n;
    for (int i = 0; i < n; ++i) {
        RngStream si = substream(1, {static_cast<std::uint64_t>(i)});
        const double c = sample_capacitor(1.2e-15, spec, si).c_sampled / 1.2e-15;
        var += (c - mean) * (c - mean);
    }
    var /= n - 1;
    CHECK(std::abs(mean - 1.0) < 0.002);
    CHECK(std::abs(std::sqrt(var) - 0.05) < 0.002);

    // Heavy truncation still yields strictly positive values.
    spec.sigma_c = 0.45;
    for (int i = 0; i < 5000; ++i) {
        RngStream si = substream(2, {static_cast<std::uint64_t>(i)});
        CHECK(sample_capacitor(1.2e-15, spec, si).c_sampled > 0.0);
    }

    spec.sigma_c = 0.6;
    RngStream bad = substream(1, {0});
    CHECK_THROWS_AS(sample_capacitor(1.2e-15, spec, bad), ConfigError);
}

TEST_CASE("fefet sampling: ratio override and log-normal spread") {
    VariationSpec spec;
    RngStream s0 = substream(3, {0});
    FeFetInstance f = sample_fefet(kParams, spec, s0, 1);
    CHECK(f.stored_bit == 1);
    CHECK(f.r_on == kParams.r_on_nominal);
    CHECK(std::isinf(f.r_off));  // infinite-ratio sentinel

    spec.on_off_ratio = 1e5;
    RngStream s1 = substream(3, {1});
    f = sample_fefet(kParams, spec, s1, 0);
    CHECK(f.r_off == doctest::Approx(1e5 * kParams.r_on_nominal));

    // CV of the multiplicative factor equals sigma_r.
    spec.sigma_r = 0.15;
    const int n = 20000;
    double mean = 0.0;
    std::vector<double> r(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        RngStream si = substream(4, {static_cast<std::uint64_t>(i)});
        r[static_cast<std::size_t>(i)] =
            sample_fefet(kParams, spec, si, 1).r_on / kParams.r_on_nominal;
        mean += r[static_cast<std::size_t>(i)];
    }
    mean /= n;
    double var = 0.0;
    for (double v : r)
        var += (v - mean) * (v - mean);
    var /= n - 1;
    const double cv = std::sqrt(var) / mean;
    CHECK(std::abs(cv - 0.15) < 0.01);  // 15% +/- 1 point
    for (double v : r)
        CHECK(v > 0.0);
}
