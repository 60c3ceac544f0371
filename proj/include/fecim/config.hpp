#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fecim/device.hpp"

namespace fecim {

// Run configuration: INI-style sections with key = value lines, '#' or ';'
// comments. Unknown keys are rejected so typos fail loudly.
struct RunConfig {
    // [device]
    double v_write = 1.5;
    double v_dd = 0.45;
    double r_on = 10e3;
    double r_off = 1e6;
    double c_m = 1.2e-15;
    double c_parasitic = 0.0;
    double disturb_margin = 0.75;

    // [array]
    int rows = 128;
    int cols = 128;

    // [variation]
    double sigma_c = 0.05;
    double sigma_r = 0.15;
    double on_off_ratio = std::numeric_limits<double>::infinity();
    std::uint64_t seed = 1;

    // [sweep]
    std::vector<double> p_grid = {0.0, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0};
    std::vector<double> sigma_c_grid = {0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.4, 0.45};
    std::vector<double> onoff_ratios = {1e2, 1e3, 1e5};
    std::int64_t trials = 100000;
    int bnn_trials = 30;
    bool sigma_squared = true;

    FeFetParams device_params() const;
    VariationSpec variation_spec() const;

    void validate() const;  // throws ConfigError with an actionable message
};

// Parses INI text; values override the defaults above.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// Canonical key = value echo of every field (stable ordering); the FNV-1a
// hash of the echo identifies the configuration in run manifests.
std::string config_echo(const RunConfig& config);
std::uint64_t config_hash(const RunConfig& config);

} // namespace fecim
