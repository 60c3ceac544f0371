#include "fecim/analysis.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "fecim/errors.hpp"
#include "fecim/parallel.hpp"

#include <json.hpp>

namespace fecim {

namespace {

// Substream tags keeping the two Monte Carlo sweeps on disjoint key spaces.
constexpr std::uint64_t kTagSigmaMc = 0xF16'0010;
constexpr std::uint64_t kTagErrorMc = 0xF16'0011;

int grid_match_count(double p, int n) {
    if (!(p >= 0.0 && p <= 1.0))
        throw ConfigError("p grid values must lie in [0, 1]");
    return static_cast<int>(std::lround(p * n));
}

} // namespace

double sram_equivalent_capacitance(int m, double c_m) {
    if (m < 0)
        throw ConfigError("sram_equivalent_capacitance: M must be >= 0");
    return m * c_m;
}

EnergyReport energy_compare_point(int m, int n, double c_m, double v_dd) {
    EnergyReport r;
    r.c_eq_proposed = equivalent_capacitance(m, n, c_m);
    r.c_eq_sram = sram_equivalent_capacitance(m, c_m);
    r.energy_proposed = mac_energy(r.c_eq_proposed, v_dd);
    r.energy_sram = mac_energy(r.c_eq_sram, v_dd);
    r.ratio = r.c_eq_sram > 0.0 ? r.c_eq_proposed / r.c_eq_sram : 0.0;
    return r;
}

double average_ceq_ratio(int n) {
    if (n < 1)
        throw ConfigError("average_ceq_ratio: N must be >= 1");
    return static_cast<double>(n - 1) / (3.0 * n);
}

double mac_energy(double c_eq, double v_dd) {
    if (c_eq < 0.0)
        throw ConfigError("mac_energy: c_eq must be >= 0");
    return c_eq * v_dd * v_dd;
}

double sigma_mac_theory(double p, double sigma_c, int n) {
    if (!(p >= 0.0 && p <= 1.0))
        throw ConfigError("sigma_mac_theory: p must lie in [0, 1]");
    return sigma_c * std::sqrt(p * (1.0 - p) / n);
}

VariationReport run_sigma_mac_mc(const FeFetParams& params, const VariationSpec& spec, int n,
                                 std::span<const double> p_grid, std::int64_t trials,
                                 int threads) {
    params.validate();
    spec.validate();
    VariationReport report;
    report.n = n;
    report.trials = trials;
    report.spec = spec;

    // One fixed column per grid point: weights all '1', the first M inputs '1'.
    VariationSpec nominal;
    nominal.seed = spec.seed;
    MacroArray column = make_array(n, 1, params, nominal);
    BitMatrix weights{n, 1, std::vector<std::uint8_t>(static_cast<std::size_t>(n), 1)};
    program_array(column, weights);

    std::vector<double> samples(static_cast<std::size_t>(trials));
    for (std::size_t g = 0; g < p_grid.size(); ++g) {
        const int m = grid_match_count(p_grid[g], n);
        std::vector<std::uint8_t> input_bits(static_cast<std::size_t>(n), 0);
        for (int i = 0; i < m; ++i)
            input_bits[static_cast<std::size_t>(i)] = 1;
        const MacStimulus stim = make_stimulus(input_bits, params);

        parallel_for(trials, threads, [&](std::int64_t t) {
            std::vector<CapacitorInstance> caps(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) {
                RngStream s = substream(spec.seed, {kTagSigmaMc, g, static_cast<std::uint64_t>(t),
                                                   static_cast<std::uint64_t>(i)});
                caps[static_cast<std::size_t>(i)] = sample_capacitor(1.2e-15, spec, s);
            }
            const MacResult r = mac_evaluate(column, stim, XnorModel::ideal, caps);
            samples[static_cast<std::size_t>(t)] = r.v_scl[0];
        });

        double mean = 0.0;
        for (double v : samples) mean += v;
        mean /= static_cast<double>(trials);
        // Identical samples must report exactly zero spread; the two-pass
        // formula would otherwise leak the rounding of the mean back in.
        bool constant = true;
        for (double v : samples)
            if (v != samples[0]) { constant = false; break; }
        double var = 0.0;
        if (!constant) {
            for (double v : samples) var += (v - mean) * (v - mean);
            var /= static_cast<double>(trials > 1 ? trials - 1 : 1);
        }
        report.p_grid.push_back(static_cast<double>(m) / n);
        report.sigma_mac.push_back(std::sqrt(var) / params.v_dd);
    }
    return report;
}

ErrorReport run_onoff_error_mc(const FeFetParams& params, const VariationSpec& spec, int n,
                               std::span<const double> p_grid, std::int64_t trials,
                               int threads) {
    params.validate();
    spec.validate();
    if (spec.infinite_ratio())
        throw ConfigError("run_onoff_error_mc requires a finite on/off ratio");

    ErrorReport report;
    report.n = n;
    report.on_off_ratio = spec.on_off_ratio;
    report.trials = trials;
    report.spec = spec;

    std::vector<double> abs_err(static_cast<std::size_t>(trials));
    std::vector<std::uint8_t> below(static_cast<std::size_t>(trials));
    const double flip_threshold = 1.0 / n;
    std::int64_t below_total = 0;
    double pooled = 0.0;

    for (std::size_t g = 0; g < p_grid.size(); ++g) {
        const int m = grid_match_count(p_grid[g], n);
        const double p_actual = static_cast<double>(m) / n;

        parallel_for(trials, threads, [&](std::int64_t t) {
            const auto ut = static_cast<std::uint64_t>(t);
            std::vector<double> vx(static_cast<std::size_t>(n)), cv(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) {
                const auto ui = static_cast<std::uint64_t>(i);
                RngStream s_cap = substream(spec.seed, {kTagErrorMc, g, ut, ui, 0});
                RngStream s_m1 = substream(spec.seed, {kTagErrorMc, g, ut, ui, 1});
                RngStream s_m2 = substream(spec.seed, {kTagErrorMc, g, ut, ui, 2});
                Cell2T1C cell;
                cell.m1 = sample_fefet(params, spec, s_m1, 1);
                cell.m2 = sample_fefet(params, spec, s_m2, 0);
                cell.cap = sample_capacitor(1.2e-15, spec, s_cap);
                const InputBitPair in = make_input(i < m ? 1 : 0, params);
                vx[static_cast<std::size_t>(i)] = cell_xnor(cell, in, params, XnorModel::divider);
                cv[static_cast<std::size_t>(i)] = cell.cap.c_sampled;
            }
            const double v = column_voltage(vx, cv, 0.0);
            const double err = v / params.v_dd - p_actual;
            abs_err[static_cast<std::size_t>(t)] = std::abs(err);
            below[static_cast<std::size_t>(t)] = std::abs(err) < flip_threshold ? 1 : 0;
        });

        double sum = 0.0;
        for (double e : abs_err) sum += e;
        for (std::uint8_t b : below) below_total += b;
        pooled += sum;
        report.p_grid.push_back(p_actual);
        report.mean_abs_error.push_back(sum / static_cast<double>(trials));
    }
    const auto total = static_cast<double>(trials) * static_cast<double>(p_grid.size());
    report.mean_abs_error_overall = pooled / total;
    report.q_below_one_flip = static_cast<double>(below_total) / total;
    return report;
}

AreaReport area_report() { return AreaReport{}; }

std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

static nlohmann::json spec_json(const VariationSpec& spec) {
    nlohmann::json j;
    j["sigma_c"] = spec.sigma_c;
    j["sigma_r"] = spec.sigma_r;
    j["on_off_ratio"] = spec.infinite_ratio() ? nlohmann::json("inf")
                                              : nlohmann::json(spec.on_off_ratio);
    j["seed"] = spec.seed;
    return j;
}

std::string variation_report_csv(const VariationReport& report) {
    std::ostringstream out;
    out << "p,sigma_mac,trials,seed\n";
    for (std::size_t i = 0; i < report.p_grid.size(); ++i) {
        out << format_g17(report.p_grid[i]) << ',' << format_g17(report.sigma_mac[i]) << ','
            << report.trials << ',' << report.spec.seed << '\n';
    }
    return out.str();
}

std::string variation_report_json(const VariationReport& report) {
    nlohmann::json j;
    j["n"] = report.n;
    j["p_grid"] = report.p_grid;
    j["sigma_mac"] = report.sigma_mac;
    j["trials"] = report.trials;
    j["spec"] = spec_json(report.spec);
    return j.dump(2);
}

std::string error_report_csv(const ErrorReport& report) {
    std::ostringstream out;
    out << "p,mean_abs_error,trials,seed\n";
    for (std::size_t i = 0; i < report.p_grid.size(); ++i) {
        out << format_g17(report.p_grid[i]) << ',' << format_g17(report.mean_abs_error[i]) << ','
            << report.trials << ',' << report.spec.seed << '\n';
    }
    return out.str();
}

std::string error_report_json(const ErrorReport& report) {
    nlohmann::json j;
    j["n"] = report.n;
    j["on_off_ratio"] = report.on_off_ratio;
    j["p_grid"] = report.p_grid;
    j["mean_abs_error"] = report.mean_abs_error;
    j["mean_abs_error_overall"] = report.mean_abs_error_overall;
    j["q_below_one_flip"] = report.q_below_one_flip;
    j["trials"] = report.trials;
    j["spec"] = spec_json(report.spec);
    return j.dump(2);
}

std::string area_report_json(const AreaReport& report) {
    nlohmann::json j;
    j["proposed"] = {{"transistors", report.proposed_transistors},
                     {"capacitors", report.proposed_capacitors}};
    j["sram_cd"] = {{"transistors", report.sram_cd_transistors},
                    {"capacitors", report.sram_cd_capacitors}};
    j["transistor_ratio"] = report.transistor_ratio();
    return j.dump(2);
}

} // namespace fecim
