#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fecim/macro_array.hpp"

namespace fecim {

struct EnergyReport {
    double c_eq_proposed = 0.0;
    double c_eq_sram = 0.0;
    double energy_proposed = 0.0;
    double energy_sram = 0.0;
    double ratio = 0.0;  // proposed / SRAM, 0 when the SRAM load is zero
};

// SRAM charge-domain baseline: C_M charged per XNOR '1', load M * c_m.
double sram_equivalent_capacitance(int m, double c_m);

EnergyReport energy_compare_point(int m, int n, double c_m, double v_dd);

// Uniform-over-M average of C_EQ(proposed)/C_EQ(SRAM) = (N - 1) / (3N).
double average_ceq_ratio(int n);

// Supply energy to charge c_eq through a switch to v_dd.
double mac_energy(double c_eq, double v_dd);

// First-order delta-method std of V_MAC / VDD with mismatched capacitors:
// sigma_c * sqrt(p (1 - p) / N). Analytic oracle for the Monte Carlo sweep.
double sigma_mac_theory(double p, double sigma_c, int n);

struct VariationReport {
    int n = 0;
    std::vector<double> p_grid;     // realized M/N per grid point
    std::vector<double> sigma_mac;  // sample std of V_MAC normalized by VDD
    std::int64_t trials = 0;
    VariationSpec spec;
};

// Fig.-10-style sweep: per grid point, fresh capacitor draws per trial, ideal
// conductances, V_MAC through mac_evaluate on an N x 1 column.
VariationReport run_sigma_mac_mc(const FeFetParams& params, const VariationSpec& spec, int n,
                                 std::span<const double> p_grid, std::int64_t trials,
                                 int threads = 1);

struct ErrorReport {
    int n = 0;
    double on_off_ratio = 0.0;
    std::vector<double> p_grid;
    std::vector<double> mean_abs_error;  // per grid point, normalized by VDD
    double mean_abs_error_overall = 0.0; // pooled over the whole grid
    double q_below_one_flip = 0.0;       // fraction of trials with |error| < 1/N
    std::int64_t trials = 0;
    VariationSpec spec;
};

// Fig.-11-style sweep: per trial samples resistances and capacitors, computes
// the divider-model column voltage, error = V_MAC/VDD - M/N.
ErrorReport run_onoff_error_mc(const FeFetParams& params, const VariationSpec& spec, int n,
                               std::span<const double> p_grid, std::int64_t trials,
                               int threads = 1);

struct AreaReport {
    int proposed_transistors = 2;
    int proposed_capacitors = 1;  // stackable above the transistors
    int sram_cd_transistors = 9;
    int sram_cd_capacitors = 1;

    double transistor_ratio() const {
        return static_cast<double>(proposed_transistors) / sram_cd_transistors;
    }
};

AreaReport area_report();

// Plot-ready serializations; all numbers printed with 17 significant digits.
std::string format_g17(double v);
std::string variation_report_csv(const VariationReport& report);
std::string variation_report_json(const VariationReport& report);
std::string error_report_csv(const ErrorReport& report);
std::string error_report_json(const ErrorReport& report);
std::string area_report_json(const AreaReport& report);

} // namespace fecim
