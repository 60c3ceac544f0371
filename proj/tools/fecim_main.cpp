#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fecim/analysis.hpp"
#include "fecim/bnn.hpp"
#include "fecim/config.hpp"
#include "fecim/errors.hpp"
#include "fecim/parallel.hpp"

namespace {

constexpr const char* kVersion = "fecim 1.0.0";

struct CliState {
    fecim::RunConfig config;
    std::string out_dir = ".";
    int threads = 1;
};

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out)
        throw fecim::FormatError(path.string() + ": write failed");
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw fecim::FormatError(path + ": cannot open");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Reproducibility manifest written next to every result table.
std::string manifest_text(const CliState& state, const std::string& command) {
    std::ostringstream out;
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(fecim::config_hash(state.config)));
    out << "version = " << kVersion << '\n'
        << "command = " << command << '\n'
        << "seed = " << state.config.seed << '\n'
        << "config_hash = " << hash << '\n'
        << "sigma_mode = " << (state.config.sigma_squared ? "sigma_squared" : "sigma") << '\n'
        << "# config echo\n"
        << fecim::config_echo(state.config);
    return out.str();
}

void emit(const CliState& state, const std::string& command, const std::string& file_name,
          const std::string& content) {
    const std::filesystem::path dir(state.out_dir);
    std::filesystem::create_directories(dir);
    write_file(dir / file_name, content);
    write_file(dir / (command + "_manifest.txt"), manifest_text(state, command));
    std::cout << (dir / file_name).string() << '\n';
}

int run_mac_sweep(const CliState& state) {
    const fecim::RunConfig& cfg = state.config;
    const fecim::FeFetParams params = cfg.device_params();
    const int n = cfg.rows;

    fecim::VariationSpec spec = cfg.variation_spec();
    if (spec.infinite_ratio())
        spec.on_off_ratio = cfg.r_off / cfg.r_on;  // keep the nonideal column meaningful
    fecim::MacroArray ideal_col = fecim::make_array(
        n, 1, params, fecim::VariationSpec{0.0, 0.0, std::numeric_limits<double>::infinity(),
                                           cfg.seed});
    fecim::MacroArray real_col = fecim::make_array(n, 1, params, spec);
    const fecim::BitMatrix weights{n, 1, std::vector<std::uint8_t>(static_cast<std::size_t>(n), 1)};
    fecim::program_array(ideal_col, weights);
    fecim::program_array(real_col, weights);

    std::ostringstream csv;
    csv << "m,v_scl_ideal,v_scl_nonideal,c_eq,energy\n";
    for (int m = 0; m <= n; ++m) {
        std::vector<std::uint8_t> bits(static_cast<std::size_t>(n), 0);
        for (int i = 0; i < m; ++i)
            bits[static_cast<std::size_t>(i)] = 1;
        const fecim::MacStimulus stim = fecim::make_stimulus(bits, params);
        const double v_ideal =
            fecim::mac_evaluate(ideal_col, stim, fecim::XnorModel::ideal).v_scl[0];
        const double v_real =
            fecim::mac_evaluate(real_col, stim, fecim::XnorModel::divider, {}, cfg.c_parasitic)
                .v_scl[0];
        const double c_eq = fecim::equivalent_capacitance(m, n, cfg.c_m);
        csv << m << ',' << fecim::format_g17(v_ideal) << ',' << fecim::format_g17(v_real) << ','
            << fecim::format_g17(c_eq) << ',' << fecim::format_g17(fecim::mac_energy(c_eq, cfg.v_dd))
            << '\n';
    }
    emit(state, "mac-sweep", "mac_sweep.csv", csv.str());
    return 0;
}

int run_variation(const CliState& state) {
    const fecim::RunConfig& cfg = state.config;
    const fecim::FeFetParams params = cfg.device_params();

    fecim::VariationSpec sigma_spec = cfg.variation_spec();
    sigma_spec.on_off_ratio = std::numeric_limits<double>::infinity();
    const fecim::VariationReport vr = fecim::run_sigma_mac_mc(params, sigma_spec, cfg.rows,
                                                              cfg.p_grid, cfg.trials,
                                                              state.threads);
    std::ostringstream err_csv;
    err_csv << "on_off_ratio,p,mean_abs_error,q_below_one_flip,trials,seed\n";
    std::ostringstream err_json;
    err_json << "[\n";
    for (std::size_t k = 0; k < cfg.onoff_ratios.size(); ++k) {
        fecim::VariationSpec err_spec = cfg.variation_spec();
        err_spec.on_off_ratio = cfg.onoff_ratios[k];
        const fecim::ErrorReport er = fecim::run_onoff_error_mc(params, err_spec, cfg.rows,
                                                                cfg.p_grid, cfg.trials,
                                                                state.threads);
        for (std::size_t i = 0; i < er.p_grid.size(); ++i) {
            err_csv << fecim::format_g17(er.on_off_ratio) << ',' << fecim::format_g17(er.p_grid[i])
                    << ',' << fecim::format_g17(er.mean_abs_error[i]) << ','
                    << fecim::format_g17(er.q_below_one_flip) << ',' << er.trials << ','
                    << er.spec.seed << '\n';
        }
        err_json << fecim::error_report_json(er) << (k + 1 < cfg.onoff_ratios.size() ? ",\n" : "\n");
    }
    err_json << "]\n";

    const std::filesystem::path dir(state.out_dir);
    std::filesystem::create_directories(dir);
    write_file(dir / "sigma_mac.csv", fecim::variation_report_csv(vr));
    write_file(dir / "sigma_mac.json", fecim::variation_report_json(vr));
    write_file(dir / "onoff_error.csv", err_csv.str());
    write_file(dir / "onoff_error.json", err_json.str());
    write_file(dir / "variation_manifest.txt", manifest_text(state, "variation"));
    std::cout << (dir / "sigma_mac.csv").string() << '\n'
              << (dir / "onoff_error.csv").string() << '\n';
    return 0;
}

int run_energy_compare(const CliState& state) {
    const fecim::RunConfig& cfg = state.config;
    const int n = cfg.rows;
    std::ostringstream csv;
    csv << "m,p,c_eq_proposed,c_eq_sram,energy_proposed,energy_sram,ratio\n";
    for (int m = 0; m <= n; ++m) {
        const fecim::EnergyReport r = fecim::energy_compare_point(m, n, cfg.c_m, cfg.v_dd);
        csv << m << ',' << fecim::format_g17(static_cast<double>(m) / n) << ','
            << fecim::format_g17(r.c_eq_proposed) << ',' << fecim::format_g17(r.c_eq_sram) << ','
            << fecim::format_g17(r.energy_proposed) << ',' << fecim::format_g17(r.energy_sram)
            << ',' << fecim::format_g17(r.ratio) << '\n';
    }
    std::ostringstream summary;
    const fecim::EnergyReport mid = fecim::energy_compare_point(n / 2, n, cfg.c_m, cfg.v_dd);
    summary << "n = " << n << '\n'
            << "ratio_at_p_half = " << fecim::format_g17(mid.ratio) << '\n'
            << "average_ratio = " << fecim::format_g17(fecim::average_ceq_ratio(n)) << '\n'
            << "area\n" << fecim::area_report_json(fecim::area_report()) << '\n';
    const std::filesystem::path dir(state.out_dir);
    std::filesystem::create_directories(dir);
    write_file(dir / "energy_compare.csv", csv.str());
    write_file(dir / "energy_summary.txt", summary.str());
    write_file(dir / "energy-compare_manifest.txt", manifest_text(state, "energy-compare"));
    std::cout << (dir / "energy_compare.csv").string() << '\n';
    return 0;
}

int run_bnn(const CliState& state, const std::string& model_path, const std::string& images_path,
            const std::string& labels_path) {
    const fecim::RunConfig& cfg = state.config;
    fecim::BnnModel model = fecim::load_model(model_path);
    model.sigma_squared = cfg.sigma_squared;
    const fecim::Dataset data = fecim::load_idx_dataset(images_path, labels_path);

    fecim::MacroConfig mc;
    mc.rows = cfg.rows;
    mc.cols = cfg.cols;
    mc.params = cfg.device_params();
    mc.c_parasitic = cfg.c_parasitic;
    const fecim::AccuracyTable table =
        fecim::evaluate_accuracy(model, data, cfg.sigma_c_grid, cfg.bnn_trials, mc,
                                 cfg.variation_spec(), state.threads);

    std::ostringstream summary;
    summary << "sigma_c,mean_accuracy,std_accuracy\n";
    for (std::size_t g = 0; g < table.grid.size(); ++g)
        summary << fecim::format_g17(table.grid[g]) << ','
                << fecim::format_g17(table.mean_accuracy[g]) << ','
                << fecim::format_g17(table.std_accuracy[g]) << '\n';

    const std::filesystem::path dir(state.out_dir);
    std::filesystem::create_directories(dir);
    write_file(dir / "accuracy.csv", fecim::accuracy_table_csv(table));
    write_file(dir / "accuracy_summary.csv", summary.str());
    write_file(dir / "bnn_manifest.txt", manifest_text(state, "bnn"));
    std::cout << (dir / "accuracy.csv").string() << '\n';
    return 0;
}

int run_write_sim(const CliState& state, const std::string& weights_path, bool corrupt) {
    const fecim::RunConfig& cfg = state.config;
    const fecim::FeFetParams params = cfg.device_params();

    fecim::BitMatrix weights;
    if (weights_path.empty()) {
        // No file given: a seeded random pattern at the configured geometry.
        weights.rows = cfg.rows;
        weights.cols = cfg.cols;
        weights.bits.resize(static_cast<std::size_t>(cfg.rows) * cfg.cols);
        fecim::RngStream s = fecim::substream(cfg.seed, {0x3017});
        for (auto& b : weights.bits)
            b = s.next_u64() & 1;
    } else {
        weights = fecim::weights_from_json(read_file(weights_path));
    }
    if (weights.rows != cfg.rows || weights.cols != cfg.cols)
        throw fecim::ConfigError("weight matrix is " + std::to_string(weights.rows) + "x" +
                                 std::to_string(weights.cols) + " but the array is " +
                                 std::to_string(cfg.rows) + "x" + std::to_string(cfg.cols));

    fecim::MacroArray array =
        fecim::make_array(cfg.rows, cfg.cols, params, cfg.variation_spec());
    fecim::WriteAudit audit;
    if (corrupt) {
        // Test hook: a deliberately broken half-select level inside the
        // forbidden band, attributed to cell (0, 0) phase 1.
        const double bad = 0.8 * params.v_write;
        try {
            fecim::apply_gate_pulse(array.at(0, 0).m1, bad, params);
        } catch (const fecim::DisturbRisk&) {
            throw fecim::DisturbRisk(bad, 0, 0, 1);
        }
    }
    fecim::program_array(array, weights, &audit);
    const bool verified = fecim::read_back(array) == weights;

    std::ostringstream trace;
    trace << "pulses = " << audit.pulses << '\n'
          << "safe_levels_only = " << (audit.only_safe_levels(params) ? "true" : "false") << '\n'
          << "readback_matches = " << (verified ? "true" : "false") << '\n'
          << "abs_vgs_histogram\n";
    for (const auto& [bucket, count] : audit.magnitude_counts)
        trace << fecim::format_g17(static_cast<double>(bucket) * 1e-6) << ',' << count << '\n';

    emit(state, "write-sim", "write_sim.txt", trace.str());
    if (!audit.only_safe_levels(params) || !verified)
        return 3;
    return 0;
}

int run_gen_model(const CliState& state, const std::string& prefix, int samples) {
    const fecim::SyntheticSet set =
        fecim::make_synthetic_classification(state.config.seed, samples);
    const std::filesystem::path dir(state.out_dir);
    std::filesystem::create_directories(dir);
    fecim::save_model(set.model, (dir / (prefix + "_model.json")).string());
    fecim::save_idx_dataset(set.data, (dir / (prefix + "_images.idx")).string(),
                            (dir / (prefix + "_labels.idx")).string());
    std::cout << (dir / (prefix + "_model.json")).string() << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Behavioral simulator for a FeFET 2T1C charge-domain CiM macro"};
    app.set_version_flag("--version", kVersion);

    CliState state;
    std::string config_path;
    if (const char* env = std::getenv("FECIM_CONFIG"))
        config_path = env;
    bool seed_set = false, trials_set = false;
    std::uint64_t seed_override = 0;
    std::int64_t trials_override = 0;

    app.add_option("--config", config_path, "Config file (INI sections; default $FECIM_CONFIG)");
    app.add_option("--seed", seed_override, "Override [variation] seed")
        ->each([&](const std::string&) { seed_set = true; });
    app.add_option("--trials", trials_override, "Override [sweep] trials")
        ->each([&](const std::string&) { trials_set = true; });
    app.add_option("--out", state.out_dir, "Output directory (default .)");
    app.add_option("--threads", state.threads,
                   "Worker threads; 0 = hardware concurrency (default 1)");

    auto* mac_sweep = app.add_subcommand(
        "mac-sweep", "Sweep M=0..N on one column; CSV: m,v_scl_ideal,v_scl_nonideal,c_eq,energy");
    auto* variation = app.add_subcommand(
        "variation",
        "Monte Carlo sweeps; CSVs: p,sigma_mac,trials,seed and "
        "on_off_ratio,p,mean_abs_error,q_below_one_flip,trials,seed");
    auto* energy = app.add_subcommand(
        "energy-compare",
        "Capacitance/energy vs the SRAM baseline; CSV: m,p,c_eq_proposed,c_eq_sram,"
        "energy_proposed,energy_sram,ratio");
    auto* bnn = app.add_subcommand(
        "bnn", "Accuracy vs sigma_c over the configured grid; CSV: sigma_c,seed,accuracy");
    std::string model_path, images_path, labels_path;
    bnn->add_option("--model", model_path, "Model manifest (JSON + packed blobs)")->required();
    bnn->add_option("--images", images_path, "IDX image file")->required();
    bnn->add_option("--labels", labels_path, "IDX label file")->required();
    auto* write_sim = app.add_subcommand(
        "write-sim", "Program a weight matrix; emits the |V_GS| audit histogram");
    std::string weights_path;
    bool corrupt = false;
    write_sim->add_option("--weights", weights_path,
                          "Weight matrix JSON ({rows, cols, weights}); random when omitted");
    write_sim->add_flag("--corrupt", corrupt, "Test hook: inject a forbidden-band pulse");
    auto* gen_model = app.add_subcommand(
        "gen-model", "Generate a synthetic labeled model/dataset pair for bnn runs");
    std::string gen_prefix = "synthetic";
    int gen_samples = 256;
    gen_model->add_option("--prefix", gen_prefix, "Output file prefix");
    gen_model->add_option("--samples", gen_samples, "Dataset size");

    app.require_subcommand(1);
    CLI11_PARSE(app, argc, argv);

    try {
        if (!config_path.empty())
            state.config = fecim::load_config(config_path);
        if (seed_set)
            state.config.seed = seed_override;
        if (trials_set)
            state.config.trials = trials_override;
        state.config.validate();

        if (mac_sweep->parsed())
            return run_mac_sweep(state);
        if (variation->parsed())
            return run_variation(state);
        if (energy->parsed())
            return run_energy_compare(state);
        if (bnn->parsed())
            return run_bnn(state, model_path, images_path, labels_path);
        if (write_sim->parsed())
            return run_write_sim(state, weights_path, corrupt);
        if (gen_model->parsed())
            return run_gen_model(state, gen_prefix, gen_samples);
    } catch (const fecim::DisturbRisk& e) {
        std::cerr << "disturb audit failure: " << e.what() << " (row " << e.row << ", col "
                  << e.col << ", phase " << e.phase << ")\n";
        return 3;
    } catch (const fecim::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const fecim::FormatError& e) {
        std::cerr << "format error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
