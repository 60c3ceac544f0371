#include "fecim/config.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fecim/analysis.hpp"
#include "fecim/errors.hpp"

namespace fecim {

FeFetParams RunConfig::device_params() const {
    FeFetParams p;
    p.v_write = v_write;
    p.v_dd = v_dd;
    p.r_on_nominal = r_on;
    p.r_off_nominal = r_off;
    p.disturb_margin = disturb_margin;
    return p;
}

VariationSpec RunConfig::variation_spec() const {
    VariationSpec s;
    s.sigma_c = sigma_c;
    s.sigma_r = sigma_r;
    s.on_off_ratio = on_off_ratio;
    s.seed = seed;
    return s;
}

void RunConfig::validate() const {
    if (v_dd >= v_write)
        throw ConfigError("v_dd (" + format_g17(v_dd) + ") must be below v_write (" +
                          format_g17(v_write) + ") to avoid state disturbance during compute");
    device_params().validate();
    variation_spec().validate();
    if (rows < 1 || cols < 1)
        throw ConfigError("array geometry must be at least 1x1");
    if (c_m <= 0.0)
        throw ConfigError("c_m must be positive");
    if (c_parasitic < 0.0)
        throw ConfigError("c_parasitic must be >= 0");
    if (trials < 1)
        throw ConfigError("trials must be >= 1");
    if (bnn_trials < 1)
        throw ConfigError("bnn_trials must be >= 1");
    if (p_grid.empty() || sigma_c_grid.empty())
        throw ConfigError("sweep grids must be non-empty");
    for (double p : p_grid)
        if (!(p >= 0.0 && p <= 1.0))
            throw ConfigError("p_grid entries must lie in [0, 1]");
    for (double s : sigma_c_grid)
        if (!(s >= 0.0 && s < 0.5))
            throw ConfigError("sigma_c_grid entries must lie in [0, 0.5)");
    for (double r : onoff_ratios)
        if (!(r > 1.0))
            throw ConfigError("onoff_ratios entries must exceed 1");
}

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

double parse_double(const std::string& key, const std::string& value) {
    if (value == "inf" || value == "infinity")
        return std::numeric_limits<double>::infinity();
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size())
            throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("invalid number for '" + key + "': '" + value + "'");
    }
}

std::int64_t parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(value, &pos);
        if (pos != value.size())
            throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("invalid integer for '" + key + "': '" + value + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes")
        return true;
    if (value == "false" || value == "0" || value == "no")
        return false;
    throw ConfigError("invalid boolean for '" + key + "': '" + value + "'");
}

std::vector<double> parse_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty())
            out.push_back(parse_double(key, item));
    }
    if (out.empty())
        throw ConfigError("empty list for '" + key + "'");
    return out;
}

} // namespace

RunConfig parse_config(const std::string& text) {
    RunConfig config;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t comment = line.find_first_of("#;");
        if (comment != std::string::npos)
            line = line.substr(0, comment);
        line = trim(line);
        if (line.empty())
            continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) + ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = section + "." + trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));

        if (key == "device.v_write") config.v_write = parse_double(key, value);
        else if (key == "device.v_dd") config.v_dd = parse_double(key, value);
        else if (key == "device.r_on") config.r_on = parse_double(key, value);
        else if (key == "device.r_off") config.r_off = parse_double(key, value);
        else if (key == "device.c_m") config.c_m = parse_double(key, value);
        else if (key == "device.c_parasitic") config.c_parasitic = parse_double(key, value);
        else if (key == "device.disturb_margin") config.disturb_margin = parse_double(key, value);
        else if (key == "array.rows") config.rows = static_cast<int>(parse_int(key, value));
        else if (key == "array.cols") config.cols = static_cast<int>(parse_int(key, value));
        else if (key == "variation.sigma_c") config.sigma_c = parse_double(key, value);
        else if (key == "variation.sigma_r") config.sigma_r = parse_double(key, value);
        else if (key == "variation.on_off_ratio") config.on_off_ratio = parse_double(key, value);
        else if (key == "variation.seed")
            config.seed = static_cast<std::uint64_t>(parse_int(key, value));
        else if (key == "sweep.p_grid") config.p_grid = parse_list(key, value);
        else if (key == "sweep.sigma_c_grid") config.sigma_c_grid = parse_list(key, value);
        else if (key == "sweep.onoff_ratios") config.onoff_ratios = parse_list(key, value);
        else if (key == "sweep.trials") config.trials = parse_int(key, value);
        else if (key == "sweep.bnn_trials")
            config.bnn_trials = static_cast<int>(parse_int(key, value));
        else if (key == "sweep.sigma_squared") config.sigma_squared = parse_bool(key, value);
        else
            throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    return config;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_config(buf.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

std::string config_echo(const RunConfig& config) {
    std::ostringstream out;
    auto list = [](const std::vector<double>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i)
            s += (i ? "," : "") + format_g17(v[i]);
        return s;
    };
    out << "[device]\n"
        << "v_write = " << format_g17(config.v_write) << '\n'
        << "v_dd = " << format_g17(config.v_dd) << '\n'
        << "r_on = " << format_g17(config.r_on) << '\n'
        << "r_off = " << format_g17(config.r_off) << '\n'
        << "c_m = " << format_g17(config.c_m) << '\n'
        << "c_parasitic = " << format_g17(config.c_parasitic) << '\n'
        << "disturb_margin = " << format_g17(config.disturb_margin) << '\n'
        << "[array]\n"
        << "rows = " << config.rows << '\n'
        << "cols = " << config.cols << '\n'
        << "[variation]\n"
        << "sigma_c = " << format_g17(config.sigma_c) << '\n'
        << "sigma_r = " << format_g17(config.sigma_r) << '\n'
        << "on_off_ratio = "
        << (std::isinf(config.on_off_ratio) ? "inf" : format_g17(config.on_off_ratio)) << '\n'
        << "seed = " << config.seed << '\n'
        << "[sweep]\n"
        << "p_grid = " << list(config.p_grid) << '\n'
        << "sigma_c_grid = " << list(config.sigma_c_grid) << '\n'
        << "onoff_ratios = " << list(config.onoff_ratios) << '\n'
        << "trials = " << config.trials << '\n'
        << "bnn_trials = " << config.bnn_trials << '\n'
        << "sigma_squared = " << (config.sigma_squared ? "true" : "false") << '\n';
    return out.str();
}

std::uint64_t config_hash(const RunConfig& config) {
    const std::string echo = config_echo(config);
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : echo) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

} // namespace fecim
