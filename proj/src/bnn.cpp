#include "fecim/bnn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fecim/analysis.hpp"
#include "fecim/errors.hpp"
#include "fecim/parallel.hpp"
#include "fecim/rng.hpp"

#include <json.hpp>

namespace fecim {

namespace {

constexpr std::uint64_t kTagBnnCaps = 0xB22'0001;
constexpr std::uint64_t kTagBnnModel = 0xB22'0002;
constexpr std::uint64_t kTagBnnData = 0xB22'0003;

int layer_output_count(const BnnLayer& layer) {
    if (layer.kind == LayerKind::fully_connected)
        return layer.out_cols;
    int oh = layer.conv.out_h();
    int ow = layer.conv.out_w();
    if (layer.max_pool) {
        oh /= 2;
        ow /= 2;
    }
    return oh * ow * layer.conv.out_ch;
}

// Sign activation with the batch-norm fold applied; exact ties give +1.
std::int8_t threshold_output(const BnnLayer& layer, int j, double s) {
    if (!layer.degenerate.empty() && layer.degenerate[static_cast<std::size_t>(j)])
        return layer.constant_out[static_cast<std::size_t>(j)];
    const double alpha = layer.alpha[static_cast<std::size_t>(j)];
    const bool flipped = !layer.flipped.empty() && layer.flipped[static_cast<std::size_t>(j)];
    if (flipped)
        return s <= alpha ? +1 : -1;
    return s >= alpha ? +1 : -1;
}

void extract_patch(std::span<const std::int8_t> act, const ConvShape& cs, int oy, int ox,
                   std::vector<std::int8_t>& patch) {
    int idx = 0;
    for (int ky = 0; ky < cs.kh; ++ky) {
        for (int kx = 0; kx < cs.kw; ++kx) {
            const int y = oy * cs.stride - cs.pad + ky;
            const int x = ox * cs.stride - cs.pad + kx;
            for (int ch = 0; ch < cs.in_ch; ++ch) {
                std::int8_t v = -1;  // padding binarizes below the mean
                if (y >= 0 && y < cs.in_h && x >= 0 && x < cs.in_w)
                    v = act[static_cast<std::size_t>((y * cs.in_w + x) * cs.in_ch + ch)];
                patch[static_cast<std::size_t>(idx++)] = v;
            }
        }
    }
}

std::vector<std::int8_t> max_pool_2x2(std::span<const std::int8_t> bits, int h, int w, int ch) {
    std::vector<std::int8_t> out(static_cast<std::size_t>((h / 2) * (w / 2) * ch));
    for (int y = 0; y < h / 2; ++y) {
        for (int x = 0; x < w / 2; ++x) {
            for (int c = 0; c < ch; ++c) {
                std::int8_t m = -1;
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx)
                        m = std::max(m, bits[static_cast<std::size_t>(
                                            ((2 * y + dy) * w + (2 * x + dx)) * ch + c)]);
                out[static_cast<std::size_t>((y * (w / 2) + x) * ch + c)] = m;
            }
        }
    }
    return out;
}

int argmax_lowest(std::span<const double> v, double tol) {
    double best = v[0];
    for (double x : v)
        best = std::max(best, x);
    for (std::size_t i = 0; i < v.size(); ++i)
        if (v[i] >= best - tol)
            return static_cast<int>(i);
    return 0;
}

} // namespace

FoldedThreshold fold_batchnorm(double gamma, double beta, double mu, double sigma,
                               bool sigma_squared) {
    if (!(sigma > 0.0))
        throw ConfigError("fold_batchnorm: sigma must be positive");
    FoldedThreshold f;
    if (gamma == 0.0) {
        f.degenerate = true;
        f.constant_out = beta >= 0.0 ? +1 : -1;
        return f;
    }
    const double denom = sigma_squared ? sigma * sigma : sigma;
    f.alpha = mu - beta * denom / gamma;
    f.flipped = gamma < 0.0;
    return f;
}

void validate_model(const BnnModel& model) {
    if (model.layers.empty())
        throw ConfigError("model has no layers");
    int prev = -1;
    for (std::size_t li = 0; li < model.layers.size(); ++li) {
        const BnnLayer& layer = model.layers[li];
        const std::string where = "layer " + std::to_string(li) + ": ";
        if (layer.in_rows < 1 || layer.out_cols < 1)
            throw ConfigError(where + "empty weight matrix");
        if (layer.weights.size() !=
            static_cast<std::size_t>(layer.in_rows) * static_cast<std::size_t>(layer.out_cols))
            throw ConfigError(where + "weight matrix size mismatch");
        for (std::int8_t w : layer.weights)
            if (w != -1 && w != 1)
                throw ConfigError(where + "weights must be -1 or +1");
        if (layer.alpha.size() != static_cast<std::size_t>(layer.out_cols))
            throw ConfigError(where + "alpha size mismatch");
        for (double a : layer.alpha)
            if (std::abs(a) > layer.in_rows)
                throw ConfigError(where + "|alpha| exceeds the row count");
        if (!layer.flipped.empty() &&
            layer.flipped.size() != static_cast<std::size_t>(layer.out_cols))
            throw ConfigError(where + "flipped size mismatch");
        if (!layer.degenerate.empty() &&
            (layer.degenerate.size() != static_cast<std::size_t>(layer.out_cols) ||
             layer.constant_out.size() != static_cast<std::size_t>(layer.out_cols)))
            throw ConfigError(where + "degenerate marker size mismatch");
        if (layer.kind == LayerKind::conv) {
            const ConvShape& cs = layer.conv;
            if (cs.kh * cs.kw * cs.in_ch != layer.in_rows)
                throw ConfigError(where + "conv kernel does not flatten to in_rows");
            if (cs.out_ch != layer.out_cols)
                throw ConfigError(where + "conv out_ch does not match out_cols");
            if (cs.out_h() < 1 || cs.out_w() < 1)
                throw ConfigError(where + "conv output is empty");
            if (layer.max_pool && (cs.out_h() % 2 != 0 || cs.out_w() % 2 != 0))
                throw ConfigError(where + "max pool requires even conv output dims");
            if (prev >= 0 && cs.in_h * cs.in_w * cs.in_ch != prev)
                throw ConfigError(where + "conv input does not match previous layer");
        } else {
            if (layer.max_pool)
                throw ConfigError(where + "max pool is only supported after conv layers");
            if (prev >= 0 && layer.in_rows != prev)
                throw ConfigError(where + "input size does not match previous layer");
        }
        prev = layer_output_count(layer);
    }
}

TilePlan map_layer(const BnnLayer& layer, int macro_rows, int macro_cols) {
    if (macro_rows < 1 || macro_cols < 1)
        throw ConfigError("map_layer: macro geometry must be at least 1x1");
    TilePlan plan;
    plan.row_tiles = (layer.in_rows + macro_rows - 1) / macro_rows;
    plan.col_tiles = (layer.out_cols + macro_cols - 1) / macro_cols;
    for (int rt = 0; rt < plan.row_tiles; ++rt) {
        for (int ct = 0; ct < plan.col_tiles; ++ct) {
            Tile t;
            t.row0 = rt * macro_rows;
            t.row1 = std::min(layer.in_rows, t.row0 + macro_rows);
            t.col0 = ct * macro_cols;
            t.col1 = std::min(layer.out_cols, t.col0 + macro_cols);
            plan.tiles.push_back(t);
        }
    }
    return plan;
}

std::vector<std::int8_t> binarize_input(std::span<const std::uint8_t> pixels, double mean) {
    std::vector<std::int8_t> out(pixels.size());
    for (std::size_t i = 0; i < pixels.size(); ++i)
        out[i] = pixels[i] > mean ? +1 : -1;
    return out;
}

InferResult reference_infer(const BnnModel& model, std::span<const std::int8_t> input) {
    validate_model(model);
    if (static_cast<int>(input.size()) != model.layers.front().in_rows &&
        model.layers.front().kind == LayerKind::fully_connected)
        throw ConfigError("input size does not match the first layer");

    InferResult result;
    std::vector<std::int8_t> act(input.begin(), input.end());
    for (const BnnLayer& layer : model.layers) {
        std::vector<double> preact;
        std::vector<std::int8_t> bits;
        if (layer.kind == LayerKind::fully_connected) {
            preact.resize(static_cast<std::size_t>(layer.out_cols));
            bits.resize(static_cast<std::size_t>(layer.out_cols));
            for (int j = 0; j < layer.out_cols; ++j) {
                long s = 0;
                for (int i = 0; i < layer.in_rows; ++i)
                    s += layer.weights[static_cast<std::size_t>(i) * layer.out_cols + j] * act[static_cast<std::size_t>(i)];
                preact[static_cast<std::size_t>(j)] = static_cast<double>(s);
                bits[static_cast<std::size_t>(j)] = threshold_output(layer, j, static_cast<double>(s));
            }
        } else {
            const ConvShape& cs = layer.conv;
            const int oh = cs.out_h(), ow = cs.out_w();
            preact.resize(static_cast<std::size_t>(oh) * ow * cs.out_ch);
            bits.resize(preact.size());
            std::vector<std::int8_t> patch(static_cast<std::size_t>(layer.in_rows));
            for (int oy = 0; oy < oh; ++oy) {
                for (int ox = 0; ox < ow; ++ox) {
                    extract_patch(act, cs, oy, ox, patch);
                    for (int j = 0; j < cs.out_ch; ++j) {
                        long s = 0;
                        for (int i = 0; i < layer.in_rows; ++i)
                            s += layer.weights[static_cast<std::size_t>(i) * layer.out_cols + j] *
                                 patch[static_cast<std::size_t>(i)];
                        const std::size_t at =
                            static_cast<std::size_t>((oy * ow + ox) * cs.out_ch + j);
                        preact[at] = static_cast<double>(s);
                        bits[at] = threshold_output(layer, j, static_cast<double>(s));
                    }
                }
            }
            if (layer.max_pool)
                bits = max_pool_2x2(bits, oh, ow, cs.out_ch);
        }
        result.preact.push_back(std::move(preact));
        result.bits.push_back(bits);
        act = std::move(bits);
    }
    result.label = argmax_lowest(result.preact.back(), 0.0);
    return result;
}

MacroHardware::MacroHardware(const BnnModel& model, const MacroConfig& config,
                             const VariationSpec& spec, std::uint64_t cap_salt)
    : config_(config), spec_(spec) {
    validate_model(model);
    config.params.validate();
    for (std::size_t li = 0; li < model.layers.size(); ++li) {
        const BnnLayer& layer = model.layers[li];
        const TilePlan plan = map_layer(layer, config.rows, config.cols);
        std::vector<TileArray> tile_arrays;
        tile_arrays.reserve(plan.tiles.size());
        for (std::size_t ti = 0; ti < plan.tiles.size(); ++ti) {
            const Tile& tile = plan.tiles[ti];
            TileArray ta;
            ta.tile = tile;
            const int tile_rows = tile.row1 - tile.row0;
            const int tile_cols = tile.col1 - tile.col0;
            ta.array = make_array(config.rows, tile_cols, config.params, spec,
                                  derive_key(kTagBnnModel, {li, ti}));
            BitMatrix w;
            w.rows = tile_rows;
            w.cols = tile_cols;
            w.bits.resize(static_cast<std::size_t>(tile_rows) * tile_cols);
            for (int r = 0; r < tile_rows; ++r)
                for (int c = 0; c < tile_cols; ++c)
                    w.set(r, c,
                          layer.weights[static_cast<std::size_t>(tile.row0 + r) * layer.out_cols +
                                        tile.col0 + c] > 0
                              ? 1
                              : 0);
            program_array(ta.array, w);
            ta.mask = ArrayMask::all(config.rows, tile_cols);
            for (int r = tile_rows; r < config.rows; ++r)
                ta.mask.row_active[static_cast<std::size_t>(r)] = 0;
            tile_arrays.push_back(std::move(ta));
        }
        layers_.push_back(std::move(tile_arrays));
    }
    resample_caps(spec, cap_salt);
}

void MacroHardware::resample_caps(const VariationSpec& spec, std::uint64_t cap_salt) {
    spec_ = spec;
    for (std::size_t li = 0; li < layers_.size(); ++li) {
        for (std::size_t ti = 0; ti < layers_[li].size(); ++ti) {
            MacroArray& array = layers_[li][ti].array;
            for (int r = 0; r < array.rows; ++r) {
                for (int c = 0; c < array.cols; ++c) {
                    RngStream s = substream(spec.seed,
                                            {kTagBnnCaps, cap_salt, li, ti,
                                             static_cast<std::uint64_t>(r),
                                             static_cast<std::uint64_t>(c)});
                    array.at(r, c).cap = sample_capacitor(1.2e-15, spec, s);
                }
            }
        }
    }
}

namespace {

struct ColumnOut {
    double s = 0.0;      // recovered bipolar sum (unrounded)
    std::int8_t bit = 0; // thresholded output
};

// Evaluates one logical layer for one input vector through its tile arrays.
std::vector<ColumnOut> macro_layer_eval(const BnnLayer& layer,
                                        std::span<const std::int8_t> x,
                                        const std::vector<MacroHardware::TileArray>& tiles,
                                        const MacroConfig& config, XnorModel xnor_model) {
    const int n_layer = layer.in_rows;
    const int macro_rows = config.rows;
    const double v_dd = config.params.v_dd;
    const double eps = v_dd * 1e-12;

    int row_tiles = 0;
    for (const auto& ta : tiles)
        if (ta.tile.col0 == tiles.front().tile.col0)
            ++row_tiles;

    std::vector<double> count_sum(static_cast<std::size_t>(layer.out_cols), 0.0);
    std::vector<double> raw_sum(static_cast<std::size_t>(layer.out_cols), 0.0);
    std::vector<double> single_v(static_cast<std::size_t>(layer.out_cols), 0.0);
    std::vector<int> single_rows(static_cast<std::size_t>(layer.out_cols), 0);

    int last_row0 = -1;
    MacStimulus stim;
    for (const auto& ta : tiles) {
        const Tile& tile = ta.tile;
        if (tile.row0 != last_row0) {
            std::vector<std::uint8_t> bits(static_cast<std::size_t>(macro_rows), 0);
            for (int r = tile.row0; r < tile.row1; ++r)
                bits[static_cast<std::size_t>(r - tile.row0)] = x[static_cast<std::size_t>(r)] > 0 ? 1 : 0;
            stim = make_stimulus(bits, config.params);
            last_row0 = tile.row0;
        }
        const MacResult res = mac_evaluate(ta.array, stim, xnor_model, {}, config.c_parasitic,
                                           &ta.mask);
        for (int c = tile.col0; c < tile.col1; ++c) {
            const double v = res.v_scl[static_cast<std::size_t>(c - tile.col0)];
            const double recovered = v * macro_rows / v_dd;
            count_sum[static_cast<std::size_t>(c)] += std::round(recovered);
            raw_sum[static_cast<std::size_t>(c)] += recovered;
            single_v[static_cast<std::size_t>(c)] = v;
            single_rows[static_cast<std::size_t>(c)] = tile.row1 - tile.row0;
        }
    }

    std::vector<ColumnOut> out(static_cast<std::size_t>(layer.out_cols));
    for (int j = 0; j < layer.out_cols; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        out[uj].s = 2.0 * raw_sum[uj] - n_layer;
        if (!layer.degenerate.empty() && layer.degenerate[uj]) {
            out[uj].bit = layer.constant_out[uj];
            continue;
        }
        const bool flipped = !layer.flipped.empty() && layer.flipped[uj];
        if (row_tiles == 1) {
            // Analog-domain activation: compare ScL against the folded
            // reference voltage, accounting for the masked rows that still
            // load the line. The eps guard resolves exact ties to +1.
            const double r_act = single_rows[uj];
            const double v_ref = v_dd * (r_act + layer.alpha[uj]) / (2.0 * macro_rows);
            if (flipped)
                out[uj].bit = single_v[uj] <= v_ref + eps ? +1 : -1;
            else
                out[uj].bit = single_v[uj] >= v_ref - eps ? +1 : -1;
        } else {
            const double s = 2.0 * count_sum[uj] - n_layer;
            out[uj].bit = threshold_output(layer, j, s);
        }
    }
    return out;
}

} // namespace

InferResult macro_infer(const BnnModel& model, std::span<const std::int8_t> input,
                        MacroHardware& hardware, XnorModel xnor_model) {
    validate_model(model);
    InferResult result;
    std::vector<std::int8_t> act(input.begin(), input.end());
    const auto& layer_arrays = hardware.layers();
    for (std::size_t li = 0; li < model.layers.size(); ++li) {
        const BnnLayer& layer = model.layers[li];
        std::vector<double> preact;
        std::vector<std::int8_t> bits;
        if (layer.kind == LayerKind::fully_connected) {
            if (static_cast<int>(act.size()) != layer.in_rows)
                throw ConfigError("macro_infer: activation size mismatch");
            const auto cols = macro_layer_eval(layer, act, layer_arrays[li], hardware.config(),
                                               xnor_model);
            preact.reserve(cols.size());
            bits.reserve(cols.size());
            for (const ColumnOut& co : cols) {
                preact.push_back(co.s);
                bits.push_back(co.bit);
            }
        } else {
            const ConvShape& cs = layer.conv;
            const int oh = cs.out_h(), ow = cs.out_w();
            preact.resize(static_cast<std::size_t>(oh) * ow * cs.out_ch);
            bits.resize(preact.size());
            std::vector<std::int8_t> patch(static_cast<std::size_t>(layer.in_rows));
            for (int oy = 0; oy < oh; ++oy) {
                for (int ox = 0; ox < ow; ++ox) {
                    extract_patch(act, cs, oy, ox, patch);
                    const auto cols = macro_layer_eval(layer, patch, layer_arrays[li],
                                                       hardware.config(), xnor_model);
                    for (int j = 0; j < cs.out_ch; ++j) {
                        const std::size_t at =
                            static_cast<std::size_t>((oy * ow + ox) * cs.out_ch + j);
                        preact[at] = cols[static_cast<std::size_t>(j)].s;
                        bits[at] = cols[static_cast<std::size_t>(j)].bit;
                    }
                }
            }
            if (layer.max_pool)
                bits = max_pool_2x2(bits, oh, ow, cs.out_ch);
        }
        result.preact.push_back(std::move(preact));
        result.bits.push_back(bits);
        act = std::move(bits);
    }
    // Grouping tolerance far below one count step but far above FP recovery
    // noise, so exact software ties resolve to the same lowest index.
    result.label = argmax_lowest(result.preact.back(), 1e-6);
    return result;
}

InferResult macro_infer(const BnnModel& model, std::span<const std::int8_t> input,
                        const MacroConfig& config, const VariationSpec& spec) {
    MacroHardware hw(model, config, spec);
    return macro_infer(model, input, hw);
}

AccuracyTable evaluate_accuracy(const BnnModel& model, const Dataset& data,
                                std::span<const double> sigma_grid, int trials,
                                const MacroConfig& config, const VariationSpec& base,
                                int threads) {
    validate_model(model);
    if (data.n < 1 || data.labels.size() != static_cast<std::size_t>(data.n))
        throw ConfigError("evaluate_accuracy: empty or inconsistent dataset");
    const std::size_t sample_px = static_cast<std::size_t>(data.h) * data.w;

    AccuracyTable table;
    table.grid.assign(sigma_grid.begin(), sigma_grid.end());
    table.rows.resize(sigma_grid.size() * static_cast<std::size_t>(trials));

    const std::int64_t jobs = static_cast<std::int64_t>(table.rows.size());
    parallel_for(jobs, threads, [&](std::int64_t job) {
        const std::size_t g = static_cast<std::size_t>(job) / trials;
        const std::uint64_t t = static_cast<std::uint64_t>(job) % trials;
        VariationSpec spec = base;
        spec.sigma_c = sigma_grid[g];
        MacroHardware hw(model, config, spec, t);
        int correct = 0;
        for (int i = 0; i < data.n; ++i) {
            const std::span<const std::uint8_t> px(data.images.data() + i * sample_px, sample_px);
            const std::vector<std::int8_t> x = binarize_input(px, model.input_mean);
            const InferResult r = macro_infer(model, x, hw);
            if (r.label == data.labels[static_cast<std::size_t>(i)])
                ++correct;
        }
        table.rows[static_cast<std::size_t>(job)] =
            AccuracyRow{sigma_grid[g], t, static_cast<double>(correct) / data.n};
    });

    for (std::size_t g = 0; g < sigma_grid.size(); ++g) {
        double mean = 0.0;
        for (int t = 0; t < trials; ++t)
            mean += table.rows[g * trials + static_cast<std::size_t>(t)].accuracy;
        mean /= trials;
        double var = 0.0;
        for (int t = 0; t < trials; ++t) {
            const double d = table.rows[g * trials + static_cast<std::size_t>(t)].accuracy - mean;
            var += d * d;
        }
        var /= trials > 1 ? trials - 1 : 1;
        table.mean_accuracy.push_back(mean);
        table.std_accuracy.push_back(std::sqrt(var));
    }
    return table;
}

std::string accuracy_table_csv(const AccuracyTable& table) {
    std::ostringstream out;
    out << "sigma_c,seed,accuracy\n";
    for (const AccuracyRow& row : table.rows)
        out << format_g17(row.sigma_c) << ',' << row.trial << ',' << format_g17(row.accuracy)
            << '\n';
    return out.str();
}

// ---------------------------------------------------------------------------
// Dataset and model files

namespace {

std::uint32_t read_be32(std::istream& in, const std::string& path, std::size_t offset) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in)
        throw FormatError(path + ": truncated at offset " + std::to_string(offset));
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
           std::uint32_t(b[3]);
}

void write_be32(std::ostream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                                static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

} // namespace

Dataset load_idx_dataset(const std::string& images_path, const std::string& labels_path) {
    Dataset data;
    {
        std::ifstream in(images_path, std::ios::binary);
        if (!in)
            throw FormatError(images_path + ": cannot open");
        const std::uint32_t magic = read_be32(in, images_path, 0);
        if (magic != 0x00000803u)
            throw FormatError(images_path + ": bad magic at offset 0 (expected 0x00000803)");
        data.n = static_cast<int>(read_be32(in, images_path, 4));
        data.h = static_cast<int>(read_be32(in, images_path, 8));
        data.w = static_cast<int>(read_be32(in, images_path, 12));
        const std::size_t count = static_cast<std::size_t>(data.n) * data.h * data.w;
        data.images.resize(count);
        in.read(reinterpret_cast<char*>(data.images.data()), static_cast<std::streamsize>(count));
        if (!in)
            throw FormatError(images_path + ": truncated pixel payload at offset 16");
    }
    {
        std::ifstream in(labels_path, std::ios::binary);
        if (!in)
            throw FormatError(labels_path + ": cannot open");
        const std::uint32_t magic = read_be32(in, labels_path, 0);
        if (magic != 0x00000801u)
            throw FormatError(labels_path + ": bad magic at offset 0 (expected 0x00000801)");
        const int n = static_cast<int>(read_be32(in, labels_path, 4));
        if (n != data.n)
            throw FormatError(labels_path + ": label count does not match image count");
        data.labels.resize(static_cast<std::size_t>(n));
        in.read(reinterpret_cast<char*>(data.labels.data()), n);
        if (!in)
            throw FormatError(labels_path + ": truncated label payload at offset 8");
    }
    return data;
}

void save_idx_dataset(const Dataset& data, const std::string& images_path,
                      const std::string& labels_path) {
    {
        std::ofstream out(images_path, std::ios::binary);
        write_be32(out, 0x00000803u);
        write_be32(out, static_cast<std::uint32_t>(data.n));
        write_be32(out, static_cast<std::uint32_t>(data.h));
        write_be32(out, static_cast<std::uint32_t>(data.w));
        out.write(reinterpret_cast<const char*>(data.images.data()),
                  static_cast<std::streamsize>(data.images.size()));
        if (!out)
            throw FormatError(images_path + ": write failed");
    }
    {
        std::ofstream out(labels_path, std::ios::binary);
        write_be32(out, 0x00000801u);
        write_be32(out, static_cast<std::uint32_t>(data.n));
        out.write(reinterpret_cast<const char*>(data.labels.data()),
                  static_cast<std::streamsize>(data.labels.size()));
        if (!out)
            throw FormatError(labels_path + ": write failed");
    }
}

namespace {

std::vector<std::uint8_t> pack_weights(const BnnLayer& layer) {
    const std::size_t n = layer.weights.size();
    std::vector<std::uint8_t> blob((n + 7) / 8, 0);
    for (std::size_t i = 0; i < n; ++i)
        if (layer.weights[i] > 0)
            blob[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
    return blob;
}

void unpack_weights(BnnLayer& layer, std::span<const std::uint8_t> blob,
                    const std::string& path) {
    const std::size_t n =
        static_cast<std::size_t>(layer.in_rows) * static_cast<std::size_t>(layer.out_cols);
    if (blob.size() != (n + 7) / 8)
        throw FormatError(path + ": blob size " + std::to_string(blob.size()) +
                          " does not match " + std::to_string((n + 7) / 8) + " expected bytes");
    layer.weights.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        layer.weights[i] = (blob[i / 8] >> (i % 8)) & 1u ? +1 : -1;
}

} // namespace

void save_model(const BnnModel& model, const std::string& manifest_path) {
    validate_model(model);
    const std::filesystem::path manifest(manifest_path);
    const std::filesystem::path dir = manifest.parent_path();
    nlohmann::json j;
    j["format"] = "fecim-bnn-1";
    j["input_mean"] = model.input_mean;
    j["sigma_mode"] = model.sigma_squared ? "sigma_squared" : "sigma";
    j["layers"] = nlohmann::json::array();
    for (std::size_t li = 0; li < model.layers.size(); ++li) {
        const BnnLayer& layer = model.layers[li];
        const std::string blob_name =
            manifest.stem().string() + "_layer" + std::to_string(li) + ".bin";
        nlohmann::json jl;
        jl["kind"] = layer.kind == LayerKind::conv ? "conv" : "fc";
        jl["shape"] = {layer.in_rows, layer.out_cols};
        jl["alpha"] = layer.alpha;
        jl["flipped"] = layer.flipped;
        jl["degenerate"] = layer.degenerate;
        jl["constant_out"] = layer.constant_out;
        jl["weights_ref"] = blob_name;
        jl["max_pool"] = layer.max_pool;
        if (layer.kind == LayerKind::conv) {
            jl["conv"] = {{"in_h", layer.conv.in_h},     {"in_w", layer.conv.in_w},
                          {"in_ch", layer.conv.in_ch},   {"kh", layer.conv.kh},
                          {"kw", layer.conv.kw},         {"stride", layer.conv.stride},
                          {"pad", layer.conv.pad},       {"out_ch", layer.conv.out_ch}};
        }
        j["layers"].push_back(jl);
        const std::vector<std::uint8_t> blob = pack_weights(layer);
        std::ofstream out(dir / blob_name, std::ios::binary);
        out.write(reinterpret_cast<const char*>(blob.data()),
                  static_cast<std::streamsize>(blob.size()));
        if (!out)
            throw FormatError((dir / blob_name).string() + ": write failed");
    }
    std::ofstream out(manifest);
    out << j.dump(2) << '\n';
    if (!out)
        throw FormatError(manifest_path + ": write failed");
}

BnnModel load_model(const std::string& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in)
        throw FormatError(manifest_path + ": cannot open");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(manifest_path + ": " + e.what());
    }
    if (j.value("format", "") != "fecim-bnn-1")
        throw FormatError(manifest_path + ": unknown manifest format");
    BnnModel model;
    model.input_mean = j.value("input_mean", 127.5);
    model.sigma_squared = j.value("sigma_mode", "sigma_squared") == std::string("sigma_squared");
    const std::filesystem::path dir = std::filesystem::path(manifest_path).parent_path();
    for (const auto& jl : j.at("layers")) {
        BnnLayer layer;
        const std::string kind = jl.at("kind").get<std::string>();
        if (kind == "conv")
            layer.kind = LayerKind::conv;
        else if (kind == "fc")
            layer.kind = LayerKind::fully_connected;
        else
            throw FormatError(manifest_path + ": unknown layer kind '" + kind + "'");
        layer.in_rows = jl.at("shape").at(0).get<int>();
        layer.out_cols = jl.at("shape").at(1).get<int>();
        layer.alpha = jl.at("alpha").get<std::vector<double>>();
        layer.flipped = jl.value("flipped", std::vector<std::uint8_t>{});
        layer.degenerate = jl.value("degenerate", std::vector<std::uint8_t>{});
        layer.constant_out = jl.value("constant_out", std::vector<std::int8_t>{});
        layer.max_pool = jl.value("max_pool", false);
        if (layer.kind == LayerKind::conv) {
            const auto& jc = jl.at("conv");
            layer.conv.in_h = jc.at("in_h").get<int>();
            layer.conv.in_w = jc.at("in_w").get<int>();
            layer.conv.in_ch = jc.at("in_ch").get<int>();
            layer.conv.kh = jc.at("kh").get<int>();
            layer.conv.kw = jc.at("kw").get<int>();
            layer.conv.stride = jc.at("stride").get<int>();
            layer.conv.pad = jc.at("pad").get<int>();
            layer.conv.out_ch = jc.at("out_ch").get<int>();
        }
        const std::string blob_path = (dir / jl.at("weights_ref").get<std::string>()).string();
        std::ifstream blob_in(blob_path, std::ios::binary);
        if (!blob_in)
            throw FormatError(blob_path + ": cannot open");
        std::vector<std::uint8_t> blob((std::istreambuf_iterator<char>(blob_in)),
                                       std::istreambuf_iterator<char>());
        unpack_weights(layer, blob, blob_path);
        model.layers.push_back(std::move(layer));
    }
    validate_model(model);
    return model;
}

// ---------------------------------------------------------------------------
// Generators

BnnModel make_random_model(std::uint64_t seed, std::span<const int> dims) {
    if (dims.size() < 2)
        throw ConfigError("make_random_model: need at least input and output dims");
    BnnModel model;
    model.input_mean = 127.5;
    for (std::size_t li = 0; li + 1 < dims.size(); ++li) {
        BnnLayer layer;
        layer.in_rows = dims[li];
        layer.out_cols = dims[li + 1];
        layer.weights.resize(static_cast<std::size_t>(layer.in_rows) * layer.out_cols);
        layer.alpha.resize(static_cast<std::size_t>(layer.out_cols));
        layer.flipped.assign(static_cast<std::size_t>(layer.out_cols), 0);
        RngStream s = substream(seed, {kTagBnnModel, li});
        for (auto& w : layer.weights)
            w = (s.next_u64() & 1) ? +1 : -1;
        for (int j = 0; j < layer.out_cols; ++j) {
            // Integer thresholds in a narrow band around zero; a few flipped
            // channels to exercise the reversed comparison.
            layer.alpha[static_cast<std::size_t>(j)] =
                static_cast<double>(static_cast<std::int64_t>(s.next_u64() % 7) - 3);
            layer.flipped[static_cast<std::size_t>(j)] = (s.next_u64() % 8) == 0 ? 1 : 0;
        }
        model.layers.push_back(std::move(layer));
    }
    validate_model(model);
    return model;
}

SyntheticSet make_synthetic_classification(std::uint64_t seed, int n_samples, int classes,
                                           int input_bits, int hidden, double flip_fraction) {
    if (classes < 2 || input_bits < 8 || hidden < classes)
        throw ConfigError("make_synthetic_classification: degenerate geometry");
    RngStream s = substream(seed, {kTagBnnData, 0});

    // Per-class prototypes in the input space and codewords in hidden space.
    std::vector<std::int8_t> prototypes(static_cast<std::size_t>(classes) * input_bits);
    std::vector<std::int8_t> codewords(static_cast<std::size_t>(classes) * hidden);
    for (auto& v : prototypes)
        v = (s.next_u64() & 1) ? +1 : -1;
    for (auto& v : codewords)
        v = (s.next_u64() & 1) ? +1 : -1;

    BnnModel model;
    model.input_mean = 127.5;
    // Hidden layer: majority vote of the prototypes each codeword selects.
    BnnLayer l1;
    l1.in_rows = input_bits;
    l1.out_cols = hidden;
    l1.weights.resize(static_cast<std::size_t>(input_bits) * hidden);
    l1.alpha.assign(static_cast<std::size_t>(hidden), 0.0);
    l1.flipped.assign(static_cast<std::size_t>(hidden), 0);
    for (int i = 0; i < input_bits; ++i) {
        for (int j = 0; j < hidden; ++j) {
            int vote = 0;
            for (int c = 0; c < classes; ++c)
                vote += codewords[static_cast<std::size_t>(c) * hidden + j] *
                        prototypes[static_cast<std::size_t>(c) * input_bits + i];
            l1.weights[static_cast<std::size_t>(i) * hidden + j] = vote >= 0 ? +1 : -1;
        }
    }
    // Output layer: codeword matching.
    BnnLayer l2;
    l2.in_rows = hidden;
    l2.out_cols = classes;
    l2.weights.resize(static_cast<std::size_t>(hidden) * classes);
    l2.alpha.assign(static_cast<std::size_t>(classes), 0.0);
    l2.flipped.assign(static_cast<std::size_t>(classes), 0);
    for (int j = 0; j < hidden; ++j)
        for (int c = 0; c < classes; ++c)
            l2.weights[static_cast<std::size_t>(j) * classes + c] =
                codewords[static_cast<std::size_t>(c) * hidden + j];
    model.layers = {std::move(l1), std::move(l2)};
    validate_model(model);

    SyntheticSet set;
    set.model = model;
    Dataset& data = set.data;
    data.n = n_samples;
    if (input_bits % 16 == 0) {
        data.h = 16;
        data.w = input_bits / 16;
    } else {
        data.h = 1;
        data.w = input_bits;
    }
    data.images.resize(static_cast<std::size_t>(n_samples) * input_bits);
    data.labels.resize(static_cast<std::size_t>(n_samples));
    for (int i = 0; i < n_samples; ++i) {
        RngStream si = substream(seed, {kTagBnnData, 1, static_cast<std::uint64_t>(i)});
        const int c = static_cast<int>(si.next_u64() % classes);
        std::vector<std::int8_t> x(static_cast<std::size_t>(input_bits));
        for (int b = 0; b < input_bits; ++b) {
            std::int8_t v = prototypes[static_cast<std::size_t>(c) * input_bits + b];
            if (si.next_unit() < flip_fraction)
                v = static_cast<std::int8_t>(-v);
            x[static_cast<std::size_t>(b)] = v;
            data.images[static_cast<std::size_t>(i) * input_bits + b] = v > 0 ? 255 : 0;
        }
        // Labels are the model's own clean predictions, not the class draw.
        const InferResult r = reference_infer(model, x);
        data.labels[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(r.label);
    }
    return set;
}

} // namespace fecim
