#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fecim/macro_array.hpp"

namespace fecim {

// Binary network inference through the simulated macro. Weights and
// activations are bipolar (-1/+1); batch normalization is folded into a
// per-output sign threshold alpha.

struct FoldedThreshold {
    double alpha = 0.0;
    bool flipped = false;     // gamma < 0: the comparison direction reverses
    bool degenerate = false;  // gamma == 0: constant output channel
    int constant_out = +1;    // sign(beta) with the tie resolved to +1
};

// alpha = mu - beta * sigma^2 / gamma (literal batch-norm folding). With
// sigma_squared = false the conventional sigma denominator is used instead.
FoldedThreshold fold_batchnorm(double gamma, double beta, double mu, double sigma,
                               bool sigma_squared = true);

enum class LayerKind { fully_connected, conv };

struct ConvShape {
    int in_h = 0, in_w = 0, in_ch = 0;
    int kh = 0, kw = 0;
    int stride = 1;
    int pad = 0;
    int out_ch = 0;

    int out_h() const { return (in_h + 2 * pad - kh) / stride + 1; }
    int out_w() const { return (in_w + 2 * pad - kw) / stride + 1; }
};

struct BnnLayer {
    LayerKind kind = LayerKind::fully_connected;
    // rows = flattened input positions, cols = output neurons/filters.
    // Conv kernels flatten in (ky, kx, channel) order.
    int in_rows = 0;
    int out_cols = 0;
    std::vector<std::int8_t> weights;  // row-major, values in {-1, +1}
    std::vector<double> alpha;         // per output column
    std::vector<std::uint8_t> flipped;
    std::vector<std::uint8_t> degenerate;
    std::vector<std::int8_t> constant_out;
    ConvShape conv;          // valid when kind == conv
    bool max_pool = false;   // 2x2 stride-2 max pool after activation (conv only)
};

struct BnnModel {
    std::vector<BnnLayer> layers;
    double input_mean = 127.5;  // first-layer binarization pivot
    bool sigma_squared = true;  // Eq.-folding mode recorded in every manifest
};

void validate_model(const BnnModel& model);

struct Tile {
    int row0 = 0, row1 = 0;  // [row0, row1)
    int col0 = 0, col1 = 0;
};

struct TilePlan {
    std::vector<Tile> tiles;  // row-tile major
    int row_tiles = 0;
    int col_tiles = 0;
};

// Splits the layer's weight matrix into tiles fitting the macro geometry.
// Partial sums of row-tiles are combined digitally before thresholding.
TilePlan map_layer(const BnnLayer& layer, int macro_rows, int macro_cols);

struct InferResult {
    int label = -1;
    std::vector<std::vector<double>> preact;       // bipolar sums per layer
    std::vector<std::vector<std::int8_t>> bits;    // post-activation outputs
};

std::vector<std::int8_t> binarize_input(std::span<const std::uint8_t> pixels, double mean);

// Bit-exact software oracle: integer bipolar MAC (s = 2M - N) and sign
// thresholding against alpha.
InferResult reference_infer(const BnnModel& model, std::span<const std::int8_t> input);

struct MacroConfig {
    int rows = 128;
    int cols = 128;
    FeFetParams params;
    double c_parasitic = 0.0;
};

// The programmed tile arrays for one model on one simulated chip instance.
// Weights are programmed once; capacitors can be resampled per trial.
class MacroHardware {
public:
    MacroHardware(const BnnModel& model, const MacroConfig& config, const VariationSpec& spec,
                  std::uint64_t cap_salt = 0);

    void resample_caps(const VariationSpec& spec, std::uint64_t cap_salt);

    const MacroConfig& config() const { return config_; }
    const VariationSpec& spec() const { return spec_; }

    struct TileArray {
        Tile tile;
        MacroArray array;  // config.rows tall, tile width wide
        ArrayMask mask;
    };
    const std::vector<std::vector<TileArray>>& layers() const { return layers_; }

private:
    MacroConfig config_;
    VariationSpec spec_;
    std::vector<std::vector<TileArray>> layers_;
};

// Analog-path inference. Single row-tile outputs threshold against the ScL
// reference voltage; multi-tile layers convert each tile voltage back to a
// match count, combine digitally, then threshold. With zero variation and an
// infinite on/off ratio the result is bit-identical to reference_infer.
InferResult macro_infer(const BnnModel& model, std::span<const std::int8_t> input,
                        MacroHardware& hardware, XnorModel xnor_model = XnorModel::ideal);

InferResult macro_infer(const BnnModel& model, std::span<const std::int8_t> input,
                        const MacroConfig& config, const VariationSpec& spec);

struct Dataset {
    int n = 0, h = 0, w = 0;
    std::vector<std::uint8_t> images;  // n * h * w bytes
    std::vector<std::uint8_t> labels;  // n entries
};

// IDX readers (big-endian magic 0x00000803 / 0x00000801).
Dataset load_idx_dataset(const std::string& images_path, const std::string& labels_path);
void save_idx_dataset(const Dataset& data, const std::string& images_path,
                      const std::string& labels_path);

struct AccuracyRow {
    double sigma_c = 0.0;
    std::uint64_t trial = 0;
    double accuracy = 0.0;
};

struct AccuracyTable {
    std::vector<AccuracyRow> rows;
    std::vector<double> grid;
    std::vector<double> mean_accuracy;
    std::vector<double> std_accuracy;
};

// Fig.-12 methodology: per sigma_c grid point, fresh capacitor draws per
// trial (one simulated chip each), accuracy against the dataset labels.
// Capacitor substreams are keyed without sigma_c, so grid points share the
// same underlying mismatch draws scaled by sigma_c.
AccuracyTable evaluate_accuracy(const BnnModel& model, const Dataset& data,
                                std::span<const double> sigma_grid, int trials,
                                const MacroConfig& config, const VariationSpec& base,
                                int threads = 1);

std::string accuracy_table_csv(const AccuracyTable& table);

// Weight files: JSON manifest plus a little-endian bit-packed blob per layer
// (row-major, LSB first, bit 1 = +1). Blob paths are relative to the
// manifest.
void save_model(const BnnModel& model, const std::string& manifest_path);
BnnModel load_model(const std::string& manifest_path);

// Generators for desk-scale experiments.
BnnModel make_random_model(std::uint64_t seed, std::span<const int> dims);

struct SyntheticSet {
    BnnModel model;
    Dataset data;  // labels are the model's own zero-variation predictions
};

// Prototype/codeword classification task with healthy decision margins:
// class prototypes in the input space, a majority-vote hidden layer mapping
// onto per-class codewords, and a codeword-matching output layer.
SyntheticSet make_synthetic_classification(std::uint64_t seed, int n_samples, int classes = 10,
                                           int input_bits = 128, int hidden = 64,
                                           double flip_fraction = 0.08);

} // namespace fecim
