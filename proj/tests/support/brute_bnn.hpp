#pragma once

// Deliberately independent network evaluator: direct convolution loops, no
// im2col, match counting instead of signed accumulation. Used purely as a
// second implementation to cross-check the library's inference paths.

#include <cstdint>
#include <vector>

#include "fecim/bnn.hpp"

namespace brute {

struct Trace {
    int label = -1;
    std::vector<std::vector<double>> preact;
    std::vector<std::vector<std::int8_t>> bits;
};

inline std::int8_t activate(const fecim::BnnLayer& layer, int j, double s) {
    if (!layer.degenerate.empty() && layer.degenerate[static_cast<std::size_t>(j)])
        return layer.constant_out[static_cast<std::size_t>(j)];
    const double a = layer.alpha[static_cast<std::size_t>(j)];
    if (!layer.flipped.empty() && layer.flipped[static_cast<std::size_t>(j)])
        return s <= a ? std::int8_t(1) : std::int8_t(-1);
    return s >= a ? std::int8_t(1) : std::int8_t(-1);
}

inline Trace infer(const fecim::BnnModel& model, const std::vector<std::int8_t>& input) {
    Trace trace;
    std::vector<std::int8_t> act = input;
    for (const fecim::BnnLayer& layer : model.layers) {
        std::vector<double> preact;
        std::vector<std::int8_t> bits;
        if (layer.kind == fecim::LayerKind::fully_connected) {
            for (int j = 0; j < layer.out_cols; ++j) {
                int match = 0;
                for (int i = 0; i < layer.in_rows; ++i) {
                    const std::int8_t w =
                        layer.weights[static_cast<std::size_t>(i) * layer.out_cols + j];
                    if (w == act[static_cast<std::size_t>(i)])
                        ++match;
                }
                const double s = 2.0 * match - layer.in_rows;
                preact.push_back(s);
                bits.push_back(activate(layer, j, s));
            }
        } else {
            const fecim::ConvShape& cs = layer.conv;
            for (int oy = 0; oy < cs.out_h(); ++oy) {
                for (int ox = 0; ox < cs.out_w(); ++ox) {
                    for (int f = 0; f < cs.out_ch; ++f) {
                        int match = 0;
                        for (int ky = 0; ky < cs.kh; ++ky) {
                            for (int kx = 0; kx < cs.kw; ++kx) {
                                const int y = oy * cs.stride + ky - cs.pad;
                                const int x = ox * cs.stride + kx - cs.pad;
                                for (int ch = 0; ch < cs.in_ch; ++ch) {
                                    std::int8_t a = -1;
                                    if (y >= 0 && y < cs.in_h && x >= 0 && x < cs.in_w)
                                        a = act[static_cast<std::size_t>(
                                            (y * cs.in_w + x) * cs.in_ch + ch)];
                                    const int row = (ky * cs.kw + kx) * cs.in_ch + ch;
                                    const std::int8_t w = layer.weights[static_cast<std::size_t>(
                                        row) * layer.out_cols + f];
                                    if (w == a)
                                        ++match;
                                }
                            }
                        }
                        const double s = 2.0 * match - layer.in_rows;
                        preact.push_back(s);
                        bits.push_back(activate(layer, f, s));
                    }
                }
            }
            if (layer.max_pool) {
                const int oh = cs.out_h(), ow = cs.out_w();
                std::vector<std::int8_t> pooled;
                for (int y = 0; y + 1 < oh; y += 2) {
                    for (int x = 0; x + 1 < ow; x += 2) {
                        for (int f = 0; f < cs.out_ch; ++f) {
                            std::int8_t m = -1;
                            for (int dy = 0; dy < 2; ++dy)
                                for (int dx = 0; dx < 2; ++dx) {
                                    const std::int8_t b = bits[static_cast<std::size_t>(
                                        ((y + dy) * ow + (x + dx)) * cs.out_ch + f)];
                                    if (b > m)
                                        m = b;
                                }
                            pooled.push_back(m);
                        }
                    }
                }
                bits = pooled;
            }
        }
        trace.preact.push_back(preact);
        trace.bits.push_back(bits);
        act = bits;
    }
    const std::vector<double>& last = trace.preact.back();
    int best = 0;
    for (std::size_t i = 1; i < last.size(); ++i)
        if (last[i] > last[static_cast<std::size_t>(best)])
            best = static_cast<int>(i);
    trace.label = best;
    return trace;
}

} // namespace brute
