#pragma once

#include <stdexcept>
#include <string>

namespace fecim {

// Invalid user-facing configuration (bad parameter ranges, malformed config
// files, missing inputs). The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A FeFET saw a gate-source voltage inside the undefined partial-switching
// band (disturb_margin, v_write). This always indicates a protocol bug in
// the caller; the behavioral model refuses to guess the outcome.
class DisturbRisk : public std::runtime_error {
public:
    DisturbRisk(double v_gs, int row = -1, int col = -1, int phase = -1);
    double v_gs;
    int row;
    int col;
    int phase;
};

// A completed write left both FeFETs of a cell in the same state.
class ComplementarityViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A cell handed to an XNOR evaluation does not satisfy the complementary
// storage invariant.
class InvalidCell : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed external file (weight manifest, IDX dataset, array dump).
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace fecim
