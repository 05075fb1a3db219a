#pragma once

#include <stdexcept>
#include <string>

namespace fedquant {

// Bad argument or configuration value supplied by the caller.
struct input_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Value range collapsed to a point where a quantiser needs spread.
struct degenerate_range_error : input_error {
    using input_error::input_error;
};

// Wire payload is truncated, inconsistent, or contradicts the decoder state.
struct corrupt_payload_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// On-disk data file does not parse (bad magic, truncated, size mismatch).
struct format_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Requested data partition cannot be produced (after bounded retries).
struct partition_infeasible_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Config file failed schema validation; message names the offending field.
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace fedquant
