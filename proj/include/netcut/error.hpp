#pragma once

#include <stdexcept>
#include <string>

namespace netcut {

// Error taxonomy; the CLI maps these onto exit codes.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad user input: config files, CLI values, missing input files.
struct ConfigError : Error {
    using Error::Error;
};

// Operand shapes do not line up.
struct DimensionError : Error {
    using Error::Error;
};

// A file does not match its declared format (magic, schema).
struct FormatError : Error {
    using Error::Error;
};

// A file ends mid-record.
struct CorruptionError : Error {
    using Error::Error;
};

// Non-finite values where finite ones are required, or a degenerate vector.
struct NumericError : Error {
    using Error::Error;
};

// A label tensor that is not one-hot, or a class id out of range.
struct LabelError : Error {
    using Error::Error;
};

// Node/head id out of range.
struct IndexError : Error {
    using Error::Error;
};

// API misuse (e.g. backward from a non-scalar node).
struct ContractError : Error {
    using Error::Error;
};

}  // namespace netcut
