#pragma once

#include <stdexcept>
#include <string>

namespace qadv {

// Base for everything this library throws on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shape or size mismatch between tensors, circuits and parameter vectors.
struct DimensionError : Error {
    using Error::Error;
};

// Bad configuration value: qubit count out of range, negative epsilon, ...
struct ConfigError : Error {
    using Error::Error;
};

// Bad runtime input that is not a shape problem: label out of range, etc.
struct InputError : Error {
    using Error::Error;
};

// Dataset-level problems: missing files, single-class splits, bad labels.
struct DataError : Error {
    using Error::Error;
};

// Malformed serialized artifacts: PPM, CSV, checkpoint, circuit text.
struct FormatError : Error {
    using Error::Error;
};

// API misuse: backward on a non-scalar, reading grads before backward, ...
struct ContractError : Error {
    using Error::Error;
};

// Requested analytic oracle does not exist for this gate.
struct OracleUnsupportedError : Error {
    using Error::Error;
};

} // namespace qadv
