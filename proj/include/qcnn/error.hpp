#pragma once

#include <stdexcept>
#include <string>

namespace qcnn {

// Base for everything thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tensor/layer shape mismatches. Messages carry both offending shapes.
struct ShapeError : Error {
    using Error::Error;
};

// A caller violated a documented precondition (non-normalized probabilities,
// non-finite angle, missing truth labels, ...).
struct ContractError : Error {
    using Error::Error;
};

// Wrong number of things: bindings vs. free parameters, weights vs. models,
// label list lengths, empty model sets.
struct ArityError : Error {
    using Error::Error;
};

// An operation was called out of sequence (backward before forward).
struct InvalidStateError : Error {
    using Error::Error;
};

// Dataset and file problems: unreadable directories, undecodable images,
// empty datasets, manifest/prediction-file misalignment.
struct DataError : Error {
    using Error::Error;
};

// Training produced a non-finite value.
struct NumericError : Error {
    using Error::Error;
};

// Checkpoint refusals: bad magic, version mismatch, truncation, digest mismatch.
struct CheckpointError : Error {
    using Error::Error;
};

// Command-line misuse outside of what the flag parser itself rejects.
struct UsageError : Error {
    using Error::Error;
};

} // namespace qcnn
