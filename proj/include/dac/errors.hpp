#pragma once

#include <stdexcept>
#include <string>

namespace dac {

// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A caller broke a documented precondition (dimension mismatch, empty batch, ...).
struct ContractViolation : Error {
    explicit ContractViolation(const std::string& msg) : Error("contract violation: " + msg) {}
};

// Invalid or inconsistent configuration values.
struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error("config error: " + msg) {}
};

// The reverse-diffusion sampler produced a non-finite value; carries the step index.
struct SamplingError : Error {
    int step_index;
    SamplingError(const std::string& msg, int step)
        : Error("sampling error at step " + std::to_string(step) + ": " + msg), step_index(step) {}
};

// Training aborted (non-finite loss); the trainer retains the last good checkpoint.
struct TrainingError : Error {
    explicit TrainingError(const std::string& msg) : Error("training error: " + msg) {}
};

struct DatasetIoError : Error {
    explicit DatasetIoError(const std::string& msg) : Error("dataset io error: " + msg) {}
};
struct DatasetVersionError : DatasetIoError {
    explicit DatasetVersionError(const std::string& msg) : DatasetIoError("version: " + msg) {}
};
struct DatasetTruncationError : DatasetIoError {
    explicit DatasetTruncationError(const std::string& msg) : DatasetIoError("truncation: " + msg) {}
};
struct DatasetChecksumError : DatasetIoError {
    explicit DatasetChecksumError(const std::string& msg) : DatasetIoError("checksum: " + msg) {}
};

} // namespace dac
