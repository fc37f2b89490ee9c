#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace semigda {

// Bad or inconsistent configuration values.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor / feature-map geometry violations.
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Corpus directory ingestion problems.
struct IngestError : std::runtime_error {
    explicit IngestError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite losses, divergence, resume mismatches.
struct TrainingError : std::runtime_error {
    explicit TrainingError(const std::string& msg) : std::runtime_error(msg) {}
};

// File and checkpoint I/O failures.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace semigda
