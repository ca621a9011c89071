#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gdo {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed pool input, duplicate ids, missing files.
class PoolError : public Error {
public:
    using Error::Error;
};

/// Raised by a probe when one sample cannot be measured. Extraction records it
/// against the sample and keeps going.
class ProbeError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// The profile's hard constraints cannot be met by the pool. `constraint`
/// names the binding one (temporal_min, video_ratio_min, video_ratio_max).
class InfeasibleError : public Error {
public:
    InfeasibleError(std::string constraint, const std::string& detail)
        : Error("infeasible profile: " + constraint + ": " + detail),
          constraint_(std::move(constraint)) {}

    const std::string& constraint() const noexcept { return constraint_; }

private:
    std::string constraint_;
};

} // namespace gdo
