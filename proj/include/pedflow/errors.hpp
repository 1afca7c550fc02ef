#pragma once
#include <stdexcept>
#include <string>

namespace pedflow {

// Config file / parameter validation failure. CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite state detected during integration. CLI maps this to exit code 3.
struct BlowUpError : std::runtime_error {
    BlowUpError(const std::string& what, double t, std::size_t index)
        : std::runtime_error(what), time(t), particle(index) {}
    double time;
    std::size_t particle;
};

// Statistical pipeline cannot produce a verdict (e.g. every probability
// estimate in a sweep is censored at zero). CLI maps this to exit code 4.
struct NoSignalError : std::runtime_error {
    explicit NoSignalError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace pedflow
