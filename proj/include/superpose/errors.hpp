#pragma once

#include <stdexcept>
#include <string>

namespace superpose {

/// Invalid configuration or experiment field. `field()` names the offending
/// key path, e.g. "channel.delays[1]".
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string field, const std::string& what)
        : std::invalid_argument(field + ": " + what), field_(std::move(field)), message_(what) {}
    const std::string& field() const noexcept { return field_; }
    const std::string& message() const noexcept { return message_; }

private:
    std::string field_;
    std::string message_;
};

/// Chip or symbol index outside its valid range.
class IndexError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// Every trellis state has zero likelihood at some chip.
class DegenerateLikelihood : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numeric budget (count cap, enumeration size) was exceeded.
class BudgetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A constraint cannot be met on the search grid.
class InfeasibleError : public std::runtime_error {
public:
    InfeasibleError(const std::string& what, double best)
        : std::runtime_error(what), best_(best) {}
    double best_achievable() const noexcept { return best_; }

private:
    double best_;
};

/// EM initialisation does not separate the states.
class InitError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace superpose
