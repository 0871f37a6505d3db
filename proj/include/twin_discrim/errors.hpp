#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace twin_discrim {

/// Precondition violated by caller-supplied data.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Non-finite number handed to the coding routines.
class InvalidValue : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

/// Transfer function whose denominator is not monic.
class InvalidModel : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

/// Frequency response evaluated on (or numerically at) a pole.
class NearPoleError : public std::runtime_error {
public:
    NearPoleError(const std::string& what, double omega)
        : std::runtime_error(what), omega_(omega) {}
    double omega() const noexcept { return omega_; }

private:
    double omega_;
};

/// Twin state became non-finite.
class SimulationDiverged : public std::runtime_error {
public:
    SimulationDiverged(const std::string& what, std::size_t step)
        : std::runtime_error(what), step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

}  // namespace twin_discrim
