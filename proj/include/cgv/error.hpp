#pragma once

#include <stdexcept>
#include <string>

namespace cgv {

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// An iterative evaluation hit its iteration cap before reaching tolerance.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A premise of the convergence bound does not hold for the given population.
class AssumptionViolation : public std::runtime_error {
public:
    enum class Premise { MarginAboveHalf, NondegenerateGate, CompetentAgentsExist };

    AssumptionViolation(Premise premise, const std::string& what)
        : std::runtime_error(what), premise_(premise) {}

    [[nodiscard]] Premise premise() const noexcept { return premise_; }

private:
    Premise premise_;
};

// Malformed experiment configuration (file or flags).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace cgv
