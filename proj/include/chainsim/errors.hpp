#pragma once

#include <stdexcept>
#include <string>

namespace chainsim {

// Base for everything thrown by this library.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad user input: malformed config, invalid parameter ranges, unknown keys.
// The CLI maps these to exit code 1.
struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error(what) {}
};

// The requested computation is physically ill-posed or outside the model's
// validity domain. The CLI maps these to exit code 2.
struct PhysicsError : Error {
    explicit PhysicsError(const std::string& what) : Error(what) {}
};

// A qubit-pair separation falls between the collective and independent
// asymptotic regimes, where neither closed form for the cross spectral
// density is trustworthy.
struct IntermediateRegimeError : PhysicsError {
    IntermediateRegimeError(const std::string& what, double omega_tau)
        : PhysicsError(what), omega_tau(omega_tau) {}
    double omega_tau;
};

// Numerical failure with the achieved tolerance attached.
struct ConvergenceError : PhysicsError {
    ConvergenceError(const std::string& what, double achieved)
        : PhysicsError(what), achieved_tolerance(achieved) {}
    double achieved_tolerance;
};

}  // namespace chainsim
