#pragma once

#include <stdexcept>
#include <string>

namespace mlgcn {

// Bad arguments or shapes passed to a library routine.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Mesh or graph topology that violates a structural precondition.
class StructuralError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// File system failures; the message always names the offending path.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Singular systems, solver non-convergence, non-finite losses.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace mlgcn
