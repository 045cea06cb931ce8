#pragma once

#include <stdexcept>
#include <string>

namespace dampe {

// Precondition / shape contract broken by the caller.
struct ContractViolation : std::logic_error {
    explicit ContractViolation(const std::string& msg) : std::logic_error(msg) {}
};

// Malformed or inconsistent input data (files, graphs, labels).
struct DataFault : std::runtime_error {
    explicit DataFault(const std::string& msg) : std::runtime_error(msg) {}
};

// NaN/Inf or failure to converge inside a numeric routine.
struct NumericFault : std::runtime_error {
    explicit NumericFault(const std::string& msg) : std::runtime_error(msg) {}
};

// Sinkhorn ran out of iterations; carries the last marginal error.
struct ConvergenceFailure : NumericFault {
    double marginal_error;
    ConvergenceFailure(const std::string& msg, double err)
        : NumericFault(msg), marginal_error(err) {}
};

// Bad run configuration (unknown key, unparsable value, missing path).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

inline void check_contract(bool cond, const std::string& msg) {
    if (!cond) throw ContractViolation(msg);
}

inline void check_data(bool cond, const std::string& msg) {
    if (!cond) throw DataFault(msg);
}

}  // namespace dampe
