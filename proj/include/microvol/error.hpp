#pragma once

#include <stdexcept>
#include <string>

namespace microvol {

/// Raised for invalid inputs, violated preconditions and numerical failures.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a simulation would exceed its configured event budget.
class BudgetError : public Error {
public:
    BudgetError(const std::string& what, double expected_events)
        : Error(what), expected_events_(expected_events) {}
    double expected_events() const noexcept { return expected_events_; }

private:
    double expected_events_;
};

}  // namespace microvol
