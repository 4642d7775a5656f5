#pragma once

#include <stdexcept>
#include <string>

namespace hmax {

/// Argument outside an operation's domain (probability out of range, bad level, ...).
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The configured operation budget would be exceeded.
class BudgetExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// R(gamma) has no positive root; the walk cannot be reduced to the critical case.
class NoCriticalTilt : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// L(gamma) - gamma L'(gamma) = ln(1/2) has no solution for this step law.
class NoSolution : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class DegenerateAnchor : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

}  // namespace hmax
