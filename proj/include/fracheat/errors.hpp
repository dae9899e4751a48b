#pragma once

#include <stdexcept>
#include <string>

namespace fracheat {

// Invalid parameters, unsupported orders or dimensions, empty inputs.
class DomainError : public std::invalid_argument {
public:
    explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

// A quadrature, series or fit did not reach its accuracy budget.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// A scenario or rate query whose theorem hypotheses are not met.
class HypothesisError : public std::invalid_argument {
public:
    explicit HypothesisError(const std::string& what) : std::invalid_argument(what) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw DomainError(msg);
}

}  // namespace fracheat
