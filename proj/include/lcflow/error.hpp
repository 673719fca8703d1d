#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lcflow {

/// Background form A_ss is not positive with u ≡ 0.
class PositivityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A_ss + u_ss <= 0 at some node when evaluating the flow right-hand side.
class NonPositiveMetric : public std::runtime_error {
public:
    NonPositiveMetric(const std::string& what, std::size_t node)
        : std::runtime_error(what), node_(node) {}
    std::size_t node() const noexcept { return node_; }

private:
    std::size_t node_;
};

/// Implicit step could not be completed after exhausting dt halvings.
class StepFailure : public std::runtime_error {
public:
    StepFailure(const std::string& what, double time, std::size_t node)
        : std::runtime_error(what), time_(time), node_(node) {}
    double time() const noexcept { return time_; }
    std::size_t node() const noexcept { return node_; }

private:
    double time_;
    std::size_t node_;
};

}  // namespace lcflow
