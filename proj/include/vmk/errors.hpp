#pragma once

#include <stdexcept>
#include <string>

namespace vmk {

class SingularOperator : public std::runtime_error {
public:
    SingularOperator(const std::string& what, double condition)
        : std::runtime_error(what), condition_(condition) {}
    double condition() const { return condition_; }

private:
    double condition_;
};

class RiccatiBlowUp : public std::runtime_error {
public:
    RiccatiBlowUp(const std::string& what, double time)
        : std::runtime_error(what), time_(time) {}
    // Grid time at which the solution stopped being finite/bounded.
    double time() const { return time_; }

private:
    double time_;
};

class ModelAssumption : public std::runtime_error {
public:
    ModelAssumption(const std::string& what, double value)
        : std::runtime_error(what), value_(value) {}
    double value() const { return value_; }

private:
    double value_;
};

class SingularPoint : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class DegenerateMarket : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class SingularVolatility : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InternalConsistency : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace vmk
