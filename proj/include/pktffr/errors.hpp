#pragma once

#include <stdexcept>
#include <string>

namespace pktffr {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed network, scenario or fleet configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Argument outside an operation's documented domain.
class DomainError : public Error {
public:
    using Error::Error;
};

/// The grid state became non-finite while stepping.
class IntegrationError : public Error {
public:
    IntegrationError(const std::string& what, int bus_id, long step)
        : Error(what), bus_id_(bus_id), step_(step) {}
    int bus_id() const noexcept { return bus_id_; }
    long step() const noexcept { return step_; }

private:
    int bus_id_;
    long step_;
};

/// RoCoF requested before the window covers alpha_w seconds.
class InsufficientHistory : public Error {
public:
    using Error::Error;
};

/// Malformed input data (AGC samples, CSV files).
class DataError : public Error {
public:
    using Error::Error;
};

} // namespace pktffr
