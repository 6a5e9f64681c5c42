#pragma once

#include <stdexcept>
#include <string>

namespace vj {

/// Base class for every failure raised by the toolkit.
///
/// The CLI maps `UsageError` to exit status 1 and every other `Error` to
/// exit status 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UsageError : public Error {
public:
    using Error::Error;
};

/// Damper geometry that cannot be built (intersecting walls, collapsed radii).
class GeometryError : public Error {
public:
    using Error::Error;
};

class IntegrationDiverged : public Error {
public:
    IntegrationDiverged(double time, const std::string& what)
        : Error(what + " (t = " + std::to_string(time) + " s)"), time_(time) {}

    double time() const noexcept { return time_; }

private:
    double time_;
};

class InsufficientData : public Error {
public:
    using Error::Error;
};

class BootstrapFailed : public Error {
public:
    using Error::Error;
};

class SolverError : public Error {
public:
    SolverError(double motor_angle, const std::string& what)
        : Error(what), motor_angle_(motor_angle) {}

    double motor_angle() const noexcept { return motor_angle_; }

private:
    double motor_angle_;
};

class UnreachableTarget : public Error {
public:
    UnreachableTarget(int joint, const std::string& what)
        : Error(what), joint_(joint) {}

    /// Zero-based index of the first joint whose equilibrium falls short.
    int joint() const noexcept { return joint_; }

private:
    int joint_;
};

class DegenerateSeries : public Error {
public:
    DegenerateSeries(int series, const std::string& what)
        : Error(what), series_(series) {}

    int series() const noexcept { return series_; }

private:
    int series_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed tabular input. `row` is 1-based and counts the header line.
class IngestError : public Error {
public:
    IngestError(std::size_t row, const std::string& what)
        : Error(what), row_(row) {}

    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

}  // namespace vj
