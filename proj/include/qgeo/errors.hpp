#pragma once

#include <stdexcept>
#include <string>

namespace qgeo {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad or inconsistent configuration. The CLI maps it to exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Anything that went wrong while integrating. The CLI maps it to exit code 3.
class NumericalError : public Error {
public:
    using Error::Error;
};

class PacketTruncated : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NonFiniteField : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class UnwrapAmbiguous : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class AllMasked : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class OutOfRange : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NodeRegion : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class LeftGrid : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class SingularMetric : public NumericalError {
public:
    using NumericalError::NumericalError;
};

} // namespace qgeo
