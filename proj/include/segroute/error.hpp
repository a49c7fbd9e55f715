#pragma once

#include <stdexcept>
#include <string>

namespace segroute {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument or configuration outside the documented domain.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Operation applied to a volume with the wrong payload kind.
class PayloadTypeError : public Error {
public:
    using Error::Error;
};

/// Two volumes whose dimensions should agree do not.
class GeometryError : public Error {
public:
    using Error::Error;
};

/// A metric whose definition requires a non-zero denominator got zero.
class UndefinedMetricError : public Error {
public:
    using Error::Error;
};

/// Wilcoxon input reduced to zero informative pairs.
class DegenerateSampleError : public Error {
public:
    using Error::Error;
};

/// Paired inputs do not cover the same ids.
class PairingError : public Error {
public:
    using Error::Error;
};

class EmptyMaskError : public Error {
public:
    using Error::Error;
};

class GenerationError : public Error {
public:
    using Error::Error;
};

// SVOL decoding failures. Each condition has its own type so callers and
// tests can tell them apart.
class FormatError : public Error {
public:
    using Error::Error;
};
class BadMagicError : public FormatError {
public:
    using FormatError::FormatError;
};
class UnsupportedVersionError : public FormatError {
public:
    using FormatError::FormatError;
};
class TruncatedPayloadError : public FormatError {
public:
    using FormatError::FormatError;
};
class PayloadSizeMismatchError : public FormatError {
public:
    using FormatError::FormatError;
};

// External model failures.
class ModelCallError : public Error {
public:
    using Error::Error;
};
class SpawnError : public ModelCallError {
public:
    using ModelCallError::ModelCallError;
};
class ProtocolError : public ModelCallError {
public:
    using ModelCallError::ModelCallError;
};
/// The model answered {"ok":false,...}; what() carries its error text.
class ModelReportedError : public ModelCallError {
public:
    using ModelCallError::ModelCallError;
};
class ModelTimeoutError : public ModelCallError {
public:
    using ModelCallError::ModelCallError;
};

} // namespace segroute
