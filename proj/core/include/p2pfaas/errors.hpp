#pragma once

#include <stdexcept>
#include <string>

namespace p2pfaas {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid configuration (bad architecture, bad run config, P > n, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Tensor/batch dimension mismatch.
class ShapeError : public Error {
public:
    using Error::Error;
};

// NaN/Inf encountered where finite values are required.
class NumericError : public Error {
public:
    using Error::Error;
};

// Gradient/model version mismatch.
class StalenessError : public Error {
public:
    using Error::Error;
};

// Object-store failures (write failure, key collision with different bytes).
class StoreError : public Error {
public:
    using Error::Error;
};

// Lookup of a key that does not exist.
class NotFoundError : public Error {
public:
    using Error::Error;
};

// Malformed or truncated serialized payloads.
class DecodeError : public Error {
public:
    using Error::Error;
};

// Encode-side codec failures.
class CodecError : public Error {
public:
    using Error::Error;
};

// Broker protocol violations (duplicate barrier arrival, self-consume, ...).
class ProtocolError : public Error {
public:
    using Error::Error;
};

// Blocking operation exceeded its deadline.
class TimeoutError : public Error {
public:
    using Error::Error;
};

// Fan-out plan construction failures (duplicate or non-dense batch ids).
class PlanError : public Error {
public:
    using Error::Error;
};

// CSV / external data ingestion failures.
class IngestionError : public Error {
public:
    using Error::Error;
};

// Aggregate fan-out failure listing the batch ids that failed.
class ExecutionError : public Error {
public:
    using Error::Error;
};

// Invalid operation inputs (negative rates, empty lists, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

// Mis-nested or unbalanced instrumentation calls.
class InstrumentationError : public Error {
public:
    using Error::Error;
};

}  // namespace p2pfaas
