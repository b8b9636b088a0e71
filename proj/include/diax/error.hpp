#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace diax {

// Base class for everything the toolkit throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An error that points at a location inside a document (a signal key,
// a JSON path, a mapping-spec field).
class PathError : public Error {
public:
    PathError(std::string path, const std::string& what)
        : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

// --- document / model ---
class MalformedDocument : public Error {
public:
    using Error::Error;
};

class SchemaViolation : public PathError {
public:
    using PathError::PathError;
};

class InvariantViolation : public Error {
public:
    using Error::Error;
};

class BadFilename : public Error {
public:
    using Error::Error;
};

class BadComponent : public Error {
public:
    using Error::Error;
};

// --- timestamps ---
class TimestampError : public Error {
public:
    using Error::Error;
};

// --- conversion ---
class SpecError : public PathError {
public:
    using PathError::PathError;
};

class ColumnMissing : public Error {
public:
    using Error::Error;
};

class RowError : public Error {
public:
    RowError(std::size_t row, const std::string& what)
        : Error("row " + std::to_string(row) + ": " + what), row_(row) {}

    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

class CsvError : public Error {
public:
    using Error::Error;
};

class BadProfile : public Error {
public:
    using Error::Error;
};

// --- alignment ---
class BadRange : public Error {
public:
    using Error::Error;
};

class PolicyMismatch : public Error {
public:
    using Error::Error;
};

class NegativeRate : public Error {
public:
    using Error::Error;
};

class UnknownKey : public Error {
public:
    using Error::Error;
};

// --- metrics ---
class NoData : public Error {
public:
    using Error::Error;
};

class EmptySignal : public Error {
public:
    using Error::Error;
};

class EmptyCohort : public Error {
public:
    using Error::Error;
};

// --- plotting ---
class BinMismatch : public Error {
public:
    using Error::Error;
};

class EmptyProfile : public Error {
public:
    using Error::Error;
};

class EmptySeries : public Error {
public:
    using Error::Error;
};

class UnknownMetric : public Error {
public:
    using Error::Error;
};

// --- I/O ---
class IoFailure : public Error {
public:
    using Error::Error;
};

} // namespace diax
