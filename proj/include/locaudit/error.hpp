#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace locaudit {

// Base for every error raised by the pipeline. Callers that only need a
// message can catch this; the subclasses carry structured context.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed dataset input. line is 1-based; 0 when not line-oriented.
class ParseError : public Error {
public:
    ParseError(std::size_t line, std::string field, const std::string& message)
        : Error(format(line, field, message)), line_(line), field_(std::move(field)) {}

    std::size_t line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    static std::string format(std::size_t line, const std::string& field, const std::string& message) {
        std::string out;
        if (line > 0) out += "line " + std::to_string(line) + ": ";
        if (!field.empty()) out += "field \"" + field + "\": ";
        return out + message;
    }

    std::size_t line_;
    std::string field_;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class PairingError : public Error {
public:
    PairingError(std::string task_id, const std::string& message)
        : Error(message), task_id_(std::move(task_id)) {}
    const std::string& task_id() const noexcept { return task_id_; }

private:
    std::string task_id_;
};

// Audit workflow rejected an operation (wrong state, unclaimed, self-review...).
class StateError : public Error {
public:
    using Error::Error;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

// Event log could not be replayed. sequence is the first offending number.
class CorruptLogError : public Error {
public:
    CorruptLogError(long long sequence, const std::string& message)
        : Error(message), sequence_(sequence) {}
    long long sequence() const noexcept { return sequence_; }

private:
    long long sequence_;
};

class TransportError : public Error {
public:
    using Error::Error;
};

class TimeoutError : public TransportError {
public:
    using TransportError::TransportError;
};

}  // namespace locaudit
