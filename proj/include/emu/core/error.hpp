#pragma once

#include <stdexcept>
#include <string>

namespace emu {

// Error taxonomy doubles as the CLI exit-code map: config=2, data=3, numeric=4.
enum class ErrorKind { config = 2, data = 3, numeric = 4 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(ErrorKind::config, msg) {}
};

struct DataError : Error {
    explicit DataError(const std::string& msg) : Error(ErrorKind::data, msg) {}
};

// Shape/dimension mismatch in a graph op; message names the operand.
struct ShapeError : Error {
    explicit ShapeError(const std::string& msg) : Error(ErrorKind::data, msg) {}
};

// Value outside a mathematical domain (e.g. gate noise outside (0,1)).
struct DomainError : Error {
    explicit DomainError(const std::string& msg) : Error(ErrorKind::numeric, msg) {}
};

// File format problems: bad magic, version mismatch, CRC failure, truncation.
struct FormatError : Error {
    explicit FormatError(const std::string& msg) : Error(ErrorKind::data, msg) {}
};

// Optimization failure; carries the role/name of the offending parameter or term.
class TrainingError : public Error {
public:
    TrainingError(const std::string& msg, std::string detail)
        : Error(ErrorKind::numeric, msg + " [" + detail + "]"), detail_(std::move(detail)) {}
    const std::string& detail() const { return detail_; }

private:
    std::string detail_;
};

}  // namespace emu
