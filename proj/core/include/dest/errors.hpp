#pragma once

#include <stdexcept>
#include <string>

namespace dest {

// Error taxonomy used across the library. The CLI maps these onto process
// exit codes, so throw the most specific one that applies:
//   ShapeError      - tensor/operand dimensions do not line up
//   ConfigError     - invalid or inconsistent run configuration
//   DataError       - malformed dataset, manifest, topology or label content
//   IoError         - filesystem/serialization failures
//   InvariantError  - internal contract broken (a bug, not bad user input)

class ShapeError : public std::invalid_argument {
public:
    explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

class InvariantError : public std::logic_error {
public:
    explicit InvariantError(const std::string& what) : std::logic_error(what) {}
};

} // namespace dest
