#pragma once

#include <stdexcept>
#include <string>

namespace affrank {

/// Base class for all errors raised by the library.
class error : public std::runtime_error {
public:
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad flags, bad config files, bad schemas. CLI exit code 1.
class config_error : public error {
public:
    explicit config_error(const std::string& msg) : error(msg) {}
};

/// Unreadable or inconsistent input data. CLI exit code 2.
class data_error : public error {
public:
    explicit data_error(const std::string& msg) : error(msg) {}
};

/// A requested computation has no feasible instance. CLI exit code 3.
class infeasible_error : public error {
public:
    explicit infeasible_error(const std::string& msg) : error(msg) {}
};

} // namespace affrank
