#pragma once

#include <stdexcept>
#include <string>

namespace pglab {

// Base class for every error the library raises on bad inputs or bad files.
// Catching pglab::Error at the CLI boundary is enough to turn any failure
// into a diagnostic plus nonzero exit.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class ValueError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace pglab
