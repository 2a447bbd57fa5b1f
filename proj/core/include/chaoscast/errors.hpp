#ifndef CHAOSCAST_ERRORS_HPP
#define CHAOSCAST_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace chaoscast {

/// Base for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Incompatible array dimensions; message names the offending operation or node.
struct ShapeError : Error {
    using Error::Error;
};

/// A computation produced NaN/Inf where finite values are required.
struct NumericError : Error {
    using Error::Error;
};

/// Bad input data: parse failures, duplicate ids, series too short, etc.
struct DataError : Error {
    using Error::Error;
};

/// Unrecognized file magic or unsupported format version.
struct FormatError : Error {
    using Error::Error;
};

} // namespace chaoscast

#endif
