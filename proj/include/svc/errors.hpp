#pragma once

#include <stdexcept>
#include <string>

namespace svc {

// Container magic/version/header problems while reading a file.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Header parsed fine but the payload does not match it (truncation,
// out-of-range values, tensor shape mismatches).
class CorruptionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Filesystem-level failure while producing an output file.
class WriteError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A matrix/vector argument has the wrong dimensions for the operation.
class ShapeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid configuration value or inconsistent configuration combination.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A track violates one of its documented invariants.
class InvalidTrackError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Not enough usable data for a statistic (e.g. no voiced frames).
class InsufficientDataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Data is present but unusable: zero-variance pitch, all-zero spectrum, NaNs.
class DegenerateDataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Inputs that cannot be combined: mismatched sample rates, unknown singer,
// checkpoint trained under different settings.
class CompatibilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An external command failed; message carries the command and captured stderr.
class SubprocessError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace svc
