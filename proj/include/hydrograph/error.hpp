#pragma once

#include <stdexcept>
#include <string>

namespace hydrograph {

/// Input or invariant violation (bad CSV cell, unclosed ring, unknown node).
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace hydrograph
