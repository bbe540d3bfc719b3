#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace inrshape {

enum class ErrorCode {
    Shape,           // tensor / vector dimension mismatch
    State,           // operation called in the wrong order
    DegenerateMesh,  // zero area or zero extent
    NonWatertight,   // sign or volume requested on an open mesh
    Parameter,       // invalid generator or model parameters
    Config,          // invalid user configuration
    Io,              // file read/write failure or malformed file
    NotFound,        // unknown shape id or missing entry
    UnsupportedModel,
    Numerical,       // NaN / Inf encountered
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace inrshape
