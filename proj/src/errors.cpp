#include "inrshape/errors.hpp"

namespace inrshape {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::Shape: return "shape_error";
        case ErrorCode::State: return "state_error";
        case ErrorCode::DegenerateMesh: return "degenerate_mesh";
        case ErrorCode::NonWatertight: return "non_watertight";
        case ErrorCode::Parameter: return "parameter_error";
        case ErrorCode::Config: return "config_error";
        case ErrorCode::Io: return "io_error";
        case ErrorCode::NotFound: return "not_found";
        case ErrorCode::UnsupportedModel: return "unsupported_model";
        case ErrorCode::Numerical: return "numerical_error";
    }
    return "unknown_error";
}

}  // namespace inrshape
