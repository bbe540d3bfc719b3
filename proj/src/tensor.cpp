#include "inrshape/tensor.hpp"

#include "inrshape/errors.hpp"

#include <algorithm>
#include <cmath>

namespace inrshape {

Tensor2::Tensor2(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        fail(ErrorCode::Shape, "tensor data length " + std::to_string(data_.size()) +
                                   " does not match " + shape_string());
    }
}

Tensor2::Tensor2(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) fail(ErrorCode::Shape, "ragged tensor literal");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Tensor2 Tensor2::row(std::span<const double> values) {
    return Tensor2(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

std::string Tensor2::shape_string() const {
    return "[" + std::to_string(rows_) + "x" + std::to_string(cols_) + "]";
}

void Tensor2::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor2::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void require_same_shape(const Tensor2& a, const Tensor2& b, const char* what) {
    if (!a.same_shape(b)) {
        fail(ErrorCode::Shape,
             std::string(what) + ": shape " + a.shape_string() + " vs " + b.shape_string());
    }
}

}  // namespace inrshape
