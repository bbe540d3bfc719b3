#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace inrshape {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

/// Dense row-major matrix of doubles. Value type; copying copies the data.
class Tensor2 {
public:
    Tensor2() = default;
    Tensor2(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Tensor2(std::size_t rows, std::size_t cols, std::vector<double> data);
    Tensor2(std::initializer_list<std::initializer_list<double>> rows);

    static Tensor2 scalar(double value) { return Tensor2(1, 1, value); }
    static Tensor2 row(std::span<const double> values);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool same_shape(const Tensor2& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }
    std::string shape_string() const;

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }
    std::span<const double> row_span(std::size_t r) const {
        return std::span<const double>(data_).subspan(r * cols_, cols_);
    }

    MatrixMap matrix() { return MatrixMap(data_.data(), Eigen::Index(rows_), Eigen::Index(cols_)); }
    ConstMatrixMap matrix() const {
        return ConstMatrixMap(data_.data(), Eigen::Index(rows_), Eigen::Index(cols_));
    }

    void fill(double value);
    bool all_finite() const;

    friend bool operator==(const Tensor2&, const Tensor2&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Throws ErrorCode::Shape with `what` when the shapes differ.
void require_same_shape(const Tensor2& a, const Tensor2& b, const char* what);

}  // namespace inrshape
