#pragma once

#include "inrshape/mesh.hpp"
#include "inrshape/mlp.hpp"

#include <Eigen/Core>

#include <span>
#include <vector>

namespace inrshape {

enum class Precision { Float32, Float64 };

/// Gradients of one conditioned-MLP objective, laid out like Mlp::layers.
struct KernelGradients {
    std::vector<Tensor2> weights;
    std::vector<Tensor2> biases;
    std::vector<double> code;  // with respect to the trainable part
    double sse = 0.0;
    double loss = 0.0;  // sse + lambda * ||trainable||^2
};

/// Fused forward/backward of the conditioned MLP f(x, [fixed | trainable]) in
/// a fixed working precision, with reusable buffers. The code is constant
/// over a batch, so the first layer splits into a 3-column product for the
/// coordinates plus one broadcast row for the code.
template <typename Scalar>
class MlpKernel {
public:
    explicit MlpKernel(const Mlp& network);
    /// Re-reads the weights after an optimizer step.
    void load(const Mlp& network);

    void evaluate(std::span<const Vec3> points, std::span<const double> code, std::span<double> out);
    /// Loss sum_i (f(x_i) - s_i)^2 + lambda ||code[fixed_dim:]||^2 and its gradients.
    void gradients(std::span<const Vec3> points, std::span<const double> code, std::size_t fixed_dim,
                   std::span<const double> target, double lambda, KernelGradients& out);

private:
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    using Row = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

    void forward(std::span<const Vec3> points, std::span<const double> code);

    std::vector<Matrix> weights_;
    std::vector<Row> biases_;
    Row code_;
    Matrix coords_;
    std::vector<Matrix> activations_;  // post-ReLU hidden outputs
    Matrix output_;
    Matrix delta_;
    Matrix next_delta_;
};

extern template class MlpKernel<float>;
extern template class MlpKernel<double>;

}  // namespace inrshape
