#include "inrshape/mlp_kernel.hpp"

#include "inrshape/errors.hpp"

namespace inrshape {

template <typename Scalar>
MlpKernel<Scalar>::MlpKernel(const Mlp& network) {
    load(network);
}

template <typename Scalar>
void MlpKernel<Scalar>::load(const Mlp& network) {
    if (network.layers.size() < 2) fail(ErrorCode::Shape, "kernel needs at least one hidden layer");
    if (network.input_width() < 3) fail(ErrorCode::Shape, "network input narrower than the coordinates");
    if (network.output_width() != 1) fail(ErrorCode::Shape, "kernel expects a single output");
    weights_.resize(network.layers.size());
    biases_.resize(network.layers.size());
    for (std::size_t l = 0; l < network.layers.size(); ++l) {
        weights_[l] = network.layers[l].weight.matrix().template cast<Scalar>();
        biases_[l] = network.layers[l].bias.matrix().row(0).template cast<Scalar>();
    }
    activations_.resize(network.layers.size() - 1);
}

template <typename Scalar>
void MlpKernel<Scalar>::forward(std::span<const Vec3> points, std::span<const double> code) {
    const Eigen::Index batch = Eigen::Index(points.size());
    const Eigen::Index code_width = weights_[0].rows() - 3;
    if (Eigen::Index(code.size()) != code_width)
        fail(ErrorCode::Shape, "code width " + std::to_string(code.size()) + " but network expects " +
                                   std::to_string(code_width));
    coords_.resize(batch, 3);
    for (Eigen::Index r = 0; r < batch; ++r)
        for (int c = 0; c < 3; ++c) coords_(r, c) = Scalar(points[std::size_t(r)][c]);
    code_.resize(code_width);
    for (Eigen::Index j = 0; j < code_width; ++j) code_(j) = Scalar(code[std::size_t(j)]);

    Row first_bias = biases_[0];
    if (code_width > 0) first_bias.noalias() += code_ * weights_[0].bottomRows(code_width);
    Matrix& a0 = activations_[0];
    a0.resize(batch, weights_[0].cols());
    a0.noalias() = coords_ * weights_[0].topRows(3);
    a0.rowwise() += first_bias;
    a0 = a0.cwiseMax(Scalar(0));
    for (std::size_t l = 1; l + 1 < weights_.size(); ++l) {
        Matrix& a = activations_[l];
        a.resize(batch, weights_[l].cols());
        a.noalias() = activations_[l - 1] * weights_[l];
        a.rowwise() += biases_[l];
        a = a.cwiseMax(Scalar(0));
    }
    output_.resize(batch, 1);
    output_.noalias() = activations_.back() * weights_.back();
    output_.array() += biases_.back()(0);
}

template <typename Scalar>
void MlpKernel<Scalar>::evaluate(std::span<const Vec3> points, std::span<const double> code, std::span<double> out) {
    if (out.size() != points.size()) fail(ErrorCode::Shape, "output span size differs from the batch");
    if (points.empty()) return;
    forward(points, code);
    for (std::size_t i = 0; i < points.size(); ++i) out[i] = double(output_(Eigen::Index(i), 0));
}

template <typename Scalar>
void MlpKernel<Scalar>::gradients(std::span<const Vec3> points, std::span<const double> code, std::size_t fixed_dim,
                                  std::span<const double> target, double lambda, KernelGradients& out) {
    if (points.empty()) fail(ErrorCode::Parameter, "empty batch");
    if (target.size() != points.size()) fail(ErrorCode::Shape, "targets differ in length from the batch");
    if (fixed_dim > code.size()) fail(ErrorCode::Shape, "fixed part longer than the code");
    forward(points, code);
    const Eigen::Index batch = Eigen::Index(points.size());
    const std::size_t layers = weights_.size();

    delta_.resize(batch, 1);
    double sse = 0.0;
    for (Eigen::Index r = 0; r < batch; ++r) {
        const double residual = double(output_(r, 0)) - target[std::size_t(r)];
        sse += residual * residual;
        delta_(r, 0) = Scalar(2.0 * residual);
    }
    double reg = 0.0;
    for (std::size_t j = fixed_dim; j < code.size(); ++j) reg += code[j] * code[j];
    out.sse = sse;
    out.loss = sse + lambda * reg;

    out.weights.resize(layers);
    out.biases.resize(layers);
    auto store = [](Tensor2& dst, const auto& src) {
        if (dst.rows() != std::size_t(src.rows()) || dst.cols() != std::size_t(src.cols()))
            dst = Tensor2(std::size_t(src.rows()), std::size_t(src.cols()));
        dst.matrix() = src.template cast<double>();
    };
    for (std::size_t l = layers; l-- > 1;) {
        const Matrix& input = activations_[l - 1];
        store(out.weights[l], (input.transpose() * delta_).eval());
        store(out.biases[l], delta_.colwise().sum().eval());
        next_delta_.resize(batch, weights_[l].rows());
        next_delta_.noalias() = delta_ * weights_[l].transpose();
        next_delta_.array() *= (input.array() > Scalar(0)).template cast<Scalar>();
        std::swap(delta_, next_delta_);
    }
    const Row column = delta_.colwise().sum();
    const Eigen::Index code_width = Eigen::Index(code.size());
    Matrix first(weights_[0].rows(), weights_[0].cols());
    first.topRows(3).noalias() = coords_.transpose() * delta_;
    if (code_width > 0) first.bottomRows(code_width).noalias() = code_.transpose() * column;
    store(out.weights[0], first);
    store(out.biases[0], column);

    out.code.assign(code.size() - fixed_dim, 0.0);
    if (code_width > Eigen::Index(fixed_dim)) {
        const Row dcode = column * weights_[0].bottomRows(code_width).transpose();
        for (std::size_t j = fixed_dim; j < code.size(); ++j)
            out.code[j - fixed_dim] = double(dcode(Eigen::Index(j))) + 2.0 * lambda * code[j];
    }
}

template class MlpKernel<float>;
template class MlpKernel<double>;

}  // namespace inrshape
