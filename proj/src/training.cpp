#include "inrshape/training.hpp"

#include "inrshape/adam.hpp"
#include "inrshape/errors.hpp"
#include "inrshape/random.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>

namespace inrshape {

TrainConfig TrainConfig::desk() {
    TrainConfig c;
    c.epochs = 2000;
    return c;
}

void TrainConfig::validate(std::size_t smallest_sample_set) const {
    if (epochs == 0) fail(ErrorCode::Config, "epochs must be positive");
    if (points_per_shape == 0) fail(ErrorCode::Config, "points per shape must be positive");
    if (points_per_shape > smallest_sample_set)
        fail(ErrorCode::Config, "points per shape (" + std::to_string(points_per_shape) +
                                    ") exceeds the smallest sample set (" + std::to_string(smallest_sample_set) + ")");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail(ErrorCode::Config, "learning rate must be > 0");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail(ErrorCode::Config, "lambda must be >= 0");
    if (!(corr_weight >= 0.0) || !std::isfinite(corr_weight)) fail(ErrorCode::Config, "corr weight must be >= 0");
    if (checkpoint_every > 0 && checkpoint_path.empty())
        fail(ErrorCode::Config, "interval checkpoints need a checkpoint path");
}

nlohmann::json TrainConfig::to_json() const {
    return {{"epochs", epochs},           {"points_per_shape", points_per_shape},
            {"learning_rate", learning_rate}, {"lambda", lambda},
            {"corr_weight", corr_weight}, {"corr_enabled", corr_enabled},
            {"seed", seed},               {"optimizer", "adam(0.9,0.999,1e-8)"},
            {"precision", precision == Precision::Float32 ? "float32" : "float64"},
            {"latent_optimizer", "per-shape adam"}, {"correlation_optimizer", "adam, learning rate scaled by corr weight, network frozen"}};
}

nlohmann::json EpochReport::to_json() const {
    return {{"epoch", epoch},
            {"mse", mean_squared_error},
            {"latent_l2", latent_l2},
            {"corr", correlation_loss},
            {"seconds", wall_seconds}};
}

ReconstructionTerms reconstruction_loss(Tape& tape, const Mlp& network, const LatentCode& code,
                                        std::span<const Vec3> points, std::span<const double> sdf, double lambda) {
    if (points.empty()) fail(ErrorCode::Parameter, "empty batch");
    if (points.size() != sdf.size()) fail(ErrorCode::Shape, "points and sdf values differ in length");
    if (network.input_width() != 3 + code.size())
        fail(ErrorCode::Shape, "network expects input width " + std::to_string(network.input_width()) + ", got " +
                                   std::to_string(3 + code.size()));
    const std::size_t batch = points.size();
    const std::size_t k = code.fixed.size();
    Tensor2 constant_part(batch, 3 + k);
    for (std::size_t r = 0; r < batch; ++r) {
        constant_part(r, 0) = points[r].x();
        constant_part(r, 1) = points[r].y();
        constant_part(r, 2) = points[r].z();
        for (std::size_t j = 0; j < k; ++j) constant_part(r, 3 + j) = code.fixed[j];
    }
    ReconstructionTerms terms;
    terms.code = tape.leaf(Tensor2::row(code.trainable));
    VarId input = tape.constant(std::move(constant_part));
    if (!code.trainable.empty()) input = tape.concat_cols(input, tape.broadcast_rows(terms.code, batch));
    terms.trace = forward_mlp(tape, network, input);
    const VarId target = tape.constant(Tensor2(batch, 1, std::vector<double>(sdf.begin(), sdf.end())));
    terms.sse = tape.sum_squares(tape.sub(terms.trace.output, target));
    terms.loss = tape.add(terms.sse, tape.scale(tape.sum_squares(terms.code), lambda));
    return terms;
}

CorrelationLoss correlation_loss(std::span<const LatentCode> table, std::size_t fixed_index) {
    const std::size_t n = table.size();
    if (n < 3) fail(ErrorCode::Parameter, "correlation loss needs at least 3 shapes");
    const std::size_t dims = table[0].trainable.size();
    for (const auto& c : table) {
        if (fixed_index >= c.fixed.size()) fail(ErrorCode::Shape, "fixed feature index out of range");
        if (c.trainable.size() != dims) fail(ErrorCode::Shape, "ragged latent table");
    }
    CorrelationLoss out;
    out.gradient = Tensor2(n, dims);
    if (dims == 0) return out;

    std::vector<double> a(n);
    double mean_a = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean_a += table[i].fixed[fixed_index];
    mean_a /= double(n);
    double norm_a2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        a[i] = table[i].fixed[fixed_index] - mean_a;
        norm_a2 += a[i] * a[i];
    }
    if (!(norm_a2 > 0.0)) fail(ErrorCode::Parameter, "fixed feature has zero variance across shapes");
    const double norm_a = std::sqrt(norm_a2);

    std::vector<double> b(n);
    for (std::size_t j = 0; j < dims; ++j) {
        double mean_b = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean_b += table[i].trainable[j];
        mean_b /= double(n);
        double norm_b2 = 0.0, dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            b[i] = table[i].trainable[j] - mean_b;
            norm_b2 += b[i] * b[i];
            dot += a[i] * b[i];
        }
        if (!(norm_b2 > 0.0)) {
            out.zero_variance_dims.push_back(j);
            continue;
        }
        const double norm_b = std::sqrt(norm_b2);
        const double r = std::clamp(dot / (norm_a * norm_b), -1.0, 1.0);
        out.value += std::abs(r);
        const double sign = r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0);
        const double coeff = sign / double(dims);
        for (std::size_t i = 0; i < n; ++i)
            out.gradient(i, j) = coeff * (a[i] / (norm_a * norm_b) - r * b[i] / norm_b2);
    }
    out.value /= double(dims);
    return out;
}

double mean_abs_latent_correlation(std::span<const LatentCode> table) {
    if (table.empty() || table[0].fixed.empty()) return 0.0;
    double total = 0.0;
    const std::size_t k = table[0].fixed.size();
    for (std::size_t f = 0; f < k; ++f) total += correlation_loss(table, f).value;
    return total / double(k);
}

EpochPlan plan_epoch(std::uint64_t seed, std::size_t epoch, std::span<const std::size_t> sample_sizes,
                     std::size_t points) {
    std::mt19937_64 rng(derive_seed(seed, epoch));
    EpochPlan plan;
    plan.order.resize(sample_sizes.size());
    std::iota(plan.order.begin(), plan.order.end(), std::size_t{0});
    std::shuffle(plan.order.begin(), plan.order.end(), rng);
    plan.indices.resize(sample_sizes.size());
    for (std::size_t s : plan.order) {
        if (sample_sizes[s] == 0) fail(ErrorCode::Parameter, "empty sample set");
        std::uniform_int_distribution<std::size_t> pick(0, sample_sizes[s] - 1);
        auto& idx = plan.indices[s];
        idx.resize(points);
        for (auto& i : idx) i = pick(rng);
    }
    return plan;
}

namespace {

void write_diagnostic(const ShapeModel& model, const TrainConfig& config) {
    if (config.diagnostic_path.empty()) return;
    try {
        save_checkpoint(model, config.diagnostic_path);
    } catch (const Error&) {
        // the model itself may already hold non-finite values
    }
}

}  // namespace

std::vector<EpochReport> train(ShapeModel& model, std::span<const SampleSet> samples, const TrainConfig& config,
                               const EpochCallback& on_epoch) {
    model.validate();
    if (samples.size() != model.latents.size())
        fail(ErrorCode::Shape, "model has " + std::to_string(model.latents.size()) + " codes but " +
                                   std::to_string(samples.size()) + " sample sets were given");
    if (samples.empty()) fail(ErrorCode::Parameter, "nothing to train on");
    std::vector<std::size_t> sizes;
    for (const auto& s : samples) {
        if (s.points.size() != s.sdf.size()) fail(ErrorCode::Shape, "sample set is ragged");
        sizes.push_back(s.size());
    }
    config.validate(*std::min_element(sizes.begin(), sizes.end()));

    const std::size_t n = samples.size();
    const std::size_t dims = model.config.latent_dim;
    const std::size_t k = model.fixed_dim();
    const bool corr_step = config.corr_enabled && k > 0;
    if (corr_step && n < 3) fail(ErrorCode::Config, "the correlation loss needs at least 3 shapes");

    AdamConfig adam;
    adam.learning_rate = config.learning_rate;
    std::vector<Tensor2*> theta;
    std::vector<Tensor2> theta_shapes;
    for (auto& layer : model.network.layers) {
        theta.push_back(&layer.weight);
        theta.push_back(&layer.bias);
    }
    for (const Tensor2* t : theta) theta_shapes.push_back(*t);
    AdamState theta_state = AdamState::for_shapes(theta_shapes, adam);
    const Tensor2 code_shape(1, dims);
    std::vector<AdamState> code_states(n, AdamState::for_shapes(std::span(&code_shape, 1), adam));
    const Tensor2 table_shape(n, dims);
    AdamConfig corr_adam = adam;
    corr_adam.learning_rate *= config.corr_weight;
    AdamState corr_state = AdamState::for_shapes(std::span(&table_shape, 1), corr_adam);

    std::ofstream log;
    if (!config.log_path.empty()) {
        log.open(config.log_path, std::ios::app);
        if (!log) fail(ErrorCode::Io, "cannot open training log " + config.log_path.string());
    }

    std::vector<EpochReport> reports;
    reports.reserve(config.epochs);
    std::optional<MlpKernel<float>> kernel32;
    std::optional<MlpKernel<double>> kernel64;
    if (config.precision == Precision::Float32)
        kernel32.emplace(model.network);
    else
        kernel64.emplace(model.network);
    KernelGradients grads;
    std::vector<Tensor2> theta_grads;
    std::vector<Vec3> batch_points(config.points_per_shape);
    std::vector<double> batch_sdf(config.points_per_shape);
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        const EpochPlan plan = plan_epoch(config.seed, epoch, sizes, config.points_per_shape);
        double mse = 0.0;
        for (std::size_t s : plan.order) {
            const auto& idx = plan.indices[s];
            for (std::size_t i = 0; i < idx.size(); ++i) {
                batch_points[i] = samples[s].points[idx[i]];
                batch_sdf[i] = samples[s].sdf[idx[i]];
            }
            const std::vector<double> code = model.latents[s].full();
            if (kernel32) {
                kernel32->load(model.network);
                kernel32->gradients(batch_points, code, k, batch_sdf, config.lambda, grads);
            } else {
                kernel64->load(model.network);
                kernel64->gradients(batch_points, code, k, batch_sdf, config.lambda, grads);
            }
            if (!std::isfinite(grads.loss)) {
                write_diagnostic(model, config);
                fail(ErrorCode::Numerical, "non-finite loss at epoch " + std::to_string(epoch) + ", shape " +
                                               std::to_string(s));
            }
            mse += grads.sse / double(idx.size());
            theta_grads.clear();
            for (std::size_t l = 0; l < grads.weights.size(); ++l) {
                theta_grads.push_back(grads.weights[l]);
                theta_grads.push_back(grads.biases[l]);
            }
            adam_step(theta_state, theta, theta_grads);
            if (dims > 0) {
                Tensor2 code_row = Tensor2::row(model.latents[s].trainable);
                Tensor2* code_ptr = &code_row;
                const Tensor2 code_grad = Tensor2::row(grads.code);
                adam_step(code_states[s], std::span(&code_ptr, 1), std::span(&code_grad, 1));
                std::copy(code_row.values().begin(), code_row.values().end(), model.latents[s].trainable.begin());
            }
        }

        EpochReport report;
        report.epoch = epoch;
        report.mean_squared_error = mse / double(n);
        for (const auto& c : model.latents)
            for (double v : c.trainable) report.latent_l2 += v * v;
        report.latent_l2 /= double(n);
        if (k > 0 && n >= 3 && dims > 0) {
            Tensor2 gradient(n, dims);
            for (std::size_t f = 0; f < k; ++f) {
                const CorrelationLoss corr = correlation_loss(model.latents, f);
                report.correlation_loss += corr.value;
                if (corr_step)
                    for (std::size_t i = 0; i < gradient.size(); ++i)
                        gradient[i] += corr.gradient[i];
            }
            if (corr_step) {
                Tensor2 table(n, dims);
                for (std::size_t i = 0; i < n; ++i)
                    std::copy(model.latents[i].trainable.begin(), model.latents[i].trainable.end(), &table(i, 0));
                Tensor2* table_ptr = &table;
                adam_step(corr_state, std::span(&table_ptr, 1), std::span(&gradient, 1));
                for (std::size_t i = 0; i < n; ++i) {
                    const auto row = table.row_span(i);
                    std::copy(row.begin(), row.end(), model.latents[i].trainable.begin());
                }
            }
        }
        report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        reports.push_back(report);

        if (log) log << report.to_json().dump() << '\n' << std::flush;
        if (on_epoch) on_epoch(report);
        if (config.checkpoint_every > 0 && epoch % config.checkpoint_every == 0) {
            model.training = {{"config", config.to_json()}, {"epochs_completed", epoch}};
            save_checkpoint(model, config.checkpoint_path);
        }
    }
    nlohmann::json final_report = reports.back().to_json();
    final_report.erase("seconds");
    model.training = {{"config", config.to_json()}, {"epochs_completed", config.epochs}, {"final", final_report}};
    return reports;
}

}  // namespace inrshape
