#pragma once

#include "inrshape/autodiff.hpp"
#include "inrshape/dataset.hpp"
#include "inrshape/mlp.hpp"
#include "inrshape/mlp_kernel.hpp"
#include "inrshape/model.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

namespace inrshape {

struct TrainConfig {
    std::size_t epochs = 10000;
    std::size_t points_per_shape = 1000;
    double learning_rate = 3e-4;
    double lambda = 1e-4;
    double corr_weight = 1.0;  // scales the learning rate of the correlation step
    bool corr_enabled = false;
    std::uint64_t seed = 0;
    Precision precision = Precision::Float32;  // network arithmetic; optimizer state is always double
    std::size_t checkpoint_every = 0;  // 0 disables interval checkpoints
    std::filesystem::path checkpoint_path;
    std::filesystem::path log_path;         // JSON lines, one report per epoch
    std::filesystem::path diagnostic_path;  // written when the loss turns non-finite

    /// 20-shape desk preset: 2000 epochs, otherwise the defaults above.
    static TrainConfig desk();
    void validate(std::size_t smallest_sample_set) const;
    nlohmann::json to_json() const;
};

struct EpochReport {
    std::size_t epoch = 0;
    double mean_squared_error = 0.0;  // over all shapes' batches, before their update
    double latent_l2 = 0.0;           // mean squared norm of the trainable codes
    double correlation_loss = 0.0;    // summed over fixed features; 0 without any
    double wall_seconds = 0.0;

    nlohmann::json to_json() const;
};

/// Tape handles of the per-shape objective.
struct ReconstructionTerms {
    VarId loss;     // sse + lambda * ||trainable||^2
    VarId sse;
    VarId code;     // 1 x N leaf for the trainable part
    MlpTrace trace;
};

/// Records sum_i (f(x_i, z) - s_i)^2 + lambda * ||z_trainable||^2 on `tape`.
ReconstructionTerms reconstruction_loss(Tape& tape, const Mlp& network, const LatentCode& code,
                                        std::span<const Vec3> points, std::span<const double> sdf, double lambda);

struct CorrelationLoss {
    double value = 0.0;
    Tensor2 gradient;  // shapes x N, with respect to the trainable parts
    std::vector<std::size_t> zero_variance_dims;
};

/// Mean over trainable dimensions of |Pearson(fixed slot, dimension)| across
/// shapes. Dimensions constant across shapes contribute 0.
CorrelationLoss correlation_loss(std::span<const LatentCode> table, std::size_t fixed_index);

/// Mean |Pearson| over every (fixed slot, trainable dimension) pair; 0 for
/// unconditioned tables.
double mean_abs_latent_correlation(std::span<const LatentCode> table);

/// Shape order and sample indices of one epoch.
struct EpochPlan {
    std::vector<std::size_t> order;
    std::vector<std::vector<std::size_t>> indices;  // per shape id
};

/// Shuffled shape order, then per shape (in that order) `points` indices drawn
/// uniformly with replacement, all from a generator seeded by (seed, epoch).
EpochPlan plan_epoch(std::uint64_t seed, std::size_t epoch, std::span<const std::size_t> sample_sizes,
                     std::size_t points);

using EpochCallback = std::function<void(const EpochReport&)>;

/// Auto-decoder optimisation of the network and trainable codes. Each epoch
/// takes one Adam step per shape, then (when enabled and the model is
/// conditioned) one Adam step of the correlation loss on the trainable codes
/// with the network frozen. Throws ErrorCode::Numerical on a non-finite loss
/// after writing the diagnostic checkpoint.
std::vector<EpochReport> train(ShapeModel& model, std::span<const SampleSet> samples, const TrainConfig& config,
                               const EpochCallback& on_epoch = {});

}  // namespace inrshape
