#pragma once

#include "inrshape/dataset.hpp"
#include "inrshape/features.hpp"
#include "inrshape/generation.hpp"
#include "inrshape/measures.hpp"
#include "inrshape/model.hpp"

#include <json.hpp>

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace inrshape {

inline constexpr int kReportSchemaVersion = 1;

/// Sample Pearson correlation. Throws ErrorCode::Parameter for fewer than 3
/// pairs or unequal lengths and ErrorCode::Numerical when a variance is 0.
double pearson(std::span<const double> xs, std::span<const double> ys);

struct ReconstructionOptions {
    SynthesisOptions synthesis;
    ChamferOptions chamfer;
    std::vector<std::uint32_t> shape_ids;  // empty evaluates every shape
};

struct ReconstructionReport {
    std::vector<std::uint32_t> shape_ids;
    std::vector<std::optional<double>> chamfer;  // absent when the reconstruction is empty
    std::size_t empty_count = 0;
    double mean = 0.0;    // over non-empty reconstructions
    double stddev = 0.0;
    std::optional<double> mean_mm;
    std::optional<double> stddev_mm;

    nlohmann::json to_json() const;
};

/// Chamfer distance between each reference and its reconstruction.
ReconstructionReport reconstruction_report(std::span<const std::uint32_t> ids, std::span<const TriMesh> references,
                                           std::span<const std::optional<TriMesh>> reconstructions,
                                           const ChamferOptions& chamfer, std::optional<double> mm_per_unit = {});

/// Reconstructs dataset shapes from their own codes (latent row = shape id).
ReconstructionReport evaluate_reconstruction(const ShapeModel& model, const Dataset& dataset,
                                             const ReconstructionOptions& options = {});

struct FeatureCorrelation {
    Feature feature = Feature::Volume;
    std::vector<double> conditioned;
    std::vector<double> measured;
    std::optional<double> pcc;  // absent when undefined
};

struct SteerabilityReport {
    std::size_t requested = 0;
    std::size_t empty_count = 0;
    double empty_rate = 0.0;
    std::vector<FeatureCorrelation> features;  // one per fixed feature

    const FeatureCorrelation* find(Feature f) const;
    nlohmann::json to_json() const;
};

/// Pairs conditioned with measured values, skipping empty members.
SteerabilityReport steerability_from_pairs(std::span<const Feature> features, std::span<const FeatureVector> conditioned,
                                           std::span<const std::optional<FeatureVector>> measured);

struct SteerabilityOptions {
    CohortOptions cohort;
    double max_empty_rate = 0.05;
};

/// Generates an unconditioned-override cohort and correlates conditioned and
/// measured features. Throws ErrorCode::Numerical when the empty-mesh rate
/// exceeds the limit and ErrorCode::UnsupportedModel for k = 0.
SteerabilityReport evaluate_steerability(const ShapeModel& model, const LatentSampler& sampler, std::size_t n = 1000,
                                         std::uint64_t seed = 0, const SteerabilityOptions& options = {});

struct Histogram {
    Feature feature = Feature::Volume;
    std::vector<double> edges;
    std::vector<std::size_t> training;
    std::vector<std::size_t> generated;
};

struct DistributionComparison {
    std::vector<Histogram> histograms;
    std::array<double, 3> ks{};
    std::size_t training_count = 0;
    std::size_t generated_count = 0;

    nlohmann::json to_json() const;
};

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
double ks_statistic(std::span<const double> a, std::span<const double> b);

/// Bin edges by the Freedman-Diaconis rule on the pooled sample.
std::vector<double> freedman_diaconis_edges(std::span<const double> pooled, std::size_t max_bins = 100);

/// Aligned histograms and KS statistics per feature.
DistributionComparison compare_distributions(std::span<const FeatureVector> training,
                                             std::span<const FeatureVector> generated);

/// Histogram overlays and conditioned-vs-measured scatter plots as SVG files.
void write_plots(const std::filesystem::path& dir, const DistributionComparison* distributions,
                 const SteerabilityReport* steerability);

}  // namespace inrshape
