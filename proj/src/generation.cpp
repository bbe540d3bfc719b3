#include "inrshape/generation.hpp"

#include "inrshape/errors.hpp"
#include "inrshape/random.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace inrshape {
namespace {

/// Batched field evaluation in the requested precision.
class FieldEvaluator {
public:
    FieldEvaluator(const ShapeModel& model, const LatentCode& code, Precision precision) : code_(code.full()) {
        if (code.fixed.size() != model.fixed_dim() || code.trainable.size() != model.config.latent_dim)
            fail(ErrorCode::Shape, "latent code has width " + std::to_string(code.size()) + ", model expects " +
                                       std::to_string(model.code_width()));
        if (precision == Precision::Float32)
            f32_.emplace(model.network);
        else
            f64_.emplace(model.network);
    }

    std::vector<double> operator()(std::span<const Vec3> points) {
        constexpr std::size_t kChunk = 4096;
        std::vector<double> out(points.size());
        for (std::size_t begin = 0; begin < points.size(); begin += kChunk) {
            const std::size_t len = std::min(kChunk, points.size() - begin);
            const auto in = points.subspan(begin, len);
            const auto dst = std::span(out).subspan(begin, len);
            if (f32_)
                f32_->evaluate(in, code_, dst);
            else
                f64_->evaluate(in, code_, dst);
        }
        return out;
    }

private:
    std::vector<double> code_;
    std::optional<MlpKernel<float>> f32_;
    std::optional<MlpKernel<double>> f64_;
};

struct Block {
    std::size_t i, j, k;
};

std::size_t initial_block_size(std::size_t n) {
    std::size_t b = 1;
    while (b * 8 <= n) b *= 2;
    return b;
}

}  // namespace

void SynthesisOptions::validate() const {
    if (resolution < 8) fail(ErrorCode::Config, "synthesis resolution must be at least 8");
    if (resolution > 1024) fail(ErrorCode::Config, "synthesis resolution above 1024 is not supported");
    if (!(band_safety >= 1.0) || !std::isfinite(band_safety)) fail(ErrorCode::Config, "band safety must be >= 1");
}

nlohmann::json SynthesisOptions::to_json() const {
    return {{"resolution", resolution},
            {"sampling", "cell-centers"},
            {"narrow_band", narrow_band},
            {"band_safety", band_safety},
            {"precision", precision == Precision::Float32 ? "float32" : "float64"}};
}

ScalarGrid evaluate_grid(const ShapeModel& model, const LatentCode& code, const SynthesisOptions& options) {
    options.validate();
    FieldEvaluator field(model, code, options.precision);
    const std::size_t n = options.resolution;
    ScalarGrid grid = ScalarGrid::unit_cube_cell_centers(n);
    const double h = grid.spacing.x();

    if (!options.narrow_band) {
        std::vector<Vec3> points;
        points.reserve(grid.values.size());
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t i = 0; i < n; ++i) points.push_back(grid.position(i, j, k));
        grid.values = field(points);
        return grid;
    }

    std::size_t size = initial_block_size(n);
    std::vector<Block> blocks;
    for (std::size_t k = 0; k < n; k += size)
        for (std::size_t j = 0; j < n; j += size)
            for (std::size_t i = 0; i < n; i += size) blocks.push_back({i, j, k});
    std::vector<Vec3> points;
    while (!blocks.empty()) {
        points.clear();
        if (size == 1) {
            for (const Block& b : blocks) points.push_back(grid.position(b.i, b.j, b.k));
            const auto values = field(points);
            for (std::size_t q = 0; q < blocks.size(); ++q) grid.at(blocks[q].i, blocks[q].j, blocks[q].k) = values[q];
            break;
        }
        std::vector<std::array<std::size_t, 3>> last;
        last.reserve(blocks.size());
        for (const Block& b : blocks) {
            const std::array<std::size_t, 3> hi{std::min(b.i + size, n) - 1, std::min(b.j + size, n) - 1,
                                                std::min(b.k + size, n) - 1};
            last.push_back(hi);
            points.push_back(grid.origin + h * Vec3(0.5 * double(b.i + hi[0]), 0.5 * double(b.j + hi[1]),
                                                    0.5 * double(b.k + hi[2])));
        }
        const auto values = field(points);
        std::vector<Block> next;
        const std::size_t half = size / 2;
        for (std::size_t q = 0; q < blocks.size(); ++q) {
            const Block& b = blocks[q];
            const auto& hi = last[q];
            const Vec3 extent(double(hi[0] - b.i), double(hi[1] - b.j), double(hi[2] - b.k));
            const double reach = 0.5 * h * extent.norm() + h;
            if (std::abs(values[q]) > options.band_safety * reach) {
                for (std::size_t k = b.k; k <= hi[2]; ++k)
                    for (std::size_t j = b.j; j <= hi[1]; ++j)
                        for (std::size_t i = b.i; i <= hi[0]; ++i) grid.at(i, j, k) = values[q];
                continue;
            }
            for (std::size_t dk = 0; dk < 2; ++dk)
                for (std::size_t dj = 0; dj < 2; ++dj)
                    for (std::size_t di = 0; di < 2; ++di) {
                        const Block child{b.i + di * half, b.j + dj * half, b.k + dk * half};
                        if (child.i <= hi[0] && child.j <= hi[1] && child.k <= hi[2]) next.push_back(child);
                    }
        }
        blocks = std::move(next);
        size = half;
    }
    return grid;
}

Synthesis synthesize(const ShapeModel& model, const LatentCode& code, const SynthesisOptions& options) {
    const ScalarGrid grid = evaluate_grid(model, code, options);
    for (double v : grid.values)
        if (!std::isfinite(v)) fail(ErrorCode::Numerical, "predicted field contains non-finite values");
    auto mc = marching_cubes(grid.padded(grid.spacing.x()));
    Synthesis out;
    out.empty = mc.empty || mc.mesh.empty();
    if (!out.empty) out.mesh = std::move(mc.mesh);
    return out;
}

nlohmann::json LatentSampler::to_json() const {
    nlohmann::json names = nlohmann::json::array();
    for (Feature f : fixed_features) names.push_back(std::string(feature_name(f)));
    nlohmann::json pool = nlohmann::json::array();
    for (const auto& f : feature_pool) pool.push_back(f.to_json());
    return {{"format", "inrshape-sampler"},
            {"mean", mean},
            {"stddev", stddev},
            {"fixed_features", names},
            {"transform", transform.to_json()},
            {"feature_pool", pool}};
}

LatentSampler LatentSampler::from_json(const nlohmann::json& j) {
    LatentSampler s;
    s.mean = j.at("mean").get<std::vector<double>>();
    s.stddev = j.at("stddev").get<std::vector<double>>();
    if (s.mean.size() != s.stddev.size()) fail(ErrorCode::Config, "sampler mean and stddev differ in length");
    for (const auto& name : j.at("fixed_features")) {
        const auto f = parse_feature(name.get<std::string>());
        if (!f) fail(ErrorCode::Config, "unknown feature in sampler");
        s.fixed_features.push_back(*f);
    }
    s.transform = FeatureTransform::from_json(j.at("transform"));
    for (const auto& f : j.at("feature_pool")) s.feature_pool.push_back(FeatureVector::from_json(f));
    return s;
}

LatentSampler fit_sampler(const ShapeModel& model) {
    const std::size_t n = model.latents.size();
    if (n < 2) fail(ErrorCode::Parameter, "fitting a sampler needs at least 2 shapes");
    const std::size_t dims = model.config.latent_dim;
    LatentSampler s;
    s.mean.assign(dims, 0.0);
    s.stddev.assign(dims, 0.0);
    for (std::size_t j = 0; j < dims; ++j) {
        double mean = 0.0;
        for (const auto& c : model.latents) mean += c.trainable[j];
        mean /= double(n);
        double ss = 0.0;
        for (const auto& c : model.latents) ss += (c.trainable[j] - mean) * (c.trainable[j] - mean);
        s.mean[j] = mean;
        s.stddev[j] = std::sqrt(ss / double(n - 1));
    }
    s.fixed_features = model.config.fixed_features;
    s.transform = model.transform;
    s.feature_pool = model.training_features;
    return s;
}

std::optional<double> FeatureOverrides::get(Feature f) const {
    switch (f) {
        case Feature::Volume: return volume;
        case Feature::Isthmus: return isthmus;
        case Feature::Symmetry: return symmetry;
    }
    return std::nullopt;
}

void FeatureOverrides::set(Feature f, double value) {
    switch (f) {
        case Feature::Volume: volume = value; break;
        case Feature::Isthmus: isthmus = value; break;
        case Feature::Symmetry: symmetry = value; break;
    }
}

std::vector<CohortMember> generate_cohort(const ShapeModel& model, const LatentSampler& sampler, std::size_t n,
                                          std::uint64_t seed, const FeatureOverrides& overrides,
                                          const CohortOptions& options) {
    if (n == 0) fail(ErrorCode::Parameter, "cohort size must be at least 1");
    options.synthesis.validate();
    if (sampler.mean.size() != model.config.latent_dim)
        fail(ErrorCode::Shape, "sampler was fitted for a different latent width");
    if (sampler.fixed_features != model.config.fixed_features)
        fail(ErrorCode::Shape, "sampler and model disagree on the fixed features");
    for (Feature f : kAllFeatures) {
        if (!overrides.get(f)) continue;
        if (!model.conditioned())
            fail(ErrorCode::UnsupportedModel, "feature overrides need a conditioned model");
        if (model.fixed_slot(f) < 0)
            fail(ErrorCode::UnsupportedModel, "model is not conditioned on " + std::string(feature_name(f)));
    }
    if (model.conditioned() && sampler.feature_pool.empty())
        fail(ErrorCode::State, "sampler has no feature pool for the fixed slots");

    std::array<double, 3> lo{INFINITY, INFINITY, INFINITY}, hi{-INFINITY, -INFINITY, -INFINITY};
    for (const auto& f : sampler.feature_pool)
        for (Feature ft : kAllFeatures) {
            lo[int(ft)] = std::min(lo[int(ft)], f.get(ft));
            hi[int(ft)] = std::max(hi[int(ft)], f.get(ft));
        }

    std::vector<CohortMember> cohort(n);
    for (std::size_t i = 0; i < n; ++i) {
        CohortMember& m = cohort[i];
        m.index = i;
        std::mt19937_64 rng(derive_seed(seed, i));
        if (!sampler.feature_pool.empty())
            m.pool_index = std::uniform_int_distribution<std::size_t>(0, sampler.feature_pool.size() - 1)(rng);
        std::normal_distribution<double> normal(0.0, 1.0);
        m.code.trainable.resize(sampler.mean.size());
        for (std::size_t j = 0; j < sampler.mean.size(); ++j)
            m.code.trainable[j] = sampler.mean[j] + sampler.stddev[j] * normal(rng);
        if (model.conditioned()) {
            FeatureVector target = sampler.feature_pool[m.pool_index];
            for (Feature f : kAllFeatures) {
                if (const auto v = overrides.get(f)) {
                    target.set(f, *v);
                    if (*v < lo[int(f)] || *v > hi[int(f)]) m.extrapolated = true;
                }
            }
            m.conditioned = target;
            for (Feature f : model.config.fixed_features) m.code.fixed.push_back(sampler.transform.to_z(f, target.get(f)));
        }
        m.synthesis = synthesize(model, m.code, options.synthesis);
        if (options.measure && !m.synthesis.empty)
            m.measured = measure_features(m.synthesis.mesh, options.measure_options);
    }
    return cohort;
}

FeatureVector decode_fixed(const ShapeModel& model, const LatentCode& code) {
    if (code.fixed.size() != model.fixed_dim()) fail(ErrorCode::Shape, "fixed part width mismatch");
    FeatureVector raw;
    for (std::size_t s = 0; s < model.fixed_dim(); ++s) {
        const Feature f = model.config.fixed_features[s];
        raw.set(f, model.transform.to_raw(f, code.fixed[s]));
    }
    return raw;
}

std::vector<EditStep> edit_shape(const ShapeModel& model, const LatentCode& base, std::span<const FeatureDeltas> steps,
                                 const EditOptions& options) {
    if (!model.conditioned()) fail(ErrorCode::UnsupportedModel, "editing needs a model with fixed feature slots");
    if (base.fixed.size() != model.fixed_dim() || base.trainable.size() != model.config.latent_dim)
        fail(ErrorCode::Shape, "base code does not match the model");
    options.synthesis.validate();
    std::vector<EditStep> out;
    out.reserve(steps.size());
    for (const FeatureDeltas& deltas : steps) {
        EditStep step;
        step.deltas = deltas;
        step.code = base;
        for (Feature f : kAllFeatures) {
            const double d = deltas[int(f)];
            if (!std::isfinite(d)) fail(ErrorCode::Parameter, "feature delta must be finite");
            if (d == 0.0) continue;
            const int slot = model.fixed_slot(f);
            if (slot < 0) fail(ErrorCode::UnsupportedModel, "model is not conditioned on " + std::string(feature_name(f)));
            double z = model.transform.to_z(f, model.transform.to_raw(f, base.fixed[std::size_t(slot)]) + d);
            if (options.clamp_sigma > 0.0 && std::abs(z) > options.clamp_sigma) {
                z = std::clamp(z, -options.clamp_sigma, options.clamp_sigma);
                step.clamped = true;
            }
            step.code.fixed[std::size_t(slot)] = z;
        }
        step.conditioned = decode_fixed(model, step.code);
        step.synthesis = synthesize(model, step.code, options.synthesis);
        if (options.measure && !step.synthesis.empty)
            step.measured = measure_features(step.synthesis.mesh, options.measure_options);
        out.push_back(std::move(step));
    }
    return out;
}

std::vector<FeatureDeltas> sweep_deltas(const ShapeModel& model, const LatentCode& base, Feature feature, double from,
                                        double to, std::size_t steps) {
    if (steps == 0) fail(ErrorCode::Parameter, "a sweep needs at least one step");
    const int slot = model.fixed_slot(feature);
    if (slot < 0) fail(ErrorCode::UnsupportedModel, "model is not conditioned on " + std::string(feature_name(feature)));
    const double current = model.transform.to_raw(feature, base.fixed.at(std::size_t(slot)));
    std::vector<FeatureDeltas> out(steps, FeatureDeltas{0.0, 0.0, 0.0});
    for (std::size_t s = 0; s < steps; ++s) {
        const double t = steps == 1 ? 0.0 : double(s) / double(steps - 1);
        out[s][int(feature)] = from + t * (to - from) - current;
    }
    return out;
}

}  // namespace inrshape
