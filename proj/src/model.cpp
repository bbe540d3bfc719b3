#include "inrshape/model.hpp"

#include "binary_io.hpp"
#include "inrshape/errors.hpp"
#include "inrshape/random.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace inrshape {
namespace {

constexpr char kMagic[8] = {'I', 'N', 'R', 'S', 'H', 'A', 'P', 'E'};
constexpr std::uint64_t kVersion = 1;

std::array<double, 3> json_array3(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 3) fail(ErrorCode::Config, "expected 3 values");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

std::vector<double> LatentCode::full() const {
    std::vector<double> out(fixed);
    out.insert(out.end(), trainable.begin(), trainable.end());
    return out;
}

nlohmann::json LatentCode::to_json() const { return {{"fixed", fixed}, {"trainable", trainable}}; }

LatentCode LatentCode::from_json(const nlohmann::json& j) {
    LatentCode c;
    c.fixed = j.at("fixed").get<std::vector<double>>();
    c.trainable = j.at("trainable").get<std::vector<double>>();
    return c;
}

FeatureTransform FeatureTransform::fit(std::span<const FeatureVector> features) {
    FeatureTransform t;
    if (features.empty()) return t;
    const double n = double(features.size());
    for (Feature f : kAllFeatures) {
        const int i = int(f);
        double mean = 0.0;
        for (const auto& v : features) mean += v.get(f);
        mean /= n;
        double ss = 0.0;
        for (const auto& v : features) ss += (v.get(f) - mean) * (v.get(f) - mean);
        const double sd = features.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
        t.mean[i] = mean;
        t.stddev[i] = sd > 0.0 ? sd : 1.0;
    }
    return t;
}

double FeatureTransform::to_z(Feature f, double raw) const { return (raw - mean[int(f)]) / stddev[int(f)]; }

double FeatureTransform::to_raw(Feature f, double z) const { return mean[int(f)] + z * stddev[int(f)]; }

nlohmann::json FeatureTransform::to_json() const { return {{"mean", mean}, {"stddev", stddev}}; }

FeatureTransform FeatureTransform::from_json(const nlohmann::json& j) {
    FeatureTransform t;
    t.mean = json_array3(j.at("mean"));
    t.stddev = json_array3(j.at("stddev"));
    for (double s : t.stddev)
        if (!(s > 0.0)) fail(ErrorCode::Config, "feature transform has a non-positive scale");
    return t;
}

void ModelConfig::validate() const {
    std::set<Feature> seen(fixed_features.begin(), fixed_features.end());
    if (seen.size() != fixed_features.size()) fail(ErrorCode::Parameter, "fixed features must be distinct");
    if (latent_dim == 0 && fixed_features.empty()) fail(ErrorCode::Parameter, "latent code is empty");
    if (hidden_width == 0 || hidden_layers == 0) fail(ErrorCode::Parameter, "network needs a hidden layer");
    if (!(init_sigma >= 0.0) || !std::isfinite(init_sigma)) fail(ErrorCode::Parameter, "init sigma must be >= 0");
}

nlohmann::json ModelConfig::to_json() const {
    nlohmann::json names = nlohmann::json::array();
    for (Feature f : fixed_features) names.push_back(std::string(feature_name(f)));
    return {{"fixed_features", names},   {"latent_dim", latent_dim}, {"hidden_width", hidden_width},
            {"hidden_layers", hidden_layers}, {"init_sigma", init_sigma}, {"seed", seed}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
    ModelConfig c;
    for (const auto& name : j.at("fixed_features")) {
        const auto f = parse_feature(name.get<std::string>());
        if (!f) fail(ErrorCode::Config, "unknown feature " + name.get<std::string>());
        c.fixed_features.push_back(*f);
    }
    c.latent_dim = j.at("latent_dim").get<std::size_t>();
    c.hidden_width = j.at("hidden_width").get<std::size_t>();
    c.hidden_layers = j.at("hidden_layers").get<std::size_t>();
    c.init_sigma = j.at("init_sigma").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.validate();
    return c;
}

std::vector<double> ShapeModel::encode_fixed(const FeatureVector& raw) const {
    std::vector<double> out;
    out.reserve(fixed_dim());
    for (Feature f : config.fixed_features) out.push_back(transform.to_z(f, raw.get(f)));
    return out;
}

int ShapeModel::fixed_slot(Feature f) const {
    for (std::size_t i = 0; i < config.fixed_features.size(); ++i)
        if (config.fixed_features[i] == f) return int(i);
    return -1;
}

void ShapeModel::validate() const {
    config.validate();
    if (network.layers.size() != config.hidden_layers + 1) fail(ErrorCode::Shape, "layer count mismatch");
    if (network.input_width() != 3 + code_width()) fail(ErrorCode::Shape, "network input width mismatch");
    if (network.output_width() != 1) fail(ErrorCode::Shape, "network must output one value");
    if (!network.all_finite()) fail(ErrorCode::Numerical, "network has non-finite weights");
    for (const auto& code : latents) {
        if (code.fixed.size() != fixed_dim() || code.trainable.size() != config.latent_dim)
            fail(ErrorCode::Shape, "latent code width mismatch");
        for (double v : code.full())
            if (!std::isfinite(v)) fail(ErrorCode::Numerical, "latent table has non-finite values");
    }
    if (!training_features.empty() && training_features.size() != latents.size())
        fail(ErrorCode::Shape, "training feature count differs from latent count");
    if (!shape_names.empty() && shape_names.size() != latents.size())
        fail(ErrorCode::Shape, "shape name count differs from latent count");
}

std::vector<LatentCode> init_latents(std::size_t n_shapes, std::size_t latent_dim, double sigma0, std::uint64_t seed,
                                     std::span<const std::vector<double>> fixed) {
    if (n_shapes == 0) fail(ErrorCode::Parameter, "need at least one shape");
    if (!fixed.empty() && fixed.size() != n_shapes) fail(ErrorCode::Shape, "one fixed row per shape required");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<LatentCode> table(n_shapes);
    for (std::size_t i = 0; i < n_shapes; ++i) {
        if (!fixed.empty()) table[i].fixed = fixed[i];
        table[i].trainable.resize(latent_dim);
        for (double& v : table[i].trainable) v = sigma0 * normal(rng);
    }
    return table;
}

ShapeModel create_model(const ModelConfig& config, std::span<const FeatureVector> features,
                        std::span<const std::string> names) {
    config.validate();
    if (features.empty()) fail(ErrorCode::Parameter, "training population is empty");
    if (!names.empty() && names.size() != features.size()) fail(ErrorCode::Shape, "one name per shape required");
    ShapeModel model;
    model.config = config;
    model.training_features.assign(features.begin(), features.end());
    model.shape_names.assign(names.begin(), names.end());
    model.transform = FeatureTransform::fit(features);
    model.network = Mlp::kaiming_uniform(3 + model.code_width(), config.hidden_width, config.hidden_layers, 1,
                                         derive_seed(config.seed, 1));
    std::vector<std::vector<double>> fixed;
    if (model.conditioned())
        for (const auto& f : features) fixed.push_back(model.encode_fixed(f));
    model.latents = init_latents(features.size(), config.latent_dim, config.init_sigma, derive_seed(config.seed, 2), fixed);
    return model;
}

Tensor2 model_input(std::span<const Vec3> points, const LatentCode& code) {
    const std::size_t width = 3 + code.size();
    Tensor2 input(points.size(), width);
    const std::vector<double> full = code.full();
    for (std::size_t r = 0; r < points.size(); ++r) {
        double* row = &input(r, 0);
        row[0] = points[r].x();
        row[1] = points[r].y();
        row[2] = points[r].z();
        std::copy(full.begin(), full.end(), row + 3);
    }
    return input;
}

std::vector<double> predict_sdf(const ShapeModel& model, const LatentCode& code, std::span<const Vec3> points) {
    if (code.fixed.size() != model.fixed_dim() || code.trainable.size() != model.config.latent_dim)
        fail(ErrorCode::Shape, "latent code has width " + std::to_string(code.size()) + ", model expects " +
                                   std::to_string(model.code_width()));
    constexpr std::size_t kChunk = 4096;
    std::vector<double> out(points.size());
    for (std::size_t begin = 0; begin < points.size(); begin += kChunk) {
        const std::size_t end = std::min(points.size(), begin + kChunk);
        const Tensor2 values = model.network.evaluate(model_input(points.subspan(begin, end - begin), code));
        std::copy(values.values().begin(), values.values().end(), out.begin() + std::ptrdiff_t(begin));
    }
    return out;
}

std::string encode_checkpoint(const ShapeModel& model) {
    model.validate();
    nlohmann::json blocks = nlohmann::json::array();
    for (std::size_t l = 0; l < model.network.layers.size(); ++l) {
        const auto& layer = model.network.layers[l];
        blocks.push_back({{"name", "layer" + std::to_string(l) + ".weight"},
                          {"rows", layer.weight.rows()},
                          {"cols", layer.weight.cols()}});
        blocks.push_back(
            {{"name", "layer" + std::to_string(l) + ".bias"}, {"rows", layer.bias.rows()}, {"cols", layer.bias.cols()}});
    }
    blocks.push_back({{"name", "latents.fixed"}, {"rows", model.latents.size()}, {"cols", model.fixed_dim()}});
    blocks.push_back({{"name", "latents.trainable"}, {"rows", model.latents.size()}, {"cols", model.config.latent_dim}});

    nlohmann::json features = nlohmann::json::array();
    for (const auto& f : model.training_features) features.push_back(f.to_json());
    const nlohmann::json header = {
        {"format", "inrshape-checkpoint"},
        {"model", model.config.to_json()},
        {"architecture",
         {{"input_width", model.network.input_width()},
          {"activation", "relu"},
          {"output", "linear"},
          {"weight_init", "kaiming-uniform-a-sqrt5"},
          {"input_layout", "xyz,fixed,trainable"}}},
        {"shape_count", model.latents.size()},
        {"feature_transform", model.transform.to_json()},
        {"training_features", features},
        {"shape_names", model.shape_names},
        {"training", model.training},
        {"blocks", blocks},
    };
    const std::string text = header.dump();

    std::ostringstream out(std::ios::binary);
    out.write(kMagic, sizeof kMagic);
    detail::write_u64(out, kVersion);
    detail::write_u64(out, text.size());
    out.write(text.data(), std::streamsize(text.size()));
    for (const auto& layer : model.network.layers) {
        detail::write_f64(out, layer.weight.values());
        detail::write_f64(out, layer.bias.values());
    }
    for (const auto& code : model.latents) detail::write_f64(out, code.fixed);
    for (const auto& code : model.latents) detail::write_f64(out, code.trainable);
    return std::move(out).str();
}

ShapeModel decode_checkpoint(std::string_view bytes) {
    std::istringstream in{std::string(bytes), std::ios::binary};
    char magic[8];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        fail(ErrorCode::Config, "not an inrshape checkpoint");
    std::uint64_t version = 0, header_len = 0;
    if (!detail::read_u64(in, version) || version != kVersion)
        fail(ErrorCode::Config, "unsupported checkpoint version " + std::to_string(version));
    if (!detail::read_u64(in, header_len) || header_len > bytes.size()) fail(ErrorCode::Config, "corrupt header length");
    std::string text(header_len, '\0');
    if (!in.read(text.data(), std::streamsize(header_len))) fail(ErrorCode::Config, "truncated checkpoint header");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::Config, std::string("malformed checkpoint header: ") + e.what());
    }
    ShapeModel model;
    model.config = ModelConfig::from_json(header.at("model"));
    model.transform = FeatureTransform::from_json(header.at("feature_transform"));
    for (const auto& f : header.at("training_features")) model.training_features.push_back(FeatureVector::from_json(f));
    model.shape_names = header.at("shape_names").get<std::vector<std::string>>();
    model.training = header.at("training");

    const auto& blocks = header.at("blocks");
    const std::size_t layers = model.config.hidden_layers + 1;
    if (blocks.size() != 2 * layers + 2) fail(ErrorCode::Config, "unexpected checkpoint block count");
    auto read_block = [&](std::size_t b) {
        const std::size_t rows = blocks[b].at("rows").get<std::size_t>();
        const std::size_t cols = blocks[b].at("cols").get<std::size_t>();
        if (rows * cols > bytes.size() / 8) fail(ErrorCode::Config, "corrupt block size");
        Tensor2 t(rows, cols);
        if (!detail::read_f64(in, t.values())) fail(ErrorCode::Config, "truncated checkpoint data");
        return t;
    };
    model.network.layers.resize(layers);
    for (std::size_t l = 0; l < layers; ++l) {
        model.network.layers[l].weight = read_block(2 * l);
        model.network.layers[l].bias = read_block(2 * l + 1);
    }
    const Tensor2 fixed = read_block(2 * layers);
    const Tensor2 trainable = read_block(2 * layers + 1);
    if (fixed.rows() != trainable.rows()) fail(ErrorCode::Config, "latent blocks disagree on shape count");
    model.latents.resize(fixed.rows());
    for (std::size_t i = 0; i < fixed.rows(); ++i) {
        const auto f = fixed.row_span(i);
        const auto t = trainable.row_span(i);
        model.latents[i].fixed.assign(f.begin(), f.end());
        model.latents[i].trainable.assign(t.begin(), t.end());
    }
    if (in.peek() != std::char_traits<char>::eof()) fail(ErrorCode::Config, "trailing bytes after checkpoint data");
    model.validate();
    return model;
}

void save_checkpoint(const ShapeModel& model, const std::filesystem::path& path) {
    const std::string bytes = encode_checkpoint(model);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) fail(ErrorCode::Io, "cannot write " + tmp);
        out.write(bytes.data(), std::streamsize(bytes.size()));
        if (!out) fail(ErrorCode::Io, "failed writing " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

ShapeModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot read checkpoint " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return decode_checkpoint(ss.str());
}

}  // namespace inrshape
