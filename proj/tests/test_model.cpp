#include "inrshape/errors.hpp"
#include "inrshape/mlp_kernel.hpp"
#include "inrshape/model.hpp"
#include "inrshape/training.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <filesystem>
#include <random>

using namespace inrshape;

namespace {

std::vector<FeatureVector> random_features(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<FeatureVector> out(n);
    for (auto& f : out) {
        f.volume = 0.05 + 0.2 * u(rng);
        f.isthmus_area = 0.04 * u(rng);
        f.symmetry = u(rng);
    }
    return out;
}

ModelConfig small_config(bool conditioned) {
    ModelConfig c;
    if (conditioned) c.fixed_features = {Feature::Volume, Feature::Isthmus, Feature::Symmetry};
    c.latent_dim = 5;
    c.hidden_width = 12;
    c.hidden_layers = 3;
    c.init_sigma = 0.3;
    c.seed = 4;
    return c;
}

std::vector<Vec3> random_points(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Vec3> out(n);
    for (auto& p : out) p = Vec3(u(rng), u(rng), u(rng));
    return out;
}

}  // namespace

TEST_CASE("latent initialisation") {
    const auto table = init_latents(200, 64, 0.01, 77);
    double ss = 0.0, mean = 0.0;
    std::size_t count = 0;
    for (const auto& c : table)
        for (double v : c.trainable) {
            mean += v;
            ++count;
        }
    mean /= double(count);
    for (const auto& c : table)
        for (double v : c.trainable) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / double(count - 1));
    CHECK(std::abs(sd - 0.01) / 0.01 < 0.1);
    CHECK(init_latents(200, 64, 0.01, 77) == table);
    CHECK(init_latents(200, 64, 0.01, 78) != table);

    const std::vector<std::vector<double>> fixed = {{0.1, -1.2, 3.0}, {2.0, 0.5, -0.25}};
    const auto with_fixed = init_latents(2, 4, 0.01, 1, fixed);
    CHECK(with_fixed[0].fixed == fixed[0]);
    CHECK(with_fixed[1].fixed == fixed[1]);
    CHECK(with_fixed[0].full().size() == 7);
    CHECK_THROWS_AS(init_latents(0, 4, 0.01, 1), Error);
}

TEST_CASE("feature transform and fixed slots") {
    const auto features = random_features(9, 3);
    const ShapeModel model = create_model(small_config(true), features);
    CHECK(model.network.input_width() == 3 + 3 + 5);
    for (Feature f : kAllFeatures) {
        std::vector<double> xs;
        for (const auto& v : features) xs.push_back(v.get(f));
        double m = 0.0;
        for (double x : xs) m += x;
        m /= double(xs.size());
        double ss = 0.0;
        for (double x : xs) ss += (x - m) * (x - m);
        const double sd = std::sqrt(ss / double(xs.size() - 1));
        for (std::size_t i = 0; i < features.size(); ++i) {
            const double z = (xs[i] - m) / sd;
            CHECK(std::abs(model.latents[i].fixed[std::size_t(int(f))] - z) <= 1e-12);
        }
        CHECK(model.transform.to_raw(f, model.transform.to_z(f, 0.123)) == doctest::Approx(0.123).epsilon(1e-14));
    }
    CHECK(model.fixed_slot(Feature::Isthmus) == 1);

    const ShapeModel baseline = create_model(small_config(false), features);
    CHECK(baseline.network.input_width() == 3 + 5);
    CHECK(baseline.latents[0].fixed.empty());
    CHECK(baseline.fixed_slot(Feature::Volume) == -1);

    ModelConfig dup = small_config(true);
    dup.fixed_features = {Feature::Volume, Feature::Volume};
    CHECK_THROWS_AS(create_model(dup, features), Error);
}

TEST_CASE("predict_sdf batch contract") {
    const ShapeModel model = create_model(small_config(true), random_features(4, 1));
    auto points = random_points(37, 2);
    points.push_back(points[5]);
    const auto values = predict_sdf(model, model.latents[1], points);
    REQUIRE(values.size() == points.size());
    CHECK(values.back() == values[5]);
    for (std::size_t i = 0; i < points.size(); i += 6) {
        const auto single = predict_sdf(model, model.latents[1], std::span(&points[i], 1));
        CHECK(single[0] == doctest::Approx(values[i]).epsilon(1e-12));
    }
    std::vector<std::vector<double>> rows;
    const auto code = model.latents[1].full();
    for (const auto& p : points) {
        std::vector<double> row{p.x(), p.y(), p.z()};
        row.insert(row.end(), code.begin(), code.end());
        rows.push_back(row);
    }
    const auto expected = oracle::mlp_forward(model.network, rows);
    for (std::size_t i = 0; i < points.size(); ++i) CHECK(std::abs(values[i] - expected[i][0]) < 1e-12);

    LatentCode wrong = model.latents[0];
    wrong.trainable.pop_back();
    try {
        predict_sdf(model, wrong, points);
        FAIL("expected a shape error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Shape);
    }
}

TEST_CASE("trainable code receives gradient") {
    const ShapeModel model = create_model(small_config(true), random_features(4, 5));
    const auto points = random_points(16, 6);
    const std::vector<double> sdf(points.size(), 0.0);
    Tape tape;
    const auto terms = reconstruction_loss(tape, model.network, model.latents[0], points, sdf, 0.0);
    const Gradients g = tape.backward(tape.value(terms.sse).rows() == 1 ? terms.sse : terms.loss);
    double norm = 0.0;
    for (double v : g.at(terms.code).values()) norm += v * v;
    CHECK(norm > 0.0);
}

TEST_CASE("fused kernel matches the tape") {
    const ShapeModel model = create_model(small_config(true), random_features(5, 8));
    const auto points = random_points(64, 9);
    std::vector<double> sdf;
    std::mt19937_64 rng(10);
    std::normal_distribution<double> n(0.0, 0.1);
    for (std::size_t i = 0; i < points.size(); ++i) sdf.push_back(n(rng));
    const double lambda = 0.37;
    const LatentCode& code = model.latents[2];

    Tape tape;
    const auto terms = reconstruction_loss(tape, model.network, code, points, sdf, lambda);
    const Gradients g = tape.backward(terms.loss);

    MlpKernel<double> k64(model.network);
    KernelGradients out;
    k64.gradients(points, code.full(), code.fixed.size(), sdf, lambda, out);
    CHECK(out.loss == doctest::Approx(tape.value(terms.loss)[0]).epsilon(1e-12));
    for (std::size_t l = 0; l < model.network.layers.size(); ++l) {
        const auto& tw = g.at(terms.trace.weights[l]);
        const auto& tb = g.at(terms.trace.biases[l]);
        for (std::size_t i = 0; i < tw.size(); ++i) CHECK(std::abs(out.weights[l][i] - tw[i]) < 1e-10);
        for (std::size_t i = 0; i < tb.size(); ++i) CHECK(std::abs(out.biases[l][i] - tb[i]) < 1e-10);
    }
    const auto& tc = g.at(terms.code);
    for (std::size_t j = 0; j < out.code.size(); ++j) CHECK(std::abs(out.code[j] - tc[j]) < 1e-10);

    MlpKernel<float> k32(model.network);
    KernelGradients out32;
    k32.gradients(points, code.full(), code.fixed.size(), sdf, lambda, out32);
    CHECK(oracle::relative_error(out32.loss, out.loss) < 1e-4);
    for (std::size_t j = 0; j < out.code.size(); ++j) CHECK(oracle::relative_error(out32.code[j], out.code[j], 1e-3) < 1e-3);

    std::vector<double> predicted(points.size());
    k64.evaluate(points, code.full(), predicted);
    const auto reference = predict_sdf(model, code, points);
    for (std::size_t i = 0; i < points.size(); ++i) CHECK(std::abs(predicted[i] - reference[i]) < 1e-12);
}

TEST_CASE("checkpoint round trip") {
    ShapeModel model = create_model(small_config(true), random_features(6, 11), std::vector<std::string>{
                                                                                  "a", "b", "c", "d", "e", "f"});
    model.training = {{"note", "unit"}, {"epochs_completed", 3}};
    const std::string bytes = encode_checkpoint(model);
    const ShapeModel back = decode_checkpoint(bytes);
    CHECK(encode_checkpoint(back) == bytes);
    CHECK(back.latents == model.latents);
    CHECK(back.transform == model.transform);
    CHECK(back.shape_names == model.shape_names);
    CHECK(back.training_features == model.training_features);
    for (std::size_t l = 0; l < model.network.layers.size(); ++l) {
        CHECK(back.network.layers[l].weight == model.network.layers[l].weight);
        CHECK(back.network.layers[l].bias == model.network.layers[l].bias);
    }

    const auto path = std::filesystem::temp_directory_path() / "inrshape_ckpt_test.bin";
    save_checkpoint(model, path);
    CHECK(encode_checkpoint(load_checkpoint(path)) == bytes);
    std::filesystem::remove(path);

    std::string bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS(decode_checkpoint(bad), Error);
    CHECK_THROWS_AS(decode_checkpoint(bytes.substr(0, bytes.size() - 8)), Error);
    CHECK_THROWS_AS(decode_checkpoint(bytes + "x"), Error);
    CHECK_THROWS_AS(load_checkpoint("/nonexistent/ckpt.bin"), Error);
}
