#include "inrshape/errors.hpp"
#include "inrshape/generation.hpp"
#include "inrshape/measures.hpp"

#include "fixtures.hpp"

#include <doctest.h>

using namespace inrshape;

namespace {

bool same_mesh(const TriMesh& a, const TriMesh& b) {
    if (a.vertices.size() != b.vertices.size() || a.faces.size() != b.faces.size()) return false;
    for (std::size_t i = 0; i < a.vertices.size(); ++i)
        if (a.vertices[i] != b.vertices[i]) return false;
    for (std::size_t i = 0; i < a.faces.size(); ++i)
        if (a.faces[i] != b.faces[i]) return false;
    return true;
}

LatentCode with_radius_code(const ShapeModel& model, double trainable0) {
    LatentCode c = model.latents[0];
    c.trainable[0] = trainable0;
    return c;
}

}  // namespace

TEST_CASE("synthesis of a known field") {
    const fixture::Octahedron o;
    const ShapeModel model = fixture::octahedron_model({Feature::Volume}, 12, o);
    const LatentCode& code = model.latents[3];
    const double r = o.radius(code);
    const Synthesis s = synthesize(model, code);
    REQUIRE_FALSE(s.empty);
    CHECK(is_watertight(s.mesh));
    CHECK(connected_components(s.mesh) == 1);
    CHECK(std::abs(mesh_volume(s.mesh) - fixture::Octahedron::volume(r)) / fixture::Octahedron::volume(r) < 0.03);

    SynthesisOptions dense;
    dense.narrow_band = false;
    const Synthesis d = synthesize(model, code, dense);
    CHECK(d.mesh.faces.size() == s.mesh.faces.size());
    CHECK(std::abs(mesh_volume(d.mesh) - mesh_volume(s.mesh)) < 1e-6);

    SynthesisOptions exact = dense;
    exact.precision = Precision::Float64;
    const ScalarGrid grid = evaluate_grid(model, code, exact);
    CHECK(grid.values.size() == 64u * 64u * 64u);
    const std::size_t centre = 32 + 64 * (32 + 64 * 32);
    const double h = 1.0 / 64.0;
    const double x = (32 + 0.5) * h - 0.5;
    CHECK(grid.values[centre] == doctest::Approx(o.slope * (3.0 * x - r)).epsilon(1e-12));

    CHECK(same_mesh(synthesize(model, code).mesh, s.mesh));

    const Synthesis gone = synthesize(model, with_radius_code(model, -10.0));
    CHECK(gone.empty);
    CHECK(gone.mesh.faces.empty());

    SynthesisOptions tiny;
    tiny.resolution = 7;
    CHECK_THROWS_AS(synthesize(model, code, tiny), Error);
}

TEST_CASE("sampler fit") {
    const ShapeModel model = fixture::octahedron_model({Feature::Volume, Feature::Symmetry});
    const LatentSampler sampler = fit_sampler(model);
    REQUIRE(sampler.mean.size() == 3);
    for (std::size_t j = 0; j < 3; ++j) {
        double m = 0.0;
        for (const auto& c : model.latents) m += c.trainable[j];
        m /= double(model.latents.size());
        double ss = 0.0;
        for (const auto& c : model.latents) ss += (c.trainable[j] - m) * (c.trainable[j] - m);
        CHECK(sampler.mean[j] == doctest::Approx(m).epsilon(1e-12));
        CHECK(sampler.stddev[j] == doctest::Approx(std::sqrt(ss / double(model.latents.size() - 1))).epsilon(1e-12));
    }
    CHECK(sampler.feature_pool.size() == model.training_features.size());
    const LatentSampler back = LatentSampler::from_json(sampler.to_json());
    CHECK(back.to_json() == sampler.to_json());
    CHECK(back.mean == sampler.mean);
    CHECK(back.stddev == sampler.stddev);

    ShapeModel lonely = model;
    lonely.latents.resize(1);
    lonely.training_features.resize(1);
    lonely.shape_names.resize(1);
    CHECK_THROWS_AS(fit_sampler(lonely), Error);
}

TEST_CASE("cohort generation") {
    const fixture::Octahedron o;
    const ShapeModel model = fixture::octahedron_model({Feature::Volume, Feature::Isthmus});
    const LatentSampler sampler = fit_sampler(model);
    CohortOptions opts;
    opts.synthesis.resolution = 32;
    const auto a = generate_cohort(model, sampler, 6, 42, {}, opts);
    const auto b = generate_cohort(model, sampler, 6, 42, {}, opts);
    REQUIRE(a.size() == 6);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].index == i);
        CHECK(a[i].code == b[i].code);
        CHECK(same_mesh(a[i].synthesis.mesh, b[i].synthesis.mesh));
        REQUIRE(a[i].pool_index < sampler.feature_pool.size());
        const FeatureVector& src = sampler.feature_pool[a[i].pool_index];
        CHECK(a[i].code.fixed[0] == model.transform.to_z(Feature::Volume, src.volume));
        CHECK(a[i].code.fixed[1] == model.transform.to_z(Feature::Isthmus, src.isthmus_area));
        REQUIRE(a[i].conditioned);
        CHECK(a[i].conditioned->volume == src.volume);
        CHECK_FALSE(a[i].extrapolated);
        REQUIRE(a[i].measured);
        const double r = o.radius(a[i].code);
        CHECK(std::abs(a[i].measured->volume - fixture::Octahedron::volume(r)) / fixture::Octahedron::volume(r) <
              0.08);
    }
    CHECK(generate_cohort(model, sampler, 6, 43, {}, opts)[0].code != a[0].code);

    FeatureOverrides fixed_volume;
    fixed_volume.volume = 0.04;
    const auto pinned = generate_cohort(model, sampler, 5, 7, fixed_volume, opts);
    for (const auto& m : pinned) {
        CHECK(m.conditioned->volume == 0.04);
        CHECK(m.code.fixed[0] == pinned[0].code.fixed[0]);
        CHECK_FALSE(m.extrapolated);
    }
    fixed_volume.volume = 1.0;
    CHECK(generate_cohort(model, sampler, 1, 7, fixed_volume, opts)[0].extrapolated);

    const ShapeModel plain = fixture::octahedron_model({});
    FeatureOverrides any;
    any.symmetry = 0.9;
    try {
        generate_cohort(plain, fit_sampler(plain), 2, 1, any, opts);
        FAIL("expected an unsupported-model error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnsupportedModel);
    }
    CHECK(generate_cohort(plain, fit_sampler(plain), 2, 1, {}, opts).size() == 2);
}

TEST_CASE("editing") {
    const fixture::Octahedron o;
    const ShapeModel model = fixture::octahedron_model({Feature::Volume, Feature::Symmetry});
    const LatentCode& base = model.latents[2];
    EditOptions opts;
    opts.synthesis.resolution = 48;

    const std::vector<FeatureDeltas> zero{FeatureDeltas{0.0, 0.0, 0.0}};
    const auto identity = edit_shape(model, base, zero, opts);
    REQUIRE(identity.size() == 1);
    CHECK(identity[0].code == base);
    CHECK_FALSE(identity[0].clamped);
    CHECK(same_mesh(identity[0].synthesis.mesh, synthesize(model, base, opts.synthesis).mesh));

    const FeatureVector start = decode_fixed(model, base);
    CHECK(start.volume == doctest::Approx(model.training_features[2].volume).epsilon(1e-12));
    const auto steps = sweep_deltas(model, base, Feature::Volume, start.volume - 0.01, start.volume + 0.01, 5);
    REQUIRE(steps.size() == 5);
    const auto edits = edit_shape(model, base, steps, opts);
    double previous = -1.0;
    for (std::size_t i = 0; i < edits.size(); ++i) {
        const auto& e = edits[i];
        CHECK(e.code.trainable == base.trainable);
        CHECK(e.code.fixed[1] == base.fixed[1]);
        CHECK(e.conditioned.volume == doctest::Approx(start.volume - 0.01 + 0.005 * double(i)).epsilon(1e-9));
        REQUIRE(e.measured);
        CHECK(e.measured->volume > previous);
        previous = e.measured->volume;
        const double r = o.radius(e.code);
        CHECK(std::abs(e.measured->volume - fixture::Octahedron::volume(r)) / fixture::Octahedron::volume(r) < 0.05);
    }

    const std::vector<FeatureDeltas> huge{FeatureDeltas{10.0, 0.0, 0.0}};
    const auto clamped = edit_shape(model, base, huge, opts);
    CHECK(clamped[0].clamped);
    CHECK(clamped[0].code.fixed[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(clamped[0].code.fixed[1] == base.fixed[1]);

    const ShapeModel plain = fixture::octahedron_model({});
    try {
        edit_shape(plain, plain.latents[0], zero, opts);
        FAIL("expected an unsupported-model error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnsupportedModel);
    }
    CHECK_THROWS_AS(sweep_deltas(model, base, Feature::Isthmus, 0.0, 1.0, 3), Error);
}
