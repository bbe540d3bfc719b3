#include "inrshape/dataset.hpp"
#include "inrshape/errors.hpp"
#include "inrshape/mesh_io.hpp"
#include "inrshape/mesh_query.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace inrshape;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("inrshape_" + name);
    std::filesystem::remove_all(dir);
    return dir;
}

LobeParams symmetric_params(double bridge) {
    LobeParams p;
    p.left_radii = p.right_radii = Vec3(0.09, 0.1, 0.18);
    p.left_offset = Vec3(-0.15, 0.0, 0.0);
    p.right_offset = Vec3(0.15, 0.0, 0.0);
    p.bridge_radius = bridge;
    p.tilt = 0.0;
    return p;
}

}  // namespace

TEST_CASE("sample set labels") {
    const TriMesh sphere = make_icosphere(Vec3::Constant(0.5), 0.3, 3);
    const SampleSet set = build_sample_set(sphere, {}, 11);
    CHECK(set.size() == 50000);
    CHECK(set.surface_count == 40000);
    REQUIRE(set.points.size() == set.sdf.size());
    for (std::size_t i = 0; i < set.surface_count; ++i) REQUIRE(set.sdf[i] == 0.0);

    const MeshQuery query(sphere);
    for (std::size_t i = 0; i < 100; ++i) {
        const std::size_t idx = set.surface_count + i * 97;
        const Vec3& p = set.points[idx];
        const double magnitude = oracle::brute_force_distance(sphere, p);
        const double expected = query.inside_by_parity(p) ? -magnitude : magnitude;
        CHECK(std::abs(set.sdf[idx] - expected) <= 1e-9);
    }
}

TEST_CASE("sample set determinism and perturbation spread") {
    const TriMesh tiny = make_icosphere(Vec3::Constant(0.5), 1e-3, 2);
    SampleOptions opts;
    opts.n_surface = 2000;
    opts.n_perturbed = 20000;
    const SampleSet a = build_sample_set(tiny, opts, 5);
    const SampleSet b = build_sample_set(tiny, opts, 5);
    CHECK(a.points == b.points);
    CHECK(a.sdf == b.sdf);
    Vec3 mean = Vec3::Zero(), sq = Vec3::Zero();
    const double n = double(opts.n_perturbed);
    for (std::size_t i = a.surface_count; i < a.size(); ++i) mean += a.points[i];
    mean /= n;
    for (std::size_t i = a.surface_count; i < a.size(); ++i) sq += (a.points[i] - mean).cwiseAbs2();
    for (int axis = 0; axis < 3; ++axis) {
        const double sd = std::sqrt(sq[axis] / (n - 1));
        CHECK(std::abs(sd - 0.1) / 0.1 < 0.05);
    }
    const SampleSet c = build_sample_set(tiny, opts, 6);
    CHECK(c.points != a.points);
}

TEST_CASE("sample set errors") {
    TriMesh flat;
    flat.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)};
    flat.faces = {{0, 1, 2}};
    CHECK_THROWS_AS(build_sample_set(flat, {}, 1), Error);
    try {
        build_sample_set(flat, {}, 1);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DegenerateMesh);
    }
    SampleOptions bad;
    bad.sigma = 0.0;
    CHECK_THROWS_AS(build_sample_set(make_icosphere(Vec3::Constant(0.5), 0.2, 1), bad, 1), Error);
}

TEST_CASE("lobe shapes") {
    SUBCASE("split shape has two components and no isthmus") {
        const LobeShape s = generate_lobe_shape(symmetric_params(0.0), 64);
        CHECK(connected_components(s.mesh) == 2);
        CHECK(s.features.isthmus_area == 0.0);
        CHECK(is_watertight(s.mesh));
    }
    SUBCASE("bridged shape is one component") {
        const LobeShape s = generate_lobe_shape(symmetric_params(0.04), 64);
        CHECK(connected_components(s.mesh) == 1);
        CHECK(s.features.isthmus_area > 0.0);
        CHECK(s.features.isthmus_area == doctest::Approx(M_PI * 0.04 * 0.04).epsilon(0.05));
    }
    SUBCASE("mirror-symmetric parameters") {
        const LobeShape s = generate_lobe_shape(symmetric_params(0.04), 96);
        CHECK(s.features.symmetry >= 0.95);
        CHECK(s.features.valid());
    }
    SUBCASE("two spheres with a bridge match the analytic union volume") {
        LobeParams p;
        p.left_radii = p.right_radii = Vec3::Constant(0.15);
        p.left_offset = Vec3(-0.2, 0.0, 0.0);
        p.right_offset = Vec3(0.2, 0.0, 0.0);
        p.bridge_radius = 0.05;
        const LobeShape s = generate_lobe_shape(p, 96);
        const double expected = oracle::two_sphere_bridge_volume(0.15, 0.05, 0.4);
        CHECK(std::abs(s.features.volume - expected) / expected < 0.03);
    }
    SUBCASE("field zero set lies on the ellipsoid surface") {
        const LobeParams p = symmetric_params(0.0);
        const Vec3 on_surface = Vec3::Constant(0.5) + p.right_offset + Vec3(0.0, 0.0, p.right_radii.z());
        CHECK(std::abs(lobe_field(p, on_surface)) < 1e-12);
        CHECK(lobe_field(p, Vec3::Constant(0.5) + p.right_offset) < 0.0);
        CHECK(lobe_field(p, Vec3(0.5, 0.5, 0.5)) > 0.0);
    }
}

TEST_CASE("lobe parameter validation") {
    LobeParams p = symmetric_params(0.04);
    p.left_offset.z() = 0.3;
    CHECK_THROWS_AS(generate_lobe_shape(p, 64), Error);
    p = symmetric_params(0.04);
    p.left_radii.x() = 0.0;
    CHECK_THROWS_AS(validate_lobe_params(p, 64), Error);
    p = symmetric_params(0.04);
    p.left_offset.x() = -0.05;
    CHECK_THROWS_AS(validate_lobe_params(p, 64), Error);
    p = symmetric_params(0.01);
    CHECK_THROWS_AS(validate_lobe_params(p, 64), Error);
    try {
        validate_lobe_params(p, 64);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Parameter);
    }
}

TEST_CASE("parameter sampling split rate") {
    std::mt19937_64 rng(2024);
    const ParamRanges ranges;
    const std::vector<bool> flags = assign_splits(rng, 1000, ranges.split_fraction);
    int split = 0;
    for (bool f : flags) {
        const LobeParams p = sample_lobe_params(rng, ranges, 96, f);
        CHECK_NOTHROW(validate_lobe_params(p, 96));
        CHECK((p.bridge_radius == 0.0) == f);
        if (p.bridge_radius == 0.0) ++split;
    }
    CHECK(split >= 200);
    CHECK(split <= 300);
    CHECK(std::count(flags.begin(), flags.end(), true) == 250);
    const auto twenty = assign_splits(rng, 20, 0.25);
    CHECK(std::count(twenty.begin(), twenty.end(), true) == 5);
    CHECK_THROWS_AS(assign_splits(rng, 4, 1.5), Error);
}

TEST_CASE("population") {
    PopulationOptions opts;
    opts.n = 20;
    opts.seed = 3;
    opts.build_samples = false;
    const Dataset a = generate_population(opts);
    const Dataset b = generate_population(opts);
    REQUIRE(a.shapes.size() == 20);
    CHECK(a.features() == b.features());
    for (const auto& s : a.shapes) {
        CHECK(s.features.valid());
        CHECK(is_watertight(s.mesh));
        const Aabb box = bounding_box(s.mesh);
        CHECK(box.lo.minCoeff() >= -1e-12);
        CHECK(box.hi.maxCoeff() <= 1.0 + 1e-12);
        REQUIRE(s.params.has_value());
        const bool split = s.params->bridge_radius == 0.0;
        CHECK((s.features.isthmus_area == 0.0) == split);
        CHECK(connected_components(s.mesh) == (split ? 2u : 1u));
    }
    std::size_t split_count = 0;
    for (const auto& s : a.shapes) split_count += s.params->bridge_radius == 0.0;
    CHECK(split_count == 5);
    opts.n = 1;
    CHECK_THROWS_AS(generate_population(opts), Error);
}

TEST_CASE("dataset persistence") {
    PopulationOptions opts;
    opts.n = 3;
    opts.seed = 9;
    opts.mesh_resolution = 64;
    opts.ranges.bridge_radius = {0.035, 0.05};
    opts.sampling.n_surface = 500;
    opts.sampling.n_perturbed = 200;
    const Dataset ds = generate_population(opts);
    const auto dir1 = scratch_dir("ds1");
    const auto dir2 = scratch_dir("ds2");
    save_dataset(ds, dir1);
    save_dataset(generate_population(opts), dir2);
    for (const auto& entry : std::filesystem::directory_iterator(dir1))
        CHECK(slurp(entry.path()) == slurp(dir2 / entry.path().filename()));

    const Dataset back = load_dataset(dir1);
    REQUIRE(back.shapes.size() == 3);
    CHECK(back.seed == ds.seed);
    CHECK(back.normalization.scale == ds.normalization.scale);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back.shapes[i].features == ds.shapes[i].features);
        CHECK(back.shapes[i].samples.points == ds.shapes[i].samples.points);
        CHECK(back.shapes[i].samples.sdf == ds.shapes[i].samples.sdf);
        CHECK(back.shapes[i].samples.surface_count == 500);
        CHECK(back.shapes[i].mesh.vertices == ds.shapes[i].mesh.vertices);
        CHECK(back.shapes[i].mesh.faces == ds.shapes[i].mesh.faces);
    }
    CHECK_THROWS_AS(load_dataset(scratch_dir("missing")), Error);
    std::filesystem::remove_all(dir1);
    std::filesystem::remove_all(dir2);
}

TEST_CASE("mesh import") {
    const auto dir = scratch_dir("import");
    std::filesystem::create_directories(dir);
    const std::vector<std::filesystem::path> files = {dir / "a.obj", dir / "b.obj"};
    write_obj(files[0], make_icosphere(Vec3(10, 10, 10), 2.0, 2));
    write_obj(files[1], make_box(Vec3(9, 9, 9), Vec3(12, 11, 10.5)));
    SampleOptions sampling;
    sampling.n_surface = 300;
    sampling.n_perturbed = 100;
    const Dataset ds = import_meshes(files, Vec3(10, 10, 10), sampling, 1);
    REQUIRE(ds.shapes.size() == 2);
    for (const auto& s : ds.shapes) {
        const Aabb box = bounding_box(s.mesh);
        CHECK(box.lo.minCoeff() >= -1e-12);
        CHECK(box.hi.maxCoeff() <= 1.0 + 1e-12);
        CHECK(s.samples.size() == 400);
    }
    std::filesystem::remove_all(dir);
}
