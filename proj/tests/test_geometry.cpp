#include "inrshape/errors.hpp"
#include "inrshape/marching_cubes.hpp"
#include "inrshape/measures.hpp"
#include "inrshape/mesh.hpp"
#include "inrshape/mesh_io.hpp"
#include "inrshape/mesh_query.hpp"
#include "inrshape/normalize.hpp"
#include "inrshape/sampling.hpp"

#include <doctest.h>

#include <Eigen/Geometry>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

using namespace inrshape;

namespace {

constexpr double kPi = std::numbers::pi;
const Vec3 kCenter(0.5, 0.5, 0.5);

ScalarGrid sphere_grid(std::size_t n, const Vec3& c, double r) {
    ScalarGrid g = ScalarGrid::unit_cube_cell_centers(n);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < n; ++i) g.at(i, j, k) = (g.position(i, j, k) - c).norm() - r;
    return g;
}

}  // namespace

TEST_CASE("signed distance to an icosphere matches the analytic sphere") {
    const TriMesh sphere = make_icosphere(kCenter, 0.3, 4);
    const MeshQuery q(sphere);
    REQUIRE(q.watertight());
    CHECK(q.signed_distance(kCenter) == doctest::Approx(-0.3).epsilon(0).scale(1).epsilon(2e-3 / 0.3));
    CHECK(std::abs(q.signed_distance(Vec3(0.9, 0.5, 0.5)) - 0.1) <= 2e-3);
    CHECK(std::abs(q.signed_distance(kCenter) + 0.3) <= 2e-3);
    for (std::size_t v = 0; v < sphere.vertices.size(); v += 97) CHECK(q.signed_distance(sphere.vertices[v]) == 0.0);
}

TEST_CASE("signed distance refuses open meshes") {
    TriMesh open = make_box(Vec3::Zero(), Vec3::Ones());
    open.faces.pop_back();
    const MeshQuery q(open);
    CHECK_FALSE(q.watertight());
    CHECK_THROWS_AS(q.signed_distance(kCenter), Error);
    CHECK(q.unsigned_distance(Vec3(2, 0.5, 0.5)) == doctest::Approx(1.0));
}

TEST_CASE("SDF sign agrees with ray parity and winding number") {
    const TriMesh meshes[] = {make_icosphere(kCenter, 0.3, 3), make_box(Vec3(0.2, 0.3, 0.25), Vec3(0.7, 0.8, 0.6))};
    for (const auto& mesh : meshes) {
        const MeshQuery q(mesh);
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int i = 0; i < 1000; ++i) {
            const Vec3 p(u(rng), u(rng), u(rng));
            const double d = q.signed_distance(p);
            CHECK((d < 0) == q.inside_by_parity(p));
            CHECK((d < 0) == (q.winding_number(p) > 0.5));
        }
    }
}

TEST_CASE("flipped winding keeps the distance sign convention") {
    TriMesh sphere = make_icosphere(kCenter, 0.3, 3);
    flip_orientation(sphere);
    const MeshQuery q(sphere);
    CHECK(q.signed_distance(kCenter) < 0.0);
    CHECK(q.signed_distance(Vec3(0.95, 0.5, 0.5)) > 0.0);
}

TEST_CASE("surface samples lie on the surface and are reproducible") {
    const TriMesh sphere = make_icosphere(kCenter, 0.3, 3);
    const MeshQuery q(sphere);
    const auto pts = sample_surface(sphere, 500, 9);
    for (const auto& p : pts) CHECK(std::abs(q.signed_distance(p)) < 1e-9);
    CHECK(sample_surface(sphere, 500, 9) == pts);
    CHECK(sample_surface(sphere, 500, 10) != pts);
}

TEST_CASE("surface samples on a square are uniform (chi-square, 4x4 bins)") {
    TriMesh square;
    square.vertices = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
    square.faces = {{0, 1, 2}, {0, 2, 3}};
    const std::size_t n = 100000;
    const auto pts = sample_surface(square, n, 77);
    std::array<double, 16> counts{};
    for (const auto& p : pts) {
        const int bx = std::min(3, int(p.x() * 4));
        const int by = std::min(3, int(p.y() * 4));
        counts[std::size_t(by * 4 + bx)] += 1;
    }
    const double expected = double(n) / 16.0;
    double chi2 = 0.0;
    for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
    // Critical value of chi-square with 15 degrees of freedom at alpha = 0.01.
    CHECK(chi2 < 30.578);
}

TEST_CASE("sampling a zero-area mesh is a degenerate-mesh error") {
    TriMesh flat;
    flat.vertices = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
    flat.faces = {{0, 1, 2}};
    try {
        sample_surface(flat, 10, 1);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DegenerateMesh);
    }
}

TEST_CASE("population normalization") {
    SUBCASE("a unit cube maps onto itself") {
        const TriMesh cube = make_box(Vec3::Zero(), Vec3::Ones());
        const auto pop = normalize_population(std::span(&cube, 1));
        const Aabb box = bounding_box(pop.meshes[0]);
        CHECK(box.lo == Vec3::Zero());
        CHECK(box.hi == Vec3::Ones());
    }
    SUBCASE("shared scale preserves relative size and inverts") {
        const TriMesh cubes[] = {make_box(Vec3::Constant(-0.5), Vec3::Constant(0.5)),
                                 make_box(Vec3::Constant(-1.0), Vec3::Constant(1.0))};
        const auto pop = normalize_population(cubes, Vec3::Zero());
        CHECK(bounding_box(pop.meshes[0]).extent().isApprox(Vec3::Constant(0.5), 1e-15));
        CHECK(bounding_box(pop.meshes[1]).extent().isApprox(Vec3::Constant(1.0), 1e-15));
        for (int m = 0; m < 2; ++m) {
            const TriMesh back = pop.transform.invert(pop.meshes[std::size_t(m)]);
            for (std::size_t v = 0; v < back.vertices.size(); ++v)
                CHECK((back.vertices[v] - cubes[m].vertices[v]).norm() < 1e-9);
        }
    }
    SUBCASE("zero extent is degenerate") {
        TriMesh flat = make_box(Vec3(0, 0, 0.5), Vec3(1, 1, 0.5));
        CHECK_THROWS_AS(normalize_population(std::span(&flat, 1)), Error);
    }
}

TEST_CASE("marching cubes on an analytic sphere") {
    const auto result = marching_cubes(sphere_grid(64, kCenter, 0.3));
    REQUIRE_FALSE(result.empty);
    CHECK(is_watertight(result.mesh));
    CHECK(connected_components(result.mesh) == 1);
    const double exact = 4.0 / 3.0 * kPi * 0.027;
    CHECK(std::abs(mesh_volume(result.mesh) - exact) / exact < 0.02);
    // Outward orientation: positive signed volume.
    double six_v = 0.0;
    for (std::size_t f = 0; f < result.mesh.faces.size(); ++f)
        six_v += result.mesh.corner(f, 0).dot(result.mesh.corner(f, 1).cross(result.mesh.corner(f, 2)));
    CHECK(six_v > 0.0);
}

TEST_CASE("marching cubes flags an empty level set") {
    ScalarGrid g = ScalarGrid::unit_cube_cell_centers(8);
    std::fill(g.values.begin(), g.values.end(), 1.0);
    const auto result = marching_cubes(g);
    CHECK(result.empty);
    CHECK(result.mesh.faces.empty());
}

TEST_CASE("two disjoint blobs give two components") {
    ScalarGrid g = ScalarGrid::unit_cube_cell_centers(64);
    for (std::size_t k = 0; k < 64; ++k)
        for (std::size_t j = 0; j < 64; ++j)
            for (std::size_t i = 0; i < 64; ++i) {
                const Vec3 p = g.position(i, j, k);
                g.at(i, j, k) = std::min((p - Vec3(0.3, 0.5, 0.5)).norm() - 0.15, (p - Vec3(0.7, 0.5, 0.5)).norm() - 0.15);
            }
    const auto result = marching_cubes(g);
    CHECK(connected_components(result.mesh) == 2);
    CHECK(is_watertight(result.mesh));
}

TEST_CASE("marching cubes stays watertight on random fields") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        ScalarGrid g = ScalarGrid::unit_cube_cell_centers(10).padded(1.0);
        for (std::size_t k = 1; k < 11; ++k)
            for (std::size_t j = 1; j < 11; ++j)
                for (std::size_t i = 1; i < 11; ++i) g.at(i, j, k) = u(rng);
        const auto result = marching_cubes(g);
        if (!result.empty) CHECK(is_watertight(result.mesh));
    }
}

TEST_CASE("mesh volume") {
    CHECK(mesh_volume(make_box(Vec3::Zero(), Vec3::Ones())) == 1.0);
    const double exact = 4.0 / 3.0 * kPi * 0.027;
    TriMesh sphere = make_icosphere(kCenter, 0.3, 4);
    CHECK(std::abs(mesh_volume(sphere) - exact) / exact < 0.01);
    const double v = mesh_volume(sphere);
    flip_orientation(sphere);
    CHECK(mesh_volume(sphere) == doctest::Approx(v).epsilon(1e-14));
    TriMesh open = make_box(Vec3::Zero(), Vec3::Ones());
    open.faces.pop_back();
    CHECK_THROWS_AS(mesh_volume(open), Error);
}

TEST_CASE("cross-section area") {
    const TriMesh cube = make_box(Vec3::Zero(), Vec3::Ones());
    CHECK(cross_section_area(cube, 0, 0.5) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cross_section_area(cube, 2, 0.25) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cross_section_area(cube, 0, 1.5) == 0.0);

    const TriMesh sphere = make_icosphere(kCenter, 0.3, 5);
    const double disk = kPi * 0.09;
    CHECK(std::abs(cross_section_area(sphere, 0, 0.5) - disk) / disk < 0.01);
    CHECK(std::abs(cross_section_area(sphere, 0, 0.5, SliceMethod::Voxel, 512) - disk) / disk < 0.01);

    const TriMesh lobes[] = {make_icosphere(Vec3(0.3, 0.5, 0.5), 0.1, 3), make_icosphere(Vec3(0.7, 0.5, 0.5), 0.1, 3)};
    const TriMesh split = merge_meshes(lobes);
    CHECK(cross_section_area(split, 0, 0.5) == 0.0);
}

TEST_CASE("cross-section area varies continuously through a sphere") {
    const TriMesh sphere = make_icosphere(kCenter, 0.3, 4);
    double prev = cross_section_area(sphere, 0, 0.21);
    for (double x = 0.22; x <= 0.79; x += 0.01) {
        const double a = cross_section_area(sphere, 0, x);
        const double exact = kPi * (0.09 - (x - 0.5) * (x - 0.5));
        CHECK(std::abs(a - exact) < 0.01);
        // Bound on the step: analytic change plus facet error.
        CHECK(std::abs(a - prev) < 5.0 * (2.0 * kPi * 0.3 * 0.01 + 0.003));
        prev = a;
    }
}

TEST_CASE("mirror IoU") {
    const TriMesh cube = make_box(Vec3(0.25, 0.3, 0.2), Vec3(0.75, 0.6, 0.9));
    const auto sym = mirror_iou(cube, 0, 0.5, 64);
    CHECK(sym.iou >= 0.98);
    CHECK_FALSE(sym.empty_side);

    const TriMesh lobes[] = {make_icosphere(Vec3(0.3, 0.5, 0.5), 0.12, 3), make_icosphere(Vec3(0.7, 0.5, 0.5), 0.12, 3)};
    CHECK(mirror_iou(merge_meshes(lobes), 0, 0.5, 128).iou >= 0.95);

    const TriMesh one = make_icosphere(Vec3(0.3, 0.5, 0.5), 0.12, 3);
    const auto lone = mirror_iou(one, 0, 0.5, 64);
    CHECK(lone.iou == 0.0);
    CHECK(lone.empty_side);

    // Reflection involution: the mirrored mesh scores the same.
    const TriMesh uneven[] = {make_icosphere(Vec3(0.3, 0.45, 0.5), 0.12, 3), make_icosphere(Vec3(0.72, 0.5, 0.55), 0.1, 3)};
    TriMesh shape = merge_meshes(uneven);
    TriMesh mirrored = shape;
    for (auto& v : mirrored.vertices) v.x() = 1.0 - v.x();
    flip_orientation(mirrored);
    CHECK(mirror_iou(mirrored, 0, 0.5, 64).iou == doctest::Approx(mirror_iou(shape, 0, 0.5, 64).iou).epsilon(1e-12));
}

TEST_CASE("chamfer distance") {
    const TriMesh a = make_icosphere(kCenter, 0.3, 4);
    CHECK(chamfer_distance(a, a, {5000, 1, 2}) == 0.0);

    const TriMesh b = make_icosphere(kCenter, 0.31, 4);
    const double c = chamfer_distance(a, b, {5000, 1, 2});
    CHECK(std::abs(c - 0.01) / 0.01 < 0.1);

    CHECK(chamfer_distance(a, b, {3000, 4, 9}) == chamfer_distance(b, a, {3000, 9, 4}));

    const Eigen::Matrix3d rot = Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized()).toRotationMatrix();
    const Vec3 shift(0.1, -0.2, 0.05);
    const double moved = chamfer_distance(rigid_transform(a, rot, shift), rigid_transform(b, rot, shift), {5000, 1, 2});
    CHECK(std::abs(moved - c) < 1e-9);
}

TEST_CASE("OBJ round trip is lossless and STL is welded") {
    const TriMesh m = make_icosphere(kCenter, 0.3, 2);
    const TriMesh back = parse_obj(format_obj(m));
    CHECK(back.vertices == m.vertices);
    CHECK(back.faces == m.faces);
    CHECK(format_obj(back) == format_obj(m));

    CHECK(parse_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1/1 2/2 3/3 4/4\n").faces.size() == 2);
    CHECK_THROWS_AS(parse_obj("v 0 0 0\nf 1 2 3\n"), Error);

    const auto path = std::filesystem::temp_directory_path() / "inrshape_box.stl";
    {
        const TriMesh box = make_box(Vec3::Zero(), Vec3::Ones());
        std::ofstream out(path, std::ios::binary);
        char header[80] = {};
        out.write(header, 80);
        const std::uint32_t n = std::uint32_t(box.faces.size());
        out.write(reinterpret_cast<const char*>(&n), 4);
        for (std::size_t f = 0; f < box.faces.size(); ++f) {
            float data[12] = {};
            for (int k = 0; k < 3; ++k)
                for (int d = 0; d < 3; ++d) data[3 + 3 * k + d] = float(box.corner(f, k)[d]);
            out.write(reinterpret_cast<const char*>(data), sizeof data);
            const std::uint16_t attr = 0;
            out.write(reinterpret_cast<const char*>(&attr), 2);
        }
    }
    const TriMesh stl = read_mesh(path);
    CHECK(stl.vertices.size() == 8);
    CHECK(is_watertight(stl));
    CHECK(mesh_volume(stl) == doctest::Approx(1.0));
    std::filesystem::remove(path);
}

TEST_CASE("grid export round trip") {
    const ScalarGrid g = sphere_grid(8, kCenter, 0.3);
    const auto path = std::filesystem::temp_directory_path() / "inrshape_grid.f32";
    write_grid(path, g);
    const ScalarGrid back = read_grid(path);
    CHECK(back.resolution == g.resolution);
    CHECK(back.origin == g.origin);
    for (std::size_t i = 0; i < g.values.size(); ++i) CHECK(back.values[i] == double(float(g.values[i])));
    std::filesystem::remove(path);
    std::filesystem::remove(path.string() + ".json");
}
