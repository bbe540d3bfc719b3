#include "inrshape/dataset.hpp"

#include "binary_io.hpp"
#include "inrshape/errors.hpp"
#include "inrshape/marching_cubes.hpp"
#include "inrshape/mesh_io.hpp"
#include "inrshape/mesh_query.hpp"
#include "inrshape/random.hpp"
#include "inrshape/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace inrshape {
namespace {

const Vec3 kCenter = Vec3::Constant(0.5);
constexpr double kBoundLo = 0.05;
constexpr double kBoundHi = 0.95;

nlohmann::json vec_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

Vec3 json_vec(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 3) fail(ErrorCode::Config, "expected a 3-vector");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

nlohmann::json range_json(const std::array<double, 2>& r) { return {r[0], r[1]}; }

std::array<double, 2> json_range(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 2) fail(ErrorCode::Config, "expected a [lo, hi] range");
    return {j[0].get<double>(), j[1].get<double>()};
}

Eigen::Matrix3d tilt_rotation(double tilt) {
    return Eigen::AngleAxisd(tilt, Vec3::UnitY()).toRotationMatrix();
}

double ellipsoid_bound(const Vec3& p, const Vec3& r) {
    const double k0 = p.cwiseQuotient(r).norm();
    const double k1 = p.cwiseQuotient(r.cwiseProduct(r)).norm();
    if (k1 == 0.0) return -r.minCoeff();
    return k0 * (k0 - 1.0) / k1;
}

double capsule(const Vec3& p, const Vec3& a, const Vec3& b, double radius) {
    const Vec3 ab = b - a;
    const double len2 = ab.squaredNorm();
    const double h = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    return (p - a - h * ab).norm() - radius;
}

Vec3 rotated_half_extent(const Eigen::Matrix3d& rot, const Vec3& radii) {
    Vec3 h;
    for (int i = 0; i < 3; ++i) h[i] = rot.row(i).cwiseProduct(radii.transpose()).norm();
    return h;
}

double uniform(std::mt19937_64& rng, const std::array<double, 2>& range) {
    if (range[0] == range[1]) return range[0];
    return std::uniform_real_distribution<double>(range[0], range[1])(rng);
}

std::string shape_name(std::uint32_t id) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "shape_%04u", id);
    return buf;
}

}  // namespace

SampleSet build_sample_set(const TriMesh& mesh, const SampleOptions& options, std::uint64_t seed,
                           std::uint32_t shape_id) {
    if (!(options.sigma > 0.0) || !std::isfinite(options.sigma))
        fail(ErrorCode::Parameter, "perturbation sigma must be positive");
    if (options.n_perturbed > 0 && options.n_surface == 0)
        fail(ErrorCode::Parameter, "perturbed samples are drawn from the surface set, which is empty");
    if (mesh.empty() || surface_area(mesh) <= 0.0) fail(ErrorCode::DegenerateMesh, "mesh has no surface area");
    const MeshQuery query(mesh);
    if (!query.watertight()) fail(ErrorCode::NonWatertight, "sample sets require a watertight mesh");

    SampleSet set;
    set.shape_id = shape_id;
    set.points = sample_surface(mesh, options.n_surface, derive_seed(seed, 0));
    set.surface_count = set.points.size();
    set.sdf.assign(set.surface_count, 0.0);

    std::mt19937_64 rng(derive_seed(seed, 1));
    std::uniform_int_distribution<std::size_t> pick(0, options.n_surface == 0 ? 0 : options.n_surface - 1);
    std::normal_distribution<double> noise(0.0, options.sigma);
    set.points.reserve(set.surface_count + options.n_perturbed);
    set.sdf.reserve(set.surface_count + options.n_perturbed);
    for (std::size_t i = 0; i < options.n_perturbed; ++i) {
        const Vec3& base = set.points[pick(rng)];
        const double dx = noise(rng);
        const double dy = noise(rng);
        const double dz = noise(rng);
        const Vec3 p = base + Vec3(dx, dy, dz);
        set.points.push_back(p);
        set.sdf.push_back(query.signed_distance(p));
    }
    return set;
}

nlohmann::json LobeParams::to_json() const {
    return {{"left_radii", vec_json(left_radii)},   {"right_radii", vec_json(right_radii)},
            {"left_offset", vec_json(left_offset)}, {"right_offset", vec_json(right_offset)},
            {"bridge_radius", bridge_radius},       {"tilt", tilt}};
}

LobeParams LobeParams::from_json(const nlohmann::json& j) {
    LobeParams p;
    p.left_radii = json_vec(j.at("left_radii"));
    p.right_radii = json_vec(j.at("right_radii"));
    p.left_offset = json_vec(j.at("left_offset"));
    p.right_offset = json_vec(j.at("right_offset"));
    p.bridge_radius = j.at("bridge_radius").get<double>();
    p.tilt = j.at("tilt").get<double>();
    return p;
}

double lobe_field(const LobeParams& params, const Vec3& p) {
    const Eigen::Matrix3d rot = tilt_rotation(params.tilt);
    const Vec3 q = rot.transpose() * (p - kCenter);
    double d = std::min(ellipsoid_bound(q - params.left_offset, params.left_radii),
                        ellipsoid_bound(q - params.right_offset, params.right_radii));
    if (params.bridge_radius > 0.0)
        d = std::min(d, capsule(q, params.left_offset, params.right_offset, params.bridge_radius));
    return d;
}

void validate_lobe_params(const LobeParams& params, std::size_t mesh_resolution) {
    if (mesh_resolution < 8) fail(ErrorCode::Parameter, "mesh resolution must be at least 8");
    const double cell = 1.0 / double(mesh_resolution);
    for (const Vec3* r : {&params.left_radii, &params.right_radii})
        if (!r->allFinite() || r->minCoeff() <= 0.0) fail(ErrorCode::Parameter, "lobe semi-axes must be positive");
    if (!params.left_offset.allFinite() || !params.right_offset.allFinite() || !std::isfinite(params.tilt))
        fail(ErrorCode::Parameter, "lobe offsets and tilt must be finite");
    if (!std::isfinite(params.bridge_radius) || params.bridge_radius < 0.0)
        fail(ErrorCode::Parameter, "bridge radius must be non-negative");

    const Eigen::Matrix3d rot = tilt_rotation(params.tilt);
    const Vec3 lc = kCenter + rot * params.left_offset;
    const Vec3 rc = kCenter + rot * params.right_offset;
    const Vec3 lh = rotated_half_extent(rot, params.left_radii);
    const Vec3 rh = rotated_half_extent(rot, params.right_radii);
    for (const auto& [c, h] : {std::pair{lc, lh}, std::pair{rc, rh}})
        if ((c - h).minCoeff() < kBoundLo || (c + h).maxCoeff() > kBoundHi)
            fail(ErrorCode::Parameter, "lobe leaves the [0.05, 0.95] cube");
    if (lc.x() + lh.x() > 0.5 - cell || rc.x() - rh.x() < 0.5 + cell)
        fail(ErrorCode::Parameter, "each lobe must stay on its own side of the mid-plane");
    if (params.bridge_radius > 0.0) {
        if (params.bridge_radius < 2.0 * cell)
            fail(ErrorCode::Parameter, "bridge radius is below two grid cells");
        if (params.bridge_radius >= std::min(params.left_radii.minCoeff(), params.right_radii.minCoeff()))
            fail(ErrorCode::Parameter, "bridge radius must be smaller than every lobe semi-axis");
    }
}

LobeShape generate_lobe_shape(const LobeParams& params, std::size_t mesh_resolution, const MeasureOptions& measure) {
    validate_lobe_params(params, mesh_resolution);
    const std::size_t nodes = mesh_resolution + 1;
    ScalarGrid grid({nodes, nodes, nodes}, Vec3::Zero(), Vec3::Constant(1.0 / double(mesh_resolution)));
    for (std::size_t k = 0; k < nodes; ++k)
        for (std::size_t j = 0; j < nodes; ++j)
            for (std::size_t i = 0; i < nodes; ++i) grid.at(i, j, k) = lobe_field(params, grid.position(i, j, k));
    auto mc = marching_cubes(grid);
    if (mc.empty) fail(ErrorCode::Parameter, "lobe parameters produce an empty surface");
    LobeShape shape;
    shape.mesh = std::move(mc.mesh);
    shape.features = measure_features(shape.mesh, measure);
    return shape;
}

nlohmann::json ParamRanges::to_json() const {
    return {{"split_fraction", split_fraction},       {"global_scale", range_json(global_scale)},
            {"lobe_scale", range_json(lobe_scale)},   {"radius_x", range_json(radius_x)},
            {"radius_y", range_json(radius_y)},       {"radius_z", range_json(radius_z)},
            {"gap", range_json(gap)},                 {"offset_y", range_json(offset_y)},
            {"offset_z", range_json(offset_z)},       {"bridge_radius", range_json(bridge_radius)},
            {"tilt", range_json(tilt)}};
}

ParamRanges ParamRanges::from_json(const nlohmann::json& j) {
    ParamRanges r;
    if (j.contains("split_fraction")) r.split_fraction = j["split_fraction"].get<double>();
    const std::pair<const char*, std::array<double, 2>*> fields[] = {
        {"global_scale", &r.global_scale}, {"lobe_scale", &r.lobe_scale}, {"radius_x", &r.radius_x},
        {"radius_y", &r.radius_y},         {"radius_z", &r.radius_z},     {"gap", &r.gap},
        {"offset_y", &r.offset_y},         {"offset_z", &r.offset_z},     {"bridge_radius", &r.bridge_radius},
        {"tilt", &r.tilt}};
    for (const auto& [key, dst] : fields)
        if (j.contains(key)) *dst = json_range(j[key]);
    if (r.split_fraction < 0.0 || r.split_fraction > 1.0)
        fail(ErrorCode::Config, "split_fraction must lie in [0, 1]");
    return r;
}

LobeParams sample_lobe_params(std::mt19937_64& rng, const ParamRanges& ranges, std::size_t mesh_resolution, bool split) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
        LobeParams p;
        const double global = uniform(rng, ranges.global_scale);
        for (Vec3* r : {&p.left_radii, &p.right_radii}) {
            const double s = global * uniform(rng, ranges.lobe_scale);
            const double rx = uniform(rng, ranges.radius_x);
            const double ry = uniform(rng, ranges.radius_y);
            const double rz = uniform(rng, ranges.radius_z);
            *r = s * Vec3(rx, ry, rz);
        }
        p.tilt = uniform(rng, ranges.tilt);
        const Eigen::Matrix3d rot = tilt_rotation(p.tilt);
        const double c = std::cos(p.tilt);
        const double s = std::sin(p.tilt);
        for (int side = 0; side < 2; ++side) {
            const Vec3& radii = side == 0 ? p.left_radii : p.right_radii;
            Vec3& offset = side == 0 ? p.left_offset : p.right_offset;
            const double sign = side == 0 ? -1.0 : 1.0;
            const double gap = uniform(rng, ranges.gap);
            offset.y() = uniform(rng, ranges.offset_y);
            offset.z() = uniform(rng, ranges.offset_z);
            const double hx = rotated_half_extent(rot, radii).x();
            offset.x() = (sign * (gap + hx) - offset.z() * s) / c;
        }
        const double bridge = uniform(rng, ranges.bridge_radius);
        const double cap = 0.9 * std::min(p.left_radii.minCoeff(), p.right_radii.minCoeff());
        p.bridge_radius = split ? 0.0 : std::min(bridge, cap);
        try {
            validate_lobe_params(p, mesh_resolution);
            return p;
        } catch (const Error&) {
        }
    }
    fail(ErrorCode::Parameter, "parameter ranges admit no valid shape");
}

std::vector<bool> assign_splits(std::mt19937_64& rng, std::size_t n, double split_fraction) {
    if (split_fraction < 0.0 || split_fraction > 1.0) fail(ErrorCode::Parameter, "split fraction must lie in [0, 1]");
    const auto count = std::size_t(std::llround(double(n) * split_fraction));
    std::vector<bool> flags(n, false);
    std::fill(flags.begin(), flags.begin() + std::ptrdiff_t(count), true);
    std::shuffle(flags.begin(), flags.end(), rng);
    return flags;
}

std::vector<FeatureVector> Dataset::features() const {
    std::vector<FeatureVector> out;
    out.reserve(shapes.size());
    for (const auto& s : shapes) out.push_back(s.features);
    return out;
}

std::vector<TriMesh> Dataset::meshes() const {
    std::vector<TriMesh> out;
    out.reserve(shapes.size());
    for (const auto& s : shapes) out.push_back(s.mesh);
    return out;
}

std::vector<SampleSet> Dataset::sample_sets() const {
    std::vector<SampleSet> out;
    out.reserve(shapes.size());
    for (const auto& s : shapes) out.push_back(s.samples);
    return out;
}

const ShapeRecord& Dataset::shape(std::uint32_t id) const {
    for (const auto& s : shapes)
        if (s.id == id) return s;
    fail(ErrorCode::NotFound, "no shape with id " + std::to_string(id));
}

Dataset generate_population(const PopulationOptions& options) {
    if (options.n < 2) fail(ErrorCode::Parameter, "a population needs at least 2 shapes");
    std::mt19937_64 rng(derive_seed(options.seed, 0));
    const std::vector<bool> splits = assign_splits(rng, options.n, options.ranges.split_fraction);
    std::vector<LobeParams> params;
    std::vector<TriMesh> raw;
    for (std::size_t i = 0; i < options.n; ++i) {
        params.push_back(sample_lobe_params(rng, options.ranges, options.mesh_resolution, splits[i]));
        raw.push_back(generate_lobe_shape(params.back(), options.mesh_resolution, options.measure).mesh);
    }
    auto normalized = normalize_population(raw);

    Dataset ds;
    ds.normalization = normalized.transform;
    ds.sampling = options.sampling;
    ds.seed = options.seed;
    ds.source = {{"kind", "lobe-generator"},
                 {"ranges", options.ranges.to_json()},
                 {"mesh_resolution", options.mesh_resolution}};
    for (std::size_t i = 0; i < options.n; ++i) {
        ShapeRecord rec;
        rec.id = std::uint32_t(i);
        rec.name = shape_name(rec.id);
        rec.params = params[i];
        rec.mesh = std::move(normalized.meshes[i]);
        rec.features = measure_features(rec.mesh, options.measure);
        if (options.build_samples)
            rec.samples = build_sample_set(rec.mesh, options.sampling, derive_seed(options.seed, 1000 + i), rec.id);
        else
            rec.samples.shape_id = rec.id;
        ds.shapes.push_back(std::move(rec));
    }
    return ds;
}

Dataset import_meshes(std::span<const std::filesystem::path> paths, const Vec3& reference,
                      const SampleOptions& sampling, std::uint64_t seed, const MeasureOptions& measure) {
    if (paths.empty()) fail(ErrorCode::Parameter, "no meshes to import");
    std::vector<TriMesh> raw;
    for (const auto& path : paths) {
        raw.push_back(read_mesh(path));
        if (!is_watertight(raw.back())) fail(ErrorCode::NonWatertight, path.string() + " is not watertight");
    }
    auto normalized = normalize_population(raw, reference);
    Dataset ds;
    ds.normalization = normalized.transform;
    ds.sampling = sampling;
    ds.seed = seed;
    nlohmann::json files = nlohmann::json::array();
    for (const auto& p : paths) files.push_back(p.filename().string());
    ds.source = {{"kind", "import"}, {"files", files}, {"reference", vec_json(reference)}};
    for (std::size_t i = 0; i < paths.size(); ++i) {
        ShapeRecord rec;
        rec.id = std::uint32_t(i);
        rec.name = shape_name(rec.id);
        rec.mesh = std::move(normalized.meshes[i]);
        rec.features = measure_features(rec.mesh, measure);
        rec.samples = build_sample_set(rec.mesh, sampling, derive_seed(seed, 1000 + i), rec.id);
        ds.shapes.push_back(std::move(rec));
    }
    return ds;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());

    nlohmann::json shapes = nlohmann::json::array();
    for (const auto& rec : dataset.shapes) {
        const std::string mesh_file = rec.name + ".obj";
        const std::string sample_file = rec.name + ".samples";
        write_obj(dir / mesh_file, rec.mesh);
        std::ofstream out(dir / sample_file, std::ios::binary);
        if (!out) fail(ErrorCode::Io, "cannot write " + (dir / sample_file).string());
        for (std::size_t i = 0; i < rec.samples.size(); ++i) {
            const Vec3& p = rec.samples.points[i];
            const double row[4] = {p.x(), p.y(), p.z(), rec.samples.sdf[i]};
            detail::write_f64(out, row);
        }
        if (!out) fail(ErrorCode::Io, "failed writing " + (dir / sample_file).string());
        nlohmann::json entry = {{"id", rec.id},
                                {"name", rec.name},
                                {"mesh", mesh_file},
                                {"samples", sample_file},
                                {"sample_count", rec.samples.size()},
                                {"surface_count", rec.samples.surface_count},
                                {"features", rec.features.to_json()}};
        if (rec.params) entry["params"] = rec.params->to_json();
        shapes.push_back(std::move(entry));
    }
    nlohmann::json manifest = {
        {"format", "inrshape-dataset"},
        {"version", 1},
        {"seed", dataset.seed},
        {"normalization", dataset.normalization.to_json()},
        {"sampling",
         {{"n_surface", dataset.sampling.n_surface},
          {"n_perturbed", dataset.sampling.n_perturbed},
          {"sigma", dataset.sampling.sigma}}},
        {"mm_per_unit", dataset.mm_per_unit ? nlohmann::json(*dataset.mm_per_unit) : nlohmann::json(nullptr)},
        {"source", dataset.source},
        {"shapes", shapes},
    };
    std::ofstream out(dir / "manifest.json");
    if (!out) fail(ErrorCode::Io, "cannot write manifest in " + dir.string());
    out << manifest.dump(2) << '\n';
}

Dataset load_dataset(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) fail(ErrorCode::Io, "no manifest.json in " + dir.string());
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::Config, std::string("malformed manifest: ") + e.what());
    }
    if (manifest.value("format", "") != "inrshape-dataset") fail(ErrorCode::Config, "not a dataset manifest");

    Dataset ds;
    ds.seed = manifest.at("seed").get<std::uint64_t>();
    ds.normalization = NormalizationTransform::from_json(manifest.at("normalization"));
    const auto& sampling = manifest.at("sampling");
    ds.sampling.n_surface = sampling.at("n_surface").get<std::size_t>();
    ds.sampling.n_perturbed = sampling.at("n_perturbed").get<std::size_t>();
    ds.sampling.sigma = sampling.at("sigma").get<double>();
    if (!manifest["mm_per_unit"].is_null()) ds.mm_per_unit = manifest["mm_per_unit"].get<double>();
    ds.source = manifest.value("source", nlohmann::json::object());

    for (const auto& entry : manifest.at("shapes")) {
        ShapeRecord rec;
        rec.id = entry.at("id").get<std::uint32_t>();
        rec.name = entry.at("name").get<std::string>();
        rec.features = FeatureVector::from_json(entry.at("features"));
        if (entry.contains("params")) rec.params = LobeParams::from_json(entry["params"]);
        rec.mesh = read_obj(dir / entry.at("mesh").get<std::string>());

        const auto sample_path = dir / entry.at("samples").get<std::string>();
        const auto count = entry.at("sample_count").get<std::size_t>();
        std::ifstream sin(sample_path, std::ios::binary);
        if (!sin) fail(ErrorCode::Io, "cannot read " + sample_path.string());
        std::vector<double> rows(count * 4);
        if (!detail::read_f64(sin, rows)) fail(ErrorCode::Io, "truncated sample file " + sample_path.string());
        rec.samples.shape_id = rec.id;
        rec.samples.surface_count = entry.at("surface_count").get<std::size_t>();
        if (rec.samples.surface_count > count) fail(ErrorCode::Config, "surface_count exceeds sample_count");
        rec.samples.points.resize(count);
        rec.samples.sdf.resize(count);
        for (std::size_t i = 0; i < count; ++i) {
            rec.samples.points[i] = Vec3(rows[4 * i], rows[4 * i + 1], rows[4 * i + 2]);
            rec.samples.sdf[i] = rows[4 * i + 3];
        }
        ds.shapes.push_back(std::move(rec));
    }
    return ds;
}

}  // namespace inrshape
